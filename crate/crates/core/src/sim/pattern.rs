//! Ground-truth phase patterns.

use std::f64::consts::FRAC_PI_3;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SyntheticScene;
use crate::error::{Error, Result};
use crate::image::{wrap_phase, RealImage};

/// Isotropic Gaussian bump; position and width are fractions of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPeak {
    pub center_row: f64,
    pub center_col: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternKind {
    /// Left half `low`, right half `high`.
    Step { low: f64, high: f64 },
    /// Linear phase, radians per pixel along each axis.
    Ramp { row_rate: f64, col_rate: f64 },
    Peaks(Vec<GaussianPeak>),
    /// Flat region left of `boundary` (fraction of width), then a steep
    /// linear ramp.
    ShearPlane { boundary: f64, slope: f64 },
    /// A `blocks×blocks` tiling, each tile holding `rings` nested rectangles
    /// whose level alternates between 0 and `±jump`; the sign flips from tile
    /// to tile.
    Squares { blocks: usize, rings: usize, jump: f64 },
    /// Sum of bilinearly interpolated random lattices, each octave twice as
    /// fine and half as strong, scaled to `relief` radians peak to peak.
    MountainLike { octaves: usize, relief: f64, seed: u64 },
}

impl PatternKind {
    pub fn name(&self) -> &'static str {
        match self {
            PatternKind::Step { .. } => "step",
            PatternKind::Ramp { .. } => "ramp",
            PatternKind::Peaks(_) => "peaks",
            PatternKind::ShearPlane { .. } => "shear_plane",
            PatternKind::Squares { .. } => "squares",
            PatternKind::MountainLike { .. } => "mountain_like",
        }
    }

    pub const NAMES: [&'static str; 6] = ["step", "ramp", "peaks", "shear_plane", "squares", "mountain_like"];
}

impl FromStr for PatternKind {
    type Err = Error;

    /// Parses a kind name into its default parameters. Hyphens and
    /// underscores are interchangeable.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match key.as_str() {
            "step" => PatternKind::Step {
                low: -FRAC_PI_3,
                high: FRAC_PI_3,
            },
            "ramp" => PatternKind::Ramp {
                row_rate: 0.15,
                col_rate: 0.25,
            },
            "peaks" => PatternKind::Peaks(vec![
                GaussianPeak { center_row: 0.3, center_col: 0.3, width: 0.12, height: 10.0 },
                GaussianPeak { center_row: 0.65, center_col: 0.6, width: 0.15, height: -8.0 },
                GaussianPeak { center_row: 0.4, center_col: 0.78, width: 0.08, height: 6.0 },
            ]),
            "shear_plane" | "shear" => PatternKind::ShearPlane {
                boundary: 0.5,
                slope: 0.8,
            },
            "squares" => PatternKind::Squares {
                blocks: 2,
                rings: 3,
                jump: 2.0,
            },
            "mountain_like" | "mountain" => PatternKind::MountainLike {
                octaves: 4,
                relief: 24.0,
                seed: 0,
            },
            _ => return Err(Error::UnknownPattern(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoherenceSpec {
    Constant(f64),
    /// Linear in the column index from `left` at column 0 to `right` at the
    /// last column.
    Ramp { left: f64, right: f64 },
}

impl CoherenceSpec {
    pub fn render(&self, rows: usize, cols: usize) -> RealImage {
        match *self {
            CoherenceSpec::Constant(g) => RealImage::filled(rows, cols, g),
            CoherenceSpec::Ramp { left, right } => {
                let denom = cols.saturating_sub(1).max(1) as f64;
                RealImage::from_fn(rows, cols, |_, c| left + (right - left) * c as f64 / denom)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |g: f64| (0.0..=1.0).contains(&g);
        let valid = match *self {
            CoherenceSpec::Constant(g) => ok(g),
            CoherenceSpec::Ramp { left, right } => ok(left) && ok(right),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidConfig("coherence must lie in [0, 1]".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub rows: usize,
    pub cols: usize,
    pub coherence: CoherenceSpec,
}

impl PatternSpec {
    pub fn new(kind: PatternKind, rows: usize, cols: usize, coherence: CoherenceSpec) -> Self {
        Self {
            kind,
            rows,
            cols,
            coherence,
        }
    }

    /// Wrapped phase of the pattern.
    pub fn phase(&self) -> Result<RealImage> {
        let (rows, cols) = (self.rows, self.cols);
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig("pattern size must be nonzero".into()));
        }
        let raw = match &self.kind {
            PatternKind::Step { low, high } => {
                RealImage::from_fn(rows, cols, |_, c| if c < cols / 2 { *low } else { *high })
            }
            PatternKind::Ramp { row_rate, col_rate } => {
                RealImage::from_fn(rows, cols, |r, c| row_rate * r as f64 + col_rate * c as f64)
            }
            PatternKind::Peaks(peaks) => {
                let scale = rows.min(cols) as f64;
                RealImage::from_fn(rows, cols, |r, c| {
                    peaks
                        .iter()
                        .map(|p| {
                            let dr = r as f64 - p.center_row * rows as f64;
                            let dc = c as f64 - p.center_col * cols as f64;
                            let w = p.width * scale;
                            p.height * (-(dr * dr + dc * dc) / (2.0 * w * w)).exp()
                        })
                        .sum()
                })
            }
            PatternKind::ShearPlane { boundary, slope } => {
                let edge = boundary * cols as f64;
                RealImage::from_fn(rows, cols, |_, c| slope * (c as f64 - edge).max(0.0))
            }
            PatternKind::Squares { blocks, rings, jump } => squares(rows, cols, *blocks, *rings, *jump)?,
            PatternKind::MountainLike { octaves, relief, seed } => mountain(rows, cols, *octaves, *relief, *seed)?,
        };
        let data = raw.as_slice().iter().map(|&p| wrap_phase(p)).collect();
        RealImage::from_vec(rows, cols, data)
    }
}

fn squares(rows: usize, cols: usize, blocks: usize, rings: usize, jump: f64) -> Result<RealImage> {
    if blocks == 0 || rings == 0 {
        return Err(Error::InvalidConfig("squares needs at least one block and ring".into()));
    }
    let bh = rows as f64 / blocks as f64;
    let bw = cols as f64 / blocks as f64;
    Ok(RealImage::from_fn(rows, cols, |r, c| {
        let br = ((r as f64 / bh) as usize).min(blocks - 1);
        let bc = ((c as f64 / bw) as usize).min(blocks - 1);
        // normalized Chebyshev distance from the tile border, in [0, 1)
        let fr = (r as f64 + 0.5 - br as f64 * bh) / bh;
        let fc = (c as f64 + 0.5 - bc as f64 * bw) / bw;
        let depth = fr.min(1.0 - fr).min(fc).min(1.0 - fc) * 2.0;
        let ring = ((depth * (rings + 1) as f64) as usize).min(rings);
        let sign = if (br + bc) % 2 == 0 { 1.0 } else { -1.0 };
        if ring % 2 == 1 {
            sign * jump
        } else {
            0.0
        }
    }))
}

fn mountain(rows: usize, cols: usize, octaves: usize, relief: f64, seed: u64) -> Result<RealImage> {
    if octaves == 0 {
        return Err(Error::InvalidConfig("mountain_like needs at least one octave".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = vec![0.0; rows * cols];
    let mut weight = 1.0;
    for o in 0..octaves {
        let cells = 2usize << o;
        let lattice: Vec<f64> = (0..(cells + 1) * (cells + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        for r in 0..rows {
            let y = r as f64 / rows as f64 * cells as f64;
            let (y0, ty) = (y.floor() as usize, y.fract());
            for c in 0..cols {
                let x = c as f64 / cols as f64 * cells as f64;
                let (x0, tx) = (x.floor() as usize, x.fract());
                let at = |i: usize, j: usize| lattice[i * (cells + 1) + j];
                let top = at(y0, x0) * (1.0 - tx) + at(y0, x0 + 1) * tx;
                let bottom = at(y0 + 1, x0) * (1.0 - tx) + at(y0 + 1, x0 + 1) * tx;
                field[r * cols + c] += weight * (top * (1.0 - ty) + bottom * ty);
            }
        }
        weight *= 0.5;
    }
    let lo = field.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let data = field.into_iter().map(|v| (v - lo) / span * relief).collect();
    RealImage::from_vec(rows, cols, data)
}

/// Builds the scene for `spec` with unit amplitude.
pub fn make_pattern(spec: &PatternSpec) -> Result<SyntheticScene> {
    spec.coherence.validate()?;
    let phase = spec.phase()?;
    SyntheticScene::new(
        phase,
        RealImage::filled(spec.rows, spec.cols, 1.0),
        spec.coherence.render(spec.rows, spec.cols),
    )
}

/// Clean interferograms cycling through every pattern kind, for dictionary
/// training. Mountain-like relief and extra ramps vary with `seed` and the
/// image index.
pub fn training_patterns(rows: usize, cols: usize, count: usize, seed: u64) -> Result<Vec<crate::image::ComplexImage>> {
    (0..count)
        .map(|k| {
            let name = PatternKind::NAMES[k % PatternKind::NAMES.len()];
            let round = (k / PatternKind::NAMES.len()) as f64;
            let mut kind: PatternKind = name.parse()?;
            match &mut kind {
                PatternKind::MountainLike { seed: s, .. } => *s = seed.wrapping_add(k as u64),
                PatternKind::Ramp { row_rate, col_rate } => {
                    *row_rate -= 0.45 * round;
                    *col_rate -= 0.15 * round;
                }
                _ => {}
            }
            if round > 0.0 && matches!(kind, PatternKind::Step { .. }) {
                // second pass: the step becomes a steeper shear
                kind = PatternKind::ShearPlane { boundary: 0.3, slope: 0.5 };
            }
            let spec = PatternSpec::new(kind, rows, cols, CoherenceSpec::Constant(1.0));
            Ok(make_pattern(&spec)?.clean())
        })
        .collect()
}
