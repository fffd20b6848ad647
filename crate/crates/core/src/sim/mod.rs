//! Synthetic interferograms and the boxcar baseline.
//!
//! Two SLC scatterers with amplitude `a`, coherence `γ` and interferometric
//! phase `φ` have covariance
//!
//! ```text
//! C = a² [ 1          γ e^{jφ} ]
//!        [ γ e^{−jφ}  1        ]
//! ```
//!
//! Correlated samples come from its Cholesky factor applied to two
//! independent unit circular Gaussians, and the interferogram is
//! `s = u₁ · conj(u₂)`.

mod experiment;
mod pattern;

pub use experiment::{mc_step_experiment, step_scene, Method, StepExperiment, StepProfile};
pub use pattern::{make_pattern, training_patterns, CoherenceSpec, GaussianPeak, PatternKind, PatternSpec};

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::{ComplexImage, RealImage};

/// Ground truth driving the noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub true_phase: RealImage,
    pub amplitude: RealImage,
    pub coherence: RealImage,
}

impl SyntheticScene {
    pub fn new(true_phase: RealImage, amplitude: RealImage, coherence: RealImage) -> Result<Self> {
        let dims = true_phase.dims();
        for other in [&amplitude, &coherence] {
            if other.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: other.dims(),
                });
            }
        }
        if coherence.as_slice().iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::InvalidData("coherence must lie in [0, 1]".into()));
        }
        if amplitude.as_slice().iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidData("amplitude must be positive".into()));
        }
        if true_phase.as_slice().iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidData("phase must be finite".into()));
        }
        Ok(Self {
            true_phase,
            amplitude,
            coherence,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.true_phase.dims()
    }

    /// Noise-free interferogram `a² e^{jφ}`.
    pub fn clean(&self) -> ComplexImage {
        let (rows, cols) = self.dims();
        ComplexImage::from_fn(rows, cols, |r, c| {
            let a = self.amplitude.get(r, c);
            Complex64::from_polar(a * a, self.true_phase.get(r, c))
        })
    }
}

/// Unit-variance circular complex Gaussian: re, im i.i.d. `N(0, ½)`.
pub fn circular_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

/// Correlated SLC pair `(u₁, u₂)` for `scene`.
pub fn simulate_pair(scene: &SyntheticScene, seed: u64) -> (ComplexImage, ComplexImage) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_pair_with(scene, &mut rng)
}

pub(crate) fn simulate_pair_with<R: Rng + ?Sized>(scene: &SyntheticScene, rng: &mut R) -> (ComplexImage, ComplexImage) {
    let (rows, cols) = scene.dims();
    let mut u1 = ComplexImage::zeros(rows, cols);
    let mut u2 = ComplexImage::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let a = scene.amplitude.get(r, c);
            let g = scene.coherence.get(r, c);
            let phi = scene.true_phase.get(r, c);
            let r1 = circular_gaussian(rng);
            let r2 = circular_gaussian(rng);
            u1.set(r, c, r1 * a);
            let mix = Complex64::from_polar(g, -phi) * r1 + r2 * (1.0 - g * g).max(0.0).sqrt();
            u2.set(r, c, mix * a);
        }
    }
    (u1, u2)
}

/// Noisy interferogram `u₁ · conj(u₂)`; deterministic in `seed`.
pub fn simulate_interferogram(scene: &SyntheticScene, seed: u64) -> ComplexImage {
    let (u1, u2) = simulate_pair(scene, seed);
    interfere(&u1, &u2)
}

pub(crate) fn simulate_interferogram_with<R: Rng + ?Sized>(scene: &SyntheticScene, rng: &mut R) -> ComplexImage {
    let (u1, u2) = simulate_pair_with(scene, rng);
    interfere(&u1, &u2)
}

fn interfere(u1: &ComplexImage, u2: &ComplexImage) -> ComplexImage {
    let data = u1
        .as_slice()
        .iter()
        .zip(u2.as_slice())
        .map(|(a, b)| a * b.conj())
        .collect();
    ComplexImage::from_raw(u1.rows(), u1.cols(), data)
}

/// Complex mean over a centered `window×window` neighbourhood with circular
/// boundaries.
pub fn boxcar_filter(image: &ComplexImage, window: usize) -> Result<ComplexImage> {
    if window % 2 == 0 {
        return Err(Error::EvenWindow(window));
    }
    let (rows, cols) = image.dims();
    if window > rows || window > cols {
        return Err(Error::InvalidData(format!(
            "window {window} exceeds image dimensions {rows}x{cols}"
        )));
    }
    let half = window / 2;
    // separable: horizontal sums, then vertical sums
    let mut horiz = ComplexImage::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..window {
                acc += image.get(r, (c + cols + k - half) % cols);
            }
            horiz.set(r, c, acc);
        }
    }
    let scale = 1.0 / (window * window) as f64;
    let mut out = ComplexImage::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..window {
                acc += horiz.get((r + rows + k - half) % rows, c);
            }
            out.set(r, c, acc * scale);
        }
    }
    Ok(out)
}
