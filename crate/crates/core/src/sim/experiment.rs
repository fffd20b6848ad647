//! Monte-Carlo study of filters on a phase step.

use std::f64::consts::FRAC_PI_3;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{simulate_interferogram_with, SyntheticScene};
use crate::error::{Error, Result};
use crate::image::{ComplexImage, RealImage};

/// Filter under test.
pub type Method<'a> = (&'a str, &'a (dyn Fn(&ComplexImage) -> Result<ComplexImage> + Sync));

/// Trials processed per parallel batch; partial sums are then added in
/// trial order so the result does not depend on scheduling.
const BATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepExperiment {
    pub rows: usize,
    pub cols: usize,
    pub trials: usize,
    pub coherence: f64,
    pub seed: u64,
}

impl StepExperiment {
    pub fn new(trials: usize, coherence: f64, seed: u64) -> Self {
        Self {
            rows: 32,
            cols: 256,
            trials,
            coherence,
            seed,
        }
    }

    pub fn with_rows(mut self, rows: usize) -> Self {
        self.rows = rows;
        self
    }

    pub fn with_cols(mut self, cols: usize) -> Self {
        self.cols = cols;
        self
    }

    /// Phase of the step at each column.
    pub fn truth(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|c| if c < self.cols / 2 { -FRAC_PI_3 } else { FRAC_PI_3 })
            .collect()
    }
}

/// Per-column circular statistics of one method's output phase.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProfile {
    pub name: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// The `−π/3 → +π/3` step replicated over `rows`, unit amplitude.
pub fn step_scene(rows: usize, cols: usize, coherence: f64) -> Result<SyntheticScene> {
    let phase = RealImage::from_fn(rows, cols, |_, c| if c < cols / 2 { -FRAC_PI_3 } else { FRAC_PI_3 });
    SyntheticScene::new(
        phase,
        RealImage::filled(rows, cols, 1.0),
        RealImage::filled(rows, cols, coherence),
    )
}

/// Runs every method on `trials` independent noisy steps. Statistics pool
/// all rows of all trials per column: the mean is the argument of the mean
/// unit phasor `R e^{jθ}`, the spread is `√(−2 ln R)`.
pub fn mc_step_experiment(exp: &StepExperiment, methods: &[Method<'_>]) -> Result<Vec<StepProfile>> {
    if exp.trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    if exp.rows == 0 || exp.cols < 2 {
        return Err(Error::InvalidConfig("step profile needs at least 2 columns".into()));
    }
    let scene = step_scene(exp.rows, exp.cols, exp.coherence)?;
    let cols = exp.cols;
    let mut totals = vec![vec![Complex64::new(0.0, 0.0); cols]; methods.len()];

    let mut start = 0;
    while start < exp.trials {
        let end = (start + BATCH).min(exp.trials);
        let partials: Vec<Vec<Vec<Complex64>>> = (start..end)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
                rng.set_stream(trial as u64);
                let noisy = simulate_interferogram_with(&scene, &mut rng);
                methods
                    .iter()
                    .map(|(name, f)| {
                        let out = f(&noisy)?;
                        if out.dims() != noisy.dims() {
                            return Err(Error::InvalidData(format!("method {name} changed the image size")));
                        }
                        Ok(column_phasors(&out))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for trial in partials {
            for (acc, sums) in totals.iter_mut().zip(trial) {
                for (a, s) in acc.iter_mut().zip(sums) {
                    *a += s;
                }
            }
        }
        start = end;
    }

    let count = (exp.trials * exp.rows) as f64;
    Ok(methods
        .iter()
        .zip(totals)
        .map(|((name, _), sums)| {
            let (mean, std) = sums
                .into_iter()
                .map(|s| {
                    let m = s / count;
                    let r = m.norm().min(1.0);
                    (m.arg(), (-2.0 * r.ln()).max(0.0).sqrt())
                })
                .unzip();
            StepProfile {
                name: name.to_string(),
                mean,
                std,
            }
        })
        .collect())
}

/// Sum over rows of `e^{j·arg}` per column; zero pixels contribute phase 0.
fn column_phasors(img: &ComplexImage) -> Vec<Complex64> {
    let (rows, cols) = img.dims();
    let mut sums = vec![Complex64::new(0.0, 0.0); cols];
    for r in 0..rows {
        for (c, s) in sums.iter_mut().enumerate() {
            *s += Complex64::from_polar(1.0, img.get(r, c).arg());
        }
    }
    sums
}
