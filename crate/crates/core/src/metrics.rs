//! Phase-quality metrics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::{wrap_phase, ComplexImage, RealImage};

/// `angle(conj(truth) · estimate)` per pixel, in `(−π, π]`.
pub fn residual_phase(truth: &ComplexImage, estimate: &ComplexImage) -> Result<RealImage> {
    truth.check_same_dims(estimate)?;
    let data = truth
        .as_slice()
        .iter()
        .zip(estimate.as_slice())
        .map(|(t, e)| wrap_phase((t.conj() * e).arg()))
        .collect();
    Ok(RealImage::from_raw(truth.rows(), truth.cols(), data))
}

/// `10·log₁₀(4Nπ² / Σ residual²)` in dB; `+∞` when the residual vanishes.
pub fn psnr(truth: &ComplexImage, estimate: &ComplexImage) -> Result<f64> {
    let residual = residual_phase(truth, estimate)?;
    let energy: f64 = residual.as_slice().iter().map(|r| r * r).sum();
    if energy == 0.0 {
        return Ok(f64::INFINITY);
    }
    let n = truth.len() as f64;
    Ok(10.0 * (4.0 * n * PI * PI / energy).log10())
}

/// Local colinearity over an `M×M` window excluding the centre.
///
/// ```text
/// C_i = |Σ_p e^{j(φ_i−φ_p)}| / (M²−1) · Σ_p |e^{j(φ_i−φ_p)}| / (M²−1)
/// ```
///
/// The second factor is identically 1 for real phases; it is evaluated as
/// written anyway. Pixels closer than `⌊M/2⌋` to the border are NaN.
pub fn colinearity_map(phase: &RealImage, window: usize) -> Result<RealImage> {
    if window % 2 == 0 {
        return Err(Error::EvenWindow(window));
    }
    if window < 3 {
        return Err(Error::InvalidConfig("colinearity window must be at least 3".into()));
    }
    let (rows, cols) = phase.dims();
    if rows <= window || cols <= window {
        return Err(Error::InvalidData(format!(
            "image {rows}x{cols} is not larger than the {window}x{window} window"
        )));
    }
    let half = window / 2;
    let terms = (window * window - 1) as f64;
    let mut out = RealImage::filled(rows, cols, f64::NAN);
    for r in half..rows - half {
        for c in half..cols - half {
            let phi = phase.get(r, c);
            let mut coherent = Complex64::new(0.0, 0.0);
            let mut magnitude = 0.0;
            for pr in r - half..=r + half {
                for pc in c - half..=c + half {
                    if pr == r && pc == c {
                        continue;
                    }
                    let z = Complex64::from_polar(1.0, phi - phase.get(pr, pc));
                    coherent += z;
                    magnitude += z.norm();
                }
            }
            let second = magnitude / terms;
            debug_assert!((second - 1.0).abs() < 1e-12);
            out.set(r, c, (coherent.norm() / terms * second).min(1.0));
        }
    }
    Ok(out)
}

/// Binned density over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    /// Density of the finite `values`; NaN entries are skipped.
    pub fn unit_interval(values: impl IntoIterator<Item = f64>, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
        }
        let mut counts = vec![0usize; bins];
        let mut total = 0usize;
        for v in values.into_iter().filter(|v| v.is_finite()) {
            let b = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::InvalidData("no valid values to bin".into()));
        }
        let width = 1.0 / bins as f64;
        Ok(Self {
            edges: (0..=bins).map(|i| i as f64 * width).collect(),
            density: counts.iter().map(|&k| k as f64 / (total as f64 * width)).collect(),
        })
    }

    /// `∫ density`, which is 1 up to rounding.
    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub colinearity_histogram: Histogram,
    pub residual_phase: RealImage,
    pub colinearity: RealImage,
}

impl MetricReport {
    pub const DEFAULT_WINDOW: usize = 7;
    pub const DEFAULT_BINS: usize = 50;

    /// PSNR and residual against `truth`; colinearity of the estimate's phase.
    pub fn compute(truth: &ComplexImage, estimate: &ComplexImage, window: usize, bins: usize) -> Result<Self> {
        let residual_phase = residual_phase(truth, estimate)?;
        let psnr_db = psnr(truth, estimate)?;
        let colinearity = colinearity_map(&estimate.phase(), window)?;
        let colinearity_histogram = Histogram::unit_interval(colinearity.as_slice().iter().copied(), bins)?;
        Ok(Self {
            psnr_db,
            colinearity_histogram,
            residual_phase,
            colinearity,
        })
    }
}
