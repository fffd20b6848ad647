//! Per-frequency-bin linear solvers.
//!
//! Under circular convolution every normal-equation system in the toolkit
//! decouples into one small system per frequency bin. Each one is a diagonal
//! matrix plus one or a few rank-1 terms, which Sherman–Morrison inverts in
//! closed form without ever forming the matrix.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// One length-`width` complex vector per frequency bin, stored bin-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    rows: usize,
    cols: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl FrequencyGrid {
    pub fn zeros(rows: usize, cols: usize, width: usize) -> Self {
        Self {
            rows,
            cols,
            width,
            data: vec![Complex64::new(0.0, 0.0); rows * cols * width],
        }
    }

    /// Interleaves `width` spectra (one per map, each `rows*cols` long) into
    /// per-bin vectors.
    pub fn from_spectra(rows: usize, cols: usize, spectra: &[Vec<Complex64>]) -> Self {
        let bins = rows * cols;
        let width = spectra.len();
        let mut data = vec![Complex64::new(0.0, 0.0); bins * width];
        for (m, s) in spectra.iter().enumerate() {
            assert_eq!(s.len(), bins, "spectrum length does not match grid");
            for (bin, &v) in s.iter().enumerate() {
                data[bin * width + m] = v;
            }
        }
        Self {
            rows,
            cols,
            width,
            data,
        }
    }

    /// Inverse of [`FrequencyGrid::from_spectra`].
    pub fn to_spectra(&self) -> Vec<Vec<Complex64>> {
        let bins = self.bins();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); bins]; self.width];
        for bin in 0..bins {
            for (m, map) in out.iter_mut().enumerate() {
                map[bin] = self.data[bin * self.width + m];
            }
        }
        out
    }

    pub fn from_bin_fn(rows: usize, cols: usize, width: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut g = Self::zeros(rows, cols, width);
        for bin in 0..rows * cols {
            for m in 0..width {
                g.data[bin * width + m] = f(bin, m);
            }
        }
        g
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn bins(&self) -> usize {
        self.rows * self.cols
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bin(&self, bin: usize) -> &[Complex64] {
        &self.data[bin * self.width..(bin + 1) * self.width]
    }

    pub fn bin_mut(&mut self, bin: usize) -> &mut [Complex64] {
        &mut self.data[bin * self.width..(bin + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Elementwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            data: self.data.iter().map(|z| z.conj()).collect(),
            ..*self
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        if self.width != other.width {
            return Err(Error::InvalidData(format!(
                "per-bin vector length {} does not match {}",
                other.width, self.width
            )));
        }
        Ok(())
    }
}

#[inline]
fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

/// Solves `(a aᴴ + diag·I) x = b` for a single bin.
#[inline]
pub fn sherman_morrison_bin(a: &[Complex64], diag: f64, b: &[Complex64], x: &mut [Complex64]) {
    let ahb = dot_h(a, b);
    let aha = a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let coef = ahb / (diag + aha);
    let inv = 1.0 / diag;
    for ((xi, &bi), &ai) in x.iter_mut().zip(b).zip(a) {
        *xi = (bi - ai * coef) * inv;
    }
}

/// Solves `(d dᴴ + diag[bin]·I) x = rhs` independently at every bin.
pub fn solve_rank1_diag_systems(dhat: &FrequencyGrid, diag: &[f64], rhs: &FrequencyGrid) -> Result<FrequencyGrid> {
    dhat.check_compatible(rhs)?;
    if diag.len() != dhat.bins() {
        return Err(Error::InvalidData(format!(
            "{} diagonal offsets for {} bins",
            diag.len(),
            dhat.bins()
        )));
    }
    if let Some(bad) = diag.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::config(format!("diagonal offset must be positive, got {bad}")));
    }
    let mut out = FrequencyGrid::zeros(dhat.rows, dhat.cols, dhat.width);
    let w = dhat.width;
    out.data
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(bin, x)| sherman_morrison_bin(dhat.bin(bin), diag[bin], rhs.bin(bin), x));
    Ok(out)
}

/// Solves `(Σ_k a_k a_kᴴ + sigma·I) x = b` for one bin by applying the
/// Sherman–Morrison update once per rank-1 term.
///
/// `terms` yields the `K` vectors `a_k`; `scratch` must hold `K` vectors of
/// length `M` and receives `A_{k-1}⁻¹ a_k`.
pub fn iterated_sherman_morrison_bin(
    terms: &[&[Complex64]],
    sigma: f64,
    b: &[Complex64],
    scratch: &mut [Vec<Complex64>],
    betas: &mut [Complex64],
    x: &mut [Complex64],
) {
    let inv = 1.0 / sigma;
    // c_k = A_{k-1}⁻¹ a_k, built up term by term.
    for k in 0..terms.len() {
        let (done, rest) = scratch.split_at_mut(k);
        let ck = &mut rest[0];
        for (c, &a) in ck.iter_mut().zip(terms[k]) {
            *c = a * inv;
        }
        for j in 0..k {
            let coef = dot_h(terms[j], ck) / betas[j];
            for (c, &cj) in ck.iter_mut().zip(&done[j]) {
                *c -= cj * coef;
            }
        }
        betas[k] = Complex64::new(1.0, 0.0) + dot_h(terms[k], ck);
    }
    for (xi, &bi) in x.iter_mut().zip(b) {
        *xi = bi * inv;
    }
    for k in 0..terms.len() {
        let coef = dot_h(terms[k], x) / betas[k];
        for (xi, &c) in x.iter_mut().zip(&scratch[k]) {
            *xi -= c * coef;
        }
    }
}

/// Solves `(Σ_k x_k x_kᴴ + sigma·I) d = rhs` at every bin, where `xhat[k]`
/// supplies the vector `x_k` per bin.
pub fn solve_iterated_sherman_morrison(xhat: &[FrequencyGrid], sigma: f64, rhs: &FrequencyGrid) -> Result<FrequencyGrid> {
    if !(sigma > 0.0) {
        return Err(Error::config(format!("sigma must be positive, got {sigma}")));
    }
    if xhat.is_empty() {
        return Err(Error::config("at least one rank-1 term is required"));
    }
    for g in xhat {
        g.check_compatible(rhs)?;
    }
    let w = rhs.width;
    let k = xhat.len();
    let mut out = FrequencyGrid::zeros(rhs.rows, rhs.cols, w);
    out.data.par_chunks_mut(w).enumerate().for_each_init(
        || (vec![vec![Complex64::new(0.0, 0.0); w]; k], vec![Complex64::new(0.0, 0.0); k]),
        |(scratch, betas), (bin, x)| {
            let terms: Vec<&[Complex64]> = xhat.iter().map(|g| g.bin(bin)).collect();
            iterated_sherman_morrison_bin(&terms, sigma, rhs.bin(bin), scratch, betas, x);
        },
    );
    Ok(out)
}
