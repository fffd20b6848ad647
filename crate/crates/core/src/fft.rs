//! 2-D FFT plumbing.
//!
//! Forward transforms are unnormalized and inverse transforms carry the full
//! `1/N` factor, so `inverse(forward(x)) == x` up to round-off and circular
//! convolution becomes a pointwise product of spectra.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::image::ComplexImage;

/// Planned forward/inverse 2-D transforms for one grid size.
#[derive(Clone)]
pub struct Fft2d {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl Fft2d {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-place unnormalized forward transform of a row-major buffer.
    pub fn forward_inplace(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.row_fwd, &self.col_fwd);
    }

    /// In-place inverse transform, scaled by `1/N`.
    pub fn inverse_inplace(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.row_inv, &self.col_inv);
        let scale = 1.0 / self.len() as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    pub fn forward(&self, img: &ComplexImage) -> Vec<Complex64> {
        debug_assert_eq!(img.dims(), self.dims());
        let mut buf = img.as_slice().to_vec();
        self.forward_inplace(&mut buf);
        buf
    }

    /// Inverse transform back into an image. The result is not checked for
    /// finiteness; callers inspect it where divergence matters.
    pub fn inverse(&self, spectrum: &[Complex64]) -> ComplexImage {
        let mut buf = spectrum.to_vec();
        self.inverse_inplace(&mut buf);
        ComplexImage::from_raw(self.rows, self.cols, buf)
    }

    /// Forward transforms of many images; independent, so run in parallel.
    pub fn forward_many(&self, imgs: &[ComplexImage]) -> Vec<Vec<Complex64>> {
        imgs.par_iter().map(|img| self.forward(img)).collect()
    }

    pub fn inverse_many(&self, spectra: &[Vec<Complex64>]) -> Vec<ComplexImage> {
        spectra.par_iter().map(|s| self.inverse(s)).collect()
    }

    fn transform(&self, buf: &mut [Complex64], row_plan: &Arc<dyn Fft<f64>>, col_plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(buf.len(), self.len(), "buffer does not match planned size");
        // rustfft processes every contiguous chunk of the plan length.
        row_plan.process(buf);
        if self.rows == 1 {
            return;
        }
        let mut t = transpose(buf, self.rows, self.cols);
        col_plan.process(&mut t);
        let back = transpose(&t, self.cols, self.rows);
        buf.copy_from_slice(&back);
    }
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    const BLOCK: usize = 32;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
    dst
}
