//! Circular convolution through the FFT.

use num_complex::Complex64;

use crate::error::Result;
use crate::fft::Fft2d;
use crate::image::{pad_top_left, CoefficientStack, ComplexImage, FilterBank};

/// `Σ_m d_m ∗ x_m` under circular convolution.
pub fn convolve_sum(bank: &FilterBank, coeffs: &CoefficientStack) -> Result<ComplexImage> {
    let (rows, cols) = coeffs.dims();
    if bank.num_filters() != coeffs.num_maps() {
        return Err(crate::error::Error::InvalidData(format!(
            "{} filters for {} coefficient maps",
            bank.num_filters(),
            coeffs.num_maps()
        )));
    }
    let plan = Fft2d::new(rows, cols);
    let dhat = plan.forward_many(&bank.padded(rows, cols)?);
    let xhat = plan.forward_many(coeffs.maps());
    Ok(plan.inverse(&sum_of_products(&dhat, &xhat)))
}

/// Pointwise `Σ_m a_m ⊙ b_m` over spectra.
pub(crate) fn sum_of_products(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Complex64> {
    let n = a[0].len();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for (am, bm) in a.iter().zip(b) {
        for ((s, &x), &y) in acc.iter_mut().zip(am).zip(bm) {
            *s += x * y;
        }
    }
    acc
}

/// Spectrum of a small kernel zero-padded to `rows×cols`, top-left anchored.
pub fn kernel_spectrum(kernel: &ComplexImage, plan: &Fft2d) -> Vec<Complex64> {
    let (rows, cols) = plan.dims();
    plan.forward(&pad_top_left(kernel, rows, cols))
}
