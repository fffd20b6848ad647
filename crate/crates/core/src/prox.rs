//! Proximal operators used by the ADMM blocks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::ComplexImage;

/// Scalar complex soft-thresholding: keeps the phase of `a` and shrinks its
/// amplitude by `gamma`, clamping at the origin.
///
/// This is the minimizer of `gamma·|y| + ½|y − a|²` over complex `y`.
#[inline]
pub fn soft_threshold_scalar(a: Complex64, gamma: f64) -> Complex64 {
    let amp = a.norm();
    if amp <= gamma || amp == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    a * ((amp - gamma) / amp)
}

/// Elementwise complex soft-thresholding of an image.
pub fn complex_soft_threshold(a: &ComplexImage, gamma: f64) -> ComplexImage {
    assert!(gamma >= 0.0, "threshold must be nonnegative");
    a.map(|z| soft_threshold_scalar(z, gamma))
}

/// In-place variant over a raw slice.
pub fn soft_threshold_inplace(buf: &mut [Complex64], gamma: f64) {
    for z in buf {
        *z = soft_threshold_scalar(*z, gamma);
    }
}

/// Outcome of projecting a padded filter onto the unit-norm, `L×L`-support set.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub filter: ComplexImage,
    /// Set when the support block had zero norm and the canonical impulse was
    /// substituted.
    pub degenerate: bool,
}

/// Projects a zero-padded filter onto the constraint set: zero everything
/// outside the top-left `support × support` window, then rescale the window
/// to unit ℓ2 norm.
pub fn project_to_constraint_set(d_padded: &ComplexImage, support: usize) -> Result<Projection> {
    let (rows, cols) = d_padded.dims();
    if support == 0 || support > rows || support > cols {
        return Err(Error::FilterTooLarge {
            filter_size: support,
            rows,
            cols,
        });
    }
    let mut out = ComplexImage::zeros(rows, cols);
    let mut norm_sqr = 0.0;
    for r in 0..support {
        for c in 0..support {
            let v = d_padded.get(r, c);
            norm_sqr += v.norm_sqr();
            out.set(r, c, v);
        }
    }
    if norm_sqr == 0.0 || !norm_sqr.is_finite() {
        let mut canon = ComplexImage::zeros(rows, cols);
        canon.set(0, 0, Complex64::new(1.0, 0.0));
        return Ok(Projection {
            filter: canon,
            degenerate: true,
        });
    }
    let inv = 1.0 / norm_sqr.sqrt();
    for r in 0..support {
        for c in 0..support {
            let v = out.get(r, c);
            out.set(r, c, v * inv);
        }
    }
    Ok(Projection {
        filter: out,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn origin_is_fixed() {
        assert_eq!(soft_threshold_scalar(c(0.0, 0.0), 0.5), c(0.0, 0.0));
        assert_eq!(soft_threshold_scalar(c(0.0, 0.0), 0.0), c(0.0, 0.0));
    }

    #[test]
    fn three_four_five_triangle() {
        let y = soft_threshold_scalar(c(3.0, 4.0), 1.0);
        assert!((y - c(2.4, 3.2)).norm() < 1e-15);
    }

    #[test]
    fn below_threshold_vanishes() {
        for k in 0..16 {
            let theta = k as f64 * 0.4;
            assert_eq!(soft_threshold_scalar(Complex64::from_polar(0.3, theta), 0.5), c(0.0, 0.0));
        }
    }

    #[test]
    fn image_variant_matches_scalar() {
        let img = ComplexImage::from_fn(3, 3, |r, k| c(r as f64 - 1.0, k as f64 * 0.7));
        let out = complex_soft_threshold(&img, 0.8);
        for (a, b) in img.as_slice().iter().zip(out.as_slice()) {
            assert_eq!(*b, soft_threshold_scalar(*a, 0.8));
        }
    }

    proptest! {
        #[test]
        fn shrinks_amplitude_and_keeps_phase(re in -10.0f64..10.0, im in -10.0f64..10.0, gamma in 0.0f64..5.0) {
            let a = c(re, im);
            let y = soft_threshold_scalar(a, gamma);
            prop_assert!(y.norm() <= a.norm() + 1e-12);
            prop_assert!((y.norm() - (a.norm() - gamma).max(0.0)).abs() < 1e-12);
            if y.norm() > 1e-9 {
                let dphi = crate::image::wrap_phase(y.arg() - a.arg());
                prop_assert!(dphi.abs() < 1e-9);
            }
        }
    }

    fn random_padded(rng: &mut ChaCha8Rng, n: usize) -> ComplexImage {
        ComplexImage::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn projection_satisfies_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let input = random_padded(&mut rng, 16);
        let p = project_to_constraint_set(&input, 4).unwrap();
        assert!(!p.degenerate);
        let mut inside = 0.0;
        for r in 0..16 {
            for k in 0..16 {
                let v = p.filter.get(r, k);
                if r < 4 && k < 4 {
                    inside += v.norm_sqr();
                } else {
                    assert_eq!(v, c(0.0, 0.0));
                }
            }
        }
        assert!((inside.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_discards_outside_mass_and_rescales() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let feasible = project_to_constraint_set(&random_padded(&mut rng, 8), 3).unwrap().filter;
        let mut messy = feasible.scale(c(2.0, 0.0));
        messy.set(5, 6, c(7.0, -1.0));
        messy.set(0, 7, c(-3.0, 2.0));
        let p = project_to_constraint_set(&messy, 3).unwrap();
        for (a, b) in p.filter.as_slice().iter().zip(feasible.as_slice()) {
            assert!((a - b).norm() < 1e-15);
        }
        // feasible points are fixed
        let again = project_to_constraint_set(&feasible, 3).unwrap().filter;
        for (a, b) in again.as_slice().iter().zip(feasible.as_slice()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_block_yields_canonical_impulse() {
        let mut img = ComplexImage::zeros(6, 6);
        img.set(5, 5, c(1.0, 1.0));
        let p = project_to_constraint_set(&img, 2).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.filter.get(0, 0), c(1.0, 0.0));
        assert!((p.filter.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn support_larger_than_grid_is_rejected() {
        assert!(project_to_constraint_set(&ComplexImage::zeros(3, 5), 4).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(seed in 0u64..500, support in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random_padded(&mut rng, 6);
            let once = project_to_constraint_set(&v, support).unwrap().filter;
            let twice = project_to_constraint_set(&once, support).unwrap().filter;
            for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
                prop_assert!((a - b).norm() < 1e-14);
            }
        }
    }
}
