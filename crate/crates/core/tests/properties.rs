mod common;

use std::f64::consts::PI;
use std::io::Cursor;

use ccsc::fft::Fft2d;
use ccsc::io::{decode_cdic, decode_cimg_raw, encode_cdic, encode_cimg};
use ccsc::metrics::{colinearity_map, psnr, residual_phase};
use ccsc::prox::{complex_soft_threshold, project_to_constraint_set, soft_threshold_scalar};
use ccsc::{wrap_phase, Complex64, ComplexImage, FilterBank, RealImage};
use common::prox_objective;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn image(rows: usize, cols: usize) -> impl Strategy<Value = ComplexImage> {
    prop::collection::vec(complex(), rows * cols).prop_map(move |v| ComplexImage::from_vec(rows, cols, v).unwrap())
}

fn nonzero_image(rows: usize, cols: usize) -> impl Strategy<Value = ComplexImage> {
    prop::collection::vec((0.1..3.0f64, -PI..PI), rows * cols).prop_map(move |v| {
        ComplexImage::from_vec(rows, cols, v.into_iter().map(|(a, p)| Complex64::from_polar(a, p)).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn soft_threshold_shrinks_and_keeps_phase(img in image(4, 5), gamma in 0.0..3.0f64) {
        let out = complex_soft_threshold(&img, gamma);
        for (o, i) in out.as_slice().iter().zip(img.as_slice()) {
            prop_assert!(o.norm() <= i.norm() + 1e-15);
            if o.norm() > 0.0 {
                prop_assert!(wrap_phase(o.arg() - i.arg()).abs() < 1e-12);
                prop_assert!((o.norm() - (i.norm() - gamma)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn soft_threshold_beats_every_grid_point(a in complex(), gamma in 0.0..3.0f64) {
        let best = prox_objective(soft_threshold_scalar(a, gamma), a, gamma);
        let radius = 2.0 * a.norm();
        for i in 0..400 {
            for j in 0..400 {
                let y = Complex64::new(
                    -radius + 2.0 * radius * i as f64 / 399.0,
                    -radius + 2.0 * radius * j as f64 / 399.0,
                );
                prop_assert!(best <= prox_objective(y, a, gamma) + 1e-12);
            }
        }
    }

    #[test]
    fn projection_is_idempotent(img in image(9, 7), support in 1usize..=7) {
        let once = project_to_constraint_set(&img, support).unwrap().filter;
        let twice = project_to_constraint_set(&once, support).unwrap().filter;
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            prop_assert!((a - b).norm() < 1e-14);
        }
        prop_assert!((once.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fft_round_trip(img in image(6, 10)) {
        let plan = Fft2d::new(6, 10);
        let back = plan.inverse(&plan.forward(&img));
        for (a, b) in back.as_slice().iter().zip(img.as_slice()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        // Parseval under the unnormalized forward transform
        let energy: f64 = plan.forward(&img).iter().map(|z| z.norm_sqr()).sum::<f64>() / 60.0;
        prop_assert!((energy - img.norm_sqr()).abs() < 1e-9 * img.norm_sqr().max(1.0));
    }

    #[test]
    fn psnr_ignores_a_common_field(t in nonzero_image(6, 6), e in nonzero_image(6, 6), w in nonzero_image(6, 6)) {
        let tw = ComplexImage::from_fn(6, 6, |r, c| t.get(r, c) * w.get(r, c));
        let ew = ComplexImage::from_fn(6, 6, |r, c| e.get(r, c) * w.get(r, c));
        let a = psnr(&t, &e).unwrap();
        let b = psnr(&tw, &ew).unwrap();
        prop_assert!((a - b).abs() < 1e-8 || (a.is_infinite() && b.is_infinite()));
    }

    #[test]
    fn residual_of_global_offset_is_constant(t in nonzero_image(5, 7), theta in -10.0..10.0f64) {
        let shifted = t.scale(Complex64::from_polar(1.0, theta));
        let expected = wrap_phase(theta);
        for r in residual_phase(&t, &shifted).unwrap().as_slice() {
            let d = wrap_phase(r - expected).abs();
            prop_assert!(d < 1e-9);
        }
    }

    #[test]
    fn colinearity_lies_in_unit_interval(phases in prop::collection::vec(-PI..PI, 12 * 12), window in prop::sample::select(vec![3usize, 5, 7])) {
        let map = colinearity_map(&RealImage::from_vec(12, 12, phases).unwrap(), window).unwrap();
        let half = window / 2;
        for r in 0..12 {
            for c in 0..12 {
                let v = map.get(r, c);
                let interior = r >= half && r < 12 - half && c >= half && c < 12 - half;
                if interior {
                    prop_assert!((0.0..=1.0).contains(&v));
                } else {
                    prop_assert!(v.is_nan());
                }
            }
        }
    }

    #[test]
    fn cimg_round_trip_preserves_bits(bits in prop::collection::vec(any::<u64>(), 2 * 3 * 4)) {
        let data: Vec<Complex64> = bits.chunks(2).map(|p| Complex64::new(f64::from_bits(p[0]), f64::from_bits(p[1]))).collect();
        let mut first = Vec::new();
        encode_cimg(&mut first, 3, 4, &data).unwrap();
        let raw = decode_cimg_raw(&mut Cursor::new(&first)).unwrap();
        let mut second = Vec::new();
        encode_cimg(&mut second, raw.rows, raw.cols, &raw.data).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn cdic_round_trip_preserves_bits(filters in prop::collection::vec(image(3, 3), 1..4)) {
        let bank = FilterBank::new(filters).unwrap();
        let mut first = Vec::new();
        encode_cdic(&mut first, &bank).unwrap();
        let back = decode_cdic(&mut Cursor::new(&first)).unwrap();
        let mut second = Vec::new();
        encode_cdic(&mut second, &back).unwrap();
        prop_assert_eq!(first, second);
    }
}
