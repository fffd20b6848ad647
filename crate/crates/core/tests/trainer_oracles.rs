mod common;

use std::time::Instant;

use ccsc::linsolve::solve_iterated_sherman_morrison;
use ccsc::sim::training_patterns;
use ccsc::trainer::random_bank;
use ccsc::{ccdl_train, Complex64, ComplexImage, Encoder, SolverConfig, TrainConfig, Trainer, TrainingBatch};
use common::*;
use nalgebra::DMatrix;

fn config(m: usize, l: usize) -> TrainConfig {
    TrainConfig::new(m, l).with_seed(3)
}

#[test]
fn single_image_sparse_step_matches_encoder_first_iteration() {
    let mut rng = rng(1);
    let image = rand_image(&mut rng, 12, 10);
    let bank = random_bank(3, 4, 1);
    let cfg = config(3, 4);
    let batch = TrainingBatch::new(vec![image.clone()]).unwrap();
    let mut trainer = Trainer::with_bank(&batch, cfg, &bank).unwrap();
    trainer.sparse_step().unwrap();

    let mut enc = Encoder::comcsc(&image, &trainer.bank(), SolverConfig::new(cfg.lambda, 0.0).with_rho(cfg.rho)).unwrap();
    enc.step().unwrap();
    assert!(trainer.x_coefficients(0).max_abs_diff(&enc.x()) <= 1e-12);
    assert!(trainer.coefficients(0).max_abs_diff(&enc.y()) <= 1e-12);
}

#[test]
fn coding_system_is_satisfied_per_bin() {
    let batch = TrainingBatch::new(training_patterns(8, 8, 3, 2).unwrap()).unwrap();
    let cfg = config(2, 3);
    let rho = cfg.rho;
    let mut trainer = Trainer::new(&batch, cfg).unwrap();
    trainer.step().unwrap();
    let a = trainer.coding_vectors();
    let rhs = trainer.coding_rhs(1);
    let x = ccsc::linsolve::solve_rank1_diag_systems(&a, &vec![rho; 64], &rhs).unwrap();
    for bin in 0..64 {
        let (av, xv, bv) = (a.bin(bin), x.bin(bin), rhs.bin(bin));
        let ahx: Complex64 = av.iter().zip(xv).map(|(p, q)| p.conj() * q).sum();
        for m in 0..2 {
            let lhs = av[m] * ahx + xv[m] * rho;
            assert!((lhs - bv[m]).norm() <= 1e-9 * bv[m].norm().max(1.0));
        }
    }
}

#[test]
fn dictionary_system_matches_dense_per_bin() {
    let batch = TrainingBatch::new(training_patterns(8, 8, 2, 4).unwrap()).unwrap();
    let cfg = config(2, 3);
    let mut trainer = Trainer::new(&batch, cfg).unwrap();
    trainer.step().unwrap();
    trainer.sparse_step().unwrap();
    let terms = trainer.dictionary_vectors();
    let rhs = trainer.dictionary_rhs();
    let solved = solve_iterated_sherman_morrison(&terms, cfg.sigma, &rhs).unwrap();
    for bin in 0..64 {
        let vectors: Vec<Vec<Complex64>> = terms.iter().map(|g| g.bin(bin).to_vec()).collect();
        let dense = dense_rank_k_solve(&vectors, cfg.sigma, rhs.bin(bin));
        assert!(rel_err(solved.bin(bin), dense.as_slice()) <= 1e-10, "bin {bin}");
    }
}

#[test]
fn dictionary_update_matches_spatial_normal_equations() {
    let batch = TrainingBatch::new(training_patterns(6, 6, 2, 5).unwrap()).unwrap();
    let cfg = config(2, 3);
    let mut trainer = Trainer::new(&batch, cfg).unwrap();
    trainer.sparse_step().unwrap();
    let start = trainer.bank().padded(6, 6).unwrap();
    trainer.dict_step().unwrap();

    // (Σ_k Y_kᴴY_k + σI) d = Σ_k Y_kᴴ s_k + σ d₀, with Y_k d = Σ_m y_km ∗ d_m
    let n = 36;
    let mut lhs = DMatrix::from_diagonal_element(2 * n, 2 * n, Complex64::new(cfg.sigma, 0.0));
    let mut rhs = to_vector(&start) * Complex64::new(cfg.sigma, 0.0);
    for (k, s) in batch.images().iter().enumerate() {
        let coeffs = trainer.coefficients(k);
        let mut yk = DMatrix::zeros(n, 2 * n);
        for (m, map) in coeffs.maps().iter().enumerate() {
            yk.view_mut((0, m * n), (n, n)).copy_from(&conv_matrix(map, 6, 6));
        }
        lhs += yk.adjoint() * &yk;
        rhs += yk.adjoint() * to_vector(std::slice::from_ref(s));
    }
    let dense = lhs.lu().solve(&rhs).unwrap();
    let fast = to_vector(trainer.raw_dictionary());
    assert!(rel_err(fast.as_slice(), dense.as_slice()) <= 1e-9);
}

#[test]
fn projected_filters_satisfy_constraints() {
    let batch = TrainingBatch::new(training_patterns(16, 16, 4, 6).unwrap()).unwrap();
    let mut trainer = Trainer::new(&batch, config(4, 5)).unwrap();
    for _ in 0..5 {
        trainer.step().unwrap();
    }
    let bank = trainer.bank();
    assert!(bank.max_norm_deviation() <= 1e-10);
    for padded in bank.padded(16, 16).unwrap() {
        for r in 0..16 {
            for c in 0..16 {
                if r >= 5 || c >= 5 {
                    assert_eq!(padded.get(r, c), Complex64::new(0.0, 0.0));
                }
            }
        }
    }
}

#[test]
fn single_bump_data_fit_decreases() {
    let bump = ComplexImage::from_fn(16, 16, |r, c| {
        let d2 = (r as f64 - 2.0).powi(2) + (c as f64 - 2.0).powi(2);
        Complex64::from_polar((-d2 / 3.0).exp(), 0.4 * r as f64)
    });
    let batch = TrainingBatch::new(vec![bump]).unwrap();
    let mut trainer = Trainer::new(&batch, config(1, 5).with_lambda(0.05)).unwrap();
    let mut fits = Vec::new();
    for it in 1..=10 {
        trainer.step().unwrap();
        if [1, 5, 10].contains(&it) {
            fits.push(trainer.data_fit());
        }
    }
    assert!(fits[0] > fits[1] && fits[1] > fits[2], "{fits:?}");
}

#[test]
fn training_is_thread_count_independent() {
    let batch = TrainingBatch::new(training_patterns(16, 16, 3, 7).unwrap()).unwrap();
    let cfg = config(4, 4).with_iters(5);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ccdl_train(&batch, &cfg).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.bank, b.bank);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn training_cost_grows_at_most_quadratically_in_batch_size() {
    let images = training_patterns(32, 32, 8, 8).unwrap();
    let time = |k: usize| {
        let batch = TrainingBatch::new(images[..k].to_vec()).unwrap();
        let cfg = config(8, 6).with_iters(10);
        let mut runs: Vec<f64> = (0..3)
            .map(|_| {
                let t = Instant::now();
                ccdl_train(&batch, &cfg).unwrap();
                t.elapsed().as_secs_f64()
            })
            .collect();
        runs.sort_by(f64::total_cmp);
        runs[1]
    };
    let (t2, t4, t8) = (time(2), time(4), time(8));
    assert!(t4 / t2 <= 4.0 && t8 / t2 <= 16.0, "times {t2} {t4} {t8}");
}
