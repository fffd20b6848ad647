mod common;

use ccsc::conv::convolve_sum;
use ccsc::fft::Fft2d;
use ccsc::metrics::psnr;
use ccsc::sim::{make_pattern, simulate_interferogram, training_patterns, CoherenceSpec, PatternSpec};
use ccsc::solver::objective;
use ccsc::trainer::random_bank;
use ccsc::{
    ccdl_train, denoise, encode, encode_comcsc, CoefficientStack, Complex64, ComplexImage, Encoder, FilterBank,
    GradientFilters, SolverConfig, TrainConfig, TrainingBatch,
};
use common::*;

fn random_setup(seed: u64, rows: usize, cols: usize, m: usize, l: usize) -> (ComplexImage, FilterBank) {
    let mut rng = rng(seed);
    let image = rand_image(&mut rng, rows, cols);
    let bank = FilterBank::new((0..m).map(|_| rand_image(&mut rng, l, l)).collect()).unwrap();
    (image, bank)
}

#[test]
fn x_update_matches_dense_solve_on_small_instances() {
    for (seed, rows, cols, m, l) in [(1, 8, 8, 4, 3), (2, 4, 16, 2, 4), (3, 7, 9, 3, 2)] {
        let (image, bank) = random_setup(seed, rows, cols, m, l);
        let mut rng = rng(seed + 100);
        let y = rand_stack(&mut rng, m, rows, cols);
        let u = rand_stack(&mut rng, m, rows, cols);
        let grads = GradientFilters::default();
        let (mu, rho) = (3.0, 7.0);
        let mut enc = Encoder::new(&image, &bank, SolverConfig::new(1.0, mu).with_rho(rho), &grads).unwrap();
        enc.set_state(&y, &u).unwrap();
        let fast = to_vector(enc.solve_x().unwrap().maps());
        let dense = dense_x_update(&image, &bank, &grads, mu, rho, &y, &u);
        assert!(rel_err(fast.as_slice(), dense.as_slice()) <= 1e-8, "seed {seed}");
    }
}

#[test]
fn x_update_satisfies_per_bin_system() {
    let (image, bank) = random_setup(4, 8, 8, 3, 3);
    let mut rng = rng(44);
    let y = rand_stack(&mut rng, 3, 8, 8);
    let u = rand_stack(&mut rng, 3, 8, 8);
    let (mu, rho) = (5.0, 25.0);
    let grads = GradientFilters::default();
    let mut enc = Encoder::new(&image, &bank, SolverConfig::new(2.5, mu).with_rho(rho), &grads).unwrap();
    enc.set_state(&y, &u).unwrap();
    let xhat = enc.solve_x_hat().unwrap();

    let plan = Fft2d::new(8, 8);
    let dhat = plan.forward_many(&bank.padded(8, 8).unwrap());
    let shat = plan.forward(&image);
    let yhat = plan.forward_many(y.maps());
    let uhat = plan.forward_many(u.maps());
    let power = grads.power_spectrum(&plan).unwrap();
    for bin in 0..64 {
        let x = xhat.bin(bin);
        let dx: Complex64 = (0..3).map(|m| dhat[m][bin] * x[m]).sum();
        for m in 0..3 {
            let lhs = dhat[m][bin].conj() * dx + x[m] * (rho + mu * power[bin]);
            let rhs = dhat[m][bin].conj() * shat[bin] + (yhat[m][bin] - uhat[m][bin]) * rho;
            assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm().max(1.0), "bin {bin} map {m}");
        }
    }
}

#[test]
fn objective_matches_spatial_recomputation() {
    let (image, bank) = random_setup(5, 6, 7, 2, 3);
    let mut rng = rng(55);
    let stack = rand_stack(&mut rng, 2, 6, 7);
    let grads = GradientFilters::default();
    let cfg = SolverConfig::new(0.7, 1.3);
    let fast = objective(&image, &bank, &stack, &cfg, &grads).unwrap();

    let mut recon = vec![Complex64::new(0.0, 0.0); 42];
    let mut l1 = 0.0;
    let mut grad = 0.0;
    let g0 = conv_matrix(&grads.row_kernel(), 6, 7);
    let g1 = conv_matrix(&grads.col_kernel(), 6, 7);
    for (f, x) in bank.filters().iter().zip(stack.maps()) {
        let xv = to_vector(std::slice::from_ref(x));
        let dx = conv_matrix(f, 6, 7) * &xv;
        for (r, v) in recon.iter_mut().zip(dx.iter()) {
            *r += v;
        }
        l1 += x.l1_norm();
        grad += (&g0 * &xv).norm_squared() + (&g1 * &xv).norm_squared();
    }
    let fit: f64 = recon.iter().zip(image.as_slice()).map(|(r, s)| (r - s).norm_sqr()).sum();
    let slow = 0.5 * fit + 0.7 * l1 + 0.5 * 1.3 * grad;
    assert!((fast - slow).abs() <= 1e-10 * slow);

    let zero = objective(&image, &bank, &CoefficientStack::zeros(2, 6, 7), &cfg, &grads).unwrap();
    assert!((zero - 0.5 * image.norm_sqr()).abs() < 1e-12);
    let pure_fit = objective(&image, &bank, &stack, &SolverConfig::new(0.0, 0.0), &grads).unwrap();
    assert!((pure_fit - 0.5 * fit).abs() <= 1e-10 * fit);
}

#[test]
fn zero_mu_paths_agree() {
    let (image, bank) = random_setup(6, 16, 16, 3, 4);
    let cfg = SolverConfig::new(0.5, 0.0).with_max_iters(40);
    let (a, _) = encode(&image, &bank, &cfg, &GradientFilters::default()).unwrap();
    let (b, _) = encode(&image, &bank, &cfg, &GradientFilters::zeros()).unwrap();
    let (c, _) = encode_comcsc(&image, &bank, &cfg).unwrap();
    // zero kernels with a nonzero weight also collapse to plain coding
    let (d, _) = encode(&image, &bank, &SolverConfig::new(0.5, 4.0).with_max_iters(40), &GradientFilters::zeros()).unwrap();
    assert!(a.max_abs_diff(&b) <= 1e-12);
    assert!(a.max_abs_diff(&c) <= 1e-12);
    assert!(a.max_abs_diff(&d) <= 1e-12);
}

#[test]
fn long_run_beats_zero_stack() {
    let (image, _) = random_setup(7, 32, 32, 1, 1);
    let bank = random_bank(4, 4, 7);
    let cfg = SolverConfig::new(2.5, 5.0).with_rho(10.0).with_max_iters(200);
    let grads = GradientFilters::default();
    let (stack, trace) = encode(&image, &bank, &cfg, &grads).unwrap();
    let final_obj = objective(&image, &bank, &stack, &cfg, &grads).unwrap();
    assert!(final_obj <= 0.5 * image.norm_sqr());
    for (i, r) in trace.records.iter().enumerate() {
        assert_eq!(r.iteration, i + 1);
        assert!(r.primal_residual >= 0.0 && r.dual_residual >= 0.0);
    }
    if trace.converged {
        let last = trace.last().unwrap();
        assert!(last.primal_residual < cfg.tol && last.dual_residual < cfg.tol);
    }
}

#[test]
fn unregularized_fit_reconstructs_smooth_image() {
    let spec = PatternSpec::new("peaks".parse().unwrap(), 32, 32, CoherenceSpec::Constant(1.0));
    let image = make_pattern(&spec).unwrap().clean();
    let bank = random_bank(6, 4, 8);
    let cfg = SolverConfig::new(0.0, 0.0).with_tol(1e-7).with_max_iters(3000);
    let (stack, _) = encode(&image, &bank, &cfg, &GradientFilters::default()).unwrap();
    let recon = convolve_sum(&bank, &stack).unwrap();
    let err: f64 = recon
        .as_slice()
        .iter()
        .zip(image.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / image.norm();
    assert!(err <= 1e-3, "relative error {err}");
}

#[test]
fn encode_is_thread_count_independent() {
    let (image, bank) = random_setup(9, 24, 20, 4, 5);
    let cfg = SolverConfig::new(0.3, 2.0).with_max_iters(25);
    let grads = GradientFilters::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| encode(&image, &bank, &cfg, &grads).unwrap())
    };
    let (a, ta) = run(1);
    let (b, tb) = run(4);
    assert_eq!(a, b);
    assert_eq!(ta, tb);
}

#[test]
fn denoising_improves_noisy_squares() {
    let batch = TrainingBatch::new(training_patterns(32, 32, 6, 1).unwrap()).unwrap();
    let bank = ccdl_train(&batch, &TrainConfig::new(8, 6).with_iters(100)).unwrap().bank;
    let spec = PatternSpec::new("squares".parse().unwrap(), 64, 64, CoherenceSpec::Constant(0.5));
    let scene = make_pattern(&spec).unwrap();
    let truth = scene.clean();
    let noisy = simulate_interferogram(&scene, 3);
    let restored = denoise(&noisy, &bank, &SolverConfig::new(2.5, 5.0), &GradientFilters::default()).unwrap();
    assert_eq!(restored.dims(), noisy.dims());
    assert!(psnr(&truth, &restored).unwrap() > psnr(&truth, &noisy).unwrap());
}
