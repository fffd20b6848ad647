//! Dense reference implementations shared by the integration tests.

#![allow(dead_code)]

use ccsc::{CoefficientStack, Complex64, ComplexImage, FilterBank, GradientFilters};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn rand_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexImage {
    ComplexImage::from_fn(rows, cols, |_, _| rand_c(rng))
}

pub fn rand_stack(rng: &mut ChaCha8Rng, maps: usize, rows: usize, cols: usize) -> CoefficientStack {
    CoefficientStack::new((0..maps).map(|_| rand_image(rng, rows, cols)).collect()).unwrap()
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| rand_c(rng)).collect()
}

/// `N×N` matrix of circular convolution with `kernel`, top-left anchored:
/// `(k ∗ x)(r, c) = Σ k(i, j) x(r − i, c − j)`.
pub fn conv_matrix(kernel: &ComplexImage, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let n = rows * cols;
    let mut a = DMatrix::zeros(n, n);
    for r in 0..rows {
        for c in 0..cols {
            for i in 0..kernel.rows() {
                for j in 0..kernel.cols() {
                    let src = ((r + rows - i % rows) % rows) * cols + (c + cols - j % cols) % cols;
                    a[(r * cols + c, src)] += kernel.get(i, j);
                }
            }
        }
    }
    a
}

pub fn to_vector(images: &[ComplexImage]) -> DVector<Complex64> {
    DVector::from_iterator(
        images.iter().map(ComplexImage::len).sum(),
        images.iter().flat_map(|m| m.as_slice().iter().copied()),
    )
}

/// Dense spatial solve of the ComCSC-GR x-subproblem
/// `(DᴴD + μ Σ GᵢᴴGᵢ + ρI) x = Dᴴs + ρ(y − u)`.
pub fn dense_x_update(
    image: &ComplexImage,
    bank: &FilterBank,
    grads: &GradientFilters,
    mu: f64,
    rho: f64,
    y: &CoefficientStack,
    u: &CoefficientStack,
) -> DVector<Complex64> {
    let (rows, cols) = image.dims();
    let n = rows * cols;
    let m = bank.num_filters();
    let mut d = DMatrix::zeros(n, n * m);
    for (k, f) in bank.filters().iter().enumerate() {
        d.view_mut((0, k * n), (n, n)).copy_from(&conv_matrix(f, rows, cols));
    }
    let g0 = conv_matrix(&grads.row_kernel(), rows, cols);
    let g1 = conv_matrix(&grads.col_kernel(), rows, cols);
    let gram = g0.adjoint() * &g0 + g1.adjoint() * &g1;
    let mut a = d.adjoint() * &d;
    for k in 0..m {
        let mut block = a.view_mut((k * n, k * n), (n, n));
        block += &gram * Complex64::new(mu, 0.0);
    }
    for i in 0..n * m {
        a[(i, i)] += Complex64::new(rho, 0.0);
    }
    let s = to_vector(std::slice::from_ref(image));
    let diff = to_vector(y.maps()) - to_vector(u.maps());
    let rhs = d.adjoint() * s + diff * Complex64::new(rho, 0.0);
    a.lu().solve(&rhs).expect("system is positive definite")
}

/// Dense solve of `(Σ_k a_k a_kᴴ + diag·I) x = b`.
pub fn dense_rank_k_solve(terms: &[Vec<Complex64>], diag: f64, b: &[Complex64]) -> DVector<Complex64> {
    let m = b.len();
    let mut a = DMatrix::from_diagonal_element(m, m, Complex64::new(diag, 0.0));
    for t in terms {
        let v = DVector::from_column_slice(t);
        a += &v * v.adjoint();
    }
    a.lu().solve(&DVector::from_column_slice(b)).expect("system is positive definite")
}

pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// `γ|y| + ½|y − a|²`.
pub fn prox_objective(y: Complex64, a: Complex64, gamma: f64) -> f64 {
    gamma * y.norm() + 0.5 * (y - a).norm_sqr()
}

/// Minimum of [`prox_objective`] on a grid refined around the best point.
pub fn prox_grid_minimum(a: Complex64, gamma: f64) -> f64 {
    let mut center = Complex64::new(a.re / 2.0, a.im / 2.0);
    let mut half = a.norm().max(1e-3) * 0.75;
    let mut best = f64::INFINITY;
    for level in 0..6 {
        let steps = if level == 0 { 100 } else { 40 };
        let mut next = center;
        for i in 0..=steps {
            for j in 0..=steps {
                let y = Complex64::new(
                    center.re - half + 2.0 * half * i as f64 / steps as f64,
                    center.im - half + 2.0 * half * j as f64 / steps as f64,
                );
                let f = prox_objective(y, a, gamma);
                if f < best {
                    best = f;
                    next = y;
                }
            }
        }
        // the origin is a kink where the minimizer often sits
        let f0 = prox_objective(Complex64::new(0.0, 0.0), a, gamma);
        if f0 < best {
            best = f0;
            next = Complex64::new(0.0, 0.0);
        }
        center = next;
        half *= 4.0 / steps as f64;
    }
    best
}
