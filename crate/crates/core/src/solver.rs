//! Complex convolutional sparse coding (ComCSC) and its gradient-regularized
//! variant (ComCSC-GR), both solved with ADMM against a fixed filter bank.
//!
//! The problem is
//!
//! ```text
//! min_x  ½‖Σ_m d_m ∗ x_m − s‖² + λ Σ_m ‖x_m‖₁ + (μ/2) Σ_m (‖g₀ ∗ x_m‖² + ‖g₁ ∗ x_m‖²)
//! ```
//!
//! split as `x = y` with scaled dual `u`. The `x` step is a linear system that
//! is rank-1 plus diagonal at every frequency bin; the `y` step is complex
//! soft-thresholding.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::conv::{convolve_sum, kernel_spectrum, sum_of_products};
use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::image::{CoefficientStack, ComplexImage, FilterBank};
use crate::linsolve::{solve_rank1_diag_systems, FrequencyGrid};
use crate::prox::soft_threshold_scalar;

/// Scalar hyperparameters of a coding run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// ℓ1 weight.
    pub lambda: f64,
    /// Gradient-penalty weight; zero disables the regularizer.
    pub mu: f64,
    /// ADMM penalty, fixed for the whole run.
    pub rho: f64,
    pub max_iters: usize,
    /// Threshold on the relative primal and dual residuals.
    pub tol: f64,
}

impl SolverConfig {
    pub const DEFAULT_LAMBDA: f64 = 2.5;
    pub const DEFAULT_MU: f64 = 5.0;

    /// Config with `rho = 10·lambda` (or 1 when `lambda` is zero).
    pub fn new(lambda: f64, mu: f64) -> Self {
        Self {
            lambda,
            mu,
            rho: Self::default_rho(lambda),
            max_iters: 300,
            tol: 1e-3,
        }
    }

    pub fn default_rho(lambda: f64) -> f64 {
        if lambda > 0.0 {
            10.0 * lambda
        } else {
            1.0
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::config(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::config(format!("mu must be nonnegative, got {}", self.mu)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(Self::DEFAULT_LAMBDA, Self::DEFAULT_MU)
    }
}

/// One ADMM iteration's diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    /// Relative primal residual `‖x − y‖ / max(‖x‖, ‖y‖)`.
    pub primal_residual: f64,
    /// Relative dual residual `‖y − y_prev‖ / ‖u‖`.
    pub dual_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdmmTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
}

impl AdmmTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// One `iteration objective primal dual` line per record.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# iteration objective primal_residual dual_residual\n");
        for r in &self.records {
            s.push_str(&format!(
                "{} {:.12e} {:.6e} {:.6e}\n",
                r.iteration, r.objective, r.primal_residual, r.dual_residual
            ));
        }
        s
    }
}

/// Gradient kernels: `g0` runs along image rows (horizontal), `g1` along
/// columns (vertical). Both are applied circularly.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientFilters {
    g0: Vec<Complex64>,
    g1: Vec<Complex64>,
}

impl GradientFilters {
    pub fn new(g0: Vec<Complex64>, g1: Vec<Complex64>) -> Result<Self> {
        if g0.len() < 2 || g1.len() < 2 {
            return Err(Error::config("gradient kernels need at least two taps"));
        }
        Ok(Self { g0, g1 })
    }

    /// `[−1, +1]` along rows and along columns.
    pub fn forward_difference() -> Self {
        let k = vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];
        Self {
            g0: k.clone(),
            g1: k,
        }
    }

    /// Two-tap kernels of zeros; turns ComCSC-GR into plain ComCSC.
    pub fn zeros() -> Self {
        let k = vec![Complex64::new(0.0, 0.0); 2];
        Self {
            g0: k.clone(),
            g1: k,
        }
    }

    pub fn g0(&self) -> &[Complex64] {
        &self.g0
    }

    pub fn g1(&self) -> &[Complex64] {
        &self.g1
    }

    /// `g0` as a `1×n` image.
    pub fn row_kernel(&self) -> ComplexImage {
        ComplexImage::from_raw(1, self.g0.len(), self.g0.clone())
    }

    /// `g1` as an `n×1` image.
    pub fn col_kernel(&self) -> ComplexImage {
        ComplexImage::from_raw(self.g1.len(), 1, self.g1.clone())
    }

    /// `|ĝ₀(ω)|² + |ĝ₁(ω)|²` at every bin of `plan`.
    pub fn power_spectrum(&self, plan: &Fft2d) -> Result<Vec<f64>> {
        let (rows, cols) = plan.dims();
        if self.g0.len() > cols || self.g1.len() > rows {
            return Err(Error::config("gradient kernel longer than the image"));
        }
        let h0 = kernel_spectrum(&self.row_kernel(), plan);
        let h1 = kernel_spectrum(&self.col_kernel(), plan);
        Ok(h0.iter().zip(&h1).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect())
    }
}

impl Default for GradientFilters {
    fn default() -> Self {
        Self::forward_difference()
    }
}

/// Iteration state of a single-image coding run.
///
/// Exposed so callers can step the ADMM loop manually; [`encode`] and
/// [`encode_comcsc`] drive it to convergence.
pub struct Encoder {
    config: SolverConfig,
    plan: Fft2d,
    rows: usize,
    cols: usize,
    dhat: Vec<Vec<Complex64>>,
    dconj: FrequencyGrid,
    dh_s: FrequencyGrid,
    shat: Vec<Complex64>,
    /// `|ĝ₀|² + |ĝ₁|²` per bin; `None` on the dedicated ComCSC path.
    grad_power: Option<Vec<f64>>,
    diag: Vec<f64>,
    x: Vec<ComplexImage>,
    y: Vec<ComplexImage>,
    u: Vec<ComplexImage>,
    yhat: Vec<Vec<Complex64>>,
    uhat: Vec<Vec<Complex64>>,
    iteration: usize,
    trace: AdmmTrace,
}

impl Encoder {
    /// ComCSC-GR encoder.
    pub fn new(image: &ComplexImage, bank: &FilterBank, config: SolverConfig, grads: &GradientFilters) -> Result<Self> {
        let plan = Fft2d::new(image.rows(), image.cols());
        let power = grads.power_spectrum(&plan)?;
        Self::build(image, bank, config, Some(power), plan)
    }

    /// Dedicated ComCSC encoder: no gradient term at all.
    pub fn comcsc(image: &ComplexImage, bank: &FilterBank, config: SolverConfig) -> Result<Self> {
        let plan = Fft2d::new(image.rows(), image.cols());
        Self::build(image, bank, config, None, plan)
    }

    fn build(
        image: &ComplexImage,
        bank: &FilterBank,
        config: SolverConfig,
        grad_power: Option<Vec<f64>>,
        plan: Fft2d,
    ) -> Result<Self> {
        config.validate()?;
        let (rows, cols) = image.dims();
        let padded = bank.padded(rows, cols)?;
        let m = bank.num_filters();
        let n = rows * cols;
        let dhat = plan.forward_many(&padded);
        let shat = plan.forward(image);
        let dconj = FrequencyGrid::from_spectra(rows, cols, &dhat).conj();
        let mut dh_s = dconj.clone();
        for bin in 0..n {
            let s = shat[bin];
            for v in dh_s.bin_mut(bin) {
                *v *= s;
            }
        }
        let diag = match &grad_power {
            Some(w) => w.iter().map(|&w| config.rho + config.mu * w).collect(),
            None => vec![config.rho; n],
        };
        let zeros = vec![ComplexImage::zeros(rows, cols); m];
        let zero_spec = vec![vec![Complex64::new(0.0, 0.0); n]; m];
        Ok(Self {
            config,
            plan,
            rows,
            cols,
            dhat,
            dconj,
            dh_s,
            shat,
            grad_power,
            diag,
            x: zeros.clone(),
            y: zeros.clone(),
            u: zeros,
            yhat: zero_spec.clone(),
            uhat: zero_spec,
            iteration: 0,
            trace: AdmmTrace::default(),
        })
    }

    /// Replaces the auxiliary and dual variables, e.g. for warm starts.
    pub fn set_state(&mut self, y: &CoefficientStack, u: &CoefficientStack) -> Result<()> {
        for s in [y, u] {
            if s.num_maps() != self.dhat.len() || s.dims() != (self.rows, self.cols) {
                return Err(Error::DimensionMismatch {
                    expected: (self.rows, self.cols),
                    found: s.dims(),
                });
            }
        }
        self.y = y.maps().to_vec();
        self.u = u.maps().to_vec();
        self.yhat = self.plan.forward_many(&self.y);
        self.uhat = self.plan.forward_many(&self.u);
        Ok(())
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn trace(&self) -> &AdmmTrace {
        &self.trace
    }

    pub fn into_trace(self) -> AdmmTrace {
        self.trace
    }

    /// Current `x` (the linear-system iterate).
    pub fn x(&self) -> CoefficientStack {
        CoefficientStack::new(self.x.clone()).expect("encoder maps are consistent")
    }

    /// Current `y` (the sparse iterate, returned as the solution).
    pub fn y(&self) -> CoefficientStack {
        CoefficientStack::new(self.y.clone()).expect("encoder maps are consistent")
    }

    pub fn u(&self) -> CoefficientStack {
        CoefficientStack::new(self.u.clone()).expect("encoder maps are consistent")
    }

    /// Per-bin diagonal offsets `ρ + μ(|ĝ₀|² + |ĝ₁|²)`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Solves the `x` subproblem in the frequency domain for the current
    /// `y`, `u`, returning `x̂` per bin.
    pub fn solve_x_hat(&self) -> Result<FrequencyGrid> {
        let rho = self.config.rho;
        let ymu: Vec<Vec<Complex64>> = self
            .yhat
            .iter()
            .zip(&self.uhat)
            .map(|(y, u)| y.iter().zip(u).map(|(a, b)| a - b).collect())
            .collect();
        let mut rhs = FrequencyGrid::from_spectra(self.rows, self.cols, &ymu);
        for (r, &d) in rhs.as_mut_slice().iter_mut().zip(self.dh_s.as_slice()) {
            *r = d + *r * rho;
        }
        solve_rank1_diag_systems(&self.dconj, &self.diag, &rhs)
    }

    /// Spatial-domain `x` update for the current state, without advancing.
    pub fn solve_x(&self) -> Result<CoefficientStack> {
        let xhat = self.solve_x_hat()?.to_spectra();
        CoefficientStack::new(self.plan.inverse_many(&xhat))
    }

    /// Runs one x/y/u triple and records its diagnostics.
    pub fn step(&mut self) -> Result<TraceRecord> {
        let xspec = self.solve_x_hat()?.to_spectra();
        self.x = self.plan.inverse_many(&xspec);
        self.iteration += 1;
        if !self.x.iter().all(ComplexImage::is_finite) {
            return Err(self.diverged());
        }

        let gamma = self.config.lambda / self.config.rho;
        let y_prev = std::mem::take(&mut self.y);
        let (y, u): (Vec<ComplexImage>, Vec<ComplexImage>) = self
            .x
            .par_iter()
            .zip(&self.u)
            .map(|(x, u)| {
                let mut yv = Vec::with_capacity(x.len());
                let mut uv = Vec::with_capacity(x.len());
                for (&xi, &ui) in x.as_slice().iter().zip(u.as_slice()) {
                    let yi = soft_threshold_scalar(xi + ui, gamma);
                    yv.push(yi);
                    uv.push(ui + xi - yi);
                }
                (
                    ComplexImage::from_raw(self.rows, self.cols, yv),
                    ComplexImage::from_raw(self.rows, self.cols, uv),
                )
            })
            .unzip();
        self.y = y;
        self.u = u;
        self.yhat = self.plan.forward_many(&self.y);
        // û ← û + x̂ − ŷ, by linearity of the transform.
        for ((uh, xh), yh) in self.uhat.iter_mut().zip(&xspec).zip(&self.yhat) {
            for ((a, &b), &c) in uh.iter_mut().zip(xh).zip(yh) {
                *a += b - c;
            }
        }

        let (primal, dual) = residuals(&self.x, &self.y, &y_prev, &self.u);
        let objective = self.objective_from_spectra();
        let rec = TraceRecord {
            iteration: self.iteration,
            objective,
            primal_residual: primal,
            dual_residual: dual,
        };
        self.trace.records.push(rec);
        if !objective.is_finite() || !primal.is_finite() {
            return Err(self.diverged());
        }
        Ok(rec)
    }

    fn diverged(&self) -> Error {
        Error::Diverged {
            iteration: self.iteration,
            trace: self.trace.clone(),
        }
    }

    /// Objective at the current `y`, evaluated through Parseval.
    fn objective_from_spectra(&self) -> f64 {
        let n = (self.rows * self.cols) as f64;
        let recon = sum_of_products(&self.dhat, &self.yhat);
        let fit: f64 = recon
            .iter()
            .zip(&self.shat)
            .map(|(r, s)| (r - s).norm_sqr())
            .sum::<f64>()
            / n;
        let l1: f64 = self.y.iter().map(ComplexImage::l1_norm).sum();
        let grad = match &self.grad_power {
            Some(w) if self.config.mu != 0.0 => {
                self.yhat
                    .iter()
                    .map(|yh| yh.iter().zip(w).map(|(z, &w)| w * z.norm_sqr()).sum::<f64>())
                    .sum::<f64>()
                    / n
            }
            _ => 0.0,
        };
        0.5 * fit + self.config.lambda * l1 + 0.5 * self.config.mu * grad
    }

    /// Iterates until both relative residuals drop below `tol` or the
    /// iteration budget runs out.
    pub fn run(&mut self) -> Result<()> {
        while self.iteration < self.config.max_iters {
            let rec = self.step()?;
            if rec.primal_residual < self.config.tol && rec.dual_residual < self.config.tol {
                self.trace.converged = true;
                break;
            }
        }
        Ok(())
    }
}

fn norm_of(maps: &[ComplexImage]) -> f64 {
    maps.iter().map(ComplexImage::norm_sqr).sum::<f64>().sqrt()
}

fn diff_norm(a: &[ComplexImage], b: &[ComplexImage]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| p.as_slice().iter().zip(q.as_slice()))
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn nonzero_or_one(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        1.0
    }
}

/// Relative primal and dual residuals of the scaled-form ADMM.
pub(crate) fn residuals(x: &[ComplexImage], y: &[ComplexImage], y_prev: &[ComplexImage], u: &[ComplexImage]) -> (f64, f64) {
    let primal = diff_norm(x, y) / nonzero_or_one(norm_of(x).max(norm_of(y)));
    let dual = diff_norm(y, y_prev) / nonzero_or_one(norm_of(u));
    (primal, dual)
}

/// Encodes `image` with ComCSC-GR and returns the sparse coefficient maps.
pub fn encode(
    image: &ComplexImage,
    bank: &FilterBank,
    config: &SolverConfig,
    grads: &GradientFilters,
) -> Result<(CoefficientStack, AdmmTrace)> {
    let mut enc = Encoder::new(image, bank, *config, grads)?;
    enc.run()?;
    Ok((enc.y(), enc.into_trace()))
}

/// Encodes `image` with plain ComCSC (no gradient regularization).
pub fn encode_comcsc(image: &ComplexImage, bank: &FilterBank, config: &SolverConfig) -> Result<(CoefficientStack, AdmmTrace)> {
    let mut enc = Encoder::comcsc(image, bank, *config)?;
    enc.run()?;
    Ok((enc.y(), enc.into_trace()))
}

/// Restores `image` as `Σ_m d_m ∗ x_m` from its ComCSC-GR code.
pub fn denoise(image: &ComplexImage, bank: &FilterBank, config: &SolverConfig, grads: &GradientFilters) -> Result<ComplexImage> {
    let (stack, _) = encode(image, bank, config, grads)?;
    convolve_sum(bank, &stack)
}

/// Restores `image` through plain ComCSC.
pub fn denoise_comcsc(image: &ComplexImage, bank: &FilterBank, config: &SolverConfig) -> Result<ComplexImage> {
    let (stack, _) = encode_comcsc(image, bank, config)?;
    convolve_sum(bank, &stack)
}

/// ComCSC-GR objective at `stack`.
pub fn objective(
    image: &ComplexImage,
    bank: &FilterBank,
    stack: &CoefficientStack,
    config: &SolverConfig,
    grads: &GradientFilters,
) -> Result<f64> {
    let (rows, cols) = image.dims();
    if stack.dims() != image.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            found: stack.dims(),
        });
    }
    let recon = convolve_sum(bank, stack)?;
    let fit: f64 = recon
        .as_slice()
        .iter()
        .zip(image.as_slice())
        .map(|(r, s)| (r - s).norm_sqr())
        .sum();
    let mut grad = 0.0;
    if config.mu != 0.0 {
        let plan = Fft2d::new(rows, cols);
        let power = grads.power_spectrum(&plan)?;
        let n = (rows * cols) as f64;
        for map in stack.maps() {
            let spec = plan.forward(map);
            grad += spec.iter().zip(&power).map(|(z, &w)| w * z.norm_sqr()).sum::<f64>() / n;
        }
    }
    Ok(0.5 * fit + config.lambda * stack.l1_norm() + 0.5 * config.mu * grad)
}
