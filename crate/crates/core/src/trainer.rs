//! Complex convolutional dictionary learning (CCDL).
//!
//! Alternates two ADMM blocks over a batch of clean interferograms:
//! multi-image sparse coding with the dictionary fixed, then a dictionary
//! update with the coefficients fixed. Each outer iteration runs exactly one
//! x/y/u triple of each block, warm-started from the previous iteration.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::conv::sum_of_products;
use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::image::{CoefficientStack, ComplexImage, FilterBank};
use crate::linsolve::{solve_iterated_sherman_morrison, solve_rank1_diag_systems, FrequencyGrid};
use crate::prox::{project_to_constraint_set, soft_threshold_scalar};
use crate::solver::{residuals, AdmmTrace, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    /// Penalty of the sparse-coding block.
    pub rho: f64,
    /// Penalty of the dictionary block.
    pub sigma: f64,
    pub num_filters: usize,
    pub filter_size: usize,
    pub outer_iters: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub const DEFAULT_LAMBDA: f64 = 0.2;

    /// Desk-scale defaults: 16 filters of 8×8, 200 outer iterations.
    pub fn new(num_filters: usize, filter_size: usize) -> Self {
        let lambda = Self::DEFAULT_LAMBDA;
        Self {
            lambda,
            rho: Self::default_rho(lambda),
            sigma: Self::DEFAULT_SIGMA,
            num_filters,
            filter_size,
            outer_iters: 200,
            seed: 0,
        }
    }

    pub const DEFAULT_SIGMA: f64 = 10.0;

    pub fn default_rho(lambda: f64) -> f64 {
        50.0 * lambda + 1.0
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_iters(mut self, outer_iters: usize) -> Self {
        self.outer_iters = outer_iters;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_filters < 1 {
            return Err(Error::config("at least one filter is required"));
        }
        if self.filter_size < 2 {
            return Err(Error::config(format!("filter size must be at least 2, got {}", self.filter_size)));
        }
        if !(self.rho > 0.0) || !(self.sigma > 0.0) {
            return Err(Error::config("rho and sigma must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::new(16, 8)
    }
}

/// Equal-sized clean training images.
#[derive(Debug, Clone)]
pub struct TrainingBatch {
    images: Vec<ComplexImage>,
}

impl TrainingBatch {
    pub fn new(images: Vec<ComplexImage>) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::InvalidData("training batch is empty".into()))?;
        for img in &images {
            first.check_same_dims(img)?;
        }
        Ok(Self { images })
    }

    pub fn images(&self) -> &[ComplexImage] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.images[0].dims()
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct Trained {
    pub bank: FilterBank,
    /// Objective and coding-block residuals per outer iteration.
    pub trace: AdmmTrace,
    /// Objective before the first iteration (all-zero coefficients).
    pub initial_objective: f64,
    /// How many projections hit a zero-norm support block.
    pub degenerate_projections: usize,
}

/// Seeded random filters with complex Gaussian entries, projected to unit norm.
pub fn random_bank(num_filters: usize, filter_size: usize, seed: u64) -> FilterBank {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filters = (0..num_filters)
        .map(|_| {
            let f = ComplexImage::from_fn(filter_size, filter_size, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            });
            project_to_constraint_set(&f, filter_size)
                .expect("support equals the filter size")
                .filter
        })
        .collect();
    FilterBank::new(filters).expect("filters share one size")
}

/// Complete alternating-minimization state.
pub struct Trainer {
    config: TrainConfig,
    plan: Fft2d,
    rows: usize,
    cols: usize,
    shat: Vec<Vec<Complex64>>,
    // sparse coding block, indexed [k][m]
    x: Vec<Vec<ComplexImage>>,
    y: Vec<Vec<ComplexImage>>,
    u: Vec<Vec<ComplexImage>>,
    yhat: Vec<Vec<Vec<Complex64>>>,
    uhat: Vec<Vec<Vec<Complex64>>>,
    // dictionary block, padded filters indexed [m]
    d: Vec<ComplexImage>,
    dy: Vec<ComplexImage>,
    du: Vec<ComplexImage>,
    dyhat: Vec<Vec<Complex64>>,
    duhat: Vec<Vec<Complex64>>,
    iteration: usize,
    trace: AdmmTrace,
    last_coding: (f64, f64),
    degenerate: usize,
}

impl Trainer {
    /// Starts from the seeded random dictionary of `config`.
    pub fn new(batch: &TrainingBatch, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let init = random_bank(config.num_filters, config.filter_size, config.seed);
        Self::with_bank(batch, config, &init)
    }

    /// Starts from a given dictionary (projected onto the constraint set).
    pub fn with_bank(batch: &TrainingBatch, config: TrainConfig, bank: &FilterBank) -> Result<Self> {
        config.validate()?;
        let (rows, cols) = batch.dims();
        if bank.filter_size() != config.filter_size || bank.num_filters() != config.num_filters {
            return Err(Error::config("initial bank does not match the training configuration"));
        }
        let plan = Fft2d::new(rows, cols);
        let mut degenerate = 0;
        let dy: Vec<ComplexImage> = bank
            .padded(rows, cols)?
            .iter()
            .map(|p| {
                let proj = project_to_constraint_set(p, config.filter_size)?;
                degenerate += usize::from(proj.degenerate);
                Ok(proj.filter)
            })
            .collect::<Result<_>>()?;
        let k = batch.len();
        let m = config.num_filters;
        let n = rows * cols;
        let zeros = vec![ComplexImage::zeros(rows, cols); m];
        let zero_spec = vec![vec![Complex64::new(0.0, 0.0); n]; m];
        Ok(Self {
            config,
            shat: plan.forward_many(batch.images()),
            dyhat: plan.forward_many(&dy),
            plan,
            rows,
            cols,
            x: vec![zeros.clone(); k],
            y: vec![zeros.clone(); k],
            u: vec![zeros.clone(); k],
            yhat: vec![zero_spec.clone(); k],
            uhat: vec![zero_spec.clone(); k],
            d: dy.clone(),
            dy,
            du: zeros,
            duhat: zero_spec,
            iteration: 0,
            trace: AdmmTrace::default(),
            last_coding: (0.0, 0.0),
            degenerate,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn trace(&self) -> &AdmmTrace {
        &self.trace
    }

    pub fn degenerate_projections(&self) -> usize {
        self.degenerate
    }

    /// The current feasible dictionary (the projected iterate).
    pub fn bank(&self) -> FilterBank {
        FilterBank::from_padded(&self.dy, self.config.filter_size).expect("dictionary is consistent")
    }

    /// Unprojected dictionary iterate `d`, zero-padded.
    pub fn raw_dictionary(&self) -> &[ComplexImage] {
        &self.d
    }

    /// Sparse coefficient maps of image `k` (the `Y` iterate).
    pub fn coefficients(&self, k: usize) -> CoefficientStack {
        CoefficientStack::new(self.y[k].clone()).expect("maps are consistent")
    }

    pub fn x_coefficients(&self, k: usize) -> CoefficientStack {
        CoefficientStack::new(self.x[k].clone()).expect("maps are consistent")
    }

    fn num_images(&self) -> usize {
        self.shat.len()
    }

    /// Right-hand side `conj(d̂) ŝ_k + ρ(ŷ_k − û_k)` of the coding system.
    pub fn coding_rhs(&self, k: usize) -> FrequencyGrid {
        let rho = self.config.rho;
        FrequencyGrid::from_bin_fn(self.rows, self.cols, self.config.num_filters, |bin, m| {
            self.dyhat[m][bin].conj() * self.shat[k][bin] + (self.yhat[k][m][bin] - self.uhat[k][m][bin]) * rho
        })
    }

    /// Coding-system rank-1 vectors `conj(d̂)` per bin.
    pub fn coding_vectors(&self) -> FrequencyGrid {
        FrequencyGrid::from_spectra(self.rows, self.cols, &self.dyhat).conj()
    }

    /// One X/Y/U triple over all images with the dictionary held fixed.
    pub fn sparse_step(&mut self) -> Result<()> {
        let dconj = self.coding_vectors();
        let diag = vec![self.config.rho; self.rows * self.cols];
        let gamma = self.config.lambda / self.config.rho;
        let mut x_all = Vec::new();
        let mut y_all = Vec::new();
        let mut y_prev_all = Vec::new();
        let mut u_all = Vec::new();
        for k in 0..self.num_images() {
            let rhs = self.coding_rhs(k);
            let xspec = solve_rank1_diag_systems(&dconj, &diag, &rhs)?.to_spectra();
            let x = self.plan.inverse_many(&xspec);
            if !x.iter().all(ComplexImage::is_finite) {
                return Err(self.diverged());
            }
            let (y, u): (Vec<ComplexImage>, Vec<ComplexImage>) = x
                .par_iter()
                .zip(&self.u[k])
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
            let yhat = self.plan.forward_many(&y);
            for ((uh, xh), yh) in self.uhat[k].iter_mut().zip(&xspec).zip(&yhat) {
                for ((a, &b), &c) in uh.iter_mut().zip(xh).zip(yh) {
                    *a += b - c;
                }
            }
            self.yhat[k] = yhat;
            x_all.extend(x.iter().cloned());
            y_all.extend(y.iter().cloned());
            y_prev_all.extend(std::mem::replace(&mut self.y[k], y));
            u_all.extend(u.iter().cloned());
            self.x[k] = x;
            self.u[k] = u;
        }
        self.last_coding = residuals(&x_all, &y_all, &y_prev_all, &u_all);
        Ok(())
    }

    /// Rank-1 vectors `conj(ŷ_k)` per bin, one grid per training image.
    pub fn dictionary_vectors(&self) -> Vec<FrequencyGrid> {
        self.yhat
            .iter()
            .map(|yk| FrequencyGrid::from_spectra(self.rows, self.cols, yk).conj())
            .collect()
    }

    /// Right-hand side `Σ_k conj(x̂_k) ŝ_k + σ(ŷ_d − û_d)` of the dictionary system.
    pub fn dictionary_rhs(&self) -> FrequencyGrid {
        let sigma = self.config.sigma;
        FrequencyGrid::from_bin_fn(self.rows, self.cols, self.config.num_filters, |bin, m| {
            let mut acc = (self.dyhat[m][bin] - self.duhat[m][bin]) * sigma;
            for k in 0..self.shat.len() {
                acc += self.yhat[k][m][bin].conj() * self.shat[k][bin];
            }
            acc
        })
    }

    /// One d/y/u triple with the coefficient maps held fixed.
    pub fn dict_step(&mut self) -> Result<()> {
        let terms = self.dictionary_vectors();
        let rhs = self.dictionary_rhs();
        let dspec = solve_iterated_sherman_morrison(&terms, self.config.sigma, &rhs)?.to_spectra();
        self.d = self.plan.inverse_many(&dspec);
        if !self.d.iter().all(ComplexImage::is_finite) {
            return Err(self.diverged());
        }
        let l = self.config.filter_size;
        let mut dy = Vec::with_capacity(self.d.len());
        let mut du = Vec::with_capacity(self.d.len());
        for (d, u) in self.d.iter().zip(&self.du) {
            let sum = ComplexImage::from_raw(
                self.rows,
                self.cols,
                d.as_slice().iter().zip(u.as_slice()).map(|(a, b)| a + b).collect(),
            );
            let proj = project_to_constraint_set(&sum, l)?;
            if proj.degenerate {
                log::warn!("dictionary projection hit a zero-norm filter; substituted the canonical impulse");
                self.degenerate += 1;
            }
            du.push(ComplexImage::from_raw(
                self.rows,
                self.cols,
                sum.as_slice().iter().zip(proj.filter.as_slice()).map(|(s, y)| s - y).collect(),
            ));
            dy.push(proj.filter);
        }
        self.dyhat = self.plan.forward_many(&dy);
        for ((uh, dh), yh) in self.duhat.iter_mut().zip(&dspec).zip(&self.dyhat) {
            for ((a, &b), &c) in uh.iter_mut().zip(dh).zip(yh) {
                *a += b - c;
            }
        }
        self.dy = dy;
        self.du = du;
        Ok(())
    }

    /// Learning objective at the current sparse coefficients and projected
    /// dictionary.
    pub fn objective(&self) -> f64 {
        let n = (self.rows * self.cols) as f64;
        let mut fit = 0.0;
        for (yk, sk) in self.yhat.iter().zip(&self.shat) {
            let recon = sum_of_products(&self.dyhat, yk);
            fit += recon.iter().zip(sk).map(|(r, s)| (r - s).norm_sqr()).sum::<f64>() / n;
        }
        let l1: f64 = self.y.iter().flatten().map(ComplexImage::l1_norm).sum();
        0.5 * fit + self.config.lambda * l1
    }

    /// Data-fit part of the objective only.
    pub fn data_fit(&self) -> f64 {
        let n = (self.rows * self.cols) as f64;
        self.yhat
            .iter()
            .zip(&self.shat)
            .map(|(yk, sk)| {
                let recon = sum_of_products(&self.dyhat, yk);
                recon.iter().zip(sk).map(|(r, s)| (r - s).norm_sqr()).sum::<f64>() / n
            })
            .sum::<f64>()
            * 0.5
    }

    /// One outer iteration: a coding triple then a dictionary triple.
    pub fn step(&mut self) -> Result<TraceRecord> {
        self.sparse_step()?;
        self.dict_step()?;
        self.iteration += 1;
        let rec = TraceRecord {
            iteration: self.iteration,
            objective: self.objective(),
            primal_residual: self.last_coding.0,
            dual_residual: self.last_coding.1,
        };
        self.trace.records.push(rec);
        if !rec.objective.is_finite() {
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
}

/// Learns a filter bank from `batch`.
pub fn ccdl_train(batch: &TrainingBatch, config: &TrainConfig) -> Result<Trained> {
    config.validate()?;
    let (rows, cols) = batch.dims();
    if config.filter_size > rows || config.filter_size > cols {
        return Err(Error::FilterTooLarge {
            filter_size: config.filter_size,
            rows,
            cols,
        });
    }
    let mut trainer = Trainer::new(batch, *config)?;
    let initial_objective = trainer.objective();
    for _ in 0..config.outer_iters {
        trainer.step()?;
    }
    Ok(Trained {
        bank: trainer.bank(),
        degenerate_projections: trainer.degenerate_projections(),
        initial_objective,
        trace: trainer.trace,
    })
}
