//! Complex convolutional dictionary learning and sparse coding for
//! interferometric phase restoration.
//!
//! Images are complex interferograms. A dictionary of small complex filters
//! is learned from clean patterns ([`trainer`]), then a noisy interferogram
//! is coded over it with an ℓ1 penalty and an optional gradient penalty on
//! the coefficient maps ([`solver`]). All convolutions are circular and
//! evaluated in the Fourier domain.

pub mod conv;
pub mod error;
pub mod fft;
pub mod image;
pub mod io;
pub mod linsolve;
pub mod metrics;
pub mod prox;
pub mod sim;
pub mod solver;
pub mod trainer;

pub use error::{Error, Result};
pub use image::{wrap_phase, CoefficientStack, ComplexImage, FilterBank, RealImage};
pub use num_complex::Complex64;
pub use solver::{denoise, denoise_comcsc, encode, encode_comcsc, AdmmTrace, Encoder, GradientFilters, SolverConfig};
pub use trainer::{ccdl_train, TrainConfig, Trained, Trainer, TrainingBatch};
