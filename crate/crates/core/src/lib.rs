//! Maximum-likelihood estimation of Kronecker-structured covariance
//! matrices `Θ = P ⊗ Q` from p×q matrix samples.
//!
//! * [`gaussian`]: matrix-normal likelihood and the Gaussian flip-flop.
//! * [`robust`]: Tyler-type robust objective, the robust flip-flop, and the
//!   unconstrained Tyler estimator.
//! * [`diagnostics`]: sample-count thresholds, the 2×2 discriminant test,
//!   multistart uniqueness probes.
//! * [`harness`]: file formats, experiment configs, and phase-diagram runs
//!   used by the `kpcov` binary.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below are what the binary and the test suites use.

pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod robust;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Factor, Result};
pub use estimation::{EstimationResult, FlipFlopOptions, KroneckerPair, Normalization, Status};
pub use linalg::{Matrix, SpdMatrix};
pub use sampling::SampleSet;
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type SpdMatrix64 = SpdMatrix<f64>;
pub type SampleSet64 = SampleSet<f64>;
pub type KroneckerPair64 = KroneckerPair<f64>;
pub type EstimationResult64 = EstimationResult<f64>;

pub type Matrix32 = Matrix<f32>;
pub type SpdMatrix32 = SpdMatrix<f32>;
pub type SampleSet32 = SampleSet<f32>;
pub type KroneckerPair32 = KroneckerPair<f32>;
