//! A numerical laboratory for over-parameterized Elman RNNs trained by SGD.
//!
//! The crate builds the learner network (ReLU Elman RNN with hidden width `m`),
//! the smooth concept class its outputs are measured against, the plain-SGD
//! training loop on the scaled objective, and the explicit low-rank weight
//! shift that certifies the concept class is representable in first order.
//! On top of these sit Monte Carlo harnesses that measure concentration,
//! stability and complexity statistics of the random initialization and
//! compare them against their predicted envelopes and scaling exponents.
//!
//! Modules map one-to-one onto the subsystems:
//!
//! * [`numerics`] — seeded splittable RNG streams, dense matrices, Gram–Schmidt,
//!   spectral norms, and the binary matrix snapshot format.
//! * [`complexity`] — weighted Taylor-coefficient complexity measures of scalar
//!   smooth functions.
//! * [`input`] — true/actual/null input sequences and their normalization.
//! * [`rnn`] — random initialization, forward traces, backward operators,
//!   manual gradients, and the first-order (linearized) output map.
//! * [`concept`] — target functions, dataset sampling, concept complexity.
//! * [`fitting`] — indicator-to-function calibration and the explicit
//!   construction of the certificate shift matrix with its normalizers.
//! * [`sgd`] — loss family, hyperparameter derivation, the training loop.
//! * [`rademacher`] — empirical Rademacher complexity estimates and
//!   train/test gap measurement.
//! * [`lemma`] — the verification harness: one report per quantitative lemma.

pub mod complexity;
pub mod concept;
pub mod exec;
pub mod fitting;
pub mod input;
pub mod lemma;
pub mod numerics;
pub mod rademacher;
pub mod rnn;
pub mod sgd;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("series overflow at degree {degree}: term {term:e} exceeds 1e300")]
    SeriesOverflow { degree: usize, term: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("calibration failed: residual {residual:e} above budget {budget:e} at quadrature level")]
    CalibrationFailure { residual: f64, budget: f64 },
    #[error("degenerate normalizer for term ({i}->{j}, s={s}): {value:e} below {floor:e}")]
    DegenerateNormalizer { i: usize, j: usize, s: usize, value: f64, floor: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad snapshot format: {0}")]
    SnapshotFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
