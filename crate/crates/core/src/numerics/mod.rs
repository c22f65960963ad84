//! Deterministic randomness, dense matrices, and the linear-algebra
//! primitives every other module is built on. All scalars are `f64`:
//! the statistics under test are O(1/√m) differences of O(1) quantities,
//! which single precision would drown.

mod io;
mod linalg;
mod matrix;
mod rng;

pub use io::{read_matrix, write_matrix, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use linalg::{
    add_scaled, axpy, dot, gram_schmidt, low_rank_spectral_norm, norm, norm_inf, normalize,
    project_out, relu, scale, sub, Vector,
};
pub use matrix::Matrix;
pub use rng::RngStream;
