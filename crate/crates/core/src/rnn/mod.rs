//! The learner network: a ReLU Elman RNN `h_l = relu(W h_{l-1} + A x_l)`
//! with readout `y_l = B h_l`, its random initialization, forward traces,
//! backward operators, the first-order (linearized) output map, and the
//! manual gradient of the scaled objective. Only `W` is ever trained; `A`
//! and `B` stay at their random initialization.

mod backward;
mod gradient;
mod trace;

pub use backward::{
    back_apply, back_chain_dense, back_chain_row, back_operator, first_order_all,
    first_order_map, Perturbation, ShiftOp,
};
pub use gradient::{gradient, gradient_deltas, objective_value, OutputLoss};
pub use trace::{forward, forward_shifted, trace_jsonl, zeta_n, ForwardTrace, SignPattern};

use crate::numerics::{read_matrix, write_matrix, Matrix, RngStream};
use crate::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Shape of one network / experiment: hidden width `m`, true input
/// dimension `d_x`, output dimension `d`, sequence length `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub d_x: usize,
    pub d: usize,
    pub l: usize,
}

impl Dims {
    pub fn new(m: usize, d_x: usize, d: usize, l: usize) -> Result<Self> {
        if m < 2 {
            return invalid("Dims: m must be at least 2");
        }
        if d < 1 {
            return invalid("Dims: d must be at least 1");
        }
        if d_x < 2 {
            return invalid("Dims: d_x must be at least 2");
        }
        if l < 3 {
            return invalid("Dims: L must be at least 3 (outputs start at token 3)");
        }
        Ok(Dims { m, d_x, d, l })
    }

    /// The polylog aggregation parameter `rho = 100 L d ln m`.
    pub fn rho(&self) -> f64 {
        100.0 * self.l as f64 * self.d as f64 * (self.m as f64).ln()
    }
}

/// The three weight matrices. `W` is `m x m`, `A` is `m x (d_x + 1)`,
/// `B` is `d x m`.
#[derive(Debug, Clone)]
pub struct NetworkParams {
    pub dims: Dims,
    pub w: Matrix,
    pub a: Matrix,
    pub b: Matrix,
}

/// Random initialization: entries of `W` and `A` i.i.d. `N(0, 2/m)`,
/// entries of `B` i.i.d. `N(0, 1/d)`.
pub fn init_random(dims: Dims, rng: &mut RngStream) -> NetworkParams {
    let w_std = (2.0 / dims.m as f64).sqrt();
    let b_std = (1.0 / dims.d as f64).sqrt();
    let w = Matrix::gaussian(dims.m, dims.m, w_std, rng);
    let a = Matrix::gaussian(dims.m, dims.d_x + 1, w_std, rng);
    let b = Matrix::gaussian(dims.d, dims.m, b_std, rng);
    NetworkParams { dims, w, a, b }
}

impl NetworkParams {
    /// A copy with the recurrent matrix shifted by `wt` (dense add).
    pub fn with_dense_shift(&self, wt: &Matrix) -> NetworkParams {
        let mut out = self.clone();
        out.w.add_scaled(wt, 1.0);
        out
    }

    /// Re-randomizes the rows of `W` and `A` with the given indices,
    /// drawing fresh `N(0, 2/m)` entries from `rng`.
    pub fn rerandomize_rows(&self, rows: &[usize], rng: &mut RngStream) -> NetworkParams {
        let mut out = self.clone();
        let std = (2.0 / self.dims.m as f64).sqrt();
        for &k in rows {
            rng.fill_normal(out.w.row_mut(k), std);
            rng.fill_normal(out.a.row_mut(k), std);
        }
        out
    }

    /// Writes `w.rnnw`, `a.rnnw`, `b.rnnw` and `dims.json` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_matrix(&dir.join("w.rnnw"), &self.w)?;
        write_matrix(&dir.join("a.rnnw"), &self.a)?;
        write_matrix(&dir.join("b.rnnw"), &self.b)?;
        let dims = serde_json::to_string_pretty(&self.dims).expect("dims serialize");
        std::fs::write(dir.join("dims.json"), dims)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<NetworkParams> {
        let dims: Dims = serde_json::from_str(&std::fs::read_to_string(dir.join("dims.json"))?)
            .map_err(|e| crate::Error::SnapshotFormat(format!("dims.json: {e}")))?;
        let w = read_matrix(&dir.join("w.rnnw"))?;
        let a = read_matrix(&dir.join("a.rnnw"))?;
        let b = read_matrix(&dir.join("b.rnnw"))?;
        if w.rows() != dims.m
            || w.cols() != dims.m
            || a.rows() != dims.m
            || a.cols() != dims.d_x + 1
            || b.rows() != dims.d
            || b.cols() != dims.m
        {
            return Err(crate::Error::SnapshotFormat("matrix shapes disagree with dims.json".into()));
        }
        Ok(NetworkParams { dims, w, a, b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_variances_match_the_law() {
        // W entries ~ N(0, 2/m) and B entries ~ N(0, 1/d) within 5%.
        let dims = Dims::new(4096, 8, 8, 4).unwrap();
        let mut rng = RngStream::new(1, 0);
        let p = init_random(dims, &mut rng);
        let var = |m: &Matrix| {
            let n = (m.rows() * m.cols()) as f64;
            let mean: f64 = m.data().iter().sum::<f64>() / n;
            m.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
        };
        let w_var = var(&p.w);
        let want_w = 2.0 / 4096.0;
        assert!((w_var - want_w).abs() <= 0.05 * want_w, "W var {w_var:e} vs {want_w:e}");
        let a_var = var(&p.a);
        assert!((a_var - want_w).abs() <= 0.05 * want_w, "A var {a_var:e}");
        let b_var = var(&p.b);
        let want_b = 1.0 / 8.0;
        assert!((b_var - want_b).abs() <= 0.05 * want_b, "B var {b_var:e} vs {want_b:e}");
    }

    #[test]
    fn init_is_deterministic_per_stream() {
        let dims = Dims::new(64, 4, 2, 3).unwrap();
        let a = init_random(dims, &mut RngStream::new(7, 3));
        let b = init_random(dims, &mut RngStream::new(7, 3));
        assert_eq!(a.w, b.w);
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
    }

    #[test]
    fn save_load_round_trip() {
        let dims = Dims::new(16, 3, 2, 4).unwrap();
        let p = init_random(dims, &mut RngStream::new(9, 1));
        let dir = tempfile::tempdir().unwrap();
        p.save(dir.path()).unwrap();
        let q = NetworkParams::load(dir.path()).unwrap();
        assert_eq!(p.w, q.w);
        assert_eq!(p.a, q.a);
        assert_eq!(p.b, q.b);
        assert_eq!(p.dims, q.dims);
    }

    #[test]
    fn rho_formula() {
        let dims = Dims::new(4096, 4, 4, 8).unwrap();
        let want = 100.0 * 8.0 * 4.0 * (4096.0_f64).ln();
        assert!((dims.rho() - want).abs() < 1e-9);
    }
}
