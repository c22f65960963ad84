//! Backward operators and the first-order output map.
//!
//! For a trace with sign patterns `D_l`, the pure backward chain is
//!
//! ```text
//! P_{i->j} = B D_j W . D_{j-1} W ... D_{i+1} W        (P_{j->j} = B)
//! ```
//!
//! and the operator attached to a weight shift injected alongside `h_i` is
//! `M_{i->j} = P_{i+1->j} D_{i+1}`, so that the linearized output change at
//! token `j` under a shift `S` of the recurrent matrix is exactly
//!
//! ```text
//! f_j(S) = sum_{i=1}^{j-1} M_{i->j} S h_i .
//! ```
//!
//! `first_order_map` evaluates `f_j` by the forward recursion
//! `dh_l = D_l (W dh_{l-1} + S h_{l-1})`, which costs one extra forward
//! pass and is exactly linear in `S`; `back_operator` materializes a single
//! `M_{i->j}` densely. The two routes agree to machine precision and the
//! unit tests pin that down.

use super::trace::ForwardTrace;
use super::NetworkParams;
use crate::numerics::{axpy, dot, Matrix, RngStream, Vector};
use crate::{invalid, Result};

/// A shift of the recurrent matrix, applied as an operator so callers can
/// avoid materializing `m x m` data when the shift is low-rank.
#[derive(Clone, Copy)]
pub enum ShiftOp<'a> {
    Dense(&'a Matrix),
    /// `alpha * M`.
    Scaled(&'a Matrix, f64),
    /// `alpha * sum_t u_t v_t^T`.
    LowRank {
        us: &'a [Vector],
        vs: &'a [Vector],
        alpha: f64,
    },
}

impl<'a> ShiftOp<'a> {
    /// y += op(x).
    pub fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        match self {
            ShiftOp::Dense(m) => {
                debug_assert_eq!(m.cols(), x.len());
                for (yi, row) in y.iter_mut().zip((0..m.rows()).map(|i| m.row(i))) {
                    *yi += dot(row, x);
                }
            }
            ShiftOp::Scaled(m, alpha) => {
                for (yi, row) in y.iter_mut().zip((0..m.rows()).map(|i| m.row(i))) {
                    *yi += alpha * dot(row, x);
                }
            }
            ShiftOp::LowRank { us, vs, alpha } => {
                for (u, v) in us.iter().zip(vs.iter()) {
                    let c = alpha * dot(v, x);
                    if c != 0.0 {
                        axpy(c, u, y);
                    }
                }
            }
        }
    }
}

/// A perturbation direction for the recurrent matrix together with the
/// spectral bound it was scaled to.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub matrix: Matrix,
    pub spectral_bound: Option<f64>,
}

impl Perturbation {
    pub fn new(matrix: Matrix) -> Self {
        Perturbation { matrix, spectral_bound: None }
    }

    /// Rescales `matrix` so its spectral norm is exactly `target`.
    pub fn scaled_to_spectral(
        mut matrix: Matrix,
        target: f64,
        rng: &mut RngStream,
    ) -> Result<Perturbation> {
        if target < 0.0 {
            return invalid("Perturbation: spectral target must be nonnegative");
        }
        let s = matrix.spectral_norm(1e-10, rng)?;
        if s == 0.0 {
            return invalid("Perturbation: zero direction cannot be scaled");
        }
        matrix.scale(target / s);
        Ok(Perturbation { matrix, spectral_bound: Some(target) })
    }

    /// A Gaussian direction scaled to the given spectral norm.
    pub fn gaussian_with_spectral(m: usize, target: f64, rng: &mut RngStream) -> Result<Perturbation> {
        let dir = Matrix::gaussian(m, m, 1.0, rng);
        Perturbation::scaled_to_spectral(dir, target, rng)
    }

    /// `target * u v^T / (||u|| ||v||)`; rank-one directions have exact
    /// spectral norm without any iteration.
    pub fn rank_one(u: &[f64], v: &[f64], target: f64) -> Result<Perturbation> {
        let nu = crate::numerics::norm(u);
        let nv = crate::numerics::norm(v);
        if nu == 0.0 || nv == 0.0 {
            return invalid("Perturbation: zero factor in rank-one direction");
        }
        let mut m = Matrix::zeros(u.len(), v.len());
        m.rank_one_update(target / (nu * nv), u, v);
        Ok(Perturbation { matrix: m, spectral_bound: Some(target) })
    }

    pub fn op(&self) -> ShiftOp<'_> {
        ShiftOp::Dense(&self.matrix)
    }
}

fn check_pair(trace: &ForwardTrace, i: usize, j: usize) -> Result<()> {
    if i > j {
        return invalid(format!("backward operator needs i <= j, got ({i}, {j})"));
    }
    if i < 1 || j > trace.seq_len() {
        return invalid(format!("backward pair ({i}, {j}) out of range 1..={}", trace.seq_len()));
    }
    Ok(())
}

/// `u^T P_{i->j}` for `u` in `R^d`, evaluated lazily right-to-left through
/// the `(D, W)` factors; costs `(j - i)` transposed matvecs.
pub fn back_apply(
    params: &NetworkParams,
    trace: &ForwardTrace,
    i: usize,
    j: usize,
    u: &[f64],
) -> Result<Vector> {
    check_pair(trace, i, j)?;
    if u.len() != params.dims.d {
        return invalid("back_apply: u must have dimension d");
    }
    // u^T B
    let mut v = params.b.matvec_t(u);
    // then for ell = j down to i+1: v^T (D_ell W)
    for ell in ((i + 1)..=j).rev() {
        trace.sign(ell).mask_in_place(&mut v);
        v = params.w.matvec_t(&v);
    }
    Ok(v)
}

/// Row `s` of `P_{i->j}`, i.e. `e_s^T P_{i->j}`.
pub fn back_chain_row(
    params: &NetworkParams,
    trace: &ForwardTrace,
    i: usize,
    j: usize,
    s: usize,
) -> Result<Vector> {
    if s >= params.dims.d {
        return invalid("back_chain_row: s out of range");
    }
    let mut u = vec![0.0; params.dims.d];
    u[s] = 1.0;
    back_apply(params, trace, i, j, &u)
}

/// Dense `P_{i->j}` (`d x m`), for lemma checks and the certificate
/// construction.
pub fn back_chain_dense(
    params: &NetworkParams,
    trace: &ForwardTrace,
    i: usize,
    j: usize,
) -> Result<Matrix> {
    check_pair(trace, i, j)?;
    let d = params.dims.d;
    let mut rows = Vec::with_capacity(d);
    for s in 0..d {
        rows.push(back_chain_row(params, trace, i, j, s)?);
    }
    Matrix::from_rows(&rows)
}

/// The operator `M_{i->j}` with `f_j(S) = sum_{i<j} M_{i->j} S h_i`:
/// `P_{i+1->j} D_{i+1}` for `i < j`, and `B D_j` for `i == j` (the readout
/// Jacobian in the last-layer pre-activation).
pub fn back_operator(
    params: &NetworkParams,
    trace: &ForwardTrace,
    i: usize,
    j: usize,
) -> Result<Matrix> {
    check_pair(trace, i, j)?;
    let (mut dense, mask_ell) = if i == j {
        (Matrix::from_rows(&(0..params.dims.d).map(|s| params.b.row(s).to_vec()).collect::<Vec<_>>())?, j)
    } else {
        (back_chain_dense(params, trace, i + 1, j)?, i + 1)
    };
    let mask = trace.sign(mask_ell);
    for s in 0..dense.rows() {
        mask.mask_in_place(dense.row_mut(s));
    }
    Ok(dense)
}

/// The linearized output change at token `j` under shift `S`:
/// `f_j(S) = sum_{i=1}^{j-1} M_{i->j} S h_i`, computed by the forward
/// recursion. Exactly linear in `S`.
pub fn first_order_map(
    params: &NetworkParams,
    trace: &ForwardTrace,
    shift: &ShiftOp<'_>,
    j: usize,
) -> Result<Vector> {
    if !(3..=trace.seq_len()).contains(&j) {
        return invalid(format!("first_order_map: j = {j} outside 3..={}", trace.seq_len()));
    }
    Ok(first_order_all(params, trace, shift)?
        .swap_remove(j - 3))
}

/// `f_j(S)` for every output token `j = 3..=L` in one pass.
pub fn first_order_all(
    params: &NetworkParams,
    trace: &ForwardTrace,
    shift: &ShiftOp<'_>,
) -> Result<Vec<Vector>> {
    let l = trace.seq_len();
    let m = trace.width();
    let mut outs = Vec::with_capacity(l - 2);
    let mut dh = vec![0.0; m]; // dh_1 = 0 because h_0 = 0
    for ell in 2..=l {
        let mut v = params.w.matvec(&dh);
        shift.apply_add(trace.h(ell - 1), &mut v);
        trace.sign(ell).mask_in_place(&mut v);
        dh = v;
        if ell >= 3 {
            outs.push(params.b.matvec(&dh));
        }
    }
    Ok(outs)
}
