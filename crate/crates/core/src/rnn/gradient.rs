//! Manual backpropagation through time for the scaled objective
//! `Obj = sum_{j=3}^L G(lambda B h_j, y*_j)`, with the ReLU subgradient
//! convention `grad relu(x) = 1[x >= 0]`. No general autodiff: the chain
//! rule is written out for this exact architecture, and checked against
//! central finite differences away from kink points.

use super::trace::ForwardTrace;
use super::NetworkParams;
use crate::input::ActualSequence;
use crate::numerics::{Matrix, Vector};
use crate::rnn::forward;
use crate::{Error, Result};

/// Per-token loss in the (already scaled) network output. Implementations
/// must return a value and a subgradient consistent with it.
pub trait OutputLoss {
    /// `j` is the output token index (3-based); `v` the scaled output
    /// `lambda B h_j`.
    fn eval(&self, j: usize, v: &[f64]) -> (f64, Vector);
}

impl<F> OutputLoss for F
where
    F: Fn(usize, &[f64]) -> (f64, Vector),
{
    fn eval(&self, j: usize, v: &[f64]) -> (f64, Vector) {
        self(j, v)
    }
}

/// Objective value at the parameters already containing any shift.
pub fn objective_value(
    params: &NetworkParams,
    x: &ActualSequence,
    loss: &impl OutputLoss,
    lambda: f64,
) -> Result<f64> {
    let trace = forward(params, x)?;
    Ok(objective_of_trace(&trace, loss, lambda))
}

pub(crate) fn objective_of_trace(
    trace: &ForwardTrace,
    loss: &impl OutputLoss,
    lambda: f64,
) -> f64 {
    let mut total = 0.0;
    for j in 3..=trace.seq_len() {
        let v: Vector = trace.output(j).iter().map(|y| lambda * y).collect();
        total += loss.eval(j, &v).0;
    }
    total
}

/// Backward pass: returns the objective value and the per-token adjoints
/// `delta_ell = dObj / dg_ell` for `ell = 2..=L` (token 1 never contributes
/// to the gradient in the recurrent matrix because `h_0 = 0`).
pub(crate) fn backprop(
    full: &NetworkParams,
    trace: &ForwardTrace,
    loss: &impl OutputLoss,
    lambda: f64,
) -> Result<(f64, Vec<Vector>)> {
    let l = full.dims.l;
    let mut objective = 0.0;
    // dObj/dh_ell accumulated backwards
    let mut deltas: Vec<Vector> = vec![Vec::new(); l + 1];
    let mut grad_h_next: Vector = vec![0.0; full.dims.m];
    for ell in (2..=l).rev() {
        let mut grad_h = grad_h_next.clone();
        if ell >= 3 {
            let v: Vector = trace.output(ell).iter().map(|y| lambda * y).collect();
            let (val, grad_v) = loss.eval(ell, &v);
            if !val.is_finite() || grad_v.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numeric(format!("non-finite loss at token {ell}")));
            }
            objective += val;
            // dObj/dh_ell += lambda * B^T grad_v
            let bt = full.b.matvec_t(&grad_v);
            for (gh, b) in grad_h.iter_mut().zip(&bt) {
                *gh += lambda * b;
            }
        }
        // delta_ell = D_ell . grad_h
        trace.sign(ell).mask_in_place(&mut grad_h);
        // dObj/dh_{ell-1} = W^T delta_ell (propagate before storing)
        grad_h_next = full.w.matvec_t(&grad_h);
        deltas[ell] = grad_h;
    }
    Ok((objective, deltas.split_off(2)))
}

/// Adjoints for a trace already computed at the effective parameters:
/// the building blocks of the gradient `sum_ell delta_ell h_{ell-1}^T`,
/// exposed so the training loop can apply them as rank-one updates without
/// materializing an `m x m` matrix per step.
pub fn gradient_deltas(
    full: &NetworkParams,
    trace: &ForwardTrace,
    loss: &impl OutputLoss,
    lambda: f64,
) -> Result<(f64, Vec<Vector>)> {
    backprop(full, trace, loss, lambda)
}

/// Gradient of `Obj(x*, y*; W')` in the shift `W'`, evaluated at `W' = wt`,
/// materialized densely as `sum_ell delta_ell h_{ell-1}^T`. Returns the
/// objective value alongside.
pub fn gradient(
    params: &NetworkParams,
    wt: &Matrix,
    x: &ActualSequence,
    loss: &impl OutputLoss,
    lambda: f64,
) -> Result<(f64, Matrix)> {
    let full = params.with_dense_shift(wt);
    let trace = forward(&full, x)?;
    let (objective, deltas) = backprop(&full, &trace, loss, lambda)?;
    let m = params.dims.m;
    let mut grad = Matrix::zeros(m, m);
    for (ell, delta) in (2..=params.dims.l).zip(&deltas) {
        grad.rank_one_update(1.0, delta, trace.h(ell - 1));
    }
    Ok((objective, grad))
}
