//! Forward pass and the trace it leaves behind: pre-activations, hidden
//! states, sign patterns, and readouts.

use super::backward::ShiftOp;
use super::NetworkParams;
use crate::input::ActualSequence;
use crate::numerics::{norm, Vector};
use crate::{invalid, Result};

/// Diagonal 0/1 sign pattern, packed 64 per word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern {
    len: usize,
    bits: Vec<u64>,
}

impl SignPattern {
    pub fn from_nonnegative(g: &[f64]) -> Self {
        let len = g.len();
        let mut bits = vec![0u64; len.div_ceil(64)];
        for (k, v) in g.iter().enumerate() {
            if *v >= 0.0 {
                bits[k / 64] |= 1u64 << (k % 64);
            }
        }
        SignPattern { len, bits }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, k: usize) -> bool {
        debug_assert!(k < self.len);
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }

    /// Number of active units.
    pub fn active(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `||D - D'||_0`: the number of positions where the two patterns differ.
    pub fn flips(&self, other: &SignPattern) -> usize {
        assert_eq!(self.len, other.len);
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// v restricted to the active set (entries with bit 0 zeroed).
    pub fn mask(&self, v: &[f64]) -> Vector {
        assert_eq!(v.len(), self.len);
        v.iter()
            .enumerate()
            .map(|(k, x)| if self.get(k) { *x } else { 0.0 })
            .collect()
    }

    pub fn mask_in_place(&self, v: &mut [f64]) {
        assert_eq!(v.len(), self.len);
        for (k, x) in v.iter_mut().enumerate() {
            if !self.get(k) {
                *x = 0.0;
            }
        }
    }
}

/// Everything the forward pass produces for one input sequence.
///
/// Token indices are 1-based to match the recurrence; `h(0)` is the zero
/// state. Readouts exist for tokens `3..=L`.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    l: usize,
    m: usize,
    g: Vec<Vector>,
    h: Vec<Vector>,
    d: Vec<SignPattern>,
    outputs: Vec<Vector>,
    zero_state: Vector,
}

impl ForwardTrace {
    pub fn seq_len(&self) -> usize {
        self.l
    }

    pub fn width(&self) -> usize {
        self.m
    }

    /// Pre-activation `g_ell`, `1 <= ell <= L`.
    pub fn g(&self, ell: usize) -> &Vector {
        assert!((1..=self.l).contains(&ell));
        &self.g[ell - 1]
    }

    /// Hidden state `h_ell`, `0 <= ell <= L`; `h_0 = 0`.
    pub fn h(&self, ell: usize) -> &Vector {
        assert!(ell <= self.l);
        if ell == 0 {
            &self.zero_state
        } else {
            &self.h[ell - 1]
        }
    }

    /// Sign pattern `D_ell`, `1 <= ell <= L`.
    pub fn sign(&self, ell: usize) -> &SignPattern {
        assert!((1..=self.l).contains(&ell));
        &self.d[ell - 1]
    }

    /// Readout `B h_j`, `3 <= j <= L`.
    pub fn output(&self, j: usize) -> &Vector {
        assert!((3..=self.l).contains(&j));
        &self.outputs[j - 3]
    }

    pub fn outputs(&self) -> &[Vector] {
        &self.outputs
    }
}

/// Runs the recurrence `h_l = relu(W h_{l-1} + A x_l)` from `h_0 = 0`.
pub fn forward(params: &NetworkParams, x: &ActualSequence) -> Result<ForwardTrace> {
    forward_impl(params, None, x)
}

/// Same with the recurrent matrix shifted: `h_l = relu((W + S) h_{l-1} + A x_l)`.
pub fn forward_shifted(
    params: &NetworkParams,
    shift: &ShiftOp<'_>,
    x: &ActualSequence,
) -> Result<ForwardTrace> {
    forward_impl(params, Some(shift), x)
}

fn forward_impl(
    params: &NetworkParams,
    shift: Option<&ShiftOp<'_>>,
    x: &ActualSequence,
) -> Result<ForwardTrace> {
    let dims = params.dims;
    if x.dim() != dims.d_x + 1 {
        return invalid(format!(
            "forward: input dimension {} does not match d_x + 1 = {}",
            x.dim(),
            dims.d_x + 1
        ));
    }
    if x.seq_len() != dims.l {
        return invalid(format!(
            "forward: sequence length {} does not match L = {}",
            x.seq_len(),
            dims.l
        ));
    }
    let m = dims.m;
    let mut g_all = Vec::with_capacity(dims.l);
    let mut h_all: Vec<Vector> = Vec::with_capacity(dims.l);
    let mut d_all = Vec::with_capacity(dims.l);
    let mut outputs = Vec::with_capacity(dims.l - 2);
    let zero = vec![0.0; m];
    let mut h_prev: &Vector = &zero;
    for ell in 1..=dims.l {
        let mut g = if ell == 1 {
            vec![0.0; m]
        } else {
            params.w.matvec(h_prev)
        };
        if ell > 1 {
            if let Some(op) = shift {
                op.apply_add(h_prev, &mut g);
            }
        }
        // A x_ell
        let ax = params.a.matvec(x.token(ell));
        for (gi, axi) in g.iter_mut().zip(&ax) {
            *gi += axi;
        }
        let d = SignPattern::from_nonnegative(&g);
        let h = d.mask(&g); // equals relu(g) exactly, including signed zeros
        if ell >= 3 {
            outputs.push(params.b.matvec(&h));
        }
        g_all.push(g);
        h_all.push(h);
        d_all.push(d);
        h_prev = h_all.last().unwrap();
    }
    Ok(ForwardTrace {
        l: dims.l,
        m,
        g: g_all,
        h: h_all,
        d: d_all,
        outputs,
        zero_state: zero,
    })
}

/// One JSON object per token: norms, active-unit counts and readout norms
/// by default; `full` adds the raw vectors.
pub fn trace_jsonl(trace: &ForwardTrace, full: bool) -> String {
    use serde_json::json;
    let mut out = String::new();
    for ell in 1..=trace.seq_len() {
        let mut rec = json!({
            "token": ell,
            "g_norm": norm(trace.g(ell)),
            "h_norm": norm(trace.h(ell)),
            "active": trace.sign(ell).active(),
        });
        if ell >= 3 {
            rec["y_norm"] = json!(norm(trace.output(ell)));
        }
        if full {
            rec["g"] = json!(trace.g(ell));
            rec["h"] = json!(trace.h(ell));
            if ell >= 3 {
                rec["y"] = json!(trace.output(ell));
            }
        }
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    out
}

/// `zeta_n(eps_x, ell) = sqrt(1 + (ell - 1) eps_x^2)`: the law the hidden
/// state norms concentrate around.
pub fn zeta_n(eps_x: f64, ell: usize) -> f64 {
    (1.0 + (ell.saturating_sub(1)) as f64 * eps_x * eps_x).sqrt()
}
