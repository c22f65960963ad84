//! Input sequences: true sequences, their normalized actual form, and the
//! null reference sequence.
//!
//! A true sequence carries tokens `x*_2 .. x*_{L-1}` in `R^{d_x}`, each a
//! unit vector whose last coordinate is 1/2. The actual sequence fed to the
//! network lives in `R^{d_x + 1}`: a fixed seed token first, the true tokens
//! scaled down to norm `eps_x` in the middle, and a fixed reference token
//! last. The null sequence replaces every content token by the reference
//! token, so its trace is independent of `x*` while staying close to the
//! true trace.

use crate::numerics::{norm, Vector};
use crate::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Tokens `x*_2 .. x*_{L-1}`, each in `R^{d_x}` with unit norm and last
/// coordinate exactly 1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueSequence {
    d_x: usize,
    tokens: Vec<Vector>,
}

impl TrueSequence {
    /// Assembles a sequence from pre-normalized tokens, validating the
    /// invariants.
    pub fn from_tokens(d_x: usize, tokens: Vec<Vector>) -> Result<Self> {
        if d_x < 2 {
            return invalid("TrueSequence: d_x must be at least 2");
        }
        for (idx, t) in tokens.iter().enumerate() {
            if t.len() != d_x {
                return invalid(format!("TrueSequence: token {idx} has dimension {}", t.len()));
            }
            if (norm(t) - 1.0).abs() > 1e-9 {
                return invalid(format!("TrueSequence: token {idx} is not unit norm"));
            }
            if (t[d_x - 1] - 0.5).abs() > 1e-9 {
                return invalid(format!("TrueSequence: token {idx} last coordinate is not 1/2"));
            }
        }
        Ok(TrueSequence { d_x, tokens })
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    /// Sequence length `L` implied by the token count (tokens cover
    /// positions 2 .. L-1).
    pub fn seq_len(&self) -> usize {
        self.tokens.len() + 2
    }

    /// Token at position `ell`, `2 <= ell <= L-1`.
    pub fn token(&self, ell: usize) -> &Vector {
        assert!((2..self.seq_len()).contains(&ell), "token index {ell} out of range");
        &self.tokens[ell - 2]
    }

    pub fn tokens(&self) -> &[Vector] {
        &self.tokens
    }
}

/// The normalized sequence `x_1 .. x_L` in `R^{d_x + 1}` actually fed to
/// the network; `||x_1|| = 1` and `||x_ell|| = eps_x` for `ell >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActualSequence {
    d_x: usize,
    eps_x: f64,
    tokens: Vec<Vector>,
    /// Set when `eps_x` exceeds the sharp range `(0, 1/(10 L)]`; the trace
    /// laws then hold only with degraded constants.
    pub eps_x_outside_sharp_range: bool,
}

impl ActualSequence {
    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn dim(&self) -> usize {
        self.d_x + 1
    }

    pub fn eps_x(&self) -> f64 {
        self.eps_x
    }

    pub fn seq_len(&self) -> usize {
        self.tokens.len()
    }

    /// Token at position `ell`, 1-based.
    pub fn token(&self, ell: usize) -> &Vector {
        assert!((1..=self.tokens.len()).contains(&ell));
        &self.tokens[ell - 1]
    }

    pub fn tokens(&self) -> &[Vector] {
        &self.tokens
    }
}

/// The null sequence: token 1 equals the actual sequence's seed token, all
/// later tokens are the scaled reference token, independent of any `x*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSequence(pub ActualSequence);

impl NullSequence {
    pub fn as_actual(&self) -> &ActualSequence {
        &self.0
    }
}

/// The reference token: the admissible token with empty content — zeros,
/// then sqrt(3)/2 in the second-last coordinate, 1/2 in the last.
pub fn reference_token(d_x: usize) -> Vector {
    assert!(d_x >= 2);
    let mut t = vec![0.0; d_x];
    t[d_x - 2] = (3.0_f64).sqrt() / 2.0;
    t[d_x - 1] = 0.5;
    t
}

/// Normalizes raw content into a true-sequence token set.
///
/// Each raw vector supplies all but the last coordinate (`d_x - 1` values);
/// the last coordinate is fixed to 1/2 and the second-last is re-padded to
/// `sqrt(3/4 - ||content||^2)` (keeping the raw second-last's sign) so every
/// output is exactly unit norm. The content part is the first `d_x - 2`
/// coordinates and must satisfy `||content||^2 <= 3/4`.
pub fn normalize_true(raw: &[Vector], d_x: usize) -> Result<TrueSequence> {
    if d_x < 2 {
        return invalid("normalize_true: d_x must be at least 2");
    }
    let mut tokens = Vec::with_capacity(raw.len());
    for (idx, r) in raw.iter().enumerate() {
        if r.len() != d_x - 1 {
            return invalid(format!(
                "normalize_true: raw token {idx} has dimension {} (want d_x - 1 = {})",
                r.len(),
                d_x - 1
            ));
        }
        let content = &r[..d_x - 2];
        let content_sq: f64 = content.iter().map(|v| v * v).sum();
        if content_sq > 0.75 + 1e-12 {
            return invalid(format!(
                "normalize_true: raw token {idx} norm exceeds the budget after reserving the last coordinate"
            ));
        }
        let pad = (0.75 - content_sq).max(0.0).sqrt();
        let mut t = Vec::with_capacity(d_x);
        t.extend_from_slice(content);
        t.push(if r[d_x - 2] < 0.0 { -pad } else { pad });
        t.push(0.5);
        tokens.push(t);
    }
    TrueSequence::from_tokens(d_x, tokens)
}

fn check_eps_x(eps_x: f64, l: usize) -> Result<bool> {
    if !(0.0..=1.0).contains(&eps_x) {
        return invalid("eps_x must lie in [0, 1]");
    }
    if eps_x > 1.0 / l as f64 {
        return invalid(format!("eps_x = {eps_x} exceeds 1/L = {}", 1.0 / l as f64));
    }
    // The drop-input laws are stated for eps_x <= 1/(10 L); larger values
    // are accepted (several harness configs use them) but flagged.
    Ok(eps_x > 1.0 / (10.0 * l as f64))
}

fn seed_token(d_x: usize) -> Vector {
    let mut t = vec![0.0; d_x + 1];
    t[d_x] = 1.0;
    t
}

fn lift_scaled(token: &[f64], eps_x: f64) -> Vector {
    let mut t: Vector = token.iter().map(|v| eps_x * v).collect();
    t.push(0.0);
    t
}

/// Builds the actual input sequence for a true sequence: seed token, scaled
/// true tokens, scaled reference token last.
pub fn to_actual(xs: &TrueSequence, eps_x: f64) -> Result<ActualSequence> {
    let l = xs.seq_len();
    let outside = check_eps_x(eps_x, l)?;
    let mut tokens = Vec::with_capacity(l);
    tokens.push(seed_token(xs.d_x()));
    for t in xs.tokens() {
        tokens.push(lift_scaled(t, eps_x));
    }
    tokens.push(lift_scaled(&reference_token(xs.d_x()), eps_x));
    Ok(ActualSequence { d_x: xs.d_x(), eps_x, tokens, eps_x_outside_sharp_range: outside })
}

/// Builds the null sequence of length `l`: same seed token, every later
/// token the scaled reference token.
pub fn null_sequence(l: usize, d_x: usize, eps_x: f64) -> Result<NullSequence> {
    if l < 3 {
        return invalid("null_sequence: L must be at least 3");
    }
    if d_x < 2 {
        return invalid("null_sequence: d_x must be at least 2");
    }
    let outside = check_eps_x(eps_x, l)?;
    let mut tokens = Vec::with_capacity(l);
    tokens.push(seed_token(d_x));
    let reference = lift_scaled(&reference_token(d_x), eps_x);
    for _ in 1..l {
        tokens.push(reference.clone());
    }
    Ok(NullSequence(ActualSequence {
        d_x,
        eps_x,
        tokens,
        eps_x_outside_sharp_range: outside,
    }))
}
