//! The concept class: target functions whose output token `j` is a sum of
//! smooth scalar functions of linear measurements of earlier input tokens,
//!
//! ```text
//! F*_{j,s}(x*) = sum_{i=2}^{j-1} sum_{r=1}^{p} Phi_{i->j,r,s}(<w*_{i->j,r,s}, x*_i>)
//! ```
//!
//! with every `Phi(0) = 0` and every `w*` a unit vector whose last
//! coordinate is zero. Also: labeled dataset generation with a prescribed
//! noise model, and the complexity budget of a concept.

use crate::complexity::{complexity_eps, complexity_sound, TaylorSeries};
use crate::input::TrueSequence;
use crate::numerics::{dot, norm, RngStream, Vector};
use crate::{invalid, Result};
use serde::{Deserialize, Serialize};

/// One term `Phi_{i->j,r,s}` with its measurement direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConceptTerm {
    /// Input token index, `2 <= i < j`.
    pub i: usize,
    /// Output token index, `j <= L`.
    pub j: usize,
    /// Term slot, `1 <= r <= p`.
    pub r: usize,
    /// Output coordinate, `1 <= s <= d`.
    pub s: usize,
    pub phi: TaylorSeries,
    pub wstar: Vector,
}

/// A member of the concept class. Unspecified `(i, j, r, s)` slots are the
/// zero function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetFunction {
    pub l: usize,
    pub d_x: usize,
    pub d: usize,
    pub p: usize,
    pub terms: Vec<ConceptTerm>,
}

impl TargetFunction {
    pub fn new(l: usize, d_x: usize, d: usize, p: usize, terms: Vec<ConceptTerm>) -> Result<Self> {
        if l < 3 || d_x < 2 || d < 1 || p < 1 {
            return invalid("TargetFunction: need L >= 3, d_x >= 2, d >= 1, p >= 1");
        }
        for (idx, t) in terms.iter().enumerate() {
            if !(2 <= t.i && t.i < t.j && t.j <= l) {
                return invalid(format!("term {idx}: need 2 <= i < j <= L, got ({}, {})", t.i, t.j));
            }
            if t.r < 1 || t.r > p {
                return invalid(format!("term {idx}: r = {} outside 1..=p", t.r));
            }
            if t.s < 1 || t.s > d {
                return invalid(format!("term {idx}: s = {} outside 1..=d", t.s));
            }
            if t.phi.constant_term() != 0.0 {
                return invalid(format!("term {idx}: Phi(0) must be 0"));
            }
            if t.wstar.len() != d_x {
                return invalid(format!("term {idx}: w* must have dimension d_x"));
            }
            if (norm(&t.wstar) - 1.0).abs() > 1e-9 {
                return invalid(format!("term {idx}: w* must be unit norm"));
            }
            if t.wstar[d_x - 1].abs() > 1e-12 {
                return invalid(format!("term {idx}: w* last coordinate must be 0"));
            }
        }
        Ok(TargetFunction { l, d_x, d, p, terms })
    }

    /// The zero target.
    pub fn zero(l: usize, d_x: usize, d: usize, p: usize) -> Result<Self> {
        TargetFunction::new(l, d_x, d, p, Vec::new())
    }

    /// `F*_{j,s}(x*)`.
    pub fn eval(&self, xstar: &TrueSequence, j: usize, s: usize) -> f64 {
        assert!((3..=self.l).contains(&j), "j = {j} out of range");
        assert!((1..=self.d).contains(&s));
        self.terms
            .iter()
            .filter(|t| t.j == j && t.s == s)
            .map(|t| t.phi.eval(dot(&t.wstar, xstar.token(t.i))))
            .sum()
    }

    /// `F*_j(x*)` as a vector in `R^d`.
    pub fn eval_vec(&self, xstar: &TrueSequence, j: usize) -> Vector {
        (1..=self.d).map(|s| self.eval(xstar, j, s)).collect()
    }

    /// A unit direction with zero last coordinate, drawn uniformly.
    pub fn random_direction(d_x: usize, rng: &mut RngStream) -> Vector {
        let mut w = vec![0.0; d_x];
        let content = rng.unit_vector(d_x - 1);
        w[..d_x - 1].copy_from_slice(&content);
        w
    }
}

/// Label for one output token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Regression(Vector),
    Class(usize),
}

/// One labeled sample: the true sequence and its labels for tokens 3..=L.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledSample {
    pub xstar: TrueSequence,
    pub labels: Vec<Label>,
}

impl LabeledSample {
    pub fn label(&self, j: usize) -> &Label {
        &self.labels[j - 3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LabelNoise {
    None,
    /// i.i.d. `N(0, std^2)` added to every regression coordinate.
    Gaussian { std: f64 },
}

/// Token distribution for `x*_2 .. x*_{L-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TokenDistribution {
    /// Uniform on the sphere slice: unit vectors with last coordinate 1/2.
    UniformSlice,
    /// Uniform over a finite set of admissible sequences (for brute-force
    /// acceptance checks).
    FiniteSupport(Vec<TrueSequence>),
}

/// Label kind produced by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelKind {
    Regression,
    /// Class index `argmax_s F*_{j,s}`.
    Class,
}

/// Draws one true sequence from the distribution.
pub fn sample_true_sequence(
    dist: &TokenDistribution,
    l: usize,
    d_x: usize,
    rng: &mut RngStream,
) -> TrueSequence {
    match dist {
        TokenDistribution::UniformSlice => {
            let tokens = (0..l - 2)
                .map(|_| {
                    // uniform direction on the (d_x - 2)-sphere of radius
                    // sqrt(3)/2, then the fixed 1/2 last coordinate
                    let dir = rng.unit_vector(d_x - 1);
                    let mut t: Vector = dir.iter().map(|v| v * 3.0_f64.sqrt() / 2.0).collect();
                    t.push(0.5);
                    t
                })
                .collect();
            TrueSequence::from_tokens(d_x, tokens).expect("slice tokens are admissible")
        }
        TokenDistribution::FiniteSupport(support) => support[rng.below(support.len())].clone(),
    }
}

/// Result of dataset generation.
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    /// Mean over samples of `sum_j ||F*_j(x*) - y*_j||`: the fit error of
    /// the generating target itself (0 for zero noise with regression
    /// labels).
    pub opt_estimate: f64,
}

/// Samples `n` labeled examples; labels are `F*_j(x*)` plus noise
/// (regression) or the argmax class.
pub fn sample_dataset(
    f: &TargetFunction,
    n: usize,
    rng: &mut RngStream,
    noise: LabelNoise,
    dist: &TokenDistribution,
    kind: LabelKind,
) -> Result<Dataset> {
    if n == 0 {
        return invalid("sample_dataset: N must be at least 1");
    }
    let mut samples = Vec::with_capacity(n);
    let mut opt_sum = 0.0;
    for _ in 0..n {
        let xstar = sample_true_sequence(dist, f.l, f.d_x, rng);
        let mut labels = Vec::with_capacity(f.l - 2);
        for j in 3..=f.l {
            let clean = f.eval_vec(&xstar, j);
            match kind {
                LabelKind::Regression => {
                    let noisy: Vector = match noise {
                        LabelNoise::None => clean.clone(),
                        LabelNoise::Gaussian { std } => {
                            clean.iter().map(|v| v + rng.normal(std)).collect()
                        }
                    };
                    opt_sum += norm(&crate::numerics::sub(&clean, &noisy));
                    labels.push(Label::Regression(noisy));
                }
                LabelKind::Class => {
                    let best = clean
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .map(|(s, _)| s)
                        .unwrap_or(0);
                    labels.push(Label::Class(best));
                }
            }
        }
        samples.push(LabeledSample { xstar, labels });
    }
    Ok(Dataset { samples, opt_estimate: opt_sum / n as f64 })
}

/// The concept's complexity budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConceptComplexity {
    /// Max over stored series of the eps-variant at radius `sqrt(L)` — the
    /// quantity the step-count bound is stated in.
    pub c: f64,
    /// Max over stored series of the sound variant at radius `sqrt(L)` —
    /// the quantity gating the admissible accuracy range.
    pub c_sound: f64,
    pub p: usize,
}

/// Evaluates the complexity budget of a concept at accuracy `eps`.
pub fn concept_complexity(
    f: &TargetFunction,
    l: usize,
    eps: f64,
    c_star: f64,
) -> Result<ConceptComplexity> {
    let r = (l as f64).sqrt();
    let mut c = 0.0_f64;
    let mut c_sound = 0.0_f64;
    for t in &f.terms {
        c = c.max(complexity_eps(&t.phi, r, eps, c_star)?);
        c_sound = c_sound.max(complexity_sound(&t.phi, r, c_star)?);
    }
    Ok(ConceptComplexity { c, c_sound, p: f.p })
}

/// Writes samples as JSON-lines: one record per sample with tokens, labels
/// and generator metadata.
pub fn dataset_jsonl(ds: &Dataset, seed: u64, l: usize, d_x: usize, concept_id: &str) -> String {
    use serde_json::json;
    let mut out = String::new();
    for (idx, s) in ds.samples.iter().enumerate() {
        let rec = json!({
            "index": idx,
            "xstar": s.xstar.tokens(),
            "labels": s.labels,
            "meta": { "seed": seed, "l": l, "d_x": d_x, "concept": concept_id },
        });
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    out
}
