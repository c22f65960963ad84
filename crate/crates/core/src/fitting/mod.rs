//! The existence machinery: calibrate bounded functions `H` that turn ReLU
//! indicators into smooth target terms, then assemble them into the
//! certificate shift matrix whose first-order map reproduces the target
//! function on every admissible input.
//!
//! # Indicator to function
//!
//! For a unit direction `w*` (last coordinate zero) and admissible token
//! `x*`, write `z = <w*, a>` and `t = a_{d_x}` for a standard Gaussian `a`.
//! The calibrated `H(z, t)` satisfies
//!
//! ```text
//! E[ 1(<a, x*> + n >= 0) H(a) ] ~= Phi(<w*, x*>),   n ~ N(0, sigma^2)
//! ```
//!
//! for every admissible `x*` at once. `H` is a truncated probabilists'
//! Hermite series in `z` plus an auxiliary series multiplied by `t` (the
//! coordinate aligned with the fixed 1/2 entry of `x*`, which supplies the
//! even-degree moments the plain indicator cannot reach). Coefficients are
//! calibrated numerically: Gauss–Hermite quadrature evaluates each basis
//! function's response across a grid of inner-product values `beta`, and a
//! ridge least-squares fit matches the responses to the Taylor target.
//!
//! # The certificate matrix
//!
//! Row `k` of the shift sums, over stored terms `(i -> j, r, s)`,
//!
//! ```text
//! 1/(m C_{i->j,s}) . 1(|<w_k, h0_{i-1}>| <= eps_c/sqrt(m))
//!                  . H~_{i->j,r,s}(a_k) . [e_s^T P0_{i->j}]_k . h0_{i-1}^T
//! ```
//!
//! where `H~ = H / eps_c'` is rescaled by the selector's small-ball
//! probability, `C_{i->j,s} = ||e_s^T P0_{i->j}||^2 ||h0_{i-1}||^2 / m`,
//! and every trace quantity is read off the null sequence, so the matrix
//! never sees the particular input it is later evaluated on.

mod hermite;

pub use hermite::{erf, gauss_hermite_probabilists, hermite_probabilists, normal_cdf};

use crate::complexity::{complexity_eps, complexity_sound, TaylorSeries};
use crate::concept::{sample_true_sequence, TargetFunction, TokenDistribution};
use crate::exec::{map_indexed, Parallelism};
use crate::input::{to_actual, TrueSequence};
use crate::numerics::{axpy, dot, norm, Matrix, RngStream, Vector};
use crate::rnn::{
    back_chain_dense, first_order_all, forward, Dims, ForwardTrace, NetworkParams, Perturbation,
    ShiftOp,
};
use crate::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Largest inner product `<w*, x*>` over admissible pairs: `sqrt(3)/2`.
pub const BETA_MAX: f64 = 0.866_025_403_784_438_6;

/// Slack factor on the stated range of the rescaled H: the statement's
/// Theta-constant hides the factor `sqrt(pi) ||h0||` (at most ~3.6) between
/// the selector probability and `eps_c`.
pub const RANGE_SLACK: f64 = 4.0;

const QUAD_NODES: usize = 80;
const BETA_GRID: usize = 33;
const RIDGE: f64 = 1e-12;

/// A calibrated indicator-to-function fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitFunction {
    /// Coefficients of `he_i(z)`, `i = 0..=K`.
    pub plain_coeffs: Vector,
    /// Coefficients of `he_i(z) * t`, `i = 1..=K`.
    pub aux_coeffs: Vector,
    /// Range bound: outputs are clamped to `[-clamp, clamp]`.
    pub clamp: f64,
    /// Noise scale the fit was calibrated under.
    pub sigma: f64,
    pub target: TaylorSeries,
    pub eps_e: f64,
    /// Largest fit residual over the calibration grid and random probes.
    pub max_residual: f64,
    /// Set when `eps_e` exceeds the admissible budget
    /// `1/c_sound(phi, O(sigma))`; expected at desk scale.
    pub eps_e_above_sound_budget: bool,
}

impl FitFunction {
    pub fn degree(&self) -> usize {
        self.plain_coeffs.len().saturating_sub(1)
    }

    /// `H(z, t)`, clamped to the range bound.
    pub fn eval(&self, z: f64, t: f64) -> f64 {
        let he = hermite_probabilists(z, self.degree());
        let mut v = dot(&self.plain_coeffs, &he);
        for (i, c) in self.aux_coeffs.iter().enumerate() {
            v += c * t * he[i + 1];
        }
        v.clamp(-self.clamp, self.clamp)
    }

    /// `H(a)` for a standardized Gaussian row `a` (unit-variance entries):
    /// `z = <w*, a>` over the content coordinates, `t = a_{d_x}`.
    pub fn eval_row(&self, a_std: &[f64], wstar: &[f64]) -> f64 {
        let d_x = wstar.len();
        let z = dot(&wstar[..d_x - 1], &a_std[..d_x - 1]);
        self.eval(z, a_std[d_x - 1])
    }
}

fn quadrature_cdf(arg: f64, s: f64) -> f64 {
    if s > 1e-14 {
        normal_cdf(arg / s)
    } else if arg >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Basis responses against the shifted indicator at each `beta`, by tensor
/// Gauss–Hermite quadrature over `(z, t)` with the orthogonal remainder
/// plus noise integrated in closed form. Column order: `he_0 .. he_K`, then
/// `t he_1 .. t he_K`.
fn response_rows(betas: &[f64], k_deg: usize, sigma: f64) -> Vec<Vec<f64>> {
    let (nodes, weights) = gauss_hermite_probabilists(QUAD_NODES);
    let he_per_node: Vec<Vec<f64>> =
        nodes.iter().map(|z| hermite_probabilists(*z, k_deg)).collect();
    let n_basis = 2 * k_deg + 1;
    betas
        .iter()
        .map(|&beta| {
            let s = ((0.75 - beta * beta).max(0.0) + sigma * sigma).sqrt();
            let mut acc = vec![0.0; n_basis];
            for (zi, (z, wz)) in nodes.iter().zip(&weights).enumerate() {
                let he = &he_per_node[zi];
                for (t, wt) in nodes.iter().zip(&weights) {
                    let p = quadrature_cdf(beta * z + 0.5 * t, s);
                    let wzt = wz * wt * p;
                    for i in 0..=k_deg {
                        acc[i] += wzt * he[i];
                    }
                    for i in 1..=k_deg {
                        acc[k_deg + i] += wzt * he[i] * t;
                    }
                }
            }
            acc
        })
        .collect()
}

/// Ridge least squares via equilibrated normal equations; small systems.
fn ridge_least_squares(design: &[Vec<f64>], target: &[f64]) -> Vector {
    let n_rows = design.len();
    let n_cols = design[0].len();
    let mut col_scale = vec![0.0_f64; n_cols];
    for row in design {
        for (c, v) in row.iter().enumerate() {
            col_scale[c] += v * v;
        }
    }
    for s in col_scale.iter_mut() {
        *s = s.sqrt().max(1e-300);
    }
    let mut ata = vec![vec![0.0_f64; n_cols]; n_cols];
    let mut atb = vec![0.0_f64; n_cols];
    for (r, row) in design.iter().enumerate() {
        for i in 0..n_cols {
            let di = row[i] / col_scale[i];
            atb[i] += di * target[r];
            for j in i..n_cols {
                ata[i][j] += di * row[j] / col_scale[j];
            }
        }
    }
    for i in 0..n_cols {
        for j in 0..i {
            ata[i][j] = ata[j][i];
        }
        ata[i][i] += RIDGE * n_rows as f64;
    }
    let mut a = ata;
    let mut b = atb;
    for col in 0..n_cols {
        let piv = (col..n_cols)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col];
        for r in (col + 1)..n_cols {
            let f = a[r][col] / p;
            if f != 0.0 {
                for c in col..n_cols {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n_cols];
    for col in (0..n_cols).rev() {
        let mut acc = b[col];
        for c in (col + 1)..n_cols {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    for (xi, s) in x.iter_mut().zip(&col_scale) {
        *xi /= s;
    }
    x
}

/// Calibrates `H` for one scalar target `phi` at noise scale `sigma >= 0.1`
/// and accuracy budget `eps_e`.
///
/// The stream only picks extra residual-validation probes; the calibration
/// itself is deterministic quadrature plus least squares.
pub fn fit_indicator_function(
    phi: &TaylorSeries,
    sigma: f64,
    eps_e: f64,
    c_star: f64,
    rng: &mut RngStream,
) -> Result<FitFunction> {
    if sigma < 0.1 {
        return invalid("fit_indicator_function: sigma must be at least 0.1");
    }
    if !(eps_e > 0.0 && eps_e < 1.0) {
        return invalid("fit_indicator_function: eps_e must lie in (0, 1)");
    }
    let k_deg = phi.degree().max(TaylorSeries::truncation_degree(eps_e)).max(1);
    let radius = (sigma * sigma + 0.75).sqrt();
    let clamp = complexity_eps(phi, radius, eps_e, c_star)?.max(1e-300);
    let sound = complexity_sound(phi, radius, c_star)?;
    let eps_e_above_sound_budget = sound > 0.0 && eps_e >= 1.0 / sound;

    if phi.is_zero() {
        return Ok(FitFunction {
            plain_coeffs: vec![0.0; k_deg + 1],
            aux_coeffs: vec![0.0; k_deg],
            clamp,
            sigma,
            target: phi.clone(),
            eps_e,
            max_residual: 0.0,
            eps_e_above_sound_budget,
        });
    }

    let mut betas: Vec<f64> = (0..BETA_GRID)
        .map(|g| -BETA_MAX + 2.0 * BETA_MAX * g as f64 / (BETA_GRID - 1) as f64)
        .collect();
    let n_grid = betas.len();
    for _ in 0..8 {
        betas.push((2.0 * rng.uniform() - 1.0) * BETA_MAX);
    }
    let rows = response_rows(&betas, k_deg, sigma);
    let target: Vec<f64> = betas[..n_grid].iter().map(|b| phi.eval(*b)).collect();
    let coeffs = ridge_least_squares(&rows[..n_grid], &target);

    let mut max_residual = 0.0_f64;
    for (row, beta) in rows.iter().zip(&betas) {
        let fitted = dot(row, &coeffs);
        max_residual = max_residual.max((fitted - phi.eval(*beta)).abs());
    }
    if max_residual > eps_e / 2.0 {
        return Err(Error::CalibrationFailure { residual: max_residual, budget: eps_e / 2.0 });
    }
    Ok(FitFunction {
        plain_coeffs: coeffs[..=k_deg].to_vec(),
        aux_coeffs: coeffs[k_deg + 1..].to_vec(),
        clamp,
        sigma,
        target: phi.clone(),
        eps_e,
        max_residual,
        eps_e_above_sound_budget,
    })
}

/// Quadrature value of `E[1(<a, x*> + n >= 0) H(a)]` at inner product
/// `beta`, with the noise std scaled by `gamma`. `gamma = 1` is the
/// on-target regime; for larger `gamma` the value must fall back towards
/// `Phi(0) = 0`.
pub fn indicator_expectation(fit: &FitFunction, beta: f64, gamma: f64) -> f64 {
    let (nodes, weights) = gauss_hermite_probabilists(QUAD_NODES);
    let k_deg = fit.degree();
    let s = ((0.75 - beta * beta).max(0.0) + (gamma * fit.sigma).powi(2)).sqrt();
    let mut acc = 0.0;
    for (z, wz) in nodes.iter().zip(&weights) {
        let he = hermite_probabilists(*z, k_deg);
        for (t, wt) in nodes.iter().zip(&weights) {
            let p = quadrature_cdf(beta * z + 0.5 * t, s);
            let mut v = dot(&fit.plain_coeffs, &he);
            for (i, c) in fit.aux_coeffs.iter().enumerate() {
                v += c * t * he[i + 1];
            }
            acc += wz * wt * p * v.clamp(-fit.clamp, fit.clamp);
        }
    }
    acc
}

/// Options for the certificate construction.
#[derive(Debug, Clone)]
pub struct WStarOptions {
    pub c_star: f64,
    /// Probe inputs used to measure the per-token noise scales.
    pub calib_probes: usize,
    pub parallelism: Parallelism,
}

impl Default for WStarOptions {
    fn default() -> Self {
        WStarOptions {
            c_star: crate::complexity::DEFAULT_C_STAR,
            calib_probes: 3,
            parallelism: Parallelism::Auto,
        }
    }
}

/// Metadata of one assembled certificate term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WStarTerm {
    pub i: usize,
    pub j: usize,
    pub r: usize,
    pub s: usize,
    /// Noise scale the term's H was calibrated under.
    pub sigma: f64,
    pub fit_residual: f64,
}

/// Per-token selector diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowSelection {
    pub i: usize,
    /// Exact Gaussian small-ball probability of the selector.
    pub predicted_fraction: f64,
    pub selected_rows: usize,
}

/// The certificate shift matrix in factored form: `sum_t u_t v_t^T` with
/// `u_t` the per-row coefficients of term `t` and `v_t` the null hidden
/// state it reads.
#[derive(Debug, Clone)]
pub struct WStarBundle {
    pub dims: Dims,
    pub eps_e: f64,
    pub eps_x: f64,
    pub eps_c: f64,
    pub c_prime: f64,
    /// Stated range of the rescaled H functions, `4 C'^2 / (eps_e eps_x)`;
    /// the hard clamp sits at `RANGE_SLACK` times this.
    pub c_range: f64,
    pub terms: Vec<WStarTerm>,
    /// Left factors, aligned with `terms`.
    pub row_factors: Vec<Vector>,
    /// Right factors `h0_{i-1}`, aligned with `terms`.
    pub states: Vec<Vector>,
    /// `(i, j, s) -> C_{i->j,s}`.
    pub normalizers: Vec<(usize, usize, usize, f64)>,
    pub selection: Vec<RowSelection>,
    /// Largest rescaled `|H|` value actually placed in a row.
    pub max_rescaled_h: f64,
}

impl WStarBundle {
    pub fn shift_op(&self, alpha: f64) -> ShiftOp<'_> {
        ShiftOp::LowRank { us: &self.row_factors, vs: &self.states, alpha }
    }

    /// `W* x`.
    pub fn apply(&self, x: &[f64]) -> Vector {
        let mut y = vec![0.0; self.dims.m];
        for (u, v) in self.row_factors.iter().zip(&self.states) {
            let c = dot(v, x);
            if c != 0.0 {
                axpy(c, u, &mut y);
            }
        }
        y
    }

    /// Exact Frobenius norm from the factored form.
    pub fn frob_norm(&self) -> f64 {
        let t = self.row_factors.len();
        let mut acc = 0.0;
        for a in 0..t {
            for b in 0..t {
                acc += dot(&self.row_factors[a], &self.row_factors[b])
                    * dot(&self.states[a], &self.states[b]);
            }
        }
        acc.max(0.0).sqrt()
    }

    /// `||.||_{2,inf}`: the largest row norm.
    pub fn row_norm_2_inf(&self) -> f64 {
        let t = self.row_factors.len();
        if t == 0 {
            return 0.0;
        }
        let mut gram = vec![vec![0.0; t]; t];
        for a in 0..t {
            for b in 0..t {
                gram[a][b] = dot(&self.states[a], &self.states[b]);
            }
        }
        let mut best = 0.0_f64;
        for k in 0..self.dims.m {
            let mut acc = 0.0;
            for a in 0..t {
                let ua = self.row_factors[a][k];
                if ua == 0.0 {
                    continue;
                }
                for b in 0..t {
                    acc += ua * self.row_factors[b][k] * gram[a][b];
                }
            }
            best = best.max(acc);
        }
        best.max(0.0).sqrt()
    }

    pub fn to_dense(&self) -> Matrix {
        let mut w = Matrix::zeros(self.dims.m, self.dims.m);
        for (u, v) in self.row_factors.iter().zip(&self.states) {
            w.rank_one_update(1.0, u, v);
        }
        w
    }

    pub fn normalizer(&self, i: usize, j: usize, s: usize) -> Option<f64> {
        self.normalizers
            .iter()
            .find(|(ni, nj, ns, _)| (*ni, *nj, *ns) == (i, j, s))
            .map(|(_, _, _, c)| *c)
    }
}

/// Builds the certificate for target `f` on top of the given random
/// initialization and its null trace.
pub fn build_w_star(
    params: &NetworkParams,
    f: &TargetFunction,
    null_trace: &ForwardTrace,
    eps_e: f64,
    eps_x: f64,
    rng: &RngStream,
    opts: &WStarOptions,
) -> Result<WStarBundle> {
    let dims = params.dims;
    if f.l != dims.l || f.d_x != dims.d_x || f.d != dims.d {
        return invalid("build_w_star: target shape disagrees with network dims");
    }
    if !(eps_e > 0.0 && eps_e < 1.0) {
        return invalid("build_w_star: eps_e must lie in (0, 1)");
    }
    if !(eps_x > 0.0 && eps_x <= 1.0) {
        return invalid("build_w_star: eps_x must lie in (0, 1]");
    }
    let m = dims.m;
    let m_f = m as f64;

    if f.terms.is_empty() {
        return Ok(WStarBundle {
            dims,
            eps_e,
            eps_x,
            eps_c: 0.0,
            c_prime: 0.0,
            c_range: 0.0,
            terms: vec![],
            row_factors: vec![],
            states: vec![],
            normalizers: vec![],
            selection: vec![],
            max_rescaled_h: 0.0,
        });
    }

    // 1. per-token noise scales sigma_i = max(0.1, tau_i / eps_x), with
    //    tau_i the median perpendicular drift of h_{i-1} off the null state
    //    over a few probe inputs
    let token_is: BTreeSet<usize> = f.terms.iter().map(|t| t.i).collect();
    let mut probe_rng = rng.substream(0x7a11);
    let probe_traces: Vec<ForwardTrace> = (0..opts.calib_probes.max(1))
        .map(|_| {
            let xs = sample_true_sequence(&TokenDistribution::UniformSlice, dims.l, dims.d_x, &mut probe_rng);
            forward(params, &to_actual(&xs, eps_x)?)
        })
        .collect::<Result<_>>()?;
    let mut sigma_for: BTreeMap<usize, f64> = BTreeMap::new();
    for &i in &token_is {
        let h0 = null_trace.h(i - 1);
        let n0sq = dot(h0, h0).max(1e-300);
        let mut taus: Vec<f64> = probe_traces
            .iter()
            .map(|tr| {
                let h = tr.h(i - 1);
                let c = dot(h, h0) / n0sq;
                let perp: Vector = h.iter().zip(h0).map(|(a, b)| a - c * b).collect();
                norm(&perp)
            })
            .collect();
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tau = taus[taus.len() / 2];
        sigma_for.insert(i, (tau / eps_x).max(0.1));
    }

    // 2. per-term indicator-to-function fits
    let fits: Vec<FitFunction> = {
        let results = map_indexed(f.terms.len(), opts.parallelism, |idx| {
            let t = &f.terms[idx];
            let mut frng = rng.substream(1000 + idx as u64);
            fit_indicator_function(&t.phi, sigma_for[&t.i], eps_e, opts.c_star, &mut frng)
        });
        results.into_iter().collect::<Result<_>>()?
    };
    let c_prime = fits.iter().map(|h| h.clamp).fold(0.0_f64, f64::max).max(1e-300);
    let eps_c = eps_e * eps_x / (4.0 * c_prime);
    let c_range = 4.0 * c_prime * c_prime / (eps_e * eps_x);

    // 3. per-token selectors and standardization
    struct TokenData {
        indicator: Vec<bool>,
        selected: usize,
        eps_c_prime: f64,
    }
    let threshold = eps_c / m_f.sqrt();
    let mut token_data: BTreeMap<usize, TokenData> = BTreeMap::new();
    let mut selection = Vec::new();
    for &i in &token_is {
        let h0 = null_trace.h(i - 1);
        let wh0 = params.w.matvec(h0);
        let indicator: Vec<bool> = wh0.iter().map(|v| v.abs() <= threshold).collect();
        let selected = indicator.iter().filter(|b| **b).count();
        let eps_c_prime = erf(eps_c / (2.0 * norm(h0).max(1e-300)));
        selection.push(RowSelection { i, predicted_fraction: eps_c_prime, selected_rows: selected });
        token_data.insert(i, TokenData { indicator, selected, eps_c_prime });
    }

    // 4. per-(i, j) backward chains off the null trace
    let pairs: BTreeSet<(usize, usize)> = f.terms.iter().map(|t| (t.i, t.j)).collect();
    let pair_list: Vec<(usize, usize)> = pairs.into_iter().collect();
    let chain_rows: Vec<Matrix> = {
        let results = map_indexed(pair_list.len(), opts.parallelism, |idx| {
            let (i, j) = pair_list[idx];
            back_chain_dense(params, null_trace, i, j)
        });
        results.into_iter().collect::<Result<_>>()?
    };
    let chain_for: BTreeMap<(usize, usize), &Matrix> =
        pair_list.iter().copied().zip(chain_rows.iter()).collect();

    // 5. normalizers
    let mut normalizers = Vec::new();
    let mut normalizer_for: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let norm_keys: BTreeSet<(usize, usize, usize)> =
        f.terms.iter().map(|t| (t.i, t.j, t.s)).collect();
    for &(i, j, s) in &norm_keys {
        let chain = chain_for[&(i, j)];
        let row = chain.row(s - 1);
        let h0 = null_trace.h(i - 1);
        let c = dot(row, row) * dot(h0, h0) / m_f;
        let floor = 1e-3 / dims.d as f64;
        if c < floor {
            return Err(Error::DegenerateNormalizer { i, j, s, value: c, floor });
        }
        normalizers.push((i, j, s, c));
        normalizer_for.insert((i, j, s), c);
    }

    // 6. assemble the rank-one factors, one per term, parallel over terms
    let a_scale = (m_f / 2.0).sqrt();
    let hard_clamp = RANGE_SLACK * c_range;
    let assembled: Vec<(Vector, f64)> = map_indexed(f.terms.len(), opts.parallelism, |idx| {
        let t = &f.terms[idx];
        let fit = &fits[idx];
        let td = &token_data[&t.i];
        let chain = chain_for[&(t.i, t.j)];
        let chain_row = chain.row(t.s - 1);
        let c_ijs = normalizer_for[&(t.i, t.j, t.s)];
        let scale = 1.0 / (m_f * c_ijs);
        let mut u = vec![0.0; m];
        let mut max_h = 0.0_f64;
        if td.selected == 0 || td.eps_c_prime <= 0.0 {
            return (u, 0.0);
        }
        for k in 0..m {
            if !td.indicator[k] {
                continue;
            }
            let a_row = params.a.row(k);
            let a_std: Vector = a_row[..dims.d_x].iter().map(|v| v * a_scale).collect();
            let h_val = fit.eval_row(&a_std, &t.wstar);
            let rescaled = (h_val / td.eps_c_prime).clamp(-hard_clamp, hard_clamp);
            max_h = max_h.max(rescaled.abs());
            u[k] = scale * rescaled * chain_row[k];
        }
        (u, max_h)
    });

    let mut row_factors = Vec::with_capacity(f.terms.len());
    let mut states = Vec::with_capacity(f.terms.len());
    let mut terms = Vec::with_capacity(f.terms.len());
    let mut max_rescaled_h = 0.0_f64;
    for ((t, fit), (u, max_h)) in f.terms.iter().zip(&fits).zip(assembled) {
        row_factors.push(u);
        states.push(null_trace.h(t.i - 1).clone());
        terms.push(WStarTerm {
            i: t.i,
            j: t.j,
            r: t.r,
            s: t.s,
            sigma: fit.sigma,
            fit_residual: fit.max_residual,
        });
        max_rescaled_h = max_rescaled_h.max(max_h);
    }
    Ok(WStarBundle {
        dims,
        eps_e,
        eps_x,
        eps_c,
        c_prime,
        c_range,
        terms,
        row_factors,
        states,
        normalizers,
        selection,
        max_rescaled_h,
    })
}

/// Outcome of one existence check: how well the certificate's first-order
/// map reproduces the target on one input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExistenceCheck {
    /// `(j, s, f_{j,s}(W*), F*_{j,s}(x*), |difference|)`.
    pub entries: Vec<(usize, usize, f64, f64, f64)>,
    pub max_error: f64,
    pub eps_target: f64,
    pub pass: bool,
}

fn existence_entries(
    effective: &NetworkParams,
    trace: &ForwardTrace,
    wsb: &WStarBundle,
    f: &TargetFunction,
    xstar: &TrueSequence,
) -> Result<Vec<(usize, usize, f64, f64, f64)>> {
    let outs = first_order_all(effective, trace, &wsb.shift_op(1.0))?;
    let mut entries = Vec::new();
    for (j, fj) in (3..=f.l).zip(&outs) {
        for s in 1..=f.d {
            let target = f.eval(xstar, j, s);
            let got = fj[s - 1];
            entries.push((j, s, got, target, (got - target).abs()));
        }
    }
    Ok(entries)
}

/// Checks `max_{j,s} |f_{j,s}(W*) - F*_{j,s}(x*)| <= eps_target` on one
/// input. Failure is a report outcome, not an error.
pub fn verify_existence(
    params: &NetworkParams,
    wsb: &WStarBundle,
    f: &TargetFunction,
    xstar: &TrueSequence,
    eps_target: f64,
) -> Result<ExistenceCheck> {
    let x = to_actual(xstar, wsb.eps_x)?;
    let trace = forward(params, &x)?;
    let entries = existence_entries(params, &trace, wsb, f, xstar)?;
    let max_error = entries.iter().map(|e| e.4).fold(0.0, f64::max);
    Ok(ExistenceCheck { entries, max_error, eps_target, pass: max_error <= eps_target })
}

/// Same check with the network first perturbed by `W'`: the first-order
/// map is evaluated on the trace and operators of `W + W'`.
pub fn verify_existence_perturbed(
    params: &NetworkParams,
    wsb: &WStarBundle,
    f: &TargetFunction,
    xstar: &TrueSequence,
    perturbation: &Perturbation,
    eps_target: f64,
) -> Result<ExistenceCheck> {
    let x = to_actual(xstar, wsb.eps_x)?;
    let effective = params.with_dense_shift(&perturbation.matrix);
    let trace = forward(&effective, &x)?;
    let entries = existence_entries(&effective, &trace, wsb, f, xstar)?;
    let max_error = entries.iter().map(|e| e.4).fold(0.0, f64::max);
    Ok(ExistenceCheck { entries, max_error, eps_target, pass: max_error <= eps_target })
}
