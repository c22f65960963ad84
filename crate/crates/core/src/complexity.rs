//! Function-complexity measures of scalar smooth functions.
//!
//! A function `phi(z) = sum_i c_i z^i` is sized by two weighted coefficient
//! norms over a radius `R`:
//!
//! ```text
//! c_sound(phi, R)    = C* . sum_i |c_i| (C* R)^i
//! c_eps(phi, R, eps) = C* . sum_i |c_i| [ (C* R)^i + (sqrt(ln(1/eps)/i) C* R)^i ]
//! ```
//!
//! with `C*` a large constant (default 1e4, configurable — every check in
//! this crate is a ratio or a monotonicity statement, so the choice only
//! moves absolute scales). The `i = 0` addend of the second bracket is taken
//! as 1, its limiting value. `c_sound <= c_eps` holds term by term, and both
//! are exactly linear in the coefficient magnitudes.

use crate::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Default value of the large constant `C*`.
pub const DEFAULT_C_STAR: f64 = 1e4;

/// A truncated Taylor series `c_0 + c_1 z + ... + c_K z^K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorSeries {
    coefficients: Vec<f64>,
}

impl TaylorSeries {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Taylor coefficient".into()));
        }
        Ok(TaylorSeries { coefficients })
    }

    /// The zero function (empty series).
    pub fn zero() -> Self {
        TaylorSeries { coefficients: vec![] }
    }

    /// `z^d`.
    pub fn monomial(d: usize) -> Self {
        let mut c = vec![0.0; d + 1];
        c[d] = 1.0;
        TaylorSeries { coefficients: c }
    }

    /// `sin z` truncated at degree `k`.
    pub fn sin(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
            if i % 2 == 1 {
                let sign = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
                c[i] = sign / fact;
            }
        }
        TaylorSeries { coefficients: c }
    }

    /// `e^z - 1` truncated at degree `k`.
    pub fn expm1(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
            c[i] = 1.0 / fact;
        }
        TaylorSeries { coefficients: c }
    }

    /// Truncation degree for transcendental functions at accuracy `eps`:
    /// `ceil(ln(1/eps))`, constant 1.
    pub fn truncation_degree(eps: f64) -> usize {
        assert!(eps > 0.0 && eps < 1.0);
        (1.0 / eps).ln().ceil() as usize
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficients.first().copied().unwrap_or(0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// All coefficient magnitudes scaled by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        TaylorSeries { coefficients: self.coefficients.iter().map(|c| c * t).collect() }
    }
}

/// The pair of measures for one `(phi, R, eps)` together with the constants
/// they were evaluated under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexityBudget {
    pub c_sound: f64,
    pub c_eps: f64,
    pub r: f64,
    pub eps: f64,
    pub c_star: f64,
}

impl ComplexityBudget {
    pub fn evaluate(phi: &TaylorSeries, r: f64, eps: f64, c_star: f64) -> Result<Self> {
        Ok(ComplexityBudget {
            c_sound: complexity_sound(phi, r, c_star)?,
            c_eps: complexity_eps(phi, r, eps, c_star)?,
            r,
            eps,
            c_star,
        })
    }
}

fn check_terms(sum: f64, term: f64, degree: usize) -> Result<()> {
    if !term.is_finite() || term > 1e300 || !sum.is_finite() {
        return Err(Error::SeriesOverflow { degree, term });
    }
    Ok(())
}

/// `c_sound(phi, R)`; monotone nondecreasing in `R` and in every `|c_i|`.
pub fn complexity_sound(phi: &TaylorSeries, r: f64, c_star: f64) -> Result<f64> {
    if r < 0.0 {
        return invalid("complexity_sound: R must be nonnegative");
    }
    if c_star <= 0.0 {
        return invalid("complexity_sound: C* must be positive");
    }
    let mut sum = 0.0;
    let mut weight = 1.0; // (C* R)^i
    for (i, c) in phi.coefficients().iter().enumerate() {
        let term = c.abs() * weight;
        check_terms(sum, term, i)?;
        sum += term;
        weight *= c_star * r;
    }
    Ok(c_star * sum)
}

/// `c_eps(phi, R, eps)`; satisfies `complexity_sound <= complexity_eps`
/// for every input.
pub fn complexity_eps(phi: &TaylorSeries, r: f64, eps: f64, c_star: f64) -> Result<f64> {
    if r < 0.0 {
        return invalid("complexity_eps: R must be nonnegative");
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid("complexity_eps: eps must lie in (0, 1)");
    }
    if c_star <= 0.0 {
        return invalid("complexity_eps: C* must be positive");
    }
    let log_term = (1.0 / eps).ln();
    let mut sum = 0.0;
    let mut weight = 1.0; // (C* R)^i
    for (i, c) in phi.coefficients().iter().enumerate() {
        let eps_part = if i == 0 {
            1.0
        } else {
            ((log_term / i as f64).sqrt() * c_star * r).powi(i as i32)
        };
        let term = c.abs() * (weight + eps_part);
        check_terms(sum, term, i)?;
        sum += term;
        weight *= c_star * r;
    }
    Ok(c_star * sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent high-precision oracle: sums the two displays term by term
    /// with explicit powers instead of the running-weight recurrence.
    fn oracle_sound(phi: &TaylorSeries, r: f64, c_star: f64) -> f64 {
        c_star
            * phi
                .coefficients()
                .iter()
                .enumerate()
                .map(|(i, c)| c.abs() * (c_star * r).powi(i as i32))
                .sum::<f64>()
    }

    fn oracle_eps(phi: &TaylorSeries, r: f64, eps: f64, c_star: f64) -> f64 {
        let lg = (1.0 / eps).ln();
        c_star
            * phi
                .coefficients()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let second = if i == 0 {
                        1.0
                    } else {
                        ((lg / i as f64).sqrt() * c_star * r).powi(i as i32)
                    };
                    c.abs() * ((c_star * r).powi(i as i32) + second)
                })
                .sum::<f64>()
    }

    #[test]
    fn zero_function_has_zero_complexity() {
        let z = TaylorSeries::zero();
        assert_eq!(complexity_sound(&z, 1.0, DEFAULT_C_STAR).unwrap(), 0.0);
        assert_eq!(complexity_eps(&z, 1.0, 0.01, DEFAULT_C_STAR).unwrap(), 0.0);
    }

    #[test]
    fn monomial_scales_as_r_to_d() {
        // phi = z^d for constant d: c_sound <= const * R^d. The constant is
        // (C*)^{d+1}; check the R-dependence is exactly R^d.
        let phi = TaylorSeries::monomial(3);
        let c_star = 2.0;
        let at = |r: f64| complexity_sound(&phi, r, c_star).unwrap();
        let ratio = at(2.0) / at(1.0);
        assert!((ratio - 8.0).abs() < 1e-12, "R^3 scaling, got ratio {ratio}");
        assert!((at(1.0) - oracle_sound(&phi, 1.0, c_star)).abs() < 1e-12);
    }

    #[test]
    fn sin_truncated_matches_summation_oracle() {
        let phi = TaylorSeries::sin(11);
        let got = complexity_sound(&phi, 1.0, DEFAULT_C_STAR).unwrap();
        let want = oracle_sound(&phi, 1.0, DEFAULT_C_STAR);
        assert!(got.is_finite());
        assert!((got - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn expm1_truncated_matches_summation_oracle() {
        let eps = 1e-4;
        let k = TaylorSeries::truncation_degree(eps);
        let phi = TaylorSeries::expm1(k);
        let got = complexity_eps(&phi, 1.0, eps, DEFAULT_C_STAR).unwrap();
        let want = oracle_eps(&phi, 1.0, eps, DEFAULT_C_STAR);
        assert!(got.is_finite());
        assert!((got - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn eps_variant_grows_at_most_polylog() {
        // phi(z) = z^2, R = 1: shrinking eps from 1e-2 to 1e-6 grows the
        // measure by at most (ln 1e6 / ln 1e2)^2 times a constant.
        let phi = TaylorSeries::monomial(2);
        let r = 1.0;
        let a = complexity_eps(&phi, r, 1e-2, DEFAULT_C_STAR).unwrap();
        let b = complexity_eps(&phi, r, 1e-6, DEFAULT_C_STAR).unwrap();
        let cap = ((1e6_f64).ln() / (1e2_f64).ln()).powi(2);
        assert!(b / a <= cap, "growth {} exceeds polylog cap {}", b / a, cap);
        assert!(b >= a, "monotone in 1/eps");
    }

    #[test]
    fn sound_below_eps_everywhere() {
        let phis = [
            TaylorSeries::monomial(1),
            TaylorSeries::monomial(4),
            TaylorSeries::sin(9),
            TaylorSeries::expm1(7),
            TaylorSeries::new(vec![0.3, -1.2, 0.0, 0.7]).unwrap(),
        ];
        for phi in &phis {
            for r in [0.0, 0.3, 1.0, 2.0] {
                for eps in [0.5, 1e-2, 1e-8] {
                    let s = complexity_sound(phi, r, DEFAULT_C_STAR).unwrap();
                    let e = complexity_eps(phi, r, eps, DEFAULT_C_STAR).unwrap();
                    assert!(s <= e + 1e-12 * s, "phi {phi:?} r {r} eps {eps}");
                }
            }
        }
    }

    #[test]
    fn homogeneous_in_coefficients() {
        let phi = TaylorSeries::new(vec![0.0, 0.5, 0.25, 0.125]).unwrap();
        let t = 3.5;
        let scaled = phi.scaled(t);
        let a = complexity_sound(&phi, 1.3, DEFAULT_C_STAR).unwrap();
        let b = complexity_sound(&scaled, 1.3, DEFAULT_C_STAR).unwrap();
        assert!((b - t * a).abs() <= 1e-9 * b);
        let ae = complexity_eps(&phi, 1.3, 1e-3, DEFAULT_C_STAR).unwrap();
        let be = complexity_eps(&scaled, 1.3, 1e-3, DEFAULT_C_STAR).unwrap();
        assert!((be - t * ae).abs() <= 1e-9 * be);
    }

    #[test]
    fn monotone_in_r() {
        let phi = TaylorSeries::sin(11);
        let mut prev = 0.0;
        for k in 0..10 {
            let r = 0.25 * k as f64;
            let v = complexity_sound(&phi, r, DEFAULT_C_STAR).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn truncation_extension_is_stable_at_small_c_star() {
        // Extending the truncation degree by 5 moves the value by < 1e-9
        // at R <= 2 once the tail has turned over; C* = 1 and the eps-rule
        // degree for eps = 1e-9 puts us there.
        let c_star = 1.0;
        let eps = 1e-9;
        let k = TaylorSeries::truncation_degree(eps);
        for r in [1.0, 2.0] {
            let a = complexity_sound(&TaylorSeries::sin(k), r, c_star).unwrap();
            let b = complexity_sound(&TaylorSeries::sin(k + 5), r, c_star).unwrap();
            assert!((a - b).abs() < 1e-9, "sin: {:e}", (a - b).abs());
            let a = complexity_eps(&TaylorSeries::expm1(k), r, eps, c_star).unwrap();
            let b = complexity_eps(&TaylorSeries::expm1(k + 5), r, eps, c_star).unwrap();
            assert!((a - b).abs() < 1e-9, "expm1: {:e}", (a - b).abs());
        }
    }

    #[test]
    fn overflow_reports_offending_degree() {
        let phi = TaylorSeries::new(vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let err = complexity_sound(&phi, 1e70, DEFAULT_C_STAR).unwrap_err();
        match err {
            crate::Error::SeriesOverflow { degree, .. } => assert_eq!(degree, 5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn eval_is_horner() {
        let phi = TaylorSeries::new(vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(phi.eval(2.0), 1.0 - 4.0 + 12.0);
    }
}
