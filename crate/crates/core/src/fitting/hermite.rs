//! Probabilists' Hermite polynomials, Gauss–Hermite quadrature, and the
//! standard normal CDF — the toolkit behind the indicator-to-function
//! calibration.

/// `he_0(z% .. he_k(z)` by the three-term recurrence
/// `he_{n+1} = z he_n - n he_{n-1}`.
pub fn hermite_probabilists(z: f64, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(1.0);
    if k == 0 {
        return out;
    }
    out.push(z);
    for n in 1..k {
        let next = z * out[n] - n as f64 * out[n - 1];
        out.push(next);
    }
    out
}

/// Nodes and weights of `n`-point Gauss–Hermite quadrature for the
/// physicists' weight `exp(-x^2)`, by Newton iteration on the normalized
/// recurrence (weights sum to sqrt(pi)).
pub fn gauss_hermite_physicists(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut z = 0.0_f64;
    for i in 0..half {
        // initial guesses, largest root first
        z = match i {
            0 => ((2 * n + 1) as f64).sqrt() - 1.85575 * ((2 * n + 1) as f64).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // normalized Hermite functions keep values bounded at high degree
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2
                    - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Nodes and weights such that `E_{g ~ N(0,1)}[f(g)] ~= sum_i w_i f(x_i)`
/// (weights sum to 1).
pub fn gauss_hermite_probabilists(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_hermite_physicists(n);
    let root2 = std::f64::consts::SQRT_2;
    let norm = std::f64::consts::PI.sqrt();
    (
        x.iter().map(|xi| root2 * xi).collect(),
        w.iter().map(|wi| wi / norm).collect(),
    )
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub use libm::erf;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_hermite_values() {
        let he = hermite_probabilists(2.0, 4);
        // he_2 = z^2 - 1, he_3 = z^3 - 3z, he_4 = z^4 - 6z^2 + 3
        assert_eq!(he[2], 3.0);
        assert_eq!(he[3], 2.0);
        assert_eq!(he[4], -5.0);
    }

    #[test]
    fn quadrature_reproduces_gaussian_moments() {
        let (x, w) = gauss_hermite_probabilists(40);
        let moment = |p: u32| -> f64 { x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum() };
        assert!((moment(0) - 1.0).abs() < 1e-13);
        assert!(moment(1).abs() < 1e-13);
        assert!((moment(2) - 1.0).abs() < 1e-12);
        assert!((moment(4) - 3.0).abs() < 1e-11);
        assert!((moment(6) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_orthonormality_under_quadrature() {
        let (x, w) = gauss_hermite_probabilists(60);
        // E[he_i he_j] = i! delta_ij
        let k = 8;
        let mut fact = vec![1.0_f64; k + 1];
        for i in 1..=k {
            fact[i] = fact[i - 1] * i as f64;
        }
        for i in 0..=k {
            for j in 0..=k {
                let mut acc = 0.0;
                for (xi, wi) in x.iter().zip(&w) {
                    let he = hermite_probabilists(*xi, k);
                    acc += wi * he[i] * he[j];
                }
                let want = if i == j { fact[i] } else { 0.0 };
                assert!(
                    (acc - want).abs() <= 1e-8 * want.max(1.0),
                    "({i},{j}): {acc} vs {want}"
                );
            }
        }
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.0) - 0.841344746068543).abs() < 1e-12);
        assert!((normal_cdf(-2.0) - 0.0227501319481792).abs() < 1e-12);
    }

    #[test]
    fn indicator_hermite_moments_match_theory() {
        // E[he_i(v) 1(v >= 0)] = pdf(0) he_{i-1}(0) for i >= 1, 1/2 for i = 0;
        // quadrature must reproduce the closed form.
        let (x, w) = gauss_hermite_probabilists(80);
        let pdf0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let want = [0.5, pdf0, 0.0, -pdf0, 0.0, 3.0 * pdf0, 0.0];
        for (i, expect) in want.iter().enumerate() {
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                if *xi >= 0.0 {
                    acc += wi * hermite_probabilists(*xi, i)[i];
                }
            }
            // the hard indicator limits quadrature accuracy; 80 nodes give
            // about 3 digits here, which the calibration grid never relies
            // on (it integrates the smooth conditional CDF instead)
            assert!((acc - expect).abs() < 2e-2, "moment {i}: {acc} vs {expect}");
        }
    }
}
