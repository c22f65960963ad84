//! Vector helpers and Gram–Schmidt orthonormalization.

use super::matrix::Matrix;
use super::rng::RngStream;
use crate::{invalid, Result};

/// Plain dense vector; kept as a bare `Vec<f64>` with free functions.
pub type Vector = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// y += alpha * x.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn add_scaled(a: &[f64], b: &[f64], alpha: f64) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + alpha * y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], alpha: f64) -> Vector {
    a.iter().map(|x| alpha * x).collect()
}

pub fn normalize(a: &[f64]) -> Vector {
    let n = norm(a);
    assert!(n > 0.0, "cannot normalize a zero vector");
    scale(a, 1.0 / n)
}

pub fn relu(a: &[f64]) -> Vector {
    a.iter().map(|&x| if x >= 0.0 { x } else { 0.0 }).collect()
}

/// Residual threshold below which an input vector counts as spanned by the
/// previous columns and the degenerate branch fires.
const GS_DEGENERATE_REL: f64 = 1e-12;

/// Gram–Schmidt orthonormalization of `v_1..v_n` in `R^m`, returned as an
/// `m x n` matrix with orthonormal columns; column `i` spans the same space
/// as `v_1..v_i`.
///
/// When the residual of `v_i` is numerically zero (below `1e-12 * ||v_i||`),
/// column `i` is replaced by the first standard basis vector whose
/// orthogonalization against the previous columns is non-degenerate. The
/// replacement is deterministic so runs reproduce exactly.
pub fn gram_schmidt(vs: &[Vector]) -> Result<Matrix> {
    if vs.is_empty() {
        return invalid("gram_schmidt: no input vectors");
    }
    let m = vs[0].len();
    if m == 0 {
        return invalid("gram_schmidt: zero-dimensional vectors");
    }
    if vs.iter().any(|v| v.len() != m) {
        return invalid("gram_schmidt: dimension mismatch among inputs");
    }
    let n = vs.len();
    if n > m {
        return invalid(format!("gram_schmidt: {n} vectors in dimension {m}"));
    }
    let mut cols: Vec<Vector> = Vec::with_capacity(n);
    for v in vs {
        let vn = norm(v);
        let r = orthogonal_residual(v, &cols);
        let rn = norm(&r);
        if rn > GS_DEGENERATE_REL * vn && rn > 0.0 {
            cols.push(scale(&r, 1.0 / rn));
        } else {
            cols.push(degenerate_column(m, &cols)?);
        }
    }
    let mut out = Matrix::zeros(m, n);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..m {
            out.set(i, j, c[i]);
        }
    }
    Ok(out)
}

/// Two projection passes; the second mops up the O(eps * kappa) residue the
/// first leaves behind, which is what gets column orthogonality to 1e-10.
fn orthogonal_residual(v: &[f64], cols: &[Vector]) -> Vector {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for c in cols {
            let p = dot(&r, c);
            axpy(-p, c, &mut r);
        }
    }
    r
}

fn degenerate_column(m: usize, cols: &[Vector]) -> Result<Vector> {
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        let r = orthogonal_residual(&e, cols);
        let rn = norm(&r);
        if rn > 1e-6 {
            return Ok(scale(&r, 1.0 / rn));
        }
    }
    invalid("gram_schmidt: no basis vector escapes the span (should be unreachable for n <= m)")
}

/// Projects `v` onto the orthogonal complement of the column span of `u`.
pub fn project_out(v: &[f64], u: &Matrix) -> Vector {
    let mut r = v.to_vec();
    for j in 0..u.cols() {
        let c = u.column(j);
        let p = dot(&r, &c);
        axpy(-p, &c, &mut r);
    }
    r
}

/// Spectral norm of a low-rank sum `sum_t u_t v_t^T` given its factors,
/// via power iteration in the span (cost is rank^2 * m).
pub fn low_rank_spectral_norm(us: &[Vector], vs: &[Vector], rng: &mut RngStream) -> f64 {
    assert_eq!(us.len(), vs.len());
    if us.is_empty() {
        return 0.0;
    }
    let n = vs[0].len();
    let mut x = rng.unit_vector(n);
    let mut prev = 0.0;
    for _ in 0..10_000 {
        // y = sum_t u_t <v_t, x>
        let mut y = vec![0.0; us[0].len()];
        for (u, v) in us.iter().zip(vs) {
            axpy(dot(v, &x), u, &mut y);
        }
        let sigma = norm(&y);
        if sigma == 0.0 {
            return 0.0;
        }
        // x = sum_t v_t <u_t, y>, normalized
        let mut z = vec![0.0; n];
        for (u, v) in us.iter().zip(vs) {
            axpy(dot(u, &y), v, &mut z);
        }
        let zn = norm(&z);
        if zn == 0.0 {
            return sigma;
        }
        x = scale(&z, 1.0 / zn);
        if (sigma - prev).abs() <= 1e-10 * sigma {
            return sigma;
        }
        prev = sigma;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_orthogonal_pair() {
        let u = gram_schmidt(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(u.column(0), vec![1.0, 0.0]);
        assert_eq!(u.column(1), vec![0.0, 1.0]);
    }

    #[test]
    fn degenerate_residual_takes_first_orthogonal_basis_vector() {
        let u = gram_schmidt(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let c1 = u.column(1);
        assert!((norm(&c1) - 1.0).abs() < 1e-12);
        assert!(dot(&u.column(0), &c1).abs() < 1e-12);
        assert!((c1[1].abs() - 1.0).abs() < 1e-12, "expected (0, +-1), got {c1:?}");
    }

    #[test]
    fn random_vectors_give_orthonormal_columns() {
        let mut rng = RngStream::new(11, 0);
        let vs: Vec<Vector> = (0..8).map(|_| rng.normal_vec(16, 1.0)).collect();
        let u = gram_schmidt(&vs).unwrap();
        // Check U^T U = I against direct inner products.
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = dot(&u.column(i), &u.column(j));
                assert!((got - want).abs() < 1e-10, "({i},{j}): {got}");
            }
        }
        // Span check: U U^T v_i == v_i for every input with nonzero residual.
        for v in &vs {
            let mut proj = vec![0.0; 16];
            for j in 0..8 {
                let c = u.column(j);
                axpy(dot(v, &c), &c, &mut proj);
            }
            let err = norm(&sub(v, &proj));
            assert!(err <= 1e-8, "projection error {err:e}");
        }
    }

    #[test]
    fn prefix_span_property() {
        let mut rng = RngStream::new(13, 1);
        let vs: Vec<Vector> = (0..4).map(|_| rng.normal_vec(8, 1.0)).collect();
        let u = gram_schmidt(&vs).unwrap();
        // v_2 must lie in span(col_1, col_2): residual after projecting out
        // the first two columns is zero.
        let mut r = vs[1].clone();
        for j in 0..2 {
            let c = u.column(j);
            let p = dot(&r, &c);
            axpy(-p, &c, &mut r);
        }
        assert!(norm(&r) < 1e-10);
    }

    #[test]
    fn too_many_vectors_is_an_error() {
        let vs: Vec<Vector> = (0..3).map(|i| vec![i as f64, 1.0]).collect();
        assert!(gram_schmidt(&vs).is_err());
    }

    #[test]
    fn spectral_norm_matches_jacobi_svd_oracle() {
        // Dense one-sided Jacobi SVD as an independent oracle on a small
        // random matrix.
        let mut rng = RngStream::new(5, 0);
        let m = Matrix::gaussian(50, 50, 1.0, &mut rng);
        let power = m.spectral_norm(1e-9, &mut rng).unwrap();
        let oracle = jacobi_svd_sigma_max(&m);
        assert!(
            (power - oracle).abs() <= 1e-6 * oracle,
            "power {power} vs jacobi {oracle}"
        );
    }

    /// One-sided Jacobi: rotates columns of A until they are pairwise
    /// orthogonal; the largest column norm is then sigma_max. Test-only
    /// oracle, independent of the power-iteration path.
    fn jacobi_svd_sigma_max(a: &Matrix) -> f64 {
        let n = a.cols();
        let mut cols: Vec<Vector> = (0..n).map(|j| a.column(j)).collect();
        for _sweep in 0..60 {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = dot(&cols[p], &cols[q]);
                    let app = dot(&cols[p], &cols[p]);
                    let aqq = dot(&cols[q], &cols[q]);
                    off = off.max(apq.abs() / (app * aqq).sqrt().max(1e-300));
                    if apq.abs() < 1e-14 * (app * aqq).sqrt() {
                        continue;
                    }
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..cols[p].len() {
                        let vp = cols[p][i];
                        let vq = cols[q][i];
                        cols[p][i] = c * vp - s * vq;
                        cols[q][i] = s * vp + c * vq;
                    }
                }
            }
            if off < 1e-12 {
                break;
            }
        }
        cols.iter().map(|c| norm(c)).fold(0.0, f64::max)
    }

    #[test]
    fn low_rank_spectral_matches_dense() {
        let mut rng = RngStream::new(21, 0);
        let us: Vec<Vector> = (0..3).map(|_| rng.normal_vec(12, 1.0)).collect();
        let vs: Vec<Vector> = (0..3).map(|_| rng.normal_vec(12, 1.0)).collect();
        let mut dense = Matrix::zeros(12, 12);
        for (u, v) in us.iter().zip(&vs) {
            dense.rank_one_update(1.0, u, v);
        }
        let want = dense.spectral_norm(1e-10, &mut rng).unwrap();
        let got = low_rank_spectral_norm(&us, &vs, &mut rng);
        assert!((want - got).abs() < 1e-7 * want);
    }
}
