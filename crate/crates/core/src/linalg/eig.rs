use super::{Matrix, SymMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `S = Q diag(values) Qᵀ` of a symmetric matrix.
///
/// `values` are sorted in descending order and column `k` of `vectors` is
/// the eigenvector for `values[k]`.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub vectors: Matrix,
    pub values: Vec<f64>,
}

impl SymEig {
    /// `Q diag(f(λ)) Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let q = &self.vectors;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += q[(i, k)] * fv[k] * q[(j, k)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        SymMatrix(out)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Sweeps over all off-diagonal pairs, annihilating each with a plane
/// rotation, until the off-diagonal mass is negligible relative to the
/// Frobenius norm.
pub fn sym_eig(s: &SymMatrix) -> Result<SymEig> {
    let n = s.dim();
    let mut a = s.as_matrix().clone();
    if !a.is_finite() {
        return Err(Error::input("non-finite entry passed to sym_eig"));
    }
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    if n <= 1 || scale == 0.0 {
        return Ok(sorted(a, v));
    }
    let target = f64::EPSILON * scale;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&a);
        if off > 1e3 * target {
            return Err(Error::NumericalFailure {
                what: "jacobi eigensolver".into(),
                residual: off / scale,
            });
        }
    }
    Ok(sorted(a, v))
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// One Jacobi rotation zeroing `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    // Skip rotations that cannot change the diagonal at working precision.
    if apq.abs() < f64::MIN_POSITIVE.sqrt() * (app.abs() + aqq.abs()).max(f64::MIN_POSITIVE) {
        a[(p, q)] = 0.0;
        a[(q, p)] = 0.0;
        return;
    }
    let tau = (aqq - app) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.rows();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

fn sorted(a: Matrix, v: Matrix) -> SymEig {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEig { vectors, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(s: &SymMatrix, e: &SymEig) -> f64 {
        e.reconstruct_with(|l| l).sub(s).frobenius_norm()
    }

    #[test]
    fn identity_case() {
        let e = sym_eig(&SymMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        assert_eq!(e.vectors, Matrix::identity(2));
    }

    #[test]
    fn diagonal_case_sorted_descending() {
        let e = sym_eig(&SymMatrix::diag(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        // columns are a signed permutation of the identity
        assert_eq!(e.vectors[(1, 0)].abs(), 1.0);
        assert_eq!(e.vectors[(0, 1)].abs(), 1.0);
    }

    #[test]
    fn two_by_two_characteristic_polynomial() {
        // (2-λ)² - 1 = 0  =>  λ ∈ {3, 1}
        let s = SymMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let e = sym_eig(&s).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!(residual(&s, &e) < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let e = sym_eig(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
    }
}
