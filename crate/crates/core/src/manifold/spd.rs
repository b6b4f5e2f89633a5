//! Symmetric positive-definite matrices.
//!
//! With `A^{1/2}` the principal square root,
//!
//! ```text
//! Exp_A(V) = A^{1/2} exp(A^{-1/2} V A^{-1/2}) A^{1/2}
//! Log_A(B) = A^{1/2} log(A^{-1/2} B A^{-1/2}) A^{1/2}
//! d(A, B)  = ‖log(A^{-1/2} B A^{-1/2})‖_F
//! ```
//!
//! `d` is the affine-invariant distance; it is the Riemannian length of
//! `Log_A(B)` and is symmetric in its arguments.

use crate::error::{Error, Result};
use crate::linalg::{
    spectral_fn_from_eig, spectral_fn_vjp, sym_eig, Matrix, SpectralFn, SymEig, SymMatrix,
};
use std::f64::consts::SQRT_2;

/// Smallest admissible eigenvalue of an SPD point.
pub const SPD_EIG_TOL: f64 = 1e-12;

/// A point of the SPD manifold. Square roots are computed once on
/// construction since Exp/Log at a fixed base reuse them.
#[derive(Clone, Debug)]
pub struct SpdPoint {
    matrix: SymMatrix,
    sqrt: SymMatrix,
    inv_sqrt: SymMatrix,
}

impl SpdPoint {
    pub fn new(matrix: SymMatrix) -> Result<Self> {
        let eig = sym_eig(&matrix)?;
        if !(eig.min_value() > SPD_EIG_TOL) {
            return Err(Error::Domain {
                what: "SPD point needs eigenvalues above 1e-12; smallest is".into(),
                value: eig.min_value(),
            });
        }
        let sqrt = spectral_fn_from_eig(&eig, SpectralFn::Sqrt)?;
        let inv_sqrt = spectral_fn_from_eig(&eig, SpectralFn::InvSqrt)?;
        Ok(SpdPoint {
            matrix,
            sqrt,
            inv_sqrt,
        })
    }

    pub fn identity(d: usize) -> Self {
        SpdPoint {
            matrix: SymMatrix::identity(d),
            sqrt: SymMatrix::identity(d),
            inv_sqrt: SymMatrix::identity(d),
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        SpdPoint::new(SymMatrix::from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn sqrt(&self) -> &SymMatrix {
        &self.sqrt
    }

    pub fn inv_sqrt(&self) -> &SymMatrix {
        &self.inv_sqrt
    }

    /// `A^{-1/2} X A^{-1/2}`.
    pub fn whiten(&self, x: &SymMatrix) -> SymMatrix {
        x.congruence(&self.inv_sqrt)
    }

    /// `A^{1/2} X A^{1/2}`.
    pub fn color(&self, x: &SymMatrix) -> SymMatrix {
        x.congruence(&self.sqrt)
    }
}

fn check_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::input(format!("SPD dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

pub fn spd_exp(base: &SpdPoint, v: &SymMatrix) -> Result<SpdPoint> {
    SpdPoint::new(spd_exp_sym(base, v)?)
}

pub fn spd_log(base: &SpdPoint, target: &SpdPoint) -> Result<SymMatrix> {
    spd_log_sym(base, target.matrix())
}

/// [`spd_exp`] without re-validating the result as an [`SpdPoint`].
pub(crate) fn spd_exp_sym(base: &SpdPoint, v: &SymMatrix) -> Result<SymMatrix> {
    check_dim(base.dim(), v.dim())?;
    let inner = spectral_fn_from_eig(&sym_eig(&base.whiten(v))?, SpectralFn::Exp)?;
    Ok(base.color(&inner))
}

/// [`spd_log`] for a symmetric target; errors unless the target is SPD.
pub(crate) fn spd_log_sym(base: &SpdPoint, x: &SymMatrix) -> Result<SymMatrix> {
    check_dim(base.dim(), x.dim())?;
    let inner = spectral_fn_from_eig(&sym_eig(&base.whiten(x))?, SpectralFn::Log)?;
    Ok(base.color(&inner))
}

pub fn spd_dist(a: &SpdPoint, b: &SpdPoint) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let eig = sym_eig(&a.whiten(b.matrix()))?;
    if !(eig.min_value() > 0.0) {
        return Err(Error::Domain {
            what: "spd_dist of a non-SPD pair; smallest eigenvalue".into(),
            value: eig.min_value(),
        });
    }
    Ok(eig.values.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

/// Reverse-mode derivative of `V ↦ Exp_base(V)` for a symmetric cotangent
/// `grad` on the output.
pub(crate) fn spd_exp_vjp(base: &SpdPoint, v: &SymMatrix, grad: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(&base.whiten(v))?;
    Ok(whitened_vjp(base, &eig, SpectralFn::Exp, grad))
}

/// Reverse-mode derivative of `X ↦ Log_base(X)`.
pub(crate) fn spd_log_vjp(base: &SpdPoint, x: &SymMatrix, grad: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(&base.whiten(x))?;
    if !(eig.min_value() > 0.0) {
        return Err(Error::Domain {
            what: "spd_log of a non-SPD matrix; smallest eigenvalue".into(),
            value: eig.min_value(),
        });
    }
    Ok(whitened_vjp(base, &eig, SpectralFn::Log, grad))
}

// out = R f(P X P) R with R = A^{1/2}, P = A^{-1/2}; all factors symmetric.
fn whitened_vjp(base: &SpdPoint, eig: &SymEig, f: SpectralFn, grad: &SymMatrix) -> SymMatrix {
    let g_inner = grad.congruence(base.sqrt());
    let g_pre = spectral_fn_vjp(eig, f, g_inner.as_matrix());
    g_pre.congruence(base.inv_sqrt())
}

/// Flat coordinates of a symmetric matrix: the upper triangle in row-major
/// order, off-diagonal entries scaled by √2 so that the Euclidean norm of
/// the image equals the Frobenius norm of `s`.
pub fn spd_vectorize(s: &SymMatrix) -> Vec<f64> {
    let d = s.dim();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        out.push(s[(i, i)]);
        for j in i + 1..d {
            out.push(SQRT_2 * s[(i, j)]);
        }
    }
    out
}

/// Inverse of [`spd_vectorize`].
pub fn spd_unvectorize(v: &[f64]) -> Result<SymMatrix> {
    let d = sym_dim_from_len(v.len())?;
    let mut m = Matrix::zeros(d, d);
    let mut it = v.iter();
    for i in 0..d {
        m[(i, i)] = *it.next().expect("length checked");
        for j in i + 1..d {
            let x = it.next().expect("length checked") / SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    SymMatrix::new(m)
}

/// `d` such that `d(d+1)/2 == len`.
pub fn sym_dim_from_len(len: usize) -> Result<usize> {
    let mut d = 0;
    while d * (d + 1) / 2 < len {
        d += 1;
    }
    if d * (d + 1) / 2 != len {
        return Err(Error::input(format!(
            "length {len} is not a triangular number d(d+1)/2"
        )));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn close(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
        a.sub(b).frobenius_norm() <= tol * (1.0 + b.frobenius_norm())
    }

    #[test]
    fn exp_at_identity() {
        let id = SpdPoint::identity(2);
        let r = spd_exp(&id, &SymMatrix::zeros(2)).unwrap();
        assert!(close(r.matrix(), &SymMatrix::identity(2), 1e-15));
        let r = spd_exp(&id, &SymMatrix::diag(&[1.0, 0.0])).unwrap();
        assert!(close(r.matrix(), &SymMatrix::diag(&[E, 1.0]), 1e-15));
    }

    #[test]
    fn exp_and_log_at_diagonal_base() {
        // √A = diag(2,1); √A⁻¹ V √A⁻¹ = diag(ln 3, 0); exp → diag(3,1);
        // sandwich → diag(12, 1).
        let base = SpdPoint::new(SymMatrix::diag(&[4.0, 1.0])).unwrap();
        let v = SymMatrix::diag(&[4.0 * 3f64.ln(), 0.0]);
        let r = spd_exp(&base, &v).unwrap();
        assert!(close(r.matrix(), &SymMatrix::diag(&[12.0, 1.0]), 1e-14));
        let back = spd_log(&base, &r).unwrap();
        assert!(close(&back, &v, 1e-14));
    }

    #[test]
    fn log_of_self_is_zero_and_identity_base_is_plain_log() {
        let a = SpdPoint::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap();
        assert!(spd_log(&a, &a).unwrap().frobenius_norm() < 1e-14);
        let plain = crate::linalg::spectral_fn(a.matrix(), SpectralFn::Log).unwrap();
        assert!(close(&spd_log(&SpdPoint::identity(2), &a).unwrap(), &plain, 1e-14));
    }

    #[test]
    fn distances() {
        let a = SpdPoint::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap();
        assert!(spd_dist(&a, &a).unwrap() < 1e-14);
        let b = SpdPoint::new(SymMatrix::diag(&[E, 1.0])).unwrap();
        assert!((spd_dist(&SpdPoint::identity(2), &b).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn construction_rejects_indefinite() {
        assert!(matches!(
            SpdPoint::new(SymMatrix::diag(&[1.0, -1.0])),
            Err(Error::Domain { .. })
        ));
        assert!(SpdPoint::new(SymMatrix::diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn vectorization_examples() {
        assert_eq!(spd_vectorize(&SymMatrix::zeros(3)), vec![0.0; 6]);
        assert_eq!(spd_vectorize(&SymMatrix::identity(2)), vec![1.0, 0.0, 1.0]);
        let s = SymMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 3.0]]).unwrap();
        let v = spd_vectorize(&s);
        assert_eq!(v, vec![1.0, 2.0 * SQRT_2, 3.0]);
        let n2: f64 = v.iter().map(|x| x * x).sum();
        assert!((n2 - 18.0).abs() < 1e-13);
        assert_eq!(spd_unvectorize(&v).unwrap(), s);
        assert!(spd_unvectorize(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn exp_vjp_matches_finite_differences() {
        let base = SpdPoint::from_rows(&[&[1.5, 0.2], &[0.2, 0.8]]).unwrap();
        let v = SymMatrix::from_rows(&[&[0.3, -0.4], &[-0.4, 0.9]]).unwrap();
        let g = SymMatrix::from_rows(&[&[1.0, 0.5], &[0.5, -2.0]]).unwrap();
        let adj = spd_exp_vjp(&base, &v, &g).unwrap();
        let loss = |vv: &SymMatrix| -> f64 {
            let r = spd_exp(&base, vv).unwrap();
            spd_vectorize(r.matrix()).iter().zip(spd_vectorize(&g)).map(|(a, b)| a * b).sum()
        };
        let h = 1e-6;
        let vv = spd_vectorize(&v);
        let an = spd_vectorize(&adj);
        for k in 0..3 {
            let mut p = vv.clone();
            p[k] += h;
            let mut m = vv.clone();
            m[k] -= h;
            let fd = (loss(&spd_unvectorize(&p).unwrap()) - loss(&spd_unvectorize(&m).unwrap())) / (2.0 * h);
            assert!((fd - an[k]).abs() < 1e-7, "{k}: {fd} vs {}", an[k]);
        }
    }
}
