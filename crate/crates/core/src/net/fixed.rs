use super::Network;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix};
use crate::manifold::poincare::{
    exp0_factor, exp0_factor_slope, log0_factor, log0_factor_slope, BOUNDARY_EPS,
};
use crate::manifold::spd::{spd_exp_sym, spd_exp_vjp, spd_log_sym, spd_log_vjp};
use crate::manifold::{spd_unvectorize, spd_vectorize, PoincarePoint, SpdPoint};
use crate::maps::activation::logistic;
use std::fmt;
use std::sync::Arc;

/// A user-supplied vector function `R^in → R^out`.
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Non-trainable layers. SPD maps act on [`spd_vectorize`] coordinates.
#[derive(Clone)]
pub enum FixedMap {
    /// `vec(X) ↦ vec(Log_base X)`.
    SpdLog { base: SpdPoint },
    /// `vec(V) ↦ vec(Exp_base V)`.
    SpdExp { base: SpdPoint },
    PoincareLog0 { dim: usize, c: f64 },
    PoincareExp0 { dim: usize, c: f64 },
    Logistic { dim: usize },
    /// `x ↦ (x, g(x))`.
    Skip(Box<FixedMap>),
    /// A network evaluated with its parameters held fixed.
    Frozen(Box<Network>),
    /// Opaque function; has no derivative, so it may only sit before the
    /// first trainable layer.
    Custom {
        name: String,
        in_dim: usize,
        out_dim: usize,
        f: VectorFn,
    },
}

impl fmt::Debug for FixedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixedMap::SpdLog { base } => write!(f, "SpdLog(d={})", base.dim()),
            FixedMap::SpdExp { base } => write!(f, "SpdExp(d={})", base.dim()),
            FixedMap::PoincareLog0 { dim, c } => write!(f, "PoincareLog0(n={dim}, c={c})"),
            FixedMap::PoincareExp0 { dim, c } => write!(f, "PoincareExp0(n={dim}, c={c})"),
            FixedMap::Logistic { dim } => write!(f, "Logistic(n={dim})"),
            FixedMap::Skip(g) => write!(f, "Skip({g:?})"),
            FixedMap::Frozen(n) => write!(f, "Frozen({} -> {})", n.in_dim(), n.out_dim()),
            FixedMap::Custom {
                name,
                in_dim,
                out_dim,
                ..
            } => write!(f, "Custom({name}: {in_dim} -> {out_dim})"),
        }
    }
}

fn spd_len(base: &SpdPoint) -> usize {
    base.dim() * (base.dim() + 1) / 2
}

impl FixedMap {
    pub fn in_dim(&self) -> usize {
        match self {
            FixedMap::SpdLog { base } | FixedMap::SpdExp { base } => spd_len(base),
            FixedMap::PoincareLog0 { dim, .. }
            | FixedMap::PoincareExp0 { dim, .. }
            | FixedMap::Logistic { dim } => *dim,
            FixedMap::Skip(g) => g.in_dim(),
            FixedMap::Frozen(n) => n.in_dim(),
            FixedMap::Custom { in_dim, .. } => *in_dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            FixedMap::Skip(g) => g.in_dim() + g.out_dim(),
            FixedMap::Frozen(n) => n.out_dim(),
            FixedMap::Custom { out_dim, .. } => *out_dim,
            _ => self.in_dim(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::input(format!(
                "{self:?} expects {} inputs, got {}",
                self.in_dim(),
                x.len()
            )));
        }
        let m = Matrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.forward_batch(&m)?.into_vec())
    }

    pub(crate) fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            FixedMap::Frozen(net) => net.forward_batch(x),
            FixedMap::Skip(g) => {
                let gx = g.forward_batch(x)?;
                Ok(hconcat(x, &gx))
            }
            _ => {
                let mut out = Matrix::zeros(x.rows(), self.out_dim());
                for r in 0..x.rows() {
                    let y = self.apply_row(x.row(r))?;
                    out.row_mut(r).copy_from_slice(&y);
                }
                Ok(out)
            }
        }
    }

    fn apply_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FixedMap::SpdLog { base } => {
                Ok(spd_vectorize(&spd_log_sym(base, &spd_unvectorize(x)?)?))
            }
            FixedMap::SpdExp { base } => {
                Ok(spd_vectorize(&spd_exp_sym(base, &spd_unvectorize(x)?)?))
            }
            FixedMap::PoincareLog0 { c, .. } => {
                let r2 = c * dot(x, x);
                if r2 > 1.0 - BOUNDARY_EPS {
                    return Err(Error::Domain {
                        what: "log0 at the ball boundary; c‖y‖² =".into(),
                        value: r2,
                    });
                }
                let f = log0_factor(norm2(x), *c);
                Ok(x.iter().map(|v| f * v).collect())
            }
            FixedMap::PoincareExp0 { c, .. } => {
                let f = exp0_factor(norm2(x), *c);
                Ok(PoincarePoint::clamped(x.iter().map(|v| f * v).collect(), *c).into_coords())
            }
            FixedMap::Logistic { .. } => Ok(x.iter().map(|&v| logistic(v)).collect()),
            FixedMap::Custom { name, out_dim, f, .. } => {
                let y = f(x);
                if y.len() != *out_dim || y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NumericalFailure {
                        what: format!("custom map {name} returned a bad vector"),
                        residual: y.len() as f64,
                    });
                }
                Ok(y)
            }
            FixedMap::Skip(_) | FixedMap::Frozen(_) => unreachable!("handled batch-wise"),
        }
    }

    /// Row-wise `Jᵀ g` at the batch `x`.
    pub(crate) fn vjp_batch(&self, x: &Matrix, g: &Matrix) -> Result<Matrix> {
        match self {
            FixedMap::Frozen(net) => net.input_vjp(x, g),
            FixedMap::Skip(inner) => {
                let n = x.cols();
                let mut g_head = Matrix::zeros(g.rows(), n);
                let mut g_tail = Matrix::zeros(g.rows(), g.cols() - n);
                for r in 0..g.rows() {
                    g_head.row_mut(r).copy_from_slice(&g.row(r)[..n]);
                    g_tail.row_mut(r).copy_from_slice(&g.row(r)[n..]);
                }
                Ok(g_head.add(&inner.vjp_batch(x, &g_tail)?))
            }
            FixedMap::Custom { name, .. } => Err(Error::input(format!(
                "custom map {name} has no derivative; it can only precede trainable layers"
            ))),
            _ => {
                let mut out = Matrix::zeros(x.rows(), x.cols());
                for r in 0..x.rows() {
                    let v = self.vjp_row(x.row(r), g.row(r))?;
                    out.row_mut(r).copy_from_slice(&v);
                }
                Ok(out)
            }
        }
    }

    fn vjp_row(&self, x: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        match self {
            FixedMap::SpdLog { base } => {
                let gm = spd_log_vjp(base, &spd_unvectorize(x)?, &spd_unvectorize(g)?)?;
                Ok(spd_vectorize(&gm))
            }
            FixedMap::SpdExp { base } => {
                let gm = spd_exp_vjp(base, &spd_unvectorize(x)?, &spd_unvectorize(g)?)?;
                Ok(spd_vectorize(&gm))
            }
            // J = f(r) I + f'(r)/r · x xᵀ, symmetric.
            FixedMap::PoincareExp0 { c, .. } => {
                let r = norm2(x);
                Ok(radial_vjp(x, g, exp0_factor(r, *c), exp0_factor_slope(r, *c)))
            }
            FixedMap::PoincareLog0 { c, .. } => {
                let r = norm2(x);
                Ok(radial_vjp(x, g, log0_factor(r, *c), log0_factor_slope(r, *c)))
            }
            FixedMap::Logistic { .. } => Ok(x
                .iter()
                .zip(g)
                .map(|(&v, &gv)| {
                    let s = logistic(v);
                    gv * s * (1.0 - s)
                })
                .collect()),
            _ => unreachable!("handled batch-wise"),
        }
    }
}

fn radial_vjp(x: &[f64], g: &[f64], f: f64, slope: f64) -> Vec<f64> {
    let xg = dot(x, g);
    x.iter().zip(g).map(|(&xi, &gi)| f * gi + slope * xg * xi).collect()
}

fn hconcat(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, p) = (a.cols(), b.cols());
    let mut out = Matrix::zeros(a.rows(), n + p);
    for r in 0..a.rows() {
        let row = out.row_mut(r);
        row[..n].copy_from_slice(a.row(r));
        row[n..].copy_from_slice(b.row(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;

    fn fd_check(map: &FixedMap, x: &[f64], g: &[f64]) {
        let xm = Matrix::from_vec(1, x.len(), x.to_vec()).unwrap();
        let gm = Matrix::from_vec(1, g.len(), g.to_vec()).unwrap();
        let an = map.vjp_batch(&xm, &gm).unwrap().into_vec();
        let h = 1e-6;
        for k in 0..x.len() {
            let mut p = x.to_vec();
            p[k] += h;
            let mut m = x.to_vec();
            m[k] -= h;
            let fp = dot(&map.apply(&p).unwrap(), g);
            let fm = dot(&map.apply(&m).unwrap(), g);
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - an[k]).abs() < 1e-6 * (1.0 + fd.abs()), "{map:?} {k}: {fd} vs {}", an[k]);
        }
    }

    #[test]
    fn vjps_match_finite_differences() {
        let base = SpdPoint::from_rows(&[&[1.2, 0.3], &[0.3, 0.9]]).unwrap();
        let x = spd_vectorize(&SymMatrix::from_rows(&[&[2.0, 0.4], &[0.4, 1.1]]).unwrap());
        fd_check(&FixedMap::SpdLog { base: base.clone() }, &x, &[0.3, -1.0, 0.7]);
        fd_check(&FixedMap::SpdExp { base }, &[0.2, -0.3, 0.5], &[0.3, -1.0, 0.7]);
        fd_check(&FixedMap::PoincareExp0 { dim: 2, c: 0.7 }, &[0.8, -0.4], &[1.0, 0.5]);
        fd_check(&FixedMap::PoincareLog0 { dim: 2, c: 0.7 }, &[0.5, -0.4], &[1.0, 0.5]);
        fd_check(&FixedMap::Logistic { dim: 2 }, &[0.5, -3.0], &[1.0, 2.0]);
        let skip = FixedMap::Skip(Box::new(FixedMap::Logistic { dim: 2 }));
        fd_check(&skip, &[0.5, -1.0], &[1.0, 2.0, -0.5, 0.25]);
    }

    #[test]
    fn skip_concatenates() {
        let skip = FixedMap::Skip(Box::new(FixedMap::Custom {
            name: "zero".into(),
            in_dim: 2,
            out_dim: 1,
            f: Arc::new(|_| vec![0.0]),
        }));
        assert_eq!(skip.out_dim(), 3);
        assert_eq!(skip.apply(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn poincare_log0_rejects_boundary() {
        let m = FixedMap::PoincareLog0 { dim: 1, c: 1.0 };
        assert!(m.apply(&[1.0]).is_err());
    }
}
