//! The Poincaré ball `{x : c‖x‖² < 1}`.

use super::TangentVec;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};

/// Points whose `c‖x‖²` exceeds `1 - BOUNDARY_EPS` after arithmetic are
/// pulled back onto radius `sqrt((1 - RESCALE_EPS)/c)`.
pub const BOUNDARY_EPS: f64 = 1e-12;
pub const RESCALE_EPS: f64 = 1e-9;
const SMALL_NORM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PoincarePoint {
    c: f64,
    coords: Vec<f64>,
}

impl PoincarePoint {
    pub fn new(coords: Vec<f64>, c: f64) -> Result<Self> {
        check_curvature(c)?;
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite Poincaré coordinate"));
        }
        let r2 = c * dot(&coords, &coords);
        if r2 >= 1.0 {
            return Err(Error::Domain {
                what: "point outside the Poincaré ball; c‖x‖² =".into(),
                value: r2,
            });
        }
        Ok(PoincarePoint { c, coords })
    }

    pub fn origin(n: usize, c: f64) -> Result<Self> {
        PoincarePoint::new(vec![0.0; n], c)
    }

    /// Builds a point, rescaling it inside the ball if rounding pushed it
    /// onto or past the boundary.
    pub(crate) fn clamped(mut coords: Vec<f64>, c: f64) -> Self {
        let r2 = c * dot(&coords, &coords);
        if r2 > 1.0 - BOUNDARY_EPS {
            let target = ((1.0 - RESCALE_EPS) / c).sqrt();
            let s = target / (r2 / c).sqrt();
            log::warn!("Poincaré point at c‖x‖² = {r2} rescaled inside the ball");
            coords.iter_mut().for_each(|x| *x *= s);
        }
        PoincarePoint { c, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn curvature(&self) -> f64 {
        self.c
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn neg(&self) -> PoincarePoint {
        PoincarePoint {
            c: self.c,
            coords: self.coords.iter().map(|x| -x).collect(),
        }
    }
}

fn check_curvature(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param(format!("curvature must be positive, got {c}")));
    }
    Ok(())
}

fn check_pair(x: &PoincarePoint, y: &PoincarePoint) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::input(format!(
            "Poincaré dimension mismatch: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    if x.c != y.c {
        return Err(Error::input(format!(
            "Poincaré curvature mismatch: {} vs {}",
            x.c, y.c
        )));
    }
    Ok(())
}

/// Möbius addition
///
/// ```text
/// x ⊕ y = ((1 + 2c⟨x,y⟩ + c‖y‖²) x + (1 − c‖x‖²) y) / (1 + 2c⟨x,y⟩ + c²‖x‖²‖y‖²)
/// ```
pub fn mobius_add(x: &PoincarePoint, y: &PoincarePoint) -> Result<PoincarePoint> {
    check_pair(x, y)?;
    let c = x.c;
    let xy = dot(&x.coords, &y.coords);
    let x2 = dot(&x.coords, &x.coords);
    let y2 = dot(&y.coords, &y.coords);
    let a = 1.0 + 2.0 * c * xy + c * y2;
    let b = 1.0 - c * x2;
    let den = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
    let coords = x
        .coords
        .iter()
        .zip(&y.coords)
        .map(|(xi, yi)| (a * xi + b * yi) / den)
        .collect();
    Ok(PoincarePoint::clamped(coords, c))
}

/// `d_c(x, y) = (2/√c) artanh(√c ‖(−x) ⊕ y‖)`.
pub fn poincare_dist(x: &PoincarePoint, y: &PoincarePoint) -> Result<f64> {
    check_pair(x, y)?;
    let diff = mobius_add(&x.neg(), y)?;
    let sc = x.c.sqrt();
    Ok(2.0 / sc * (sc * norm2(&diff.coords)).atanh())
}

/// `exp0(v) = tanh(√c‖v‖) v / (√c‖v‖)`, with `exp0(0) = 0`.
pub fn poincare_exp0(v: &TangentVec, c: f64) -> Result<PoincarePoint> {
    check_curvature(c)?;
    let f = exp0_factor(norm2(v.coords()), c);
    Ok(PoincarePoint::clamped(
        v.coords().iter().map(|x| f * x).collect(),
        c,
    ))
}

/// `log0(y) = artanh(√c‖y‖) y / (√c‖y‖)`, the inverse of [`poincare_exp0`].
pub fn poincare_log0(y: &PoincarePoint) -> Result<TangentVec> {
    let r2 = y.c * dot(&y.coords, &y.coords);
    if r2 > 1.0 - BOUNDARY_EPS {
        return Err(Error::Domain {
            what: "log0 at the ball boundary; c‖y‖² =".into(),
            value: r2,
        });
    }
    let f = log0_factor(norm2(&y.coords), y.c);
    TangentVec::new(y.coords.iter().map(|x| f * x).collect())
}

/// `tanh(u)/u` with `u = √c r`.
pub(crate) fn exp0_factor(r: f64, c: f64) -> f64 {
    let u = c.sqrt() * r;
    if u < SMALL_NORM {
        1.0
    } else {
        u.tanh() / u
    }
}

/// `(d/dr)(tanh(u)/u) / r`, the coefficient of `v vᵀ` in the Jacobian of
/// `exp0`.
pub(crate) fn exp0_factor_slope(r: f64, c: f64) -> f64 {
    let u = c.sqrt() * r;
    if u < 1e-4 {
        c * (-2.0 / 3.0 + 8.0 * u * u / 15.0)
    } else {
        let sech2 = 1.0 - u.tanh().powi(2);
        c * (u * sech2 - u.tanh()) / (u * u * u)
    }
}

/// `artanh(u)/u` with `u = √c r`.
pub(crate) fn log0_factor(r: f64, c: f64) -> f64 {
    let u = c.sqrt() * r;
    if u < SMALL_NORM {
        1.0
    } else {
        u.atanh() / u
    }
}

pub(crate) fn log0_factor_slope(r: f64, c: f64) -> f64 {
    let u = c.sqrt() * r;
    if u < 1e-4 {
        c * (2.0 / 3.0 + 4.0 * u * u / 5.0)
    } else {
        c * (u / (1.0 - u * u) - u.atanh()) / (u * u * u)
    }
}
