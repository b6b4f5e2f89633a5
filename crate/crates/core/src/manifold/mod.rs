//! The two Cartan–Hadamard geometries used as input/output spaces.
//!
//! * [`spd`]: symmetric positive-definite matrices with the affine-invariant
//!   exponential, logarithm and distance, plus an isometric vectorization
//!   to flat coordinates.
//! * [`poincare`]: the Poincaré ball of curvature `-c` with Möbius
//!   addition, the exponential/logarithm at the origin and `d_c`.

pub mod poincare;
pub mod spd;

pub use poincare::{mobius_add, poincare_dist, poincare_exp0, poincare_log0, PoincarePoint};
pub use spd::{
    spd_dist, spd_exp, spd_log, spd_unvectorize, spd_vectorize, sym_dim_from_len, SpdPoint,
};

use crate::error::{Error, Result};

/// A tangent vector in flat coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVec(Vec<f64>);

impl TangentVec {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite tangent coordinate"));
        }
        Ok(TangentVec(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}
