//! Soft and hard multi-label classifiers over open regions.
//!
//! The ideal hard classifier is `ĥ_i(x) = 1` iff `x ∈ X_i` for open sets
//! `X_i`. It factors as `ĥ = threshold_α ∘ ŝ` for any continuous `ŝ` with
//! `ŝ_i⁻¹((α, 1]) = X_i`; [`SoftClassifier`] builds one such `ŝ`.

use crate::error::{Error, Result};
use crate::linalg::norm2;

/// `1` where `soft_i > α`, else `0`. Ties go to `0`.
pub fn hard_threshold(alpha: f64, soft: &[f64]) -> Result<Vec<u8>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("threshold must lie in (0,1), got {alpha}")));
    }
    soft.iter()
        .map(|&s| {
            if !(-1e-9..=1.0 + 1e-9).contains(&s) {
                return Err(Error::input(format!("soft score {s} outside [0,1]")));
            }
            Ok((s > alpha) as u8)
        })
        .collect()
}

/// An open subset of `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// Open ball.
    Disk { center: Vec<f64>, radius: f64 },
    /// Open axis-aligned box.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Everywhere,
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_depth(x) > 0.0
    }

    /// Distance to the complement inside the region, minus the distance
    /// to the region outside it.
    pub fn signed_depth(&self, x: &[f64]) -> f64 {
        match self {
            Region::Disk { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                radius - norm2(&d)
            }
            Region::Box { lo, hi } => {
                let mut inside = f64::INFINITY;
                let mut outside = 0.0f64;
                for ((&v, &l), &h) in x.iter().zip(lo).zip(hi) {
                    inside = inside.min((v - l).min(h - v));
                    let gap = (l - v).max(v - h).max(0.0);
                    outside += gap * gap;
                }
                if outside > 0.0 {
                    -outside.sqrt()
                } else {
                    inside
                }
            }
            Region::Everywhere => f64::INFINITY,
        }
    }
}

/// `ŝ_i(x) = α + (1−α)·min(1, depth/margin)` inside `X_i` and
/// `α·max(0, 1 − dist/margin)` outside, so `ŝ_i > α` exactly on `X_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftClassifier {
    pub regions: Vec<Region>,
    pub alpha: f64,
    pub margin: f64,
}

impl SoftClassifier {
    pub fn new(regions: Vec<Region>, alpha: f64, margin: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if !(margin > 0.0) {
            return Err(Error::param(format!("margin must be positive, got {margin}")));
        }
        Ok(SoftClassifier {
            regions,
            alpha,
            margin,
        })
    }

    pub fn soft(&self, x: &[f64]) -> Vec<f64> {
        let a = self.alpha;
        self.regions
            .iter()
            .map(|r| {
                let d = r.signed_depth(x);
                if d > 0.0 {
                    a + (1.0 - a) * (d / self.margin).min(1.0)
                } else {
                    a * (1.0 + d / self.margin).max(0.0)
                }
            })
            .collect()
    }

    /// `ĥ(x)`: membership in each region.
    pub fn ideal(&self, x: &[f64]) -> Vec<u8> {
        self.regions.iter().map(|r| r.contains(x) as u8).collect()
    }

    /// True when `x` lies within `width` of some region boundary.
    pub fn near_boundary(&self, x: &[f64], width: f64) -> bool {
        self.regions.iter().any(|r| r.signed_depth(x).abs() < width)
    }
}
