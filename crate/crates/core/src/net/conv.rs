use crate::error::{Error, Result};

/// A sparse 1-D filter with taps `w_0, …, w_s` (`w_k = 0` for `k > s`).
#[derive(Clone, Debug, PartialEq)]
pub struct ConvFilter {
    taps: Vec<f64>,
}

impl ConvFilter {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::param("a filter needs at least one tap"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::param("non-finite filter tap"));
        }
        Ok(ConvFilter { taps })
    }

    /// The sparsity `s`: index of the last tap.
    pub fn sparsity(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// `(w ⋆ v)_i = Σ_j w_{i−j} v_j` for `i = 0 .. J+s−1`, the indices where
/// the sum can be non-zero.
pub fn conv1d_apply(w: &ConvFilter, v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; v.len() + w.sparsity()];
    for (j, &vj) in v.iter().enumerate() {
        for (k, &wk) in w.taps.iter().enumerate() {
            out[j + k] += wk * vj;
        }
    }
    out
}
