use super::{sym_eig, Matrix, SymEig, SymMatrix};
use crate::error::{Error, Result};

/// Eigenvalues of `AᵀA` at or below this fraction of the largest one are
/// treated as exact zeros by [`smallest_singular_value`].
pub const RANK_EIG_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralFn {
    Sqrt,
    Log,
    Exp,
    InvSqrt,
}

impl SpectralFn {
    fn needs_positive(self) -> bool {
        !matches!(self, SpectralFn::Exp)
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            SpectralFn::Sqrt => x.sqrt(),
            SpectralFn::Log => x.ln(),
            SpectralFn::Exp => x.exp(),
            SpectralFn::InvSqrt => 1.0 / x.sqrt(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            SpectralFn::Sqrt => 0.5 / x.sqrt(),
            SpectralFn::Log => 1.0 / x,
            SpectralFn::Exp => x.exp(),
            SpectralFn::InvSqrt => -0.5 / (x * x.sqrt()),
        }
    }

    fn name(self) -> &'static str {
        match self {
            SpectralFn::Sqrt => "sqrt",
            SpectralFn::Log => "log",
            SpectralFn::Exp => "exp",
            SpectralFn::InvSqrt => "inv_sqrt",
        }
    }
}

/// `Q f(Λ) Qᵀ` for a symmetric `S = Q Λ Qᵀ`.
pub fn spectral_fn(s: &SymMatrix, f: SpectralFn) -> Result<SymMatrix> {
    let eig = sym_eig(s)?;
    spectral_fn_from_eig(&eig, f)
}

pub(crate) fn spectral_fn_from_eig(eig: &SymEig, f: SpectralFn) -> Result<SymMatrix> {
    if f.needs_positive() && !(eig.min_value() > 0.0) {
        return Err(Error::Domain {
            what: format!("spectral {} needs positive eigenvalues; smallest is", f.name()),
            value: eig.min_value(),
        });
    }
    Ok(eig.reconstruct_with(|l| f.eval(l)))
}

/// Adjoint of the Fréchet derivative of `S ↦ f(S)` at `S = Q Λ Qᵀ`
/// (Daleckii–Krein): `Q (Γ ∘ QᵀGQ) Qᵀ` with the first divided differences
/// `Γ_ij = (f(λ_i) − f(λ_j)) / (λ_i − λ_j)`, or `f'` on near-ties.
///
/// The operator is self-adjoint for the Frobenius inner product, so the
/// same expression serves as forward and reverse derivative.
pub fn spectral_fn_vjp(eig: &SymEig, f: SpectralFn, grad: &Matrix) -> SymMatrix {
    let n = eig.values.len();
    let q = &eig.vectors;
    let lam = &eig.values;
    let flam: Vec<f64> = lam.iter().map(|&l| f.eval(l)).collect();
    let inner = q.t_matmul(grad).matmul(q);
    let mut weighted = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let diff = lam[i] - lam[j];
            let gamma = if diff.abs() <= 1e-9 * (1.0 + lam[i].abs().max(lam[j].abs())) {
                f.derivative(0.5 * (lam[i] + lam[j]))
            } else {
                (flam[i] - flam[j]) / diff
            };
            weighted[(i, j)] = gamma * inner[(i, j)];
        }
    }
    SymMatrix::symmetrize(q.matmul(&weighted).matmul_t(q))
}

/// Smallest singular value via the eigenvalues of the Gram matrix
/// (`AᵀA` for tall or square `A`, `AAᵀ` for wide `A`).
///
/// Gram eigenvalues at or below `RANK_EIG_TOL` times the largest are
/// reported as an exact zero: forming `AᵀA` squares the condition number,
/// so anything smaller is indistinguishable from rounding.
pub fn smallest_singular_value(a: &Matrix) -> Result<f64> {
    singular_value_range(a).map(|(lo, _)| lo)
}

/// `(σ_min, σ_max)` computed as in [`smallest_singular_value`].
pub fn singular_value_range(a: &Matrix) -> Result<(f64, f64)> {
    if !a.is_finite() {
        return Err(Error::input("non-finite entry passed to smallest_singular_value"));
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Ok((0.0, 0.0));
    }
    let gram = if a.rows() >= a.cols() {
        a.t_matmul(a)
    } else {
        a.matmul_t(a)
    };
    let eig = sym_eig(&SymMatrix::symmetrize(gram))?;
    let top = eig.max_value().max(0.0);
    let low = eig.min_value();
    if top == 0.0 || low <= RANK_EIG_TOL * top {
        return Ok((0.0, top.sqrt()));
    }
    Ok((low.sqrt(), top.sqrt()))
}
