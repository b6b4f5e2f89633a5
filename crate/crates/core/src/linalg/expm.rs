use super::Matrix;
use crate::error::{Error, Result};

/// Taylor truncation order. With the scaled argument below 0.5 in Frobenius
/// norm the remainder is below 1e-20.
const TAYLOR_ORDER: usize = 16;
const SCALED_NORM: f64 = 0.5;

/// Intermediates of one `exp(A)` evaluation, kept for the reverse pass.
#[derive(Clone, Debug)]
pub struct ExpTape {
    squarings: u32,
    /// `X^k` for `k = 0..=TAYLOR_ORDER`, `X = A / 2^s`.
    powers: Vec<Matrix>,
    /// `T, T², T⁴, …` up to `exp(A)`; `len = squarings + 1`.
    squares: Vec<Matrix>,
}

impl ExpTape {
    pub fn value(&self) -> &Matrix {
        self.squares.last().expect("tape holds at least the Taylor sum")
    }

    /// Reverse-mode gradient: given `G = ∂L/∂exp(A)`, returns `∂L/∂A`.
    ///
    /// Differentiates the squaring chain and every Taylor term with the
    /// product rule, so the result is the exact derivative of the computed
    /// function, not of an approximation to it.
    pub fn vjp(&self, grad_out: &Matrix) -> Matrix {
        let n = grad_out.rows();
        let mut g = grad_out.clone();
        // M_{i+1} = M_i M_i  =>  ∂M_i = G M_iᵀ + M_iᵀ G
        for m in self.squares[..self.squarings as usize].iter().rev() {
            g = g.matmul_t(m).add(&m.t_matmul(&g));
        }
        // T = Σ X^k / k!, with X^k = X^{k-1} X.
        let x = &self.powers[1];
        let mut g_x = Matrix::zeros(n, n);
        let mut carry = Matrix::zeros(n, n);
        let mut inv_fact = vec![1.0; TAYLOR_ORDER + 1];
        for k in 1..=TAYLOR_ORDER {
            inv_fact[k] = inv_fact[k - 1] / k as f64;
        }
        for k in (1..=TAYLOR_ORDER).rev() {
            let mut g_pk = g.scale(inv_fact[k]);
            g_pk = g_pk.add(&carry);
            g_x = g_x.add(&self.powers[k - 1].t_matmul(&g_pk));
            carry = g_pk.matmul_t(x);
        }
        g_x.scale(0.5f64.powi(self.squarings as i32))
    }
}

/// Matrix exponential by scaling and squaring of a degree-16 Taylor
/// polynomial. `exp(0) = I` exactly.
pub fn matrix_exp(a: &Matrix) -> Result<Matrix> {
    let tape = matrix_exp_with_tape(a)?;
    Ok(tape.squares.into_iter().last().expect("non-empty tape"))
}

pub fn matrix_exp_with_tape(a: &Matrix) -> Result<ExpTape> {
    if !a.is_square() {
        return Err(Error::input(format!(
            "matrix_exp needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::input("non-finite entry passed to matrix_exp"));
    }
    let n = a.rows();
    let norm = a.frobenius_norm();
    let mut squarings = 0u32;
    while norm * 0.5f64.powi(squarings as i32) >= SCALED_NORM {
        squarings += 1;
    }
    let x = a.scale(0.5f64.powi(squarings as i32));

    let mut powers = Vec::with_capacity(TAYLOR_ORDER + 1);
    powers.push(Matrix::identity(n));
    powers.push(x.clone());
    for k in 2..=TAYLOR_ORDER {
        let next = powers[k - 1].matmul(&x);
        powers.push(next);
    }
    let mut sum = Matrix::zeros(n, n);
    let mut inv_fact = 1.0;
    for (k, p) in powers.iter().enumerate() {
        if k > 0 {
            inv_fact /= k as f64;
        }
        sum.add_assign_scaled(p, inv_fact);
    }

    let mut squares = Vec::with_capacity(squarings as usize + 1);
    squares.push(sum);
    for i in 0..squarings as usize {
        let next = squares[i].matmul(&squares[i]);
        squares.push(next);
    }
    if !squares.last().is_some_and(Matrix::is_finite) {
        return Err(Error::NumericalFailure {
            what: "matrix_exp overflow".into(),
            residual: norm,
        });
    }
    Ok(ExpTape {
        squarings,
        powers,
        squares,
    })
}
