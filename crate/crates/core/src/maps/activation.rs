use crate::error::{Error, Result};

/// Componentwise activations with declared analytic properties.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    /// `βx` for `x ≥ 0`, `αx` for `x < 0`.
    Gprelu { alpha: f64, beta: f64 },
    Sigmoid,
    Tanh,
}

/// Properties an activation is known to have; constructors check these
/// instead of trusting the caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActivationProps {
    pub strictly_increasing: bool,
    pub surjective: bool,
    pub continuous: bool,
    pub differentiable_ae: bool,
}

/// `σ(x) = βx` for `x ≥ 0`, `αx` for `x < 0`.
pub fn gprelu(alpha: f64, beta: f64) -> Result<Activation> {
    if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(format!(
            "gprelu needs alpha > 0 and beta > 0, got alpha={alpha}, beta={beta}"
        )));
    }
    Ok(Activation::Gprelu { alpha, beta })
}

/// Leaky ReLU with negative slope `slope`; the same as `gprelu(slope, 1)`.
pub fn leaky_relu(slope: f64) -> Result<Activation> {
    gprelu(slope, 1.0)
}

impl Activation {
    pub fn props(&self) -> ActivationProps {
        let (strictly_increasing, surjective) = match self {
            Activation::Identity | Activation::Gprelu { .. } => (true, true),
            Activation::Relu => (false, false),
            Activation::Sigmoid | Activation::Tanh => (true, false),
        };
        ActivationProps {
            strictly_increasing,
            surjective,
            continuous: true,
            differentiable_ae: true,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Activation::Identity => "identity".into(),
            Activation::Relu => "relu".into(),
            Activation::Gprelu { alpha, beta } => format!("gprelu({alpha},{beta})"),
            Activation::Sigmoid => "sigmoid".into(),
            Activation::Tanh => "tanh".into(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Gprelu { alpha, beta } => {
                if x >= 0.0 {
                    beta * x
                } else {
                    alpha * x
                }
            }
            Activation::Sigmoid => logistic(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative, with the right-hand slope at kinks (`β` for GPReLU, `0`
    /// for ReLU).
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gprelu { alpha, beta } => {
                if x >= 0.0 {
                    beta
                } else {
                    alpha
                }
            }
            Activation::Sigmoid => {
                let s = logistic(x);
                s * (1.0 - s)
            }
            Activation::Tanh => 1.0 - x.tanh().powi(2),
        }
    }

    /// `σ⁻¹(y)`; errors when `σ` is not invertible or `y` is outside its range.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        match *self {
            Activation::Identity => Ok(y),
            Activation::Gprelu { alpha, beta } => Ok(if y >= 0.0 { y / beta } else { y / alpha }),
            Activation::Sigmoid => logit(y),
            Activation::Tanh => {
                if y.abs() < 1.0 {
                    Ok(y.atanh())
                } else {
                    Err(Error::Domain {
                        what: "tanh inverse outside (-1, 1); got".into(),
                        value: y,
                    })
                }
            }
            Activation::Relu => Err(Error::RejectedActivation(
                "relu is not injective and has no inverse".into(),
            )),
        }
    }

    /// Stable identifier used by checkpoints and configs.
    pub(crate) fn tag(&self) -> (u8, [f64; 2]) {
        match *self {
            Activation::Identity => (0, [0.0; 2]),
            Activation::Relu => (1, [0.0; 2]),
            Activation::Gprelu { alpha, beta } => (2, [alpha, beta]),
            Activation::Sigmoid => (3, [0.0; 2]),
            Activation::Tanh => (4, [0.0; 2]),
        }
    }

    pub(crate) fn from_tag(tag: u8, p: [f64; 2]) -> Result<Activation> {
        match tag {
            0 => Ok(Activation::Identity),
            1 => Ok(Activation::Relu),
            2 => gprelu(p[0], p[1]),
            3 => Ok(Activation::Sigmoid),
            4 => Ok(Activation::Tanh),
            _ => Err(Error::Format(format!("unknown activation tag {tag}"))),
        }
    }

    /// Parses `relu`, `identity`, `sigmoid`, `tanh`, `gprelu(a,b)` and
    /// `leaky(a)`.
    pub fn parse(s: &str) -> Result<Activation> {
        let s = s.trim().to_ascii_lowercase();
        let args = |body: &str| -> Result<Vec<f64>> {
            body.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::param(format!("bad activation argument '{t}'")))
                })
                .collect()
        };
        match s.as_str() {
            "identity" => return Ok(Activation::Identity),
            "relu" => return Ok(Activation::Relu),
            "sigmoid" | "logistic" => return Ok(Activation::Sigmoid),
            "tanh" => return Ok(Activation::Tanh),
            _ => {}
        }
        if let Some(body) = s.strip_prefix("gprelu(").and_then(|b| b.strip_suffix(')')) {
            let a = args(body)?;
            if a.len() == 2 {
                return gprelu(a[0], a[1]);
            }
        }
        if let Some(body) = s.strip_prefix("leaky(").and_then(|b| b.strip_suffix(')')) {
            let a = args(body)?;
            if a.len() == 1 {
                return leaky_relu(a[0]);
            }
        }
        Err(Error::param(format!("unknown activation '{s}'")))
    }
}

/// `eˣ/(1+eˣ)`, evaluated without overflow for large `|x|`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(p/(1−p))` for `p ∈ (0, 1)`.
pub fn logit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "logit needs a value in (0, 1); got".into(),
            value: p,
        });
    }
    Ok((p / (1.0 - p)).ln())
}
