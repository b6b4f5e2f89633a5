//! Feed-forward networks with explicit reverse-mode gradients.
//!
//! A [`Network`] is a chain of [`Layer`]s acting on row-major batches
//! (`N × dim`). Affine layers hold either a direct weight `W` or a
//! generator `A` with effective weight `exp(A)`; fixed layers wrap
//! non-trainable maps (manifold Exp/Log, logistic, skip connections,
//! frozen sub-networks).
//!
//! Trainable parameters are flattened layer by layer, weight (row-major)
//! then bias, skipping frozen layers.

pub mod checkpoint;
pub mod conv;
mod fixed;
mod train;

pub use conv::{conv1d_apply, ConvFilter};
pub use fixed::FixedMap;
pub use train::{evaluate, train, train_observed, EpochRecord, DIVERGENCE_LOSS, Loss, Optimizer, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, matrix_exp_with_tape, ExpTape, Matrix};
use crate::maps::Activation;
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    Direct(Matrix),
    /// Generator `A`; the layer applies `exp(A)`.
    ExpGenerator(Matrix),
}

impl Weight {
    pub fn raw(&self) -> &Matrix {
        match self {
            Weight::Direct(m) | Weight::ExpGenerator(m) => m,
        }
    }

    fn raw_mut(&mut self) -> &mut Matrix {
        match self {
            Weight::Direct(m) | Weight::ExpGenerator(m) => m,
        }
    }
}

/// `h ↦ σ(W h + b)`, or `W h + b` when `activation` is `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub weight: Weight,
    pub bias: Vec<f64>,
    pub activation: Option<Activation>,
    pub trainable: bool,
}

impl Affine {
    pub fn new(
        weight: Weight,
        bias: Vec<f64>,
        activation: Option<Activation>,
        trainable: bool,
    ) -> Result<Self> {
        let w = weight.raw();
        if let Weight::ExpGenerator(a) = &weight {
            if !a.is_square() {
                return Err(Error::input(format!(
                    "exp-generator layer needs a square generator, got {}x{}",
                    a.rows(),
                    a.cols()
                )));
            }
        }
        if bias.len() != w.rows() {
            return Err(Error::input(format!(
                "bias length {} does not match {} output rows",
                bias.len(),
                w.rows()
            )));
        }
        if !w.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::input("non-finite layer parameter"));
        }
        Ok(Affine {
            weight,
            bias,
            activation,
            trainable,
        })
    }

    /// Direct layer with Glorot-uniform weights and zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        d_in: usize,
        d_out: usize,
        activation: Option<Activation>,
        rng: &mut R,
    ) -> Affine {
        let bound = (6.0 / (d_in + d_out) as f64).sqrt();
        let w = Matrix::from_fn(d_out, d_in, |_, _| rng.random_range(-bound..bound));
        Affine {
            weight: Weight::Direct(w),
            bias: vec![0.0; d_out],
            activation,
            trainable: true,
        }
    }

    /// Exp-generator layer starting at `A = 0`, `b = 0`.
    pub fn exp_identity(d: usize, activation: Option<Activation>) -> Affine {
        Affine {
            weight: Weight::ExpGenerator(Matrix::zeros(d, d)),
            bias: vec![0.0; d],
            activation,
            trainable: true,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.raw().cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.raw().rows()
    }

    /// The matrix actually applied: `W` or `exp(A)`.
    pub fn effective_weight(&self) -> Result<Matrix> {
        match &self.weight {
            Weight::Direct(w) => Ok(w.clone()),
            Weight::ExpGenerator(a) => matrix_exp(a),
        }
    }

    fn num_params(&self) -> usize {
        if self.trainable {
            self.weight.raw().rows() * self.weight.raw().cols() + self.bias.len()
        } else {
            0
        }
    }
}

#[derive(Clone, Debug)]
pub enum Layer {
    Affine(Affine),
    Fixed(FixedMap),
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        match self {
            Layer::Affine(a) => a.in_dim(),
            Layer::Fixed(f) => f.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Layer::Affine(a) => a.out_dim(),
            Layer::Fixed(f) => f.out_dim(),
        }
    }

    fn is_trainable(&self) -> bool {
        matches!(self, Layer::Affine(a) if a.trainable)
    }
}

enum Cache {
    Affine {
        input: Matrix,
        pre: Matrix,
        weight: Matrix,
        tape: Option<ExpTape>,
    },
    Fixed {
        input: Matrix,
    },
}

/// Loss value and flattened parameter gradient for one batch.
#[derive(Clone, Debug)]
pub struct Gradient {
    pub loss: f64,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::input("a network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::InvalidComposition {
                    boundary: format!("layer {i} -> layer {}", i + 1),
                    left: pair[0].out_dim(),
                    right: pair[1].in_dim(),
                });
            }
        }
        Ok(Network { layers })
    }

    /// Fully connected net with `hidden` between layers and an affine
    /// output layer. `dims = [d_in, h_1, …, d_out]`.
    pub fn mlp<R: Rng + ?Sized>(dims: &[usize], hidden: Activation, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::param(format!("bad mlp dims {dims:?}")));
        }
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = (i + 1 < n).then_some(hidden);
                Layer::Affine(Affine::glorot(dims[i], dims[i + 1], act, rng))
            })
            .collect();
        Network::new(layers)
    }

    /// A single trainable affine layer initialised to the identity.
    pub fn identity(n: usize) -> Network {
        Network {
            layers: vec![Layer::Affine(Affine {
                weight: Weight::Direct(Matrix::identity(n)),
                bias: vec![0.0; n],
                activation: None,
                trainable: true,
            })],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    /// Marks every affine layer frozen.
    pub fn frozen(mut self) -> Network {
        for l in &mut self.layers {
            if let Layer::Affine(a) = l {
                a.trainable = false;
            }
        }
        self
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::input(format!(
                "network expects {} inputs, got {}",
                self.in_dim(),
                x.len()
            )));
        }
        let batch = Matrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.forward_batch(&batch)?.into_vec())
    }

    /// Row-wise forward pass over a batch.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        self.check_batch(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = match layer {
                Layer::Affine(a) => {
                    let w = a.effective_weight()?;
                    let mut z = affine_pre(&h, &w, &a.bias);
                    if let Some(act) = a.activation {
                        z = z.map(|v| act.eval(v));
                    }
                    z
                }
                Layer::Fixed(f) => f.forward_batch(&h)?,
            };
        }
        Ok(h)
    }

    fn check_batch(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.in_dim() {
            return Err(Error::input(format!(
                "network expects {} inputs, got batch of width {}",
                self.in_dim(),
                x.cols()
            )));
        }
        Ok(())
    }

    fn forward_cached(&self, x: &Matrix) -> Result<(Matrix, Vec<Cache>)> {
        self.check_batch(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            match layer {
                Layer::Affine(a) => {
                    let (weight, tape) = match &a.weight {
                        Weight::Direct(w) => (w.clone(), None),
                        Weight::ExpGenerator(g) => {
                            let tape = matrix_exp_with_tape(g)?;
                            (tape.value().clone(), Some(tape))
                        }
                    };
                    let pre = affine_pre(&h, &weight, &a.bias);
                    let out = match a.activation {
                        Some(act) => pre.map(|v| act.eval(v)),
                        None => pre.clone(),
                    };
                    caches.push(Cache::Affine {
                        input: std::mem::replace(&mut h, out),
                        pre,
                        weight,
                        tape,
                    });
                }
                Layer::Fixed(f) => {
                    let out = f.forward_batch(&h)?;
                    caches.push(Cache::Fixed {
                        input: std::mem::replace(&mut h, out),
                    });
                }
            }
        }
        Ok((h, caches))
    }

    /// Reverse pass. Returns the flattened parameter gradient and, when
    /// requested, the gradient with respect to the batch input.
    fn backward(
        &self,
        caches: &[Cache],
        grad_out: Matrix,
        want_input: bool,
    ) -> Result<(Vec<f64>, Option<Matrix>)> {
        let offsets = self.param_offsets();
        let mut grads = vec![0.0; self.num_params()];
        let stop = if want_input {
            0
        } else {
            match self.layers.iter().position(Layer::is_trainable) {
                Some(i) => i,
                None => return Ok((grads, None)),
            }
        };
        let mut g = grad_out;
        for i in (stop..self.layers.len()).rev() {
            let need_below = i > stop || want_input;
            match (&self.layers[i], &caches[i]) {
                (
                    Layer::Affine(a),
                    Cache::Affine {
                        input,
                        pre,
                        weight,
                        tape,
                    },
                ) => {
                    if let Some(act) = a.activation {
                        for (gv, &z) in g.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                            *gv *= act.derivative(z);
                        }
                    }
                    if a.trainable {
                        let off = offsets[i];
                        let gw = g.t_matmul(input);
                        let gw = match tape {
                            Some(t) => t.vjp(&gw),
                            None => gw,
                        };
                        let nw = gw.as_slice().len();
                        grads[off..off + nw].copy_from_slice(gw.as_slice());
                        let gb = &mut grads[off + nw..off + nw + a.bias.len()];
                        for r in 0..g.rows() {
                            for (acc, v) in gb.iter_mut().zip(g.row(r)) {
                                *acc += v;
                            }
                        }
                    }
                    if need_below {
                        g = g.matmul(weight);
                    }
                }
                (Layer::Fixed(f), Cache::Fixed { input }) => {
                    if need_below {
                        g = f.vjp_batch(input, &g)?;
                    }
                }
                _ => unreachable!("cache kind follows layer kind"),
            }
        }
        Ok((grads, want_input.then_some(g)))
    }

    fn param_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.layers
            .iter()
            .map(|l| {
                let here = off;
                if let Layer::Affine(a) = l {
                    off += a.num_params();
                }
                here
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Affine(a) => a.num_params(),
                Layer::Fixed(_) => 0,
            })
            .sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            if let Layer::Affine(a) = l {
                if a.trainable {
                    out.extend_from_slice(a.weight.raw().as_slice());
                    out.extend_from_slice(&a.bias);
                }
            }
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::input(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite parameter"));
        }
        let mut off = 0;
        for l in &mut self.layers {
            if let Layer::Affine(a) = l {
                if a.trainable {
                    let w = a.weight.raw_mut().as_mut_slice();
                    let nw = w.len();
                    w.copy_from_slice(&p[off..off + nw]);
                    off += nw;
                    let nb = a.bias.len();
                    a.bias.copy_from_slice(&p[off..off + nb]);
                    off += nb;
                }
            }
        }
        Ok(())
    }

    /// Loss on `(x, y)` and its gradient with respect to [`Network::params`].
    pub fn gradient(&self, loss: Loss, x: &Matrix, y: &Matrix) -> Result<Gradient> {
        if x.rows() == 0 {
            return Err(Error::input("empty batch"));
        }
        if y.rows() != x.rows() || y.cols() != self.out_dim() {
            return Err(Error::input(format!(
                "target batch is {}x{}, expected {}x{}",
                y.rows(),
                y.cols(),
                x.rows(),
                self.out_dim()
            )));
        }
        let (out, caches) = self.forward_cached(x)?;
        let (value, g) = loss.value_and_grad(&out, y);
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { batch: 0 });
        }
        let (params, _) = self.backward(&caches, g, false)?;
        Ok(Gradient {
            loss: value,
            params,
        })
    }

    /// `Jᵀ g` for the Jacobian of the batch map at `x`, row by row.
    pub fn input_vjp(&self, x: &Matrix, grad_out: &Matrix) -> Result<Matrix> {
        let (_, caches) = self.forward_cached(x)?;
        let (_, g) = self.backward(&caches, grad_out.clone(), true)?;
        Ok(g.expect("input gradient requested"))
    }

    /// Every pre-activation of every affine layer on `x`, for kink checks.
    pub fn pre_activations(&self, x: &Matrix) -> Result<Vec<f64>> {
        let (_, caches) = self.forward_cached(x)?;
        let mut out = Vec::new();
        for (l, c) in self.layers.iter().zip(&caches) {
            if let (Layer::Affine(a), Cache::Affine { pre, .. }) = (l, c) {
                if a.activation.is_some() {
                    out.extend_from_slice(pre.as_slice());
                }
            }
        }
        Ok(out)
    }
}

/// `H Wᵀ + 1 bᵀ`.
fn affine_pre(h: &Matrix, w: &Matrix, b: &[f64]) -> Matrix {
    let mut z = h.matmul_t(w);
    for r in 0..z.rows() {
        for (v, bb) in z.row_mut(r).iter_mut().zip(b) {
            *v += bb;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::gprelu;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn affine(w: Matrix, b: Vec<f64>, act: Option<Activation>) -> Layer {
        Layer::Affine(Affine::new(Weight::Direct(w), b, act, true).unwrap())
    }

    #[test]
    fn zero_relu_net_outputs_zero() {
        let net = Network::new(vec![
            affine(Matrix::zeros(3, 2), vec![0.0; 3], Some(Activation::Relu)),
            affine(Matrix::zeros(1, 3), vec![0.0], None),
        ])
        .unwrap();
        assert_eq!(net.forward(&[1.5, -2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn identity_layer() {
        let net = Network::identity(3);
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![1.0, -2.0, 0.5]);
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn hand_computed_two_layer_forward() {
        // x = (1, -1): W1 x + b1 = (1-2+0.5, 3+1-1) = (-0.5, 3);
        // relu -> (0, 3); W2 h + b2 = 2*0 - 1*3 + 0.25 = -2.75.
        let net = Network::new(vec![
            affine(
                Matrix::from_rows(&[&[1.0, 2.0], &[3.0, -1.0]]).unwrap(),
                vec![0.5, -1.0],
                Some(Activation::Relu),
            ),
            affine(Matrix::from_rows(&[&[2.0, -1.0]]).unwrap(), vec![0.25], None),
        ])
        .unwrap();
        assert_eq!(net.forward(&[1.0, -1.0]).unwrap(), vec![-2.75]);
    }

    #[test]
    fn dimension_chain_is_checked() {
        let r = Network::new(vec![
            affine(Matrix::zeros(3, 2), vec![0.0; 3], None),
            affine(Matrix::zeros(1, 4), vec![0.0], None),
        ]);
        assert!(matches!(r, Err(Error::InvalidComposition { left: 3, right: 4, .. })));
    }

    #[test]
    fn linear_mse_gradient_matches_closed_form() {
        // L = mean (Xw + b − y)², ∂L/∂w = 2 Xᵀ r / N, ∂L/∂b = 2 Σ r / N.
        let x = Matrix::from_rows(&[&[1.0, 2.0], &[0.5, -1.0], &[-2.0, 0.25]]).unwrap();
        let y = Matrix::from_rows(&[&[1.0], &[-0.5], &[2.0]]).unwrap();
        let w = [0.3, -0.7];
        let b = 0.1;
        let net = Network::new(vec![affine(Matrix::from_rows(&[&w]).unwrap(), vec![b], None)]).unwrap();
        let g = net.gradient(Loss::Mse, &x, &y).unwrap();
        let n = 3.0;
        let r: Vec<f64> = (0..3)
            .map(|i| x[(i, 0)] * w[0] + x[(i, 1)] * w[1] + b - y[(i, 0)])
            .collect();
        let gw0 = 2.0 * (0..3).map(|i| x[(i, 0)] * r[i]).sum::<f64>() / n;
        let gw1 = 2.0 * (0..3).map(|i| x[(i, 1)] * r[i]).sum::<f64>() / n;
        let gb = 2.0 * r.iter().sum::<f64>() / n;
        for (a, e) in g.params.iter().zip([gw0, gw1, gb]) {
            assert!((a - e).abs() < 1e-14, "{a} vs {e}");
        }
        let mse = r.iter().map(|v| v * v).sum::<f64>() / n;
        assert!((g.loss - mse).abs() < 1e-15);
    }

    #[test]
    fn matching_target_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::mlp(&[2, 4, 1], gprelu(0.5, 1.5).unwrap(), &mut rng).unwrap();
        let x = Matrix::from_rows(&[&[0.2, -0.4], &[1.0, 0.3]]).unwrap();
        let y = net.forward_batch(&x).unwrap();
        let g = net.gradient(Loss::Mse, &x, &y).unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g.params.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn params_round_trip_and_skip_frozen_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let head = Network::mlp(&[3, 4, 2], Activation::Tanh, &mut rng).unwrap();
        let mut layers = Network::mlp(&[3, 3], Activation::Tanh, &mut rng)
            .unwrap()
            .frozen()
            .into_layers();
        layers.extend(head.into_layers());
        let mut net = Network::new(layers).unwrap();
        assert_eq!(net.num_params(), 3 * 4 + 4 + 4 * 2 + 2);
        let p: Vec<f64> = (0..net.num_params()).map(|i| i as f64 * 0.01).collect();
        net.set_params(&p).unwrap();
        assert_eq!(net.params(), p);
        assert!(net.set_params(&p[1..]).is_err());
    }

    #[test]
    fn exp_generator_starts_at_identity() {
        let net = Network::new(vec![Layer::Affine(Affine::exp_identity(3, None))]).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }
}
