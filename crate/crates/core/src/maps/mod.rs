//! Feature maps `φ`, readout maps `ρ`, and their composition `ρ ∘ f ∘ φ`
//! with a trainable core `f`.
//!
//! Maps carry metadata about what they guarantee (`claims_injective`,
//! `invertible`, `has_section`); constructors such as [`injective_stack`]
//! check the hypotheses behind those claims instead of trusting callers.

pub mod activation;
pub mod classify;

pub use activation::{gprelu, leaky_relu, logistic, logit, Activation, ActivationProps};
pub use classify::{hard_threshold, Region, SoftClassifier};

use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, norm2, Matrix};
use crate::manifold::{spd_unvectorize, spd_vectorize, SpdPoint};
use crate::net::{Affine, FixedMap, Layer, Network, Weight};
use rand::Rng;
use std::sync::Arc;

/// How a stack layer turns its parameter matrix into a weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parametrization {
    /// Weight `exp(A)`; invertible for every `A`.
    Exp,
    /// Weight used as given.
    Direct,
}

/// Parameters of `x ↦ σ(W_J ⋯ σ(W_1 x + b_1) ⋯ + b_J)` with square
/// `m × m` weights.
#[derive(Clone, Debug)]
pub struct LayerStackParams {
    pub generators: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
    pub parametrization: Parametrization,
    pub trainable: bool,
}

impl LayerStackParams {
    /// `J` layers that start as the identity map up to `σ`: `A = 0` for
    /// [`Parametrization::Exp`], `W = I` for [`Parametrization::Direct`].
    pub fn identity(m: usize, depth: usize, activation: Activation, parametrization: Parametrization) -> Self {
        let g = match parametrization {
            Parametrization::Exp => Matrix::zeros(m, m),
            Parametrization::Direct => Matrix::identity(m),
        };
        LayerStackParams {
            generators: vec![g; depth],
            biases: vec![vec![0.0; m]; depth],
            activation,
            parametrization,
            trainable: true,
        }
    }

    /// Direct weights drawn Glorot-uniform, zero biases.
    pub fn glorot<R: Rng + ?Sized>(m: usize, depth: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = (3.0 / m as f64).sqrt();
        LayerStackParams {
            generators: (0..depth)
                .map(|_| Matrix::from_fn(m, m, |_, _| rng.random_range(-bound..bound)))
                .collect(),
            biases: vec![vec![0.0; m]; depth],
            activation,
            parametrization: Parametrization::Direct,
            trainable: true,
        }
    }

    pub fn depth(&self) -> usize {
        self.generators.len()
    }

    /// Checks shapes and returns the width `m`.
    fn validate(&self) -> Result<usize> {
        let Some(first) = self.generators.first() else {
            return Err(Error::param("a layer stack needs at least one layer"));
        };
        let m = first.rows();
        if self.biases.len() != self.generators.len() {
            return Err(Error::param(format!(
                "{} generators but {} biases",
                self.generators.len(),
                self.biases.len()
            )));
        }
        for (j, (a, b)) in self.generators.iter().zip(&self.biases).enumerate() {
            if a.rows() != m || a.cols() != m {
                return Err(Error::param(format!(
                    "layer {j} weight is {}x{}, expected {m}x{m}",
                    a.rows(),
                    a.cols()
                )));
            }
            if b.len() != m {
                return Err(Error::param(format!("layer {j} bias has length {}, expected {m}", b.len())));
            }
            if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
                return Err(Error::param(format!("layer {j} has a non-finite parameter")));
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Debug)]
struct Stack {
    params: LayerStackParams,
    weights: Vec<Matrix>,
    /// `exp(−A_j)`, present when every layer can be undone.
    inverse_weights: Option<Vec<Matrix>>,
}

impl Stack {
    fn build(params: LayerStackParams, invertible: bool) -> Result<Stack> {
        params.validate()?;
        let weights = params
            .generators
            .iter()
            .map(|a| match params.parametrization {
                Parametrization::Exp => matrix_exp(a),
                Parametrization::Direct => Ok(a.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        let inverse_weights = if invertible {
            Some(
                params
                    .generators
                    .iter()
                    .map(|a| matrix_exp(&a.scale(-1.0)))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(Stack {
            params,
            weights,
            inverse_weights,
        })
    }

    fn width(&self) -> usize {
        self.weights[0].rows()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let act = self.params.activation;
        let mut h = x.to_vec();
        for (w, b) in self.weights.iter().zip(&self.params.biases) {
            h = w.matvec(&h).iter().zip(b).map(|(z, bb)| act.eval(z + bb)).collect();
        }
        h
    }

    fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        let inv = self
            .inverse_weights
            .as_ref()
            .ok_or_else(|| Error::input("this stack is not invertible"))?;
        let act = self.params.activation;
        let mut h = y.to_vec();
        for (w, b) in inv.iter().zip(&self.params.biases).rev() {
            let pre = h
                .iter()
                .zip(b)
                .map(|(v, bb)| Ok(act.inverse(*v)? - bb))
                .collect::<Result<Vec<_>>>()?;
            h = w.matvec(&pre);
        }
        Ok(h)
    }

    fn layers(&self) -> Vec<Layer> {
        self.params
            .generators
            .iter()
            .zip(&self.params.biases)
            .map(|(a, b)| {
                let weight = match self.params.parametrization {
                    Parametrization::Exp => Weight::ExpGenerator(a.clone()),
                    Parametrization::Direct => Weight::Direct(a.clone()),
                };
                Layer::Affine(Affine {
                    weight,
                    bias: b.clone(),
                    activation: Some(self.params.activation),
                    trainable: self.params.trainable,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
enum MapKind {
    Identity(usize),
    Stack(Stack),
    Fixed(FixedMap),
}

impl MapKind {
    fn in_dim(&self) -> usize {
        match self {
            MapKind::Identity(n) => *n,
            MapKind::Stack(s) => s.width(),
            MapKind::Fixed(f) => f.in_dim(),
        }
    }

    fn out_dim(&self) -> usize {
        match self {
            MapKind::Identity(n) => *n,
            MapKind::Stack(s) => s.width(),
            MapKind::Fixed(f) => f.out_dim(),
        }
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::input(format!(
                "map expects {} inputs, got {}",
                self.in_dim(),
                x.len()
            )));
        }
        match self {
            MapKind::Identity(_) => Ok(x.to_vec()),
            MapKind::Stack(s) => Ok(s.apply(x)),
            MapKind::Fixed(f) => f.apply(x),
        }
    }

    fn layers(&self) -> Vec<Layer> {
        match self {
            MapKind::Identity(_) => Vec::new(),
            MapKind::Stack(s) => s.layers(),
            MapKind::Fixed(f) => vec![Layer::Fixed(f.clone())],
        }
    }
}

/// A feature map `φ: X → R^m`.
#[derive(Clone, Debug)]
pub struct FeatureMap {
    kind: MapKind,
    claims_injective: bool,
    invertible: bool,
}

impl FeatureMap {
    pub fn identity(n: usize) -> FeatureMap {
        FeatureMap {
            kind: MapKind::Identity(n),
            claims_injective: true,
            invertible: true,
        }
    }

    /// `vec(X) ↦ vec(Log_base X)`; a global chart of the SPD manifold.
    pub fn spd_log(base: SpdPoint) -> FeatureMap {
        FeatureMap {
            kind: MapKind::Fixed(FixedMap::SpdLog { base }),
            claims_injective: true,
            invertible: true,
        }
    }

    /// `Log_0` on the Poincaré ball of curvature `−c`.
    pub fn poincare_log0(dim: usize, c: f64) -> Result<FeatureMap> {
        check_curvature(c)?;
        Ok(FeatureMap {
            kind: MapKind::Fixed(FixedMap::PoincareLog0 { dim, c }),
            claims_injective: true,
            invertible: true,
        })
    }

    /// Wraps an arbitrary function. Nothing is verified, so the map claims
    /// injectivity only if the caller says so.
    pub fn custom(
        name: &str,
        in_dim: usize,
        out_dim: usize,
        claims_injective: bool,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> FeatureMap {
        FeatureMap {
            kind: MapKind::Fixed(FixedMap::Custom {
                name: name.into(),
                in_dim,
                out_dim,
                f: Arc::new(f),
            }),
            claims_injective,
            invertible: false,
        }
    }

    /// A fixed map with caller-declared injectivity.
    pub fn fixed(map: FixedMap, claims_injective: bool) -> FeatureMap {
        FeatureMap {
            kind: MapKind::Fixed(map),
            claims_injective,
            invertible: false,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.kind.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.kind.out_dim()
    }

    pub fn claims_injective(&self) -> bool {
        self.claims_injective
    }

    pub fn invertible(&self) -> bool {
        self.invertible
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.kind.apply(x)
    }

    /// `φ⁻¹(y)` for invertible maps.
    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        if !self.invertible {
            return Err(Error::input("feature map has no inverse"));
        }
        match &self.kind {
            MapKind::Identity(_) => Ok(y.to_vec()),
            MapKind::Stack(s) => s.inverse(y),
            MapKind::Fixed(FixedMap::SpdLog { base }) => {
                FixedMap::SpdExp { base: base.clone() }.apply(y)
            }
            MapKind::Fixed(FixedMap::PoincareLog0 { dim, c }) => {
                FixedMap::PoincareExp0 { dim: *dim, c: *c }.apply(y)
            }
            MapKind::Fixed(_) => unreachable!("only the maps above are marked invertible"),
        }
    }

    /// The map as network layers (none for the identity).
    pub fn to_layers(&self) -> Vec<Layer> {
        self.kind.layers()
    }
}

/// A readout map `ρ: R^n → Y`.
#[derive(Clone, Debug)]
pub struct ReadoutMap {
    kind: MapKind,
    surjective_onto: String,
    has_section: bool,
}

impl ReadoutMap {
    pub fn identity(n: usize) -> ReadoutMap {
        ReadoutMap {
            kind: MapKind::Identity(n),
            surjective_onto: format!("R^{n}"),
            has_section: true,
        }
    }

    /// `vec(V) ↦ vec(Exp_base V)`; section `Log_base`.
    pub fn spd_exp(base: SpdPoint) -> ReadoutMap {
        let d = base.dim();
        ReadoutMap {
            kind: MapKind::Fixed(FixedMap::SpdExp { base }),
            surjective_onto: format!("SPD({d})"),
            has_section: true,
        }
    }

    /// `Exp_0` onto the Poincaré ball; section `Log_0`.
    pub fn poincare_exp0(dim: usize, c: f64) -> Result<ReadoutMap> {
        check_curvature(c)?;
        Ok(ReadoutMap {
            kind: MapKind::Fixed(FixedMap::PoincareExp0 { dim, c }),
            surjective_onto: format!("Poincaré ball D^{dim}_{c}"),
            has_section: true,
        })
    }

    /// Invertible stack used as a readout; requires a strictly increasing,
    /// surjective `σ` and exp-parametrized weights.
    pub fn stack(params: LayerStackParams) -> Result<ReadoutMap> {
        let m = injective_stack(params)?;
        if !m.invertible {
            return Err(Error::RejectedActivation(
                "a readout stack needs a surjective activation so that it has a section".into(),
            ));
        }
        let n = m.out_dim();
        Ok(ReadoutMap {
            kind: m.kind,
            surjective_onto: format!("R^{n}"),
            has_section: true,
        })
    }

    /// A stack with no checks and no section.
    pub fn unchecked_stack(params: LayerStackParams) -> Result<ReadoutMap> {
        let s = Stack::build(params, false)?;
        Ok(ReadoutMap {
            surjective_onto: "unknown".into(),
            kind: MapKind::Stack(s),
            has_section: false,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.kind.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.kind.out_dim()
    }

    pub fn surjective_onto(&self) -> &str {
        &self.surjective_onto
    }

    pub fn has_section(&self) -> bool {
        self.has_section
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.kind.apply(x)
    }

    /// A right inverse: `apply(section(y)) = y` on the image.
    pub fn section(&self, y: &[f64]) -> Result<Vec<f64>> {
        if !self.has_section {
            return Err(Error::input("readout map has no section"));
        }
        if y.len() != self.out_dim() {
            return Err(Error::input(format!(
                "section expects {} values, got {}",
                self.out_dim(),
                y.len()
            )));
        }
        match &self.kind {
            MapKind::Identity(_) => Ok(y.to_vec()),
            MapKind::Stack(s) => s.inverse(y),
            MapKind::Fixed(FixedMap::Logistic { .. }) => y.iter().map(|&p| logit(p)).collect(),
            MapKind::Fixed(FixedMap::SpdExp { base }) => FixedMap::SpdLog { base: base.clone() }.apply(y),
            MapKind::Fixed(FixedMap::PoincareExp0 { dim, c }) => {
                FixedMap::PoincareLog0 { dim: *dim, c: *c }.apply(y)
            }
            MapKind::Fixed(_) => unreachable!("only the maps above have sections"),
        }
    }

    pub fn to_layers(&self) -> Vec<Layer> {
        self.kind.layers()
    }
}

fn check_curvature(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param(format!("curvature must be positive, got {c}")));
    }
    Ok(())
}

/// Componentwise logistic readout `R^n → (0,1)^n`; section `logit`.
pub fn logistic_readout(n: usize) -> ReadoutMap {
    ReadoutMap {
        kind: MapKind::Fixed(FixedMap::Logistic { dim: n }),
        surjective_onto: format!("(0,1)^{n}"),
        has_section: true,
    }
}

/// `φ_j = σ(exp(A_j) φ_{j−1} + b_j)`.
///
/// `σ` must be continuous and strictly increasing; ReLU is refused. With a
/// surjective `σ` the map is a homeomorphism and [`FeatureMap::inverse`]
/// is available.
pub fn injective_stack(params: LayerStackParams) -> Result<FeatureMap> {
    let act = params.activation;
    if act == Activation::Relu {
        return Err(Error::RejectedActivation(
            "relu is not injective: with exp-parametrized weights and a negative bias \
             every input in a whole orthant collapses to 0, so the lifted family is not dense"
                .into(),
        ));
    }
    let props = act.props();
    if !(props.strictly_increasing && props.continuous) {
        return Err(Error::RejectedActivation(format!(
            "{} is not continuous and strictly increasing",
            act.name()
        )));
    }
    if params.parametrization != Parametrization::Exp {
        return Err(Error::param(
            "injective_stack needs exp-parametrized weights so every layer stays invertible",
        ));
    }
    let invertible = props.surjective;
    let stack = Stack::build(params, invertible)?;
    Ok(FeatureMap {
        kind: MapKind::Stack(stack),
        claims_injective: true,
        invertible,
    })
}

/// A stack with no activation or weight checks; used for ablations and
/// counterexamples. Claims nothing.
pub fn unchecked_stack(params: LayerStackParams) -> Result<FeatureMap> {
    Ok(FeatureMap {
        kind: MapKind::Stack(Stack::build(params, false)?),
        claims_injective: false,
        invertible: false,
    })
}

/// `x ↦ (x, g(x))` for a network `g`, whose parameters are frozen.
pub fn skip_feature(g: Network) -> FeatureMap {
    FeatureMap {
        kind: MapKind::Fixed(FixedMap::Skip(Box::new(FixedMap::Frozen(Box::new(g.frozen()))))),
        claims_injective: true,
        invertible: false,
    }
}

/// `x ↦ (x, g(x))` for an arbitrary function `g: R^m → R^d`.
pub fn skip_feature_fn(
    name: &str,
    m: usize,
    d: usize,
    g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
) -> FeatureMap {
    FeatureMap {
        kind: MapKind::Fixed(FixedMap::Skip(Box::new(FixedMap::Custom {
            name: name.into(),
            in_dim: m,
            out_dim: d,
            f: Arc::new(g),
        }))),
        claims_injective: true,
        invertible: false,
    }
}

/// `ρ ∘ f ∘ φ` as a single network. Trainable stack parameters of `φ` and
/// `ρ` stay trainable; fixed maps become frozen layers.
pub fn lift(phi: &FeatureMap, core: &Network, rho: &ReadoutMap) -> Result<Network> {
    if phi.out_dim() != core.in_dim() {
        return Err(Error::InvalidComposition {
            boundary: "feature map -> core".into(),
            left: phi.out_dim(),
            right: core.in_dim(),
        });
    }
    if core.out_dim() != rho.in_dim() {
        return Err(Error::InvalidComposition {
            boundary: "core -> readout".into(),
            left: core.out_dim(),
            right: rho.in_dim(),
        });
    }
    let mut layers = phi.to_layers();
    layers.extend(core.layers().iter().cloned());
    layers.extend(rho.to_layers());
    Network::new(layers)
}

/// Empirical injectivity check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InjectivityReport {
    /// Pairs at input distance `≥ tol` whose images are closer than
    /// `tol · 1e-3`.
    pub violations: usize,
    /// `min ‖φ(x₁) − φ(x₂)‖ / ‖x₁ − x₂‖` over the sampled pairs.
    pub min_separation_ratio: f64,
}

/// Samples `n_pairs` input pairs at distance at least `tol` and counts
/// those `φ` maps (nearly) together.
pub fn check_injectivity<R: Rng + ?Sized>(
    phi: &FeatureMap,
    mut sampler: impl FnMut(&mut R) -> Vec<f64>,
    n_pairs: usize,
    tol: f64,
    rng: &mut R,
) -> Result<InjectivityReport> {
    if n_pairs == 0 {
        return Err(Error::param("n_pairs must be at least 1"));
    }
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..n_pairs {
        let (a, b, gap) = loop {
            let a = sampler(rng);
            let b = sampler(rng);
            let gap = distance(&a, &b);
            if gap >= tol {
                break (a, b, gap);
            }
        };
        let out_gap = distance(&phi.apply(&a)?, &phi.apply(&b)?);
        if out_gap < tol * 1e-3 {
            violations += 1;
        }
        min_ratio = min_ratio.min(out_gap / gap);
    }
    Ok(InjectivityReport {
        violations,
        min_separation_ratio: min_ratio,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d)
}

/// `X ↦ vec(X)` helper for feeding SPD points to lifted networks.
pub fn spd_features(x: &SpdPoint) -> Vec<f64> {
    spd_vectorize(x.matrix())
}

/// Inverse of [`spd_features`]; errors unless the result is SPD.
pub fn spd_from_features(v: &[f64]) -> Result<SpdPoint> {
    SpdPoint::new(spd_unvectorize(v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform(m: usize, lo: f64, hi: f64) -> impl FnMut(&mut ChaCha8Rng) -> Vec<f64> {
        move |r| (0..m).map(|_| r.random_range(lo..hi)).collect()
    }

    #[test]
    fn single_layer_identity() {
        let p = LayerStackParams::identity(3, 1, gprelu(1.0, 1.0).unwrap(), Parametrization::Exp);
        let phi = injective_stack(p).unwrap();
        assert!(phi.claims_injective() && phi.invertible());
        assert_eq!(phi.apply(&[1.0, -2.0, 0.5]).unwrap(), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn hand_evaluated_stack() {
        // exp(diag(ln 2, 0)) = diag(2, 1); σ = gprelu(0.5, 2) on (2, 1).
        let mut p = LayerStackParams::identity(2, 1, gprelu(0.5, 2.0).unwrap(), Parametrization::Exp);
        p.generators[0] = Matrix::diag(&[2f64.ln(), 0.0]);
        let phi = injective_stack(p).unwrap();
        let y = phi.apply(&[1.0, 1.0]).unwrap();
        assert!((y[0] - 4.0).abs() < 1e-14 && (y[1] - 2.0).abs() < 1e-15, "{y:?}");
    }

    #[test]
    fn relu_and_non_exp_are_rejected() {
        let p = LayerStackParams::identity(2, 1, Activation::Relu, Parametrization::Exp);
        match injective_stack(p) {
            Err(Error::RejectedActivation(msg)) => assert!(msg.contains("not dense")),
            other => panic!("{other:?}"),
        }
        let p = LayerStackParams::identity(2, 1, Activation::Tanh, Parametrization::Direct);
        assert!(injective_stack(p).is_err());
        let p = LayerStackParams::identity(2, 1, Activation::Tanh, Parametrization::Exp);
        let phi = injective_stack(p).unwrap();
        assert!(phi.claims_injective() && !phi.invertible());
    }

    #[test]
    fn stack_inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 4;
        let mut p = LayerStackParams::identity(m, 3, gprelu(0.25, 1.5).unwrap(), Parametrization::Exp);
        for j in 0..3 {
            p.generators[j] = Matrix::from_fn(m, m, |_, _| rng.random_range(-0.5..0.5));
            p.biases[j] = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        }
        let phi = injective_stack(p).unwrap();
        let mut sample = uniform(m, -3.0, 3.0);
        for _ in 0..1000 {
            let x = sample(&mut rng);
            let back = phi.inverse(&phi.apply(&x).unwrap()).unwrap();
            let err = distance(&back, &x);
            assert!(err <= 1e-8 * (1.0 + norm2(&x)), "{err}");
        }
    }

    #[test]
    fn logistic_readout_section() {
        let rho = logistic_readout(2);
        assert_eq!(rho.apply(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let y = [0.001, 0.999];
        let back = rho.apply(&rho.section(&y).unwrap()).unwrap();
        assert!(distance(&back, &y) < 1e-10);
        assert!(rho.section(&[0.0, 0.5]).is_err());
        assert!(rho.section(&[1.0, 0.5]).is_err());
    }

    #[test]
    fn skip_features() {
        let zero = skip_feature_fn("zero", 2, 1, |_| vec![0.0]);
        assert_eq!(zero.apply(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0, 0.0]);
        let ident = skip_feature_fn("id", 2, 2, |x| x.to_vec());
        assert_eq!(ident.apply(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0, 1.0, 2.0]);
        assert!(ident.claims_injective());
    }

    #[test]
    fn lift_checks_boundaries() {
        let core = Network::identity(3);
        let r = lift(&FeatureMap::identity(2), &core, &ReadoutMap::identity(3));
        match r {
            Err(Error::InvalidComposition { boundary, .. }) => assert!(boundary.contains("feature")),
            other => panic!("{other:?}"),
        }
        let r = lift(&FeatureMap::identity(3), &core, &ReadoutMap::identity(2));
        match r {
            Err(Error::InvalidComposition { boundary, .. }) => assert!(boundary.contains("readout")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lift_with_identities_is_the_core() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let core = Network::mlp(&[3, 5, 2], Activation::Tanh, &mut rng).unwrap();
        let model = lift(&FeatureMap::identity(3), &core, &ReadoutMap::identity(2)).unwrap();
        let x = [0.3, -1.0, 2.0];
        assert_eq!(model.forward(&x).unwrap(), core.forward(&x).unwrap());
    }

    #[test]
    fn injectivity_diagnostics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = check_injectivity(&FeatureMap::identity(3), uniform(3, 0.0, 1.0), 200, 1e-6, &mut rng).unwrap();
        assert_eq!(r.violations, 0);
        assert!((r.min_separation_ratio - 1.0).abs() < 1e-12);
        let constant = FeatureMap::custom("const", 3, 1, false, |_| vec![7.0]);
        let r = check_injectivity(&constant, uniform(3, 0.0, 1.0), 200, 1e-6, &mut rng).unwrap();
        assert_eq!(r.violations, 200);
        // ReLU with bias −10 sends all of [0,1]^m to 0.
        let mut p = LayerStackParams::identity(3, 2, Activation::Relu, Parametrization::Exp);
        p.biases[0] = vec![-10.0; 3];
        let relu = unchecked_stack(p).unwrap();
        let r = check_injectivity(&relu, uniform(3, 0.0, 1.0), 200, 1e-6, &mut rng).unwrap();
        assert_eq!(r.violations, 200);
        assert!(check_injectivity(&relu, uniform(3, 0.0, 1.0), 0, 1e-6, &mut rng).is_err());
    }
}
