//! Frozen random first layers.
//!
//! Each layer is `x ↦ σ(A x + b)` with i.i.d. standardized entries in `A`
//! and `b`. A layer is accepted only if `A` has full column rank, certified
//! by `λ*(A) / σ_max(A) > RANK_TOL`; otherwise it is resampled.

use crate::error::{Error, Result};
use crate::linalg::{singular_value_range, Matrix};
use crate::maps::{Activation, FeatureMap};
use crate::net::{Affine, Layer, Network, Weight};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Relative smallest-singular-value threshold for accepting a layer.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryDist {
    /// `±1` with probability ½ each.
    BernoulliPm1,
    StandardGaussian,
}

impl EntryDist {
    pub fn parse(s: &str) -> Result<EntryDist> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bernoulli" | "bernoulli_pm1" => Ok(EntryDist::BernoulliPm1),
            "gaussian" | "standard_gaussian" => Ok(EntryDist::StandardGaussian),
            other => Err(Error::param(format!("unknown entry distribution '{other}'"))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EntryDist::BernoulliPm1 => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDist::StandardGaussian => StandardNormal.sample(rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomAffineSpec {
    pub d_in: usize,
    pub d_out: usize,
    pub dist: EntryDist,
}

impl RandomAffineSpec {
    pub fn new(d_in: usize, d_out: usize, dist: EntryDist) -> Result<Self> {
        if d_in == 0 || d_in > d_out {
            return Err(Error::param(format!(
                "random layer needs 1 <= d_in <= d_out, got {d_in} -> {d_out}"
            )));
        }
        Ok(RandomAffineSpec { d_in, d_out, dist })
    }
}

/// Draws `A` (`d_out × d_in`, row-major order of draws) and then `b`.
pub fn sample_random_affine<R: Rng + ?Sized>(spec: &RandomAffineSpec, rng: &mut R) -> (Matrix, Vec<f64>) {
    let a = Matrix::from_fn(spec.d_out, spec.d_in, |_, _| spec.dist.sample(rng));
    let b = (0..spec.d_out).map(|_| spec.dist.sample(rng)).collect();
    (a, b)
}

/// `λ*(A) / σ_max(A)`, zero for rank-deficient `A`.
pub fn relative_rank_margin(a: &Matrix) -> Result<f64> {
    let (lo, hi) = singular_value_range(a)?;
    Ok(if hi > 0.0 { lo / hi } else { 0.0 })
}

/// A realized stack of frozen random layers.
#[derive(Clone, Debug)]
pub struct RandomStack {
    pub activation: Activation,
    pub specs: Vec<RandomAffineSpec>,
    pub layers: Vec<(Matrix, Vec<f64>)>,
    /// Resamples needed per layer before acceptance.
    pub retries: Vec<usize>,
}

impl RandomStack {
    /// Builds `k = dims.len() − 1` layers drawing from `dist`.
    pub fn build<R: Rng + ?Sized>(
        dims: &[usize],
        activation: Activation,
        dist: EntryDist,
        rng: &mut R,
        max_retries: usize,
    ) -> Result<RandomStack> {
        RandomStack::build_with(dims, activation, dist, max_retries, |spec| {
            sample_random_affine(spec, rng)
        })
    }

    /// As [`RandomStack::build`], with layers drawn by `draw`.
    pub fn build_with(
        dims: &[usize],
        activation: Activation,
        dist: EntryDist,
        max_retries: usize,
        mut draw: impl FnMut(&RandomAffineSpec) -> (Matrix, Vec<f64>),
    ) -> Result<RandomStack> {
        let props = activation.props();
        if !(props.strictly_increasing && props.continuous) {
            return Err(Error::RejectedActivation(format!(
                "{} is not continuous and strictly increasing",
                activation.name()
            )));
        }
        if dims.len() < 2 {
            return Err(Error::param("a random stack needs at least one layer"));
        }
        let specs = dims
            .windows(2)
            .map(|w| RandomAffineSpec::new(w[0], w[1], dist))
            .collect::<Result<Vec<_>>>()?;
        let mut layers = Vec::with_capacity(specs.len());
        let mut retries = Vec::with_capacity(specs.len());
        for spec in &specs {
            let mut attempt = 0;
            loop {
                let (a, b) = draw(spec);
                if a.rows() != spec.d_out || a.cols() != spec.d_in || b.len() != spec.d_out {
                    return Err(Error::input("sampler returned a layer of the wrong shape"));
                }
                let margin = relative_rank_margin(&a)?;
                if margin > RANK_TOL {
                    if attempt > 0 {
                        log::info!("random layer {}x{} accepted after {attempt} resamples", spec.d_out, spec.d_in);
                    }
                    layers.push((a, b));
                    retries.push(attempt);
                    break;
                }
                if attempt == max_retries {
                    return Err(Error::RankFailure {
                        lambda_star: margin,
                        retries: max_retries,
                    });
                }
                attempt += 1;
            }
        }
        Ok(RandomStack {
            activation,
            specs,
            layers,
            retries,
        })
    }

    pub fn k(&self) -> usize {
        self.layers.len()
    }

    /// The stack as a frozen network `σ(A_k ⋯ σ(A_1 x + b_1) ⋯ + b_k)`.
    pub fn network(&self) -> Network {
        let layers = self
            .layers
            .iter()
            .map(|(a, b)| {
                Layer::Affine(Affine {
                    weight: Weight::Direct(a.clone()),
                    bias: b.clone(),
                    activation: Some(self.activation),
                    trainable: false,
                })
            })
            .collect();
        Network::new(layers).expect("dims chain by construction")
    }

    pub fn feature_map(&self) -> FeatureMap {
        FeatureMap::fixed(crate::net::FixedMap::Frozen(Box::new(self.network())), true)
    }
}

/// Builds a frozen random stack and returns it as an injective feature map.
pub fn build_random_feature<R: Rng + ?Sized>(
    dims: &[usize],
    activation: Activation,
    dist: EntryDist,
    rng: &mut R,
    max_retries: usize,
) -> Result<FeatureMap> {
    Ok(RandomStack::build(dims, activation, dist, rng, max_retries)?.feature_map())
}

/// Fraction of `trials` random `d × d` matrices accepted by the rank test.
pub fn rank_acceptance_rate<R: Rng + ?Sized>(
    dist: EntryDist,
    d: usize,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if trials == 0 || d == 0 {
        return Err(Error::param("trials and d must be at least 1"));
    }
    let spec = RandomAffineSpec::new(d, d, dist)?;
    let mut ok = 0usize;
    for _ in 0..trials {
        let (a, _) = sample_random_affine(&spec, rng);
        if relative_rank_margin(&a)? > RANK_TOL {
            ok += 1;
        }
    }
    Ok(ok as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::leaky_relu;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bernoulli_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = RandomAffineSpec::new(4, 6, EntryDist::BernoulliPm1).unwrap();
        let (a, b) = sample_random_affine(&spec, &mut rng);
        assert!(a.as_slice().iter().chain(&b).all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn spec_requires_widening() {
        assert!(RandomAffineSpec::new(3, 2, EntryDist::StandardGaussian).is_err());
    }

    #[test]
    fn hadamard_accepted_and_all_ones_resampled() {
        let h = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).unwrap();
        let ones = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let mut calls = 0;
        let stack = RandomStack::build_with(&[2, 2], leaky_relu(0.25).unwrap(), EntryDist::BernoulliPm1, 3, |_| {
            calls += 1;
            if calls == 1 {
                (ones.clone(), vec![1.0, -1.0])
            } else {
                (h.clone(), vec![1.0, -1.0])
            }
        })
        .unwrap();
        assert_eq!(stack.retries, vec![1]);
        assert_eq!(stack.layers[0].0, h);
        let r = RandomStack::build_with(&[2, 2], leaky_relu(0.25).unwrap(), EntryDist::BernoulliPm1, 3, |_| {
            (ones.clone(), vec![0.0, 0.0])
        });
        assert!(matches!(r, Err(Error::RankFailure { retries: 3, .. })));
    }

    #[test]
    fn relu_is_refused() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = build_random_feature(&[2, 2], Activation::Relu, EntryDist::BernoulliPm1, &mut rng, 5);
        assert!(matches!(r, Err(Error::RejectedActivation(_))));
    }

    #[test]
    fn scalar_bernoulli_always_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(rank_acceptance_rate(EntryDist::BernoulliPm1, 1, 100, &mut rng).unwrap(), 1.0);
    }
}
