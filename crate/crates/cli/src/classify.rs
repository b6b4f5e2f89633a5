//! Multi-label classification of two overlapping open disks.
//!
//! A logistic-readout network is fitted to a continuous soft classifier
//! whose `α`-superlevel sets are the disks. Hard labels come from
//! thresholding its output.

use crate::manifest::{Check, RunManifest};
use crate::{CliError, RunContext};
use liftnet::data::Dataset;
use liftnet::maps::{hard_threshold, lift, logit, logistic_readout, Activation, FeatureMap, Region, SoftClassifier};
use liftnet::net::{train, Loss, Network, Optimizer, TrainConfig};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULTS: &str = "\
seed = 0
out = runs/classify-demo
enforce = true
alpha = 0.5
soft_margin = 0.25
band = 0.05
grid = 100
half_width = 2.0
train_points = 4000
hidden = 32
epochs = 150
lr_schedule = 0.01, 0.001
batch_size = 64
agreement_min = 0.95
soft_tol = 0.2
";

pub const QUICK: &str = "\
train_points = 500
epochs = 5
enforce = false
";

/// The two label sets.
pub fn disks() -> Vec<Region> {
    vec![
        Region::Disk { center: vec![-0.4, 0.0], radius: 1.0 },
        Region::Disk { center: vec![0.5, 0.0], radius: 0.8 },
    ]
}

/// `n × n` points evenly spaced over `[−h, h]²`, endpoints included.
pub fn square_grid(n: usize, h: f64) -> Vec<Vec<f64>> {
    let t = |i: usize| if n == 1 { 0.0 } else { -h + 2.0 * h * i as f64 / (n - 1) as f64 };
    (0..n).flat_map(|i| (0..n).map(move |j| vec![t(i), t(j)])).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyScores {
    /// Off-band fraction of grid points where thresholded outputs equal `ĥ`.
    pub agreement: f64,
    /// Off-band sup of `|model − ŝ|`.
    pub soft_sup_error: f64,
    /// Grid points (all of them) where `threshold_α ∘ ŝ ≠ ĥ`.
    pub ideal_decomposition_mismatches: usize,
    /// Grid points where thresholding the logistic output disagrees with
    /// thresholding the core output at `logit(α)`.
    pub model_decomposition_mismatches: usize,
    pub off_band_points: usize,
}

pub fn score(core: &Network, model: &Network, target: &SoftClassifier, grid: &[Vec<f64>], band: f64) -> liftnet::Result<ClassifyScores> {
    let alpha = target.alpha;
    let cut = logit(alpha)?;
    let mut agree = 0usize;
    let mut off_band = 0usize;
    let mut sup = 0.0f64;
    let mut ideal_bad = 0usize;
    let mut model_bad = 0usize;
    for x in grid {
        let ideal = target.ideal(x);
        let soft_target = target.soft(x);
        if hard_threshold(alpha, &soft_target)? != ideal {
            ideal_bad += 1;
        }
        let soft = model.forward(x)?;
        let hard = hard_threshold(alpha, &soft)?;
        let via_core: Vec<u8> = core.forward(x)?.iter().map(|&z| (z > cut) as u8).collect();
        if hard != via_core {
            model_bad += 1;
        }
        if target.near_boundary(x, band) {
            continue;
        }
        off_band += 1;
        agree += (hard == ideal) as usize;
        for (p, q) in soft.iter().zip(&soft_target) {
            sup = sup.max((p - q).abs());
        }
    }
    Ok(ClassifyScores {
        agreement: agree as f64 / off_band.max(1) as f64,
        soft_sup_error: sup,
        ideal_decomposition_mismatches: ideal_bad,
        model_decomposition_mismatches: model_bad,
        off_band_points: off_band,
    })
}

pub fn cmd_classify_demo(ctx: &RunContext) -> Result<RunManifest, CliError> {
    let c = &ctx.config;
    let seed: u64 = c.get("seed")?;
    let alpha: f64 = c.get("alpha")?;
    let band: f64 = c.get("band")?;
    let h: f64 = c.get("half_width")?;
    let n_grid: usize = c.get("grid")?;
    let n_train: usize = c.get("train_points")?;
    let hidden: usize = c.get("hidden")?;
    let lrs: Vec<f64> = c.list("lr_schedule")?;
    let target = SoftClassifier::new(disks(), alpha, c.get("soft_margin")?)?;
    let mut manifest = RunManifest::new("classify-demo", c, seed);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..n_train)
        .map(|_| vec![rng.random_range(-h..=h), rng.random_range(-h..=h)])
        .collect();
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| target.soft(x)).collect();
    let data = Dataset::from_rows(&xs, &ys)?;
    let core = Network::mlp(&[2, hidden, hidden, 2], Activation::Tanh, &mut rng)?;
    let mut model = lift(&FeatureMap::identity(2), &core, &logistic_readout(2))?;
    for lr in lrs {
        let cfg = TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: lr,
            batch_size: c.get("batch_size")?,
            epochs: c.get("epochs")?,
            seed: rng.next_u64(),
            loss: Loss::Mse,
        };
        train(&mut model, &data, None, &cfg)?;
    }
    // The readout is the last layer; everything before it is the core.
    let layers = model.layers();
    let core = Network::new(layers[..layers.len() - 1].to_vec())?;

    let grid = square_grid(n_grid, h);
    let s = score(&core, &model, &target, &grid, band)?;
    manifest.split_sizes.insert("train".into(), n_train);
    manifest.split_sizes.insert("grid".into(), grid.len());
    manifest.split_sizes.insert("grid_off_band".into(), s.off_band_points);
    manifest.results.insert("agreement".into(), s.agreement);
    manifest.results.insert("soft_sup_error".into(), s.soft_sup_error);

    let mut trained = vec![
        Check::at_least("hard agreement with ideal classifier off the band", s.agreement, c.get("agreement_min")?),
        Check::at_most("soft sup error off the band", s.soft_sup_error, c.get("soft_tol")?),
    ];
    if !c.bool("enforce")? {
        trained = trained.into_iter().map(Check::advisory).collect();
    }
    manifest.checks = trained;
    manifest.checks.push(Check::at_most(
        "ideal: threshold(soft) != hard, all grid points",
        s.ideal_decomposition_mismatches as f64,
        0.0,
    ));
    manifest.checks.push(Check::at_most(
        "model: threshold(logistic(z)) != [z > logit(alpha)], all grid points",
        s.model_decomposition_mismatches as f64,
        0.0,
    ));
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_corners() {
        let g = square_grid(3, 2.0);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![-2.0, -2.0]);
        assert_eq!(g[8], vec![2.0, 2.0]);
        assert_eq!(g[4], vec![0.0, 0.0]);
    }

    #[test]
    fn whole_plane_label_is_always_on() {
        let s = SoftClassifier::new(vec![Region::Everywhere], 0.5, 0.1).unwrap();
        for x in square_grid(10, 2.0) {
            assert_eq!(s.ideal(&x), vec![1]);
            assert_eq!(hard_threshold(0.5, &s.soft(&x)).unwrap(), vec![1]);
        }
    }

    #[test]
    fn disks_overlap() {
        let s = SoftClassifier::new(disks(), 0.5, 0.25).unwrap();
        assert_eq!(s.ideal(&[0.0, 0.0]), vec![1, 1]);
        assert_eq!(s.ideal(&[-1.2, 0.0]), vec![1, 0]);
        assert_eq!(s.ideal(&[1.2, 0.0]), vec![0, 1]);
        assert_eq!(s.ideal(&[0.0, 1.5]), vec![0, 0]);
    }

    #[test]
    fn exact_model_scores_perfectly() {
        // A core that outputs logit(ŝ) makes the lifted model equal ŝ.
        let target = SoftClassifier::new(disks(), 0.5, 0.25).unwrap();
        let t2 = target.clone();
        let phi = FeatureMap::custom("logit_soft", 2, 2, false, move |x| {
            t2.soft(x).iter().map(|&p| logit(p.clamp(1e-12, 1.0 - 1e-12)).unwrap()).collect()
        });
        let core = Network::new(phi.to_layers()).unwrap();
        let model = lift(&FeatureMap::identity(2), &core, &logistic_readout(2)).unwrap();
        let s = score(&core, &model, &target, &square_grid(40, 2.0), 0.05).unwrap();
        assert_eq!(s.agreement, 1.0);
        assert!(s.soft_sup_error < 1e-9);
        assert_eq!(s.ideal_decomposition_mismatches, 0);
        assert_eq!(s.model_decomposition_mismatches, 0);
    }
}
