//! Housing-price regression with four input/output map choices around the
//! same shallow core: none (vanilla), monotone exp-parametrized stacks
//! (good), ReLU stacks with direct weights (bad), and a frozen random skip
//! feature (rand).

use crate::config::Config;
use crate::manifest::{Check, MetricRecord, RunManifest};
use crate::{CliError, RunContext};
use liftnet::data::{load_california_csv, metrics, metrics_line, preprocess_split, Dataset, Metrics};
use liftnet::maps::{
    gprelu, injective_stack, leaky_relu, lift, skip_feature, unchecked_stack, Activation, FeatureMap,
    LayerStackParams, Parametrization, ReadoutMap,
};
use liftnet::net::checkpoint::Checkpoint;
use liftnet::net::{train, Loss, Network, Optimizer, TrainConfig};
use liftnet::randomnet::{EntryDist, RandomStack};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub const DEFAULTS: &str = "\
seed = 0
repeats = 3
data = data/california_housing.csv
out = runs/table1
enforce = true
rows = 0
test_fraction = 0.3
valid_fraction = 0.1
variants = vanilla, good, bad, rand
hidden = 100
epochs = 200
batch_size = 256
learning_rate = 0.001
optimizer = adam
loss = mse
good.depth = 2
good.alpha = 0.25
good.beta = 1.5
readout.depth = 1
bad.depth = 2
rand.k = 2
rand.dist = bernoulli
rand.alpha = 0.25
rand.max_retries = 100
";

pub const QUICK: &str = "\
repeats = 1
rows = 2000
epochs = 5
enforce = false
";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    Vanilla,
    Good,
    Bad,
    Rand,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Vanilla, Variant::Good, Variant::Bad, Variant::Rand];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::Good => "good",
            Variant::Bad => "bad",
            Variant::Rand => "rand",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }

    /// RNG stream of this variant; fixed so subsets of variants reproduce.
    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

/// Resolved settings.
#[derive(Clone, Debug)]
pub struct Settings {
    pub seed: u64,
    pub repeats: usize,
    pub data: PathBuf,
    pub rows: usize,
    pub test_fraction: f64,
    pub valid_fraction: f64,
    pub variants: Vec<Variant>,
    pub hidden: usize,
    pub train: TrainConfig,
    pub good_depth: usize,
    pub good_act: Activation,
    pub readout_depth: usize,
    pub bad_depth: usize,
    pub rand_k: usize,
    pub rand_dist: EntryDist,
    pub rand_act: Activation,
    pub rand_max_retries: usize,
    pub enforce: bool,
}

fn bad_value(key: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{key}: {e}"))
}

impl Settings {
    pub fn from_config(c: &Config) -> Result<Settings, CliError> {
        let variants = c
            .list::<String>("variants")?
            .iter()
            .map(|s| Variant::parse(s).ok_or_else(|| bad_value("variants", format!("unknown variant '{s}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        let optimizer = match c.raw("optimizer") {
            "adam" => Optimizer::Adam,
            "sgd" => Optimizer::Sgd,
            other => return Err(bad_value("optimizer", format!("unknown optimizer '{other}'"))),
        };
        let train = TrainConfig {
            optimizer,
            learning_rate: c.get("learning_rate")?,
            batch_size: c.get("batch_size")?,
            epochs: c.get("epochs")?,
            seed: 0,
            loss: Loss::parse(c.raw("loss")).map_err(|e| bad_value("loss", e))?,
        };
        train.validate().map_err(|e| bad_value("training", e))?;
        let s = Settings {
            seed: c.get("seed")?,
            repeats: c.get("repeats")?,
            data: PathBuf::from(c.raw("data")),
            rows: c.get("rows")?,
            test_fraction: c.get("test_fraction")?,
            valid_fraction: c.get("valid_fraction")?,
            variants,
            hidden: c.get("hidden")?,
            train,
            good_depth: c.get("good.depth")?,
            good_act: gprelu(c.get("good.alpha")?, c.get("good.beta")?).map_err(|e| bad_value("good", e))?,
            readout_depth: c.get("readout.depth")?,
            bad_depth: c.get("bad.depth")?,
            rand_k: c.get("rand.k")?,
            rand_dist: EntryDist::parse(c.raw("rand.dist")).map_err(|e| bad_value("rand.dist", e))?,
            rand_act: leaky_relu(c.get("rand.alpha")?).map_err(|e| bad_value("rand.alpha", e))?,
            rand_max_retries: c.get("rand.max_retries")?,
            enforce: c.bool("enforce")?,
        };
        if s.repeats == 0 || s.variants.is_empty() || s.hidden == 0 {
            return Err(bad_value("table1", "repeats, variants and hidden must be non-empty"));
        }
        if s.good_depth == 0 || s.bad_depth == 0 || s.readout_depth == 0 || s.rand_k == 0 {
            return Err(bad_value("table1", "stack depths must be at least 1"));
        }
        Ok(s)
    }
}

/// Builds the untrained model of `variant` for `m` input features.
pub fn build_model(variant: Variant, s: &Settings, m: usize, rng: &mut ChaCha8Rng) -> liftnet::Result<Network> {
    let core_in = if variant == Variant::Rand { 2 * m } else { m };
    let core = Network::mlp(&[core_in, s.hidden, 1], Activation::Relu, rng)?;
    let (phi, rho) = match variant {
        Variant::Vanilla => (FeatureMap::identity(m), ReadoutMap::identity(1)),
        Variant::Good => (
            injective_stack(LayerStackParams::identity(m, s.good_depth, s.good_act, Parametrization::Exp))?,
            good_readout(s)?,
        ),
        // Direct weights start Glorot-uniform, as for any direct layer.
        Variant::Bad => (
            unchecked_stack(LayerStackParams::glorot(m, s.bad_depth, Activation::Relu, rng))?,
            ReadoutMap::unchecked_stack(LayerStackParams::glorot(1, s.readout_depth, Activation::Relu, rng))?,
        ),
        Variant::Rand => {
            let dims = vec![m; s.rand_k + 1];
            let g = RandomStack::build(&dims, s.rand_act, s.rand_dist, rng, s.rand_max_retries)?;
            (skip_feature(g.network()), good_readout(s)?)
        }
    };
    lift(&phi, &core, &rho)
}

fn good_readout(s: &Settings) -> liftnet::Result<ReadoutMap> {
    ReadoutMap::stack(LayerStackParams::identity(1, s.readout_depth, s.good_act, Parametrization::Exp))
}

#[derive(Clone, Debug)]
pub struct VariantOutcome {
    pub variant: Variant,
    pub seed: u64,
    /// Train and test metrics, or the reason the variant failed.
    pub result: Result<(Metrics, Metrics), String>,
    pub model: Option<Network>,
}

#[derive(Clone, Debug)]
pub struct Table1Report {
    pub rows: usize,
    pub split: (usize, usize, usize),
    pub outcomes: Vec<VariantOutcome>,
    pub checks: Vec<Check>,
}

impl Table1Report {
    /// Median test MAE of `v` over the seeds where it succeeded.
    pub fn median_test_mae(&self, v: Variant) -> Option<f64> {
        median(self.outcomes.iter().filter(|o| o.variant == v).filter_map(|o| o.result.as_ref().ok().map(|r| r.1.mae)).collect())
    }

    pub fn median_metrics(&self, v: Variant, test: bool) -> Option<Metrics> {
        let ms: Vec<&Metrics> = self
            .outcomes
            .iter()
            .filter(|o| o.variant == v)
            .filter_map(|o| o.result.as_ref().ok().map(|r| if test { &r.1 } else { &r.0 }))
            .collect();
        Some(Metrics {
            mae: median(ms.iter().map(|m| m.mae).collect())?,
            mse: median(ms.iter().map(|m| m.mse).collect())?,
            mape: median(ms.iter().map(|m| m.mape).collect())?,
        })
    }
}

pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn predictions(model: &Network, d: &Dataset) -> liftnet::Result<Vec<f64>> {
    Ok(model.forward_batch(&d.features)?.as_slice().to_vec())
}

fn run_variant(variant: Variant, s: &Settings, seed: u64, fit: &Dataset, valid: &Dataset, train_set: &Dataset, test: &Dataset) -> VariantOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(variant.stream());
    let mut attempt = || -> liftnet::Result<(Metrics, Metrics, Network)> {
        let mut model = build_model(variant, s, fit.features.cols(), &mut rng)?;
        let cfg = TrainConfig {
            seed: rng.next_u64(),
            ..s.train.clone()
        };
        let report = train(&mut model, fit, Some(valid), &cfg)?;
        log::info!("{} seed {seed}: best epoch {} valid loss {:.5}", variant.name(), report.best_epoch, report.best_loss);
        let tr = metrics(&train_set.target_column(0), &predictions(&model, train_set)?)?;
        let te = metrics(&test.target_column(0), &predictions(&model, test)?)?;
        Ok((tr, te, model))
    };
    match attempt() {
        Ok((tr, te, model)) => VariantOutcome {
            variant,
            seed,
            result: Ok((tr, te)),
            model: Some(model),
        },
        Err(e) => {
            log::warn!("{} seed {seed} failed: {e}", variant.name());
            VariantOutcome {
                variant,
                seed,
                result: Err(e.to_string()),
                model: None,
            }
        }
    }
}

/// Trains every variant on every seed's split. Variants of one seed train
/// in parallel; each owns its RNG stream, so results do not depend on
/// scheduling.
pub fn run_on(data: &Dataset, s: &Settings) -> Result<Table1Report, CliError> {
    let mut outcomes = Vec::new();
    let mut split = (0, 0, 0);
    for r in 0..s.repeats {
        let seed = s.seed.wrapping_add(r as u64);
        let (train_set, test) = preprocess_split(data, s.test_fraction, seed)?;
        let (fit, valid) = train_set.shuffle_split(s.valid_fraction, seed ^ 0x5eed)?;
        split = (fit.len(), valid.len(), test.len());
        let results: Vec<VariantOutcome> = std::thread::scope(|scope| {
            let handles: Vec<_> = s
                .variants
                .iter()
                .map(|&v| {
                    let (fit, valid, train_set, test) = (&fit, &valid, &train_set, &test);
                    scope.spawn(move || run_variant(v, s, seed, fit, valid, train_set, test))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("variant thread panicked")).collect()
        });
        outcomes.extend(results);
    }
    let mut report = Table1Report {
        rows: data.len(),
        split,
        outcomes,
        checks: Vec::new(),
    };
    report.checks = pattern_checks(&report, s.enforce);
    Ok(report)
}

fn pattern_checks(r: &Table1Report, enforce: bool) -> Vec<Check> {
    let failed = r.outcomes.iter().filter(|o| o.result.is_err()).count();
    let finite = r.outcomes.iter().all(|o| match &o.result {
        Ok((a, b)) => [a.mae, a.mse, a.mape, b.mae, b.mse, b.mape].iter().all(|v| v.is_finite()),
        Err(_) => true,
    });
    let mut checks = vec![
        Check::holds("all variants trained with finite metrics", failed == 0 && finite, failed as f64, "0 failures"),
    ];
    let med = |v| r.median_test_mae(v).unwrap_or(f64::NAN);
    let (van, good, bad, rnd) = (med(Variant::Vanilla), med(Variant::Good), med(Variant::Bad), med(Variant::Rand));
    let mut pattern = vec![
        Check::holds("vanilla median test MAE in [0.28, 0.40]", (0.28..=0.40).contains(&van), van, "in [0.28, 0.40]"),
        Check::at_least("bad / vanilla median test MAE", bad / van, 2.0),
        Check::at_most("|good - vanilla| median test MAE", (good - van).abs(), 0.05),
        Check::at_most("good - vanilla median test MAE", good - van, 0.02),
        Check::at_most("|rand - vanilla| median test MAE", (rnd - van).abs(), 0.05),
    ];
    if !enforce {
        pattern = pattern.into_iter().map(Check::advisory).collect();
    }
    checks.extend(pattern);
    checks
}

/// Loads the data, runs, and writes metrics, checkpoints and the manifest.
pub fn cmd_table1(ctx: &RunContext) -> Result<RunManifest, CliError> {
    let s = Settings::from_config(&ctx.config)?;
    let mut data = load_california_csv(&s.data).map_err(|e| CliError::Invalid(format!("data {}: {e}", s.data.display())))?;
    if s.rows > 0 && s.rows < data.len() {
        let idx: Vec<usize> = (0..s.rows).collect();
        data = data.subset(&idx);
    }
    let report = run_on(&data, &s)?;
    let mut manifest = RunManifest::new("table1", &ctx.config, s.seed);
    manifest.dataset_rows = Some(report.rows);
    manifest.split_sizes.insert("fit".into(), report.split.0);
    manifest.split_sizes.insert("valid".into(), report.split.1);
    manifest.split_sizes.insert("test".into(), report.split.2);

    std::fs::create_dir_all(ctx.out.join("checkpoints"))?;
    let mut lines = String::from("model,split,mae,mse,mape\n");
    for o in &report.outcomes {
        match &o.result {
            Ok((tr, te)) => {
                for (split, m) in [("train", tr), ("test", te)] {
                    manifest.metrics.push(MetricRecord {
                        model: o.variant.name().into(),
                        split: split.into(),
                        seed: o.seed,
                        mae: m.mae,
                        mse: m.mse,
                        mape: m.mape,
                    });
                }
            }
            Err(e) => manifest.failures.push(format!("{} seed {}: {e}", o.variant.name(), o.seed)),
        }
        if let Some(model) = &o.model {
            let rel = format!("checkpoints/{}-seed{}.lnet", o.variant.name(), o.seed);
            Checkpoint {
                seed: o.seed,
                config_hash: ctx.config.hash_u64(),
                network: model.clone(),
            }
            .save(&ctx.out.join(&rel))?;
            manifest.checkpoints.push(rel);
        }
    }
    println!("{:<8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}", "model", "train MAE", "train MSE", "train MAPE", "test MAE", "test MSE", "test MAPE");
    for &v in &s.variants {
        let (Some(tr), Some(te)) = (report.median_metrics(v, false), report.median_metrics(v, true)) else {
            println!("{:<8} failed", v.name());
            continue;
        };
        lines.push_str(&metrics_line(v.name(), "train", &tr));
        lines.push('\n');
        lines.push_str(&metrics_line(v.name(), "test", &te));
        lines.push('\n');
        println!(
            "{:<8} {:>9.3} {:>9.3} {:>9.2} {:>9.3} {:>9.3} {:>9.2}",
            v.name(), tr.mae, tr.mse, tr.mape, te.mae, te.mse, te.mape
        );
    }
    crate::manifest::write_atomic(&ctx.out.join("metrics.csv"), lines.as_bytes())?;
    manifest.checks = report.checks;
    Ok(manifest)
}
