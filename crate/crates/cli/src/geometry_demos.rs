//! Manifold-valued regression with `ρ ∘ f ∘ φ`, where `φ` and `ρ` are the
//! Riemannian log and exp maps.
//!
//! The core `f` is fitted to `(φ(x), ρ⁻¹(g(x)))` using the readout's
//! section. The assembled lifted network is then scored by its sup
//! manifold distance to `g` on held-out points.

use crate::config::Config;
use crate::manifest::{Check, RunManifest};
use crate::{CliError, RunContext};
use liftnet::data::{sup_error_on_grid, Dataset, OutputMetric};
use liftnet::manifold::{mobius_add, spd_exp, spd_log, spd_unvectorize, spd_vectorize, PoincarePoint, SpdPoint};
use liftnet::maps::{lift, Activation, FeatureMap, ReadoutMap};
use liftnet::net::{train, Loss, Network, Optimizer, TrainConfig};
use liftnet::{Matrix, SymMatrix};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const SPD_DEFAULTS: &str = "\
seed = 0
out = runs/spd-demo
enforce = true
widths = 8, 32, 128
train_points = 1000
test_points = 500
radius = 1.5
train_radius_scale = 1.1
epochs = 150
lr_schedule = 0.01, 0.001, 0.0001
batch_size = 32
core_activation = leaky(0.2)
restarts = 4
identity_tol = 0.01
basepoint_tol = 0.1
";

pub const SPD_QUICK: &str = "\
train_points = 200
test_points = 100
epochs = 5
restarts = 1
enforce = false
";

pub const HYPERBOLIC_DEFAULTS: &str = "\
seed = 0
out = runs/hyperbolic-demo
enforce = true
widths = 8, 32, 128
curvatures = 1, 0.1
radius_factor = 0.8
train_radius_scale = 1.1
train_points = 1000
test_points = 500
epochs = 150
lr_schedule = 0.01, 0.001, 0.0001
batch_size = 32
core_activation = leaky(0.2)
restarts = 4
identity_tol = 0.01
converge_tol = 0.1
";

pub const HYPERBOLIC_QUICK: &str = "\
train_points = 200
test_points = 100
epochs = 5
restarts = 1
enforce = false
";

/// Shared training settings.
#[derive(Clone, Debug)]
pub struct FitSettings {
    pub widths: Vec<usize>,
    pub train_points: usize,
    pub test_points: usize,
    pub epochs: usize,
    pub lr_schedule: Vec<f64>,
    pub batch_size: usize,
    pub activation: Activation,
    /// Independent initializations per fit; the one with the lowest
    /// training sup error is kept.
    pub restarts: usize,
    /// Training inputs are drawn from the test compact enlarged by this factor.
    pub train_radius_scale: f64,
}

impl FitSettings {
    fn from_config(c: &Config) -> Result<FitSettings, CliError> {
        let s = FitSettings {
            widths: c.list("widths")?,
            train_points: c.get("train_points")?,
            test_points: c.get("test_points")?,
            epochs: c.get("epochs")?,
            lr_schedule: c.list("lr_schedule")?,
            batch_size: c.get("batch_size")?,
            activation: Activation::parse(c.raw("core_activation"))
                .map_err(|e| CliError::Invalid(format!("core_activation: {e}")))?,
            restarts: c.get("restarts")?,
            train_radius_scale: c.get("train_radius_scale")?,
        };
        if s.widths.is_empty() || s.lr_schedule.is_empty() || s.train_points == 0 || s.test_points == 0 || s.restarts == 0 || !(s.train_radius_scale >= 1.0) {
            return Err(CliError::Invalid("widths, lr_schedule, point counts and restarts must be non-empty and train_radius_scale >= 1".into()));
        }
        Ok(s)
    }
}

/// Fits a one-hidden-layer core to `(x, y)` pairs, stepping through
/// the learning-rate schedule.
pub fn fit_core(x: Matrix, y: Matrix, width: usize, fit: &FitSettings, seed: u64) -> liftnet::Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut core = Network::mlp(&[x.cols(), width, y.cols()], fit.activation, &mut rng)?;
    let data = Dataset::new(x, y)?;
    for &lr in &fit.lr_schedule {
        let cfg = TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: lr,
            batch_size: fit.batch_size,
            epochs: fit.epochs,
            seed: rng.next_u64(),
            loss: Loss::Mse,
        };
        train(&mut core, &data, None, &cfg)?;
    }
    Ok(core)
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Matrix {
    let cols = rows.first().map_or(0, Vec::len);
    Matrix::from_vec(rows.len(), cols, rows.concat()).expect("rows have equal length")
}

/// Trains `ρ ∘ f ∘ φ` on samples of `g` and returns its sup error on `test`.
#[allow(clippy::too_many_arguments)]
fn fit_and_score(
    phi: &FeatureMap,
    rho: &ReadoutMap,
    g: &dyn Fn(&[f64]) -> liftnet::Result<Vec<f64>>,
    train_x: &[Vec<f64>],
    test_x: &[Vec<f64>],
    metric: OutputMetric,
    width: usize,
    fit: &FitSettings,
    seed: u64,
) -> liftnet::Result<f64> {
    let mut inputs = Vec::with_capacity(train_x.len());
    let mut targets = Vec::with_capacity(train_x.len());
    for x in train_x {
        inputs.push(phi.apply(x)?);
        targets.push(rho.section(&g(x)?)?);
    }
    let (x, y) = (rows_to_matrix(&inputs), rows_to_matrix(&targets));
    let mut best: Option<(f64, Network)> = None;
    for r in 0..fit.restarts as u64 {
        let core = fit_core(x.clone(), y.clone(), width, fit, seed.wrapping_add(r))?;
        let model = lift(phi, &core, rho)?;
        let train_err = sup_error_on_grid(|x| model.forward(x), g, train_x, metric)?;
        log::debug!("width {width} restart {r}: training sup error {train_err:e}");
        if best.as_ref().is_none_or(|(e, _)| train_err < *e) {
            best = Some((train_err, model));
        }
    }
    let (_, model) = best.expect("at least one restart");
    sup_error_on_grid(|x| model.forward(x), g, test_x, metric)
}

/// Sup errors per width; a failed fit is recorded as NaN.
fn width_sweep(
    label: &str,
    manifest: &mut RunManifest,
    widths: &[usize],
    mut run: impl FnMut(usize) -> liftnet::Result<f64>,
) -> Vec<f64> {
    widths
        .iter()
        .map(|&w| {
            let e = run(w).unwrap_or_else(|err| {
                manifest.failures.push(format!("{label} width {w}: {err}"));
                f64::NAN
            });
            log::info!("{label} width {w}: sup error {e:e}");
            manifest.results.insert(format!("{label}.w{w}"), e);
            e
        })
        .collect()
}

/// Number of adjacent width pairs where the error went up.
pub fn increases(errors: &[f64]) -> usize {
    errors.windows(2).filter(|w| !(w[1] <= w[0])).count()
}

fn enforce_all(checks: Vec<Check>, enforce: bool) -> Vec<Check> {
    if enforce {
        checks
    } else {
        checks.into_iter().map(Check::advisory).collect()
    }
}

// ---------------------------------------------------------------- SPD

fn random_sym<R: Rng>(rng: &mut R, d: usize, scale: f64) -> SymMatrix {
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v: f64 = StandardNormal.sample(rng);
            m[(i, j)] = scale * v;
            m[(j, i)] = scale * v;
        }
    }
    SymMatrix::new(m).expect("symmetric by construction")
}

fn random_basepoint<R: Rng>(rng: &mut R, d: usize) -> liftnet::Result<SpdPoint> {
    spd_exp(&SpdPoint::identity(d), &random_sym(rng, d, 0.4))
}

/// Uniform direction, radius `r·u^{1/n}` in tangent coordinates.
fn ball_sample<R: Rng>(rng: &mut R, n: usize, r: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rad = r * rng.random::<f64>().powf(1.0 / n as f64);
    dir.iter().map(|v| v * rad / norm).collect()
}

/// SPD points `Exp_A(V)` with `‖V‖ ≤ radius`, vectorized.
fn spd_samples<R: Rng>(rng: &mut R, a: &SpdPoint, count: usize, radius: f64) -> liftnet::Result<Vec<Vec<f64>>> {
    (0..count)
        .map(|_| {
            let v = spd_unvectorize(&ball_sample(rng, 3, radius))?;
            Ok(spd_vectorize(spd_exp(a, &v)?.matrix()))
        })
        .collect()
}

/// `X ↦ Exp_B(h(Log_A X))` on vectorized matrices.
fn spd_target(
    a: SpdPoint,
    b: SpdPoint,
    h: impl Fn(&[f64]) -> Vec<f64>,
) -> impl Fn(&[f64]) -> liftnet::Result<Vec<f64>> {
    move |x| {
        let xp = SpdPoint::new(spd_unvectorize(x)?)?;
        let v = spd_vectorize(&spd_log(&a, &xp)?);
        let y = spd_exp(&b, &spd_unvectorize(&h(&v))?)?;
        Ok(spd_vectorize(y.matrix()))
    }
}

fn random_square<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Matrix {
    Matrix::from_fn(n, n, |_, _| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
}

pub fn cmd_spd_demo(ctx: &RunContext) -> Result<RunManifest, CliError> {
    let c = &ctx.config;
    let seed: u64 = c.get("seed")?;
    let fit = FitSettings::from_config(c)?;
    let radius: f64 = c.get("radius")?;
    let identity_tol: f64 = c.get("identity_tol")?;
    let basepoint_tol: f64 = c.get("basepoint_tol")?;
    let mut manifest = RunManifest::new("spd-demo", c, seed);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_basepoint(&mut rng, 2)?;
    let b = random_basepoint(&mut rng, 2)?;
    let a2 = random_basepoint(&mut rng, 2)?;
    let b2 = random_basepoint(&mut rng, 2)?;
    let l = random_square(&mut rng, 3, 0.6);
    let m = random_square(&mut rng, 3, 1.0);
    // Training covers a neighbourhood of the test compact so that no test
    // point requires extrapolation.
    let train_x = spd_samples(&mut rng, &a, fit.train_points, radius * fit.train_radius_scale)?;
    let test_x = spd_samples(&mut rng, &a, fit.test_points, radius)?;
    manifest.split_sizes.insert("train".into(), train_x.len());
    manifest.split_sizes.insert("test".into(), test_x.len());
    let fit_seed = rng.next_u64();

    let identity = spd_target(a.clone(), a.clone(), |v| v.to_vec());
    let lm = l.clone();
    let linear = spd_target(a.clone(), b.clone(), move |v| lm.matvec(v));
    let nonlinear = spd_target(a.clone(), b.clone(), move |v| {
        let s: Vec<f64> = m.matvec(v).iter().map(|t| t.sin()).collect();
        l.matvec(v).iter().zip(&s).map(|(p, q)| p + 0.5 * q).collect()
    });

    let lifted = |pa: &SpdPoint, pb: &SpdPoint| (FeatureMap::spd_log(pa.clone()), ReadoutMap::spd_exp(pb.clone()));
    let (phi, rho) = lifted(&a, &a);
    let id_errors = width_sweep("identity", &mut manifest, &fit.widths, |w| {
        fit_and_score(&phi, &rho, &identity, &train_x, &test_x, OutputMetric::Spd, w, &fit, fit_seed)
    });
    let (phi, rho) = lifted(&a, &b);
    let nl_errors = width_sweep("nonlinear", &mut manifest, &fit.widths, |w| {
        fit_and_score(&phi, &rho, &nonlinear, &train_x, &test_x, OutputMetric::Spd, w, &fit, fit_seed)
    });
    let widest = *fit.widths.iter().max().expect("widths non-empty");
    let mut bp_errors = Vec::new();
    for (label, pa, pb) in [("basepoint_ab", &a, &b), ("basepoint_a2b2", &a2, &b2)] {
        let (phi, rho) = lifted(pa, pb);
        bp_errors.extend(width_sweep(label, &mut manifest, &[widest], |w| {
            fit_and_score(&phi, &rho, &linear, &train_x, &test_x, OutputMetric::Spd, w, &fit, fit_seed)
        }));
    }

    let checks = vec![
        Check::at_most(format!("spd identity sup error, width {}", fit.widths[0]), id_errors[0], identity_tol),
        Check::at_most("spd nonlinear: width steps where sup error increased", increases(&nl_errors) as f64, 0.0),
        Check::at_most("spd linear target, basepoints (A, B)", bp_errors[0], basepoint_tol),
        Check::at_most("spd linear target, basepoints (A', B')", bp_errors[1], basepoint_tol),
    ];
    manifest.checks = enforce_all(checks, c.bool("enforce")?);
    Ok(manifest)
}

// ---------------------------------------------------------- hyperbolic

/// Uniform points of the Euclidean disk of radius `r`.
fn disk_samples<R: Rng>(rng: &mut R, count: usize, r: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| ball_sample(rng, 2, r)).collect()
}

/// `x ↦ a ⊕_c R_θ x`, an isometry of the ball that is not linear in `Log₀`
/// coordinates.
fn hyperbolic_target(c: f64) -> impl Fn(&[f64]) -> liftnet::Result<Vec<f64>> {
    let s = c.sqrt();
    let a = PoincarePoint::new(vec![0.3 / s, -0.2 / s], c).expect("inside the ball");
    let (sin, cos) = 0.7f64.sin_cos();
    move |x| {
        let r = PoincarePoint::new(vec![cos * x[0] - sin * x[1], sin * x[0] + cos * x[1]], c)?;
        Ok(mobius_add(&a, &r)?.into_coords())
    }
}

pub fn cmd_hyperbolic_demo(ctx: &RunContext) -> Result<RunManifest, CliError> {
    let cfg = &ctx.config;
    let seed: u64 = cfg.get("seed")?;
    let fit = FitSettings::from_config(cfg)?;
    let curvatures: Vec<f64> = cfg.list("curvatures")?;
    let radius_factor: f64 = cfg.get("radius_factor")?;
    let identity_tol: f64 = cfg.get("identity_tol")?;
    let converge_tol: f64 = cfg.get("converge_tol")?;
    if !(radius_factor > 0.0 && radius_factor * fit.train_radius_scale < 1.0) {
        return Err(CliError::Invalid("radius_factor * train_radius_scale must lie in (0, 1)".into()));
    }
    let mut manifest = RunManifest::new("hyperbolic-demo", cfg, seed);
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &c in &curvatures {
        let r = radius_factor / c.sqrt();
        let train_x = disk_samples(&mut rng, fit.train_points, r * fit.train_radius_scale);
        let test_x = disk_samples(&mut rng, fit.test_points, r);
        let fit_seed = rng.next_u64();
        let phi = FeatureMap::poincare_log0(2, c)?;
        let rho = ReadoutMap::poincare_exp0(2, c)?;
        let metric = OutputMetric::Poincare { c };
        let identity = |x: &[f64]| Ok(x.to_vec());
        let target = hyperbolic_target(c);
        let id_errors = width_sweep(&format!("c{c}.identity"), &mut manifest, &fit.widths, |w| {
            fit_and_score(&phi, &rho, &identity, &train_x, &test_x, metric, w, &fit, fit_seed)
        });
        let errors = width_sweep(&format!("c{c}.isometry"), &mut manifest, &fit.widths, |w| {
            fit_and_score(&phi, &rho, &target, &train_x, &test_x, metric, w, &fit, fit_seed)
        });
        let best = errors.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check::at_most(format!("c={c}: identity sup error, width {}", fit.widths[0]), id_errors[0], identity_tol));
        checks.push(Check::at_most(format!("c={c}: isometry target, best sup error"), best, converge_tol));
        checks.push(Check::at_most(format!("c={c}: width steps where sup error increased"), increases(&errors) as f64, 0.0));
    }
    manifest.split_sizes.insert("train".into(), fit.train_points);
    manifest.split_sizes.insert("test".into(), fit.test_points);
    manifest.checks = enforce_all(checks, cfg.bool("enforce")?);
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increases_counts_upward_steps() {
        assert_eq!(increases(&[3.0, 2.0, 2.0]), 0);
        assert_eq!(increases(&[1.0, 2.0, 0.5]), 1);
        assert_eq!(increases(&[1.0, f64::NAN]), 1);
    }

    #[test]
    fn isometry_target_preserves_distance() {
        let c = 0.1;
        let g = hyperbolic_target(c);
        let (x, y) = (vec![0.5, 1.0], vec![-1.2, 0.3]);
        let p = |v: Vec<f64>| PoincarePoint::new(v, c).unwrap();
        let before = liftnet::manifold::poincare_dist(&p(x.clone()), &p(y.clone())).unwrap();
        let after = liftnet::manifold::poincare_dist(&p(g(&x).unwrap()), &p(g(&y).unwrap())).unwrap();
        assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn spd_samples_lie_within_the_tangent_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_basepoint(&mut rng, 2).unwrap();
        for x in spd_samples(&mut rng, &a, 50, 1.5).unwrap() {
            let p = SpdPoint::new(spd_unvectorize(&x).unwrap()).unwrap();
            assert!(spd_log(&a, &p).unwrap().frobenius_norm() <= 1.5 + 1e-9);
        }
    }
}
