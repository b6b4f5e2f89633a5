//! The invariant battery: every module's stated properties, checked on
//! seeded random cases and reported as worst-case residuals.
//!
//! Gradient checks compare backpropagation against central differences of
//! the forward pass only, so the oracle shares no code with the backward
//! pass under test.

use crate::manifest::{Check, RunManifest};
use crate::{CliError, RunContext};
use liftnet::data::{sup_error_on_grid, Dataset, OutputMetric};
use liftnet::linalg::{matrix_exp, spectral_fn, sym_eig, SpectralFn};
use liftnet::manifold::{
    poincare_dist, poincare_exp0, poincare_log0, spd_dist, spd_exp, spd_log, spd_vectorize, PoincarePoint, SpdPoint,
    TangentVec,
};
use liftnet::maps::{
    check_injectivity, gprelu, injective_stack, leaky_relu, lift, logistic_readout, Activation, FeatureMap,
    LayerStackParams, Parametrization, ReadoutMap,
};
use liftnet::net::{Affine, Layer, Loss, Network, Weight};
use liftnet::randomnet::{build_random_feature, rank_acceptance_rate, EntryDist};
use liftnet::{Matrix, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

pub const DEFAULTS: &str = "\
seed = 0
out = runs/proptest
scale = full
";

pub const QUICK: &str = "scale = quick\n";

/// Case counts per check family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scale {
    pub geometry_cases: usize,
    pub gradient_configs: usize,
    pub injectivity_pairs: usize,
    pub rank_samples: usize,
}

impl Scale {
    pub const FULL: Scale = Scale {
        geometry_cases: 1000,
        gradient_configs: 20,
        injectivity_pairs: 1000,
        rank_samples: 10_000,
    };
    pub const QUICK: Scale = Scale {
        geometry_cases: 200,
        gradient_configs: 5,
        injectivity_pairs: 200,
        rank_samples: 10_000,
    };

    pub fn parse(s: &str) -> Option<Scale> {
        match s {
            "full" => Some(Scale::FULL),
            "quick" => Some(Scale::QUICK),
            _ => None,
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Worst residual seen while checking one property.
struct Worst(f64);

impl Worst {
    fn new() -> Worst {
        Worst(0.0)
    }

    /// NaN residuals are kept as the worst case.
    fn see(&mut self, r: f64) {
        if r.is_nan() || r > self.0 {
            self.0 = r;
        }
    }
}

fn unif<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn random_sym<R: Rng>(rng: &mut R, d: usize, s: f64) -> SymMatrix {
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = unif(rng, -s, s);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymMatrix::new(m).expect("symmetric")
}

/// `Q diag(λ) Qᵀ` with `λ ∈ [0.1, 10]`, `Q` from a symmetric eigensolve.
fn random_spd<R: Rng>(rng: &mut R, d: usize) -> SymMatrix {
    let q = sym_eig(&random_sym(rng, d, 1.0)).expect("finite").vectors;
    let lam: Vec<f64> = (0..d).map(|_| unif(rng, 0.1, 10.0)).collect();
    let s = q.matmul(&Matrix::diag(&lam)).matmul_t(&q);
    SymMatrix::new(Matrix::from_fn(d, d, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]))).expect("symmetric")
}

fn rel(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(1e-300)
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ------------------------------------------------------------ geometry

/// Linear algebra and manifold identities.
pub fn geometry_checks(seed: u64, cases: usize) -> Vec<Check> {
    let mut rng = rng_for(seed, 1);
    let mut eig_res = Worst::new();
    let mut orth_res = Worst::new();
    let mut explog = Worst::new();
    let mut commute = Worst::new();
    let mut inverse = Worst::new();
    let mut det_min = f64::INFINITY;
    let mut spd_rt = Worst::new();
    let mut speed = Worst::new();
    let mut iso = Worst::new();
    let mut ball_rt = Worst::new();
    let mut origin = Worst::new();
    let mut triangle = Worst::new();
    for _ in 0..cases {
        let d = rng.random_range(1..=20);
        let s = random_sym(&mut rng, d, 5.0);
        let e = sym_eig(&s).expect("finite input");
        let rec = e.reconstruct_with(|l| l);
        eig_res.see(rec.sub(&s).frobenius_norm() / s.frobenius_norm().max(1.0));
        orth_res.see(e.vectors.t_matmul(&e.vectors).sub(&Matrix::identity(d)).frobenius_norm());

        let d = rng.random_range(1..=6);
        let p = random_spd(&mut rng, d);
        let back = spectral_fn(&spectral_fn(&p, SpectralFn::Log).unwrap(), SpectralFn::Exp).unwrap();
        explog.see(rel(&back, &p));

        let a: Vec<f64> = (0..4).map(|_| unif(&mut rng, -2.0, 2.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| unif(&mut rng, -2.0, 2.0)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let lhs = matrix_exp(&Matrix::diag(&sum)).unwrap();
        let rhs = matrix_exp(&Matrix::diag(&a)).unwrap().matmul(&matrix_exp(&Matrix::diag(&b)).unwrap());
        commute.see(lhs.sub(&rhs).frobenius_norm() / rhs.frobenius_norm());

        let n = rng.random_range(1..=6);
        let g = Matrix::from_fn(n, n, |_, _| unif(&mut rng, -1.0, 1.0));
        let g = g.scale(unif(&mut rng, 0.0, 10.0) / g.frobenius_norm().max(1e-300));
        let eg = matrix_exp(&g).unwrap();
        inverse.see(eg.matmul(&matrix_exp(&g.scale(-1.0)).unwrap()).sub(&Matrix::identity(n)).frobenius_norm());
        let small = g.scale(0.3);
        det_min = det_min.min(matrix_exp(&small).unwrap().determinant().unwrap());

        let base = SpdPoint::new(random_spd(&mut rng, d)).unwrap();
        let target = SpdPoint::new(random_spd(&mut rng, d)).unwrap();
        let v = spd_log(&base, &target).unwrap();
        let there = spd_exp(&base, &v).unwrap();
        spd_rt.see(rel(there.matrix(), target.matrix()));
        if v.frobenius_norm() > 1e-6 {
            spd_rt.see(rel(&spd_log(&base, &there).unwrap(), &v));
        }

        let dir = random_sym(&mut rng, d, 1.0);
        let t = unif(&mut rng, 0.0, 2.0);
        let expected = t * base.whiten(&dir).frobenius_norm();
        let got = spd_dist(&base, &spd_exp(&base, &dir.scale(t)).unwrap()).unwrap();
        speed.see((got - expected).abs() / (1.0 + expected));

        let w = random_sym(&mut rng, 4, 10.0);
        iso.see((vec_norm(&spd_vectorize(&w)) - w.frobenius_norm()).abs() / (1.0 + w.frobenius_norm()));

        let m = rng.random_range(1..=5);
        let c = unif(&mut rng, 0.1, 3.0);
        let raw: Vec<f64> = (0..m).map(|_| unif(&mut rng, -1.0, 1.0)).collect();
        let r = unif(&mut rng, 0.0, 5.0) / c.sqrt();
        let v: Vec<f64> = raw.iter().map(|x| x / vec_norm(&raw).max(1e-12) * r).collect();
        let y = poincare_exp0(&TangentVec::new(v.clone()).unwrap(), c).unwrap();
        let back = poincare_log0(&y).unwrap();
        let err: Vec<f64> = back.coords().iter().zip(&v).map(|(a, b)| a - b).collect();
        ball_rt.see(vec_norm(&err) / vec_norm(&v).max(1e-300));

        let v: Vec<f64> = (0..m).map(|_| unif(&mut rng, -2.0, 2.0)).collect();
        let y = poincare_exp0(&TangentVec::new(v.clone()).unwrap(), 1.0).unwrap();
        let dist = poincare_dist(&PoincarePoint::origin(m, 1.0).unwrap(), &y).unwrap();
        origin.see((dist - 2.0 * vec_norm(&v)).abs());

        let pts: Vec<PoincarePoint> = (0..3)
            .map(|_| {
                let raw: Vec<f64> = (0..2).map(|_| unif(&mut rng, -1.0, 1.0)).collect();
                let r = unif(&mut rng, 0.0, 0.95);
                let u: Vec<f64> = raw.iter().map(|x| x / vec_norm(&raw).max(1e-12) * r).collect();
                PoincarePoint::new(u, 1.0).unwrap()
            })
            .collect();
        let dd = |i: usize, j: usize| poincare_dist(&pts[i], &pts[j]).unwrap();
        triangle.see(dd(0, 2) - dd(0, 1) - dd(1, 2));
    }
    vec![
        Check::at_most("sym_eig reconstruction, relative (d <= 20)", eig_res.0, 1e-10),
        Check::at_most("sym_eig orthogonality", orth_res.0, 1e-10),
        Check::at_most("exp(log S) = S, relative", explog.0, 1e-9),
        Check::at_most("exp(A + B) = exp(A) exp(B) for commuting A, B", commute.0, 1e-9),
        Check::at_most("exp(A) exp(-A) = I for ||A||_F <= 10", inverse.0, 1e-8),
        Check::holds("det exp(A) > 0", det_min > 0.0, det_min, "> 0"),
        Check::at_most("SPD exp/log round trips, relative (d <= 6)", spd_rt.0, 1e-8),
        Check::at_most("SPD geodesic speed identity", speed.0, 1e-7),
        Check::at_most("SPD vectorization isometry", iso.0, 1e-12),
        Check::at_most("Poincare exp0/log0 round trip, relative", ball_rt.0, 1e-10),
        Check::at_most("d_1(0, exp0(v)) = 2||v||", origin.0, 1e-9),
        Check::at_most("Poincare triangle inequality excess", triangle.0, 1e-9),
    ]
}

// ----------------------------------------------------------- gradients

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor for components that vanish up to rounding.
pub const FD_FLOOR: f64 = 1e-6;
/// Configurations with a pre-activation this close to a kink are redrawn.
pub const KINK_GAP: f64 = 1e-3;

/// Worst relative error between backpropagated and central-difference
/// parameter gradients.
pub fn gradient_relative_error(net: &Network, loss: Loss, x: &Matrix, y: &Matrix) -> liftnet::Result<f64> {
    let analytic = net.gradient(loss, x, y)?.params;
    let p0 = net.params();
    let mut probe = net.clone();
    let mut worst = Worst::new();
    for k in 0..p0.len() {
        let mut p = p0.clone();
        p[k] = p0[k] + FD_STEP;
        probe.set_params(&p)?;
        let up = loss.value(&probe.forward_batch(x)?, y);
        p[k] = p0[k] - FD_STEP;
        probe.set_params(&p)?;
        let down = loss.value(&probe.forward_batch(x)?, y);
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst.see((analytic[k] - numeric).abs() / (analytic[k].abs() + numeric.abs()).max(FD_FLOOR));
    }
    Ok(worst.0)
}

type Case = (Network, Loss, Matrix, Matrix);

fn mat<R: Rng>(rng: &mut R, r: usize, c: usize, s: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| unif(rng, -s, s))
}

fn randomized(mut net: Network, rng: &mut ChaCha8Rng, s: f64) -> Network {
    let p: Vec<f64> = (0..net.num_params()).map(|_| unif(rng, -s, s)).collect();
    net.set_params(&p).expect("length matches");
    net
}

fn direct_case(rng: &mut ChaCha8Rng) -> Case {
    let (d, h, o) = (rng.random_range(1..5), rng.random_range(1..6), rng.random_range(1..3));
    let layers = vec![
        Layer::Affine(Affine::new(Weight::Direct(mat(rng, h, d, 1.0)), vec![0.1; h], Some(Activation::Tanh), true).unwrap()),
        Layer::Affine(Affine::new(Weight::Direct(mat(rng, o, h, 1.0)), vec![-0.2; o], None, true).unwrap()),
    ];
    let net = randomized(Network::new(layers).unwrap(), rng, 1.0);
    (net, Loss::Mse, mat(rng, 4, d, 1.5), mat(rng, 4, o, 1.5))
}

fn exp_case(rng: &mut ChaCha8Rng) -> Case {
    let m = rng.random_range(1..5);
    let mut layers = Vec::new();
    for _ in 0..2 {
        let g = mat(rng, m, m, 1.0);
        let b = (0..m).map(|_| unif(rng, -0.5, 0.5)).collect();
        layers.push(Layer::Affine(Affine::new(Weight::ExpGenerator(g), b, Some(Activation::Tanh), true).unwrap()));
    }
    layers.push(Layer::Affine(Affine::glorot(m, 1, None, rng)));
    (Network::new(layers).unwrap(), Loss::Mse, mat(rng, 3, m, 1.5), mat(rng, 3, 1, 1.5))
}

fn gprelu_case(rng: &mut ChaCha8Rng) -> Case {
    let act = gprelu(unif(rng, 0.1, 1.0), unif(rng, 0.5, 2.0)).unwrap();
    let d = rng.random_range(1..4);
    let net = randomized(Network::mlp(&[d, 5, 4, 2], act, rng).unwrap(), rng, 1.0);
    (net, Loss::Mse, mat(rng, 3, d, 1.5), mat(rng, 3, 2, 1.5))
}

fn logistic_case(rng: &mut ChaCha8Rng) -> Case {
    let d = rng.random_range(1..4);
    let core = randomized(Network::mlp(&[d, 4, 2], Activation::Tanh, rng).unwrap(), rng, 1.0);
    let model = lift(&FeatureMap::identity(d), &core, &logistic_readout(2)).unwrap();
    let y = Matrix::from_fn(4, 2, |_, _| unif(rng, 0.05, 0.95));
    (model, Loss::Bce, mat(rng, 4, d, 1.5), y)
}

fn lifted_case(rng: &mut ChaCha8Rng) -> Case {
    if rng.random::<bool>() {
        let a = SpdPoint::new(random_spd(rng, 2)).unwrap();
        let b = SpdPoint::new(random_spd(rng, 2)).unwrap();
        let mut stack = LayerStackParams::identity(3, 1, gprelu(0.5, 1.2).unwrap(), Parametrization::Exp);
        stack.generators[0] = mat(rng, 3, 3, 0.5);
        let phi = injective_stack(stack).unwrap();
        let core = randomized(Network::mlp(&[3, 4, 3], Activation::Tanh, rng).unwrap(), rng, 0.5);
        let mut layers = FeatureMap::spd_log(a).to_layers();
        layers.extend(lift(&phi, &core, &ReadoutMap::spd_exp(b)).unwrap().into_layers());
        let model = Network::new(layers).unwrap();
        let pts = |rng: &mut ChaCha8Rng| {
            let v: Vec<f64> = (0..3).flat_map(|_| spd_vectorize(&random_spd(rng, 2))).collect();
            Matrix::from_vec(3, 3, v).unwrap()
        };
        let x = pts(rng);
        (model, Loss::Mse, x, pts(rng))
    } else {
        let c = unif(rng, 0.1, 2.0);
        let core = randomized(Network::mlp(&[2, 6, 2], Activation::Tanh, rng).unwrap(), rng, 0.7);
        let model = lift(
            &FeatureMap::poincare_log0(2, c).unwrap(),
            &core,
            &ReadoutMap::poincare_exp0(2, c).unwrap(),
        )
        .unwrap();
        let r = 0.8 / c.sqrt() / 2f64.sqrt();
        (model, Loss::Mse, mat(rng, 4, 2, r), mat(rng, 4, 2, r))
    }
}

/// Draws kink-free configurations of one layer kind and returns the worst
/// relative gradient error across them.
fn gradient_family(rng: &mut ChaCha8Rng, configs: usize, mut make: impl FnMut(&mut ChaCha8Rng) -> Case) -> f64 {
    let mut worst = Worst::new();
    let mut done = 0;
    while done < configs {
        let (net, loss, x, y) = make(rng);
        let pre = net.pre_activations(&x).expect("shapes match");
        if pre.iter().any(|v| v.abs() <= KINK_GAP) {
            continue;
        }
        worst.see(gradient_relative_error(&net, loss, &x, &y).unwrap_or(f64::NAN));
        done += 1;
    }
    worst.0
}

pub fn gradient_checks(seed: u64, configs: usize) -> Vec<Check> {
    let mut rng = rng_for(seed, 2);
    let families: [(&str, fn(&mut ChaCha8Rng) -> Case); 5] = [
        ("direct affine", direct_case),
        ("exp-generator", exp_case),
        ("GPReLU", gprelu_case),
        ("logistic readout", logistic_case),
        ("lifted with frozen manifold maps", lifted_case),
    ];
    families
        .iter()
        .map(|(name, make)| {
            let e = gradient_family(&mut rng, configs, make);
            Check::at_most(format!("gradient vs finite differences: {name} ({configs} configs)"), e, 1e-4)
        })
        .collect()
}

// --------------------------------------------------------- injectivity

/// `P(ad − bc ≠ 0)` for independent uniform signs, by enumeration.
pub fn bernoulli_2x2_full_rank_fraction() -> f64 {
    let mut full = 0u32;
    for bits in 0u32..16 {
        let s = |k: u32| if bits >> k & 1 == 1 { 1i32 } else { -1 };
        full += (s(0) * s(3) - s(1) * s(2) != 0) as u32;
    }
    full as f64 / 16.0
}

fn cube(rng: &mut ChaCha8Rng, m: usize, r: f64) -> Vec<f64> {
    (0..m).map(|_| unif(rng, -r, r)).collect()
}

pub fn injectivity_checks(seed: u64, pairs: usize, rank_samples: usize) -> Vec<Check> {
    let mut rng = rng_for(seed, 3);
    let tol = 1e-3;
    let m = 4;
    let mut p = LayerStackParams::identity(m, 2, gprelu(0.25, 1.5).unwrap(), Parametrization::Exp);
    for (g, b) in p.generators.iter_mut().zip(p.biases.iter_mut()) {
        *g = mat(&mut rng, m, m, 0.7);
        *b = cube(&mut rng, m, 1.0);
    }
    let stack = injective_stack(p).expect("monotone activation");
    let stack_report = check_injectivity(&stack, |r: &mut ChaCha8Rng| cube(r, m, 2.0), pairs, tol, &mut rng).unwrap();

    let random = build_random_feature(&[m, m, 2 * m], leaky_relu(0.25).unwrap(), EntryDist::BernoulliPm1, &mut rng, 100)
        .expect("rank certificate found");
    let random_report = check_injectivity(&random, |r: &mut ChaCha8Rng| cube(r, m, 2.0), pairs, tol, &mut rng).unwrap();

    // ReLU with identity weights and bias −1 sends every point of (−∞, 1)^m to 0.
    let mut relu = LayerStackParams::identity(m, 1, Activation::Relu, Parametrization::Exp);
    relu.biases[0] = vec![-1.0; m];
    let relu_stack = liftnet::maps::unchecked_stack(relu).expect("shapes valid");
    let relu_report = check_injectivity(&relu_stack, |r: &mut ChaCha8Rng| cube(r, m, 1.0), pairs, tol, &mut rng).unwrap();
    let relu_refused = injective_stack(LayerStackParams::identity(m, 1, Activation::Relu, Parametrization::Exp)).is_err();

    let exact = bernoulli_2x2_full_rank_fraction();
    let rate = rank_acceptance_rate(EntryDist::BernoulliPm1, 2, rank_samples, &mut rng).unwrap();
    vec![
        Check::at_most(format!("injective_stack collisions ({pairs} pairs)"), stack_report.violations as f64, 0.0),
        Check::at_most(format!("random Bernoulli feature collisions ({pairs} pairs)"), random_report.violations as f64, 0.0),
        Check::at_least("ReLU counterexample collisions (expected)", relu_report.violations as f64, 1.0),
        Check::holds("injective_stack refuses ReLU", relu_refused, relu_refused as u8 as f64, "refused"),
        Check::at_most(
            format!("Bernoulli 2x2 acceptance rate vs enumeration {exact} ({rank_samples} samples)"),
            (rate - exact).abs(),
            0.02,
        ),
    ]
}

// ---------------------------------------------------------------- data

pub fn data_checks(seed: u64, cases: usize) -> Vec<Check> {
    let mut rng = rng_for(seed, 4);
    let n = 97;
    let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let ys: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 + 0.5]).collect();
    let ds = Dataset::from_rows(&xs, &ys).unwrap();
    let (a, b) = ds.shuffle_split(0.3, seed).unwrap();
    let mut ids: Vec<usize> = a.features.as_slice().iter().chain(b.features.as_slice()).map(|&v| v as usize).collect();
    ids.sort_unstable();
    let partition = ids == (0..n).collect::<Vec<_>>() && b.len() == 29;
    let (a2, _) = ds.shuffle_split(0.3, seed).unwrap();
    let reproducible = a2.features == a.features;

    let grid: Vec<Vec<f64>> = (0..20).map(|_| cube(&mut rng, 2, 1.0)).collect();
    let mut excess = Worst::new();
    for _ in 0..cases.min(200) {
        let coef: Vec<f64> = cube(&mut rng, 6, 1.0);
        let f = |k: usize| {
            let c = coef[2 * k..2 * k + 2].to_vec();
            move |x: &[f64]| -> liftnet::Result<Vec<f64>> { Ok(vec![(c[0] * x[0]).sin() + c[1] * x[1], x[0] * c[1]]) }
        };
        let e = OutputMetric::Euclidean;
        let d01 = sup_error_on_grid(f(0), f(1), &grid, e).unwrap();
        let d10 = sup_error_on_grid(f(1), f(0), &grid, e).unwrap();
        let d12 = sup_error_on_grid(f(1), f(2), &grid, e).unwrap();
        let d02 = sup_error_on_grid(f(0), f(2), &grid, e).unwrap();
        let d00 = sup_error_on_grid(f(0), f(0), &grid, e).unwrap();
        excess.see((d01 - d10).abs().max(d02 - d01 - d12 - 1e-12).max(d00));
    }
    vec![
        Check::holds("shuffle split is a partition with floor(0.3 N) held out", partition, b.len() as f64, "29 of 97"),
        Check::holds("shuffle split reproducible", reproducible, reproducible as u8 as f64, "identical"),
        Check::at_most("sup error is a pseudometric (symmetry, triangle, zero)", excess.0, 1e-12),
    ]
}

/// The whole battery at `scale`.
pub fn run_battery(seed: u64, scale: Scale) -> Vec<Check> {
    let start = Instant::now();
    let mut checks = geometry_checks(seed, scale.geometry_cases);
    checks.extend(gradient_checks(seed, scale.gradient_configs));
    checks.extend(injectivity_checks(seed, scale.injectivity_pairs, scale.rank_samples));
    checks.extend(data_checks(seed, scale.geometry_cases));
    log::info!("battery finished in {:.1}s", start.elapsed().as_secs_f64());
    checks
}

pub fn cmd_proptest(ctx: &RunContext) -> Result<RunManifest, CliError> {
    let seed: u64 = ctx.config.get("seed")?;
    let scale = Scale::parse(ctx.config.raw("scale"))
        .ok_or_else(|| CliError::Invalid(format!("scale: expected full or quick, got '{}'", ctx.config.raw("scale"))))?;
    let mut manifest = RunManifest::new("proptest", &ctx.config, seed);
    manifest.checks = run_battery(seed, scale);
    for c in &manifest.checks {
        manifest.results.insert(c.name.clone(), c.value);
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_gives_one_half() {
        assert_eq!(bernoulli_2x2_full_rank_fraction(), 0.5);
    }

    #[test]
    fn hand_computed_gradient() {
        // L = (w·x + b − y)² with w = 2, b = 1, x = 3, y = 0: L = 49,
        // ∂L/∂w = 2·7·3 = 42, ∂L/∂b = 14.
        let layer = Affine::new(Weight::Direct(Matrix::from_rows(&[&[2.0]]).unwrap()), vec![1.0], None, true).unwrap();
        let net = Network::new(vec![Layer::Affine(layer)]).unwrap();
        let x = Matrix::from_rows(&[&[3.0]]).unwrap();
        let y = Matrix::from_rows(&[&[0.0]]).unwrap();
        let g = net.gradient(Loss::Mse, &x, &y).unwrap();
        assert_eq!(g.loss, 49.0);
        assert_eq!(g.params, vec![42.0, 14.0]);
        assert!(gradient_relative_error(&net, Loss::Mse, &x, &y).unwrap() < 1e-9);
    }

    #[test]
    fn quick_battery_passes() {
        let checks = run_battery(7, Scale::QUICK);
        for c in &checks {
            assert!(c.passed, "{}", c.line());
        }
    }
}
