//! Backpropagated gradients against central finite differences of the
//! forward pass.

use liftnet::manifold::{spd_vectorize, SpdPoint};
use liftnet::maps::{gprelu, injective_stack, lift, logistic_readout, Activation, FeatureMap, LayerStackParams, Parametrization, ReadoutMap};
use liftnet::net::{Affine, Layer, Loss, Network, Weight};
use liftnet::{Matrix, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
/// Denominator floor so components that are zero up to rounding do not
/// produce spurious relative errors.
const FLOOR: f64 = 1e-6;
const KINK_GAP: f64 = 1e-3;

fn worst_relative_error(net: &Network, loss: Loss, x: &Matrix, y: &Matrix) -> f64 {
    let analytic = net.gradient(loss, x, y).unwrap().params;
    let p0 = net.params();
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for k in 0..p0.len() {
        let mut p = p0.clone();
        p[k] = p0[k] + STEP;
        probe.set_params(&p).unwrap();
        let up = loss.value(&probe.forward_batch(x).unwrap(), y);
        p[k] = p0[k] - STEP;
        probe.set_params(&p).unwrap();
        let down = loss.value(&probe.forward_batch(x).unwrap(), y);
        let numeric = (up - down) / (2.0 * STEP);
        let err = (analytic[k] - numeric).abs() / (analytic[k].abs() + numeric.abs()).max(FLOOR);
        worst = worst.max(err);
    }
    worst
}

fn away_from_kinks(net: &Network, x: &Matrix) -> bool {
    net.pre_activations(x).unwrap().iter().all(|v| v.abs() > KINK_GAP)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, s: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-s..s))
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    random_matrix(rng, n, d, 1.5)
}

fn randomize(net: &mut Network, rng: &mut ChaCha8Rng, s: f64) {
    let p: Vec<f64> = (0..net.num_params()).map(|_| rng.random_range(-s..s)).collect();
    net.set_params(&p).unwrap();
}

/// Draws configurations until one is kink-free, then checks it.
fn check(mut make: impl FnMut(&mut ChaCha8Rng) -> (Network, Loss, Matrix, Matrix), seed: u64, configs: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < configs {
        let (net, loss, x, y) = make(&mut rng);
        if !away_from_kinks(&net, &x) {
            continue;
        }
        let e = worst_relative_error(&net, loss, &x, &y);
        assert!(e <= 1e-4, "config {done}: relative error {e}");
        done += 1;
    }
}

#[test]
fn direct_affine_layers() {
    check(
        |rng| {
            let d = rng.random_range(1..5);
            let h = rng.random_range(1..6);
            let o = rng.random_range(1..3);
            let mut net = Network::mlp(&[d, h, o], Activation::Tanh, rng).unwrap();
            randomize(&mut net, rng, 1.0);
            let x = random_batch(rng, 4, d);
            let y = random_batch(rng, 4, o);
            (net, Loss::Mse, x, y)
        },
        1,
        20,
    );
}

#[test]
fn gprelu_layers() {
    check(
        |rng| {
            let act = gprelu(rng.random_range(0.1..1.0), rng.random_range(0.5..2.0)).unwrap();
            let d = rng.random_range(1..4);
            let mut net = Network::mlp(&[d, 5, 4, 2], act, rng).unwrap();
            randomize(&mut net, rng, 1.0);
            let x = random_batch(rng, 3, d);
            let y = random_batch(rng, 3, 2);
            (net, Loss::Mse, x, y)
        },
        2,
        20,
    );
}

#[test]
fn exp_generator_layers() {
    check(
        |rng| {
            let m = rng.random_range(1..5);
            let act = gprelu(0.25, 1.5).unwrap();
            let mut layers = Vec::new();
            for _ in 0..2 {
                let g = random_matrix(rng, m, m, 0.8);
                let b = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
                layers.push(Layer::Affine(Affine::new(Weight::ExpGenerator(g), b, Some(act), true).unwrap()));
            }
            layers.push(Layer::Affine(Affine::glorot(m, 1, None, rng)));
            let net = Network::new(layers).unwrap();
            let x = random_batch(rng, 3, m);
            let y = random_batch(rng, 3, 1);
            (net, Loss::Mse, x, y)
        },
        3,
        20,
    );
}

#[test]
fn large_exp_generator_needs_squarings() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let a = random_matrix(&mut rng, 3, 3, 2.0);
    assert!(a.frobenius_norm() > 2.0);
    let net = Network::new(vec![Layer::Affine(
        Affine::new(Weight::ExpGenerator(a), vec![0.1, -0.2, 0.3], None, true).unwrap(),
    )])
    .unwrap();
    let x = random_batch(&mut rng, 2, 3);
    let y = random_batch(&mut rng, 2, 3);
    assert!(worst_relative_error(&net, Loss::Mse, &x, &y) <= 1e-4);
}

#[test]
fn logistic_readout_with_bce() {
    check(
        |rng| {
            let d = rng.random_range(1..4);
            let mut core = Network::mlp(&[d, 4, 2], Activation::Tanh, rng).unwrap();
            randomize(&mut core, rng, 1.0);
            let model = lift(&FeatureMap::identity(d), &core, &logistic_readout(2)).unwrap();
            let x = random_batch(rng, 4, d);
            let y = Matrix::from_fn(4, 2, |_, _| rng.random_range(0.05..0.95));
            (model, Loss::Bce, x, y)
        },
        4,
        20,
    );
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
    let b = random_matrix(rng, d, d, 1.0);
    let s = b.matmul_t(&b).add(&Matrix::identity(d).scale(0.5));
    SymMatrix::new(Matrix::from_fn(d, d, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]))).unwrap()
}

#[test]
fn lifted_spd_composition() {
    check(
        |rng| {
            let d = 2;
            let n = 3;
            let a = SpdPoint::new(random_spd(rng, d)).unwrap();
            let b = SpdPoint::new(random_spd(rng, d)).unwrap();
            let mut stack = LayerStackParams::identity(n, 1, gprelu(0.5, 1.2).unwrap(), Parametrization::Exp);
            stack.generators[0] = random_matrix(rng, n, n, 0.5);
            let phi = injective_stack(stack).unwrap();
            let mut core = Network::mlp(&[n, 4, n], Activation::Tanh, rng).unwrap();
            randomize(&mut core, rng, 0.5);
            let mut layers = FeatureMap::spd_log(a).to_layers();
            layers.extend(lift(&phi, &core, &ReadoutMap::spd_exp(b)).unwrap().into_layers());
            let model = Network::new(layers).unwrap();
            let xs: Vec<f64> = (0..3).flat_map(|_| spd_vectorize(&random_spd(rng, d))).collect();
            let x = Matrix::from_vec(3, n, xs).unwrap();
            let ys: Vec<f64> = (0..3).flat_map(|_| spd_vectorize(&random_spd(rng, d))).collect();
            let y = Matrix::from_vec(3, n, ys).unwrap();
            (model, Loss::Mse, x, y)
        },
        5,
        20,
    );
}

#[test]
fn lifted_poincare_composition() {
    check(
        |rng| {
            let c = rng.random_range(0.1..2.0);
            let mut core = Network::mlp(&[2, 6, 2], Activation::Tanh, rng).unwrap();
            randomize(&mut core, rng, 0.7);
            let model = lift(
                &FeatureMap::poincare_log0(2, c).unwrap(),
                &core,
                &ReadoutMap::poincare_exp0(2, c).unwrap(),
            )
            .unwrap();
            let r = 0.8 / c.sqrt() / 2f64.sqrt();
            let x = random_matrix(rng, 4, 2, r);
            let y = random_matrix(rng, 4, 2, r);
            (model, Loss::Mse, x, y)
        },
        6,
        20,
    );
}
