use liftnet::data::Dataset;
use liftnet::maps::{gprelu, injective_stack, lift, LayerStackParams, Parametrization, ReadoutMap};
use liftnet::net::{evaluate, train, train_observed, Layer, Loss, Network, Optimizer, TrainConfig, Weight};
use liftnet::maps::Activation;
use liftnet::{Error, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn regression_data(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![(2.0 * x[0]).sin() + x[0] * x[1]]).collect();
    Dataset::from_rows(&xs, &ys).unwrap()
}

fn config(seed: u64) -> TrainConfig {
    TrainConfig {
        optimizer: Optimizer::Adam,
        learning_rate: 1e-2,
        batch_size: 16,
        epochs: 30,
        seed,
        loss: Loss::Mse,
    }
}

fn lifted_model(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let act = gprelu(0.25, 1.5).unwrap();
    let phi = injective_stack(LayerStackParams::identity(2, 2, act, Parametrization::Exp)).unwrap();
    let rho = ReadoutMap::stack(LayerStackParams::identity(1, 1, act, Parametrization::Exp)).unwrap();
    let core = Network::mlp(&[2, 16, 1], Activation::Relu, &mut rng).unwrap();
    lift(&phi, &core, &rho).unwrap()
}

#[test]
fn exp_layers_stay_invertible_through_training() {
    let data = regression_data(1, 128);
    let mut model = lifted_model(2);
    let mut steps = 0;
    train_observed(&mut model, &data, None, &config(3), |m| {
        steps += 1;
        for layer in m.layers() {
            if let Layer::Affine(a) = layer {
                if let Weight::ExpGenerator(g) = &a.weight {
                    let det = a.effective_weight().unwrap().determinant().unwrap();
                    let expected = g.trace().exp();
                    assert!(det > 0.0 && (det - expected).abs() <= 1e-9 * expected, "{det} vs {expected}");
                }
            }
        }
    })
    .unwrap();
    assert_eq!(steps, 30 * 8);
}

#[test]
fn training_reduces_loss_and_restores_the_best_epoch() {
    let data = regression_data(4, 256);
    let (tr, va) = data.shuffle_split(0.25, 0).unwrap();
    let mut model = lifted_model(5);
    let before = evaluate(&model, &va, Loss::Mse).unwrap();
    let report = train(&mut model, &tr, Some(&va), &config(6)).unwrap();
    let after = evaluate(&model, &va, Loss::Mse).unwrap();
    assert!(after < 0.5 * before, "{before} -> {after}");
    assert_eq!(after, report.best_loss);
    let best = report.history.iter().filter_map(|r| r.valid_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(report.history[report.best_epoch].valid_loss, Some(best));
}

#[test]
fn replay_is_bitwise_identical() {
    let data = regression_data(7, 100);
    let run = || {
        let mut model = lifted_model(8);
        let report = train(&mut model, &data, None, &config(9)).unwrap();
        (model.params(), report)
    };
    let (p1, r1) = run();
    let (p2, r2) = run();
    assert_eq!(p1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), p2.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(r1, r2);
}

#[test]
fn relu_network_without_bias_is_positively_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut net = Network::mlp(&[3, 7, 7, 2], Activation::Relu, &mut rng).unwrap();
    let p: Vec<f64> = net.params();
    let mut zeroed = p.clone();
    let mut offset = 0;
    for layer in net.layers() {
        if let Layer::Affine(a) = layer {
            let w = a.weight.raw().rows() * a.weight.raw().cols();
            zeroed[offset + w..offset + w + a.bias.len()].iter_mut().for_each(|b| *b = 0.0);
            offset += w + a.bias.len();
        }
    }
    net.set_params(&zeroed).unwrap();
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let t = rng.random_range(0.0..10.0);
        let scaled: Vec<f64> = x.iter().map(|v| t * v).collect();
        let fx = net.forward(&x).unwrap();
        let ftx = net.forward(&scaled).unwrap();
        for (a, b) in fx.iter().zip(&ftx) {
            assert!((t * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn huge_learning_rate_diverges() {
    let data = regression_data(11, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut model = Network::mlp(&[2, 8, 1], Activation::Relu, &mut rng).unwrap();
    let cfg = TrainConfig {
        optimizer: Optimizer::Sgd,
        learning_rate: 1e6,
        ..config(13)
    };
    let err = train(&mut model, &data, None, &cfg).unwrap_err();
    assert!(matches!(err, Error::Diverged { .. } | Error::NonFiniteLoss { .. }), "{err}");
}

#[test]
fn exp_identity_layer_starts_as_identity() {
    let x = Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]).unwrap();
    let net = Network::new(vec![Layer::Affine(liftnet::net::Affine::exp_identity(2, None))]).unwrap();
    assert_eq!(net.forward_batch(&x).unwrap(), x);
}
