use super::Network;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Losses average over every output entry of the batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Mse,
    Mae,
    /// Binary cross-entropy on probabilities; predictions are clipped to
    /// `[1e-12, 1 − 1e-12]`.
    Bce,
}

const BCE_CLIP: f64 = 1e-12;

impl Loss {
    pub fn parse(s: &str) -> Result<Loss> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mse" => Ok(Loss::Mse),
            "mae" => Ok(Loss::Mae),
            "bce" | "binary-cross-entropy" => Ok(Loss::Bce),
            other => Err(Error::param(format!("unknown loss '{other}'"))),
        }
    }

    pub fn value(self, pred: &Matrix, target: &Matrix) -> f64 {
        self.value_and_grad(pred, target).0
    }

    pub(crate) fn value_and_grad(self, pred: &Matrix, target: &Matrix) -> (f64, Matrix) {
        let n = pred.as_slice().len() as f64;
        let mut grad = Matrix::zeros(pred.rows(), pred.cols());
        let mut total = 0.0;
        for ((g, &p), &t) in grad
            .as_mut_slice()
            .iter_mut()
            .zip(pred.as_slice())
            .zip(target.as_slice())
        {
            let (v, d) = match self {
                Loss::Mse => ((p - t).powi(2), 2.0 * (p - t)),
                Loss::Mae => ((p - t).abs(), sign(p - t)),
                Loss::Bce => {
                    let q = p.clamp(BCE_CLIP, 1.0 - BCE_CLIP);
                    let v = -(t * q.ln() + (1.0 - t) * (1.0 - q).ln());
                    let d = if p == q { (q - t) / (q * (1.0 - q)) } else { 0.0 };
                    (v, d)
                }
            };
            total += v;
            *g = d / n;
        }
        (total / n, grad)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    Sgd,
    /// Adam with `β₁ = 0.9`, `β₂ = 0.999`, `ε = 1e-8`.
    Adam,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub loss: Loss,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were restored (validation loss if a
    /// validation set was given, training loss otherwise).
    pub best_epoch: usize,
    pub best_loss: f64,
}

/// Loss above which training is abandoned.
pub const DIVERGENCE_LOSS: f64 = 1e12;

pub fn train(
    model: &mut Network,
    train_set: &Dataset,
    valid: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    train_observed(model, train_set, valid, cfg, |_| {})
}

/// [`train`], calling `observe` after every parameter update.
pub fn train_observed(
    model: &mut Network,
    train_set: &Dataset,
    valid: Option<&Dataset>,
    cfg: &TrainConfig,
    mut observe: impl FnMut(&Network),
) -> Result<TrainReport> {
    cfg.validate()?;
    let n = train_set.len();
    if n == 0 {
        return Err(Error::input("empty training set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut params = model.params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut step = 0i32;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Vec<f64>)> = None;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (x, y) = train_set.gather(chunk);
            let g = model.gradient(cfg.loss, &x, &y).map_err(|e| match e {
                Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { batch: batch_idx },
                other => other,
            })?;
            sum += g.loss * chunk.len() as f64;
            step += 1;
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for (p, d) in params.iter_mut().zip(&g.params) {
                        *p -= cfg.learning_rate * d;
                    }
                }
                Optimizer::Adam => {
                    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
                    let c1 = 1.0 - b1.powi(step);
                    let c2 = 1.0 - b2.powi(step);
                    for i in 0..params.len() {
                        let d = g.params[i];
                        m[i] = b1 * m[i] + (1.0 - b1) * d;
                        v[i] = b2 * v[i] + (1.0 - b2) * d * d;
                        params[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                    }
                }
            }
            model.set_params(&params).map_err(|_| Error::Diverged {
                epoch,
                loss: f64::INFINITY,
            })?;
            observe(model);
        }
        let train_loss = sum / n as f64;
        if !(train_loss <= DIVERGENCE_LOSS) {
            return Err(Error::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        let valid_loss = match valid {
            Some(d) => Some(evaluate(model, d, cfg.loss)?),
            None => None,
        };
        let score = valid_loss.unwrap_or(train_loss);
        log::debug!("epoch {epoch}: train {train_loss:.6} valid {valid_loss:?}");
        if best.as_ref().map_or(true, |(_, b, _)| score < *b) {
            best = Some((epoch, score, params.clone()));
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            valid_loss,
        });
    }
    let (best_epoch, best_loss, best_params) = best.expect("at least one epoch ran");
    model.set_params(&best_params)?;
    Ok(TrainReport {
        history,
        best_epoch,
        best_loss,
    })
}

/// Full-batch loss of `model` on `data`.
pub fn evaluate(model: &Network, data: &Dataset, loss: Loss) -> Result<f64> {
    let pred = model.forward_batch(&data.features)?;
    Ok(loss.value(&pred, &data.targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Affine, Layer, Weight};

    fn line_data() -> Dataset {
        let xs: Vec<f64> = (0..64).map(|i| -1.0 + i as f64 / 32.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        Dataset::new(
            Matrix::from_vec(64, 1, xs).unwrap(),
            Matrix::from_vec(64, 1, ys).unwrap(),
        )
        .unwrap()
    }

    fn linear() -> Network {
        Network::new(vec![Layer::Affine(
            Affine::new(Weight::Direct(Matrix::zeros(1, 1)), vec![0.0], None, true).unwrap(),
        )])
        .unwrap()
    }

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 0.05,
            batch_size: 16,
            epochs,
            seed: 11,
            loss: Loss::Mse,
        }
    }

    #[test]
    fn learns_a_slope() {
        let mut net = linear();
        let report = train(&mut net, &line_data(), None, &cfg(300)).unwrap();
        assert_eq!(report.history.len(), 300);
        let slope = net.params()[0];
        assert!((slope - 2.0).abs() < 1e-3, "slope {slope}");
    }

    #[test]
    fn zero_epochs_rejected() {
        assert!(train(&mut linear(), &line_data(), None, &cfg(0)).is_err());
        let mut bad = cfg(1);
        bad.learning_rate = 0.0;
        assert!(train(&mut linear(), &line_data(), None, &bad).is_err());
    }

    #[test]
    fn seeded_runs_are_bitwise_identical() {
        let (mut a, mut b) = (linear(), linear());
        let ra = train(&mut a, &line_data(), None, &cfg(20)).unwrap();
        let rb = train(&mut b, &line_data(), None, &cfg(20)).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn divergence_is_reported() {
        let mut c = cfg(50);
        c.optimizer = Optimizer::Sgd;
        c.learning_rate = 10.0;
        let r = train(&mut linear(), &line_data(), None, &c);
        assert!(matches!(r, Err(Error::Diverged { .. })), "{r:?}");
    }

    #[test]
    fn loss_values() {
        let p = Matrix::from_rows(&[&[2.0], &[0.0]]).unwrap();
        let t = Matrix::from_rows(&[&[1.0], &[1.0]]).unwrap();
        assert_eq!(Loss::Mse.value(&p, &t), 1.0);
        assert_eq!(Loss::Mae.value(&p, &t), 1.0);
        let p = Matrix::from_rows(&[&[0.5]]).unwrap();
        let t = Matrix::from_rows(&[&[1.0]]).unwrap();
        assert!((Loss::Bce.value(&p, &t) - 2f64.ln()).abs() < 1e-15);
    }
}
