use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::manifold::{poincare_dist, spd_dist, spd_unvectorize, PoincarePoint, SpdPoint};

/// Regression metrics; `mape` is in percent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub mape: f64,
}

pub fn metrics(y: &[f64], yhat: &[f64]) -> Result<Metrics> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(Error::input(format!(
            "metrics need equal non-empty lengths, got {} and {}",
            y.len(),
            yhat.len()
        )));
    }
    let n = y.len() as f64;
    let (mut mae, mut mse, mut mape) = (0.0, 0.0, 0.0);
    for (&t, &p) in y.iter().zip(yhat) {
        if t == 0.0 {
            return Err(Error::Domain {
                what: "MAPE undefined for a zero target".into(),
                value: t,
            });
        }
        let e = (t - p).abs();
        mae += e;
        mse += e * e;
        mape += e / t.abs();
    }
    Ok(Metrics {
        mae: mae / n,
        mse: mse / n,
        mape: 100.0 * mape / n,
    })
}

/// `model,split,mae,mse,mape` with shortest round-trip float formatting.
pub fn metrics_line(model: &str, split: &str, m: &Metrics) -> String {
    format!("{model},{split},{},{},{}", m.mae, m.mse, m.mape)
}

/// Distance used to compare outputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OutputMetric {
    Euclidean,
    /// Affine-invariant distance between vectorized SPD matrices.
    Spd,
    /// Hyperbolic distance on the Poincaré ball of curvature `−c`.
    Poincare { c: f64 },
}

impl OutputMetric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::input(format!(
                "outputs of different lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        match self {
            OutputMetric::Euclidean => {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                Ok(norm2(&d))
            }
            OutputMetric::Spd => {
                let pa = SpdPoint::new(spd_unvectorize(a)?)?;
                let pb = SpdPoint::new(spd_unvectorize(b)?)?;
                spd_dist(&pa, &pb)
            }
            OutputMetric::Poincare { c } => {
                let pa = PoincarePoint::new(a.to_vec(), *c)?;
                let pb = PoincarePoint::new(b.to_vec(), *c)?;
                poincare_dist(&pa, &pb)
            }
        }
    }
}

/// `max_{x ∈ grid} dist(f(x), g(x))`.
pub fn sup_error_on_grid(
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    g: impl Fn(&[f64]) -> Result<Vec<f64>>,
    grid: &[Vec<f64>],
    metric: OutputMetric,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::input("empty grid"));
    }
    let mut worst = 0.0f64;
    for x in grid {
        worst = worst.max(metric.distance(&f(x)?, &g(x)?)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_prediction() {
        let m = metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((m.mae, m.mse, m.mape), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_arithmetic() {
        let m = metrics(&[1.0, 1.0], &[2.0, 0.0]).unwrap();
        assert_eq!((m.mae, m.mse, m.mape), (1.0, 1.0, 100.0));
        assert_eq!(metrics_line("vanilla", "test", &m), "vanilla,test,1,1,100");
    }

    #[test]
    fn mape_scale_invariance_and_zero_target() {
        let y = [1.5, -2.0, 3.0];
        let p = [1.0, -2.5, 3.3];
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        let p2: Vec<f64> = p.iter().map(|v| 2.0 * v).collect();
        let a = metrics(&y, &p).unwrap().mape;
        let b = metrics(&y2, &p2).unwrap().mape;
        assert!((a - b).abs() < 1e-12);
        assert!(matches!(metrics(&[0.0], &[1.0]), Err(Error::Domain { .. })));
        assert!(metrics(&[], &[]).is_err());
    }

    #[test]
    fn grid_errors() {
        let grid: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 1.0, -1.0]).collect();
        let f = |x: &[f64]| Ok(x.to_vec());
        assert_eq!(sup_error_on_grid(f, f, &grid, OutputMetric::Euclidean).unwrap(), 0.0);
        let eps = 0.01;
        let g = move |x: &[f64]| Ok(x.iter().map(|v| v + eps).collect());
        let e = sup_error_on_grid(f, g, &grid, OutputMetric::Euclidean).unwrap();
        assert!((e - eps * 3f64.sqrt()).abs() < 1e-12);
        assert!(sup_error_on_grid(f, f, &[], OutputMetric::Euclidean).is_err());
        let short = |x: &[f64]| Ok(x[..1].to_vec());
        assert!(sup_error_on_grid(f, short, &grid, OutputMetric::Euclidean).is_err());
    }
}
