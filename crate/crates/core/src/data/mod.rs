//! Tabular datasets: California housing ingestion, seeded splits,
//! standardization and evaluation metrics.

mod metrics;

pub use metrics::{metrics, metrics_line, sup_error_on_grid, Metrics, OutputMetric};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::path::Path;

/// Targets are reported in units of this many dollars.
pub const TARGET_SCALE: f64 = 1e5;

pub const NUMERIC_FEATURES: [&str; 8] = [
    "longitude",
    "latitude",
    "housing_median_age",
    "total_rooms",
    "total_bedrooms",
    "population",
    "households",
    "median_income",
];
pub const TARGET_COLUMN: &str = "median_house_value";
pub const CATEGORICAL_COLUMN: &str = "ocean_proximity";

/// Statistics needed to undo preprocessing.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    /// Raw target = stored target × `target_scale`.
    pub target_scale: f64,
}

impl Normalization {
    pub fn unscale_target(&self, y: f64) -> f64 {
        y * self.target_scale
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub targets: Matrix,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    pub normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(features: Matrix, targets: Matrix) -> Result<Dataset> {
        if features.rows() != targets.rows() {
            return Err(Error::input(format!(
                "{} feature rows but {} target rows",
                features.rows(),
                targets.rows()
            )));
        }
        if !features.is_finite() || !targets.is_finite() {
            return Err(Error::input("dataset contains non-finite values"));
        }
        let feature_names = (0..features.cols()).map(|i| format!("x{i}")).collect();
        let target_names = (0..targets.cols()).map(|i| format!("y{i}")).collect();
        Ok(Dataset {
            features,
            targets,
            feature_names,
            target_names,
            normalization: None,
        })
    }

    /// Builds a dataset from per-row feature and target vectors.
    pub fn from_rows(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Dataset> {
        let (Some(x0), Some(y0)) = (xs.first(), ys.first()) else {
            return Err(Error::input("empty dataset"));
        };
        let fx = Matrix::from_vec(xs.len(), x0.len(), xs.concat())?;
        let fy = Matrix::from_vec(ys.len(), y0.len(), ys.concat())?;
        Dataset::new(fx, fy)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature and target rows at `idx`, in that order.
    pub fn gather(&self, idx: &[usize]) -> (Matrix, Matrix) {
        (take_rows(&self.features, idx), take_rows(&self.targets, idx))
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let (features, targets) = self.gather(idx);
        Dataset {
            features,
            targets,
            feature_names: self.feature_names.clone(),
            target_names: self.target_names.clone(),
            normalization: self.normalization.clone(),
        }
    }

    /// Single-output targets as a flat vector.
    pub fn target_column(&self, j: usize) -> Vec<f64> {
        (0..self.targets.rows()).map(|i| self.targets[(i, j)]).collect()
    }

    /// Seeded Fisher–Yates shuffle, then the first `floor(N·fraction)`
    /// rows go to the second part. Returns `(rest, held_out)`.
    pub fn shuffle_split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::param(format!("split fraction must lie in (0,1), got {fraction}")));
        }
        let n = self.len();
        let held = (n as f64 * fraction).floor() as usize;
        if held == 0 || held == n {
            return Err(Error::param(format!(
                "split of {n} rows at fraction {fraction} leaves an empty side"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok((self.subset(&idx[held..]), self.subset(&idx[..held])))
    }
}

fn take_rows(m: &Matrix, idx: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(idx.len(), m.cols());
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).copy_from_slice(m.row(i));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoadOptions {
    /// One-hot encode `ocean_proximity` when present; otherwise drop it.
    pub one_hot_categorical: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            one_hot_categorical: true,
        }
    }
}

pub fn load_california_csv(path: &Path) -> Result<Dataset> {
    load_california_csv_with(path, LoadOptions::default())
}

/// Reads the housing CSV. Empty `total_bedrooms` cells are imputed with
/// the column median; other unparseable rows are skipped with a warning.
/// Targets stay in dollars.
pub fn load_california_csv_with(path: &Path, opts: LoadOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut numeric_idx = Vec::with_capacity(NUMERIC_FEATURES.len());
    for name in NUMERIC_FEATURES {
        numeric_idx.push(col(name).ok_or_else(|| Error::Schema(format!("missing required column '{name}'")))?);
    }
    let target_idx = col(TARGET_COLUMN)
        .ok_or_else(|| Error::Schema(format!("missing required column '{TARGET_COLUMN}'")))?;
    let cat_idx = col(CATEGORICAL_COLUMN).filter(|_| opts.one_hot_categorical);
    let bedrooms = NUMERIC_FEATURES
        .iter()
        .position(|&n| n == "total_bedrooms")
        .expect("listed above");

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets = Vec::new();
    let mut cats: Vec<String> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                log::warn!("skipping row {line}: {e}");
                continue;
            }
        };
        let parsed: std::result::Result<Vec<f64>, String> = numeric_idx
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let cell = rec.get(i).unwrap_or("");
                if k == bedrooms && cell.is_empty() {
                    return Ok(f64::NAN);
                }
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("column '{}' = '{cell}'", NUMERIC_FEATURES[k]))
            })
            .collect();
        let target = rec.get(target_idx).and_then(|c| c.parse::<f64>().ok()).filter(|v| v.is_finite());
        match (parsed, target) {
            (Ok(r), Some(t)) => {
                rows.push(r);
                targets.push(t);
                if let Some(ci) = cat_idx {
                    cats.push(rec.get(ci).unwrap_or("").to_string());
                }
            }
            (Err(why), _) => log::warn!("skipping row {line}: unparseable {why}"),
            (_, None) => log::warn!("skipping row {line}: unparseable {TARGET_COLUMN}"),
        }
    }
    if rows.is_empty() {
        return Err(Error::Schema("no parseable rows".into()));
    }

    let mut present: Vec<f64> = rows.iter().map(|r| r[bedrooms]).filter(|v| !v.is_nan()).collect();
    let missing = rows.len() - present.len();
    if missing > 0 {
        if present.is_empty() {
            return Err(Error::Schema("total_bedrooms is empty in every row".into()));
        }
        let med = median(&mut present);
        log::info!("imputed {missing} empty total_bedrooms with median {med}");
        for r in rows.iter_mut().filter(|r| r[bedrooms].is_nan()) {
            r[bedrooms] = med;
        }
    }

    let mut feature_names: Vec<String> = NUMERIC_FEATURES.iter().map(|s| s.to_string()).collect();
    if cat_idx.is_some() {
        let levels: Vec<String> = cats.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        for (r, c) in rows.iter_mut().zip(&cats) {
            r.extend(levels.iter().map(|l| (l == c) as u8 as f64));
        }
        feature_names.extend(levels.iter().map(|l| format!("{CATEGORICAL_COLUMN}={l}")));
    }
    log::info!("loaded {} rows from {}", rows.len(), path.display());

    let m = feature_names.len();
    let n = rows.len();
    let mut ds = Dataset::new(
        Matrix::from_vec(n, m, rows.concat())?,
        Matrix::from_vec(n, 1, targets)?,
    )?;
    ds.feature_names = feature_names;
    ds.target_names = vec![TARGET_COLUMN.to_string()];
    Ok(ds)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Seeded split into `(train, test)`; features standardized with training
/// statistics (population std, `1` for constant columns), targets divided
/// by [`TARGET_SCALE`].
pub fn preprocess_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (mut train, mut test) = ds.shuffle_split(test_fraction, seed)?;
    let (n, m) = (train.len(), train.features.cols());
    let mut means = vec![0.0; m];
    let mut stds = vec![0.0; m];
    for j in 0..m {
        let mean = (0..n).map(|i| train.features[(i, j)]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (train.features[(i, j)] - mean).powi(2)).sum::<f64>() / n as f64;
        means[j] = mean;
        stds[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let norm = Normalization {
        feature_means: means,
        feature_stds: stds,
        target_scale: TARGET_SCALE,
    };
    for part in [&mut train, &mut test] {
        for i in 0..part.len() {
            for (j, v) in part.features.row_mut(i).iter_mut().enumerate() {
                *v = (*v - norm.feature_means[j]) / norm.feature_stds[j];
            }
        }
        part.targets = part.targets.scale(1.0 / TARGET_SCALE);
        part.normalization = Some(norm.clone());
    }
    Ok((train, test))
}
