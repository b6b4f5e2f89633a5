use crate::config::Config;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// One pass/fail line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured quantity (residual, error, rate, count).
    pub value: f64,
    /// Human-readable requirement, e.g. `<= 1e-8`.
    pub requirement: String,
    /// Unenforced checks are reported but do not affect the exit code.
    pub enforced: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Check {
        Check {
            name: name.into(),
            passed: value <= limit,
            value,
            requirement: format!("<= {limit:e}"),
            enforced: true,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Check {
        Check {
            name: name.into(),
            passed: value >= limit,
            value,
            requirement: format!(">= {limit}"),
            enforced: true,
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool, value: f64, requirement: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            passed,
            value,
            requirement: requirement.into(),
            enforced: true,
        }
    }

    pub fn advisory(mut self) -> Check {
        self.enforced = false;
        self
    }

    pub fn line(&self) -> String {
        let status = match (self.passed, self.enforced) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "MISS",
        };
        format!("{status} {}: {:e} (required {})", self.name, self.value, self.requirement)
    }
}

/// True when every enforced check passed.
pub fn all_enforced_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed || !c.enforced)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub model: String,
    pub split: String,
    pub seed: u64,
    pub mae: f64,
    pub mse: f64,
    pub mape: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub dataset_rows: Option<usize>,
    pub split_sizes: BTreeMap<String, usize>,
    pub wall_time_secs: f64,
    pub metrics: Vec<MetricRecord>,
    /// Named scalar results, e.g. per-width sup errors.
    pub results: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub checkpoints: Vec<String>,
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config, seed: u64) -> RunManifest {
        RunManifest {
            command: command.into(),
            seed,
            config_hash: config.hash_hex(),
            dataset_rows: None,
            split_sizes: BTreeMap::new(),
            wall_time_secs: 0.0,
            metrics: Vec::new(),
            results: BTreeMap::new(),
            checks: Vec::new(),
            checkpoints: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        all_enforced_pass(&self.checks)
    }

    /// The manifest with wall time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> RunManifest {
        RunManifest {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Writes `manifest.json` and `config.txt` into `dir`.
pub fn write_run(dir: &Path, manifest: &RunManifest, config: &Config) -> std::io::Result<()> {
    write_atomic(&dir.join("config.txt"), config.render().as_bytes())?;
    write_atomic(&dir.join("manifest.json"), manifest.to_json().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_through_json() {
        let cfg = Config::from_defaults("seed = 3\n");
        let mut m = RunManifest::new("demo", &cfg, 3);
        m.wall_time_secs = 1.5;
        m.results.insert("sup_error.w8".into(), 0.25);
        m.checks.push(Check::at_most("x", 0.1, 0.2));
        let back: RunManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.config_hash, cfg.hash_hex());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested").join("m.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn advisory_failures_do_not_fail_the_run() {
        let checks = vec![Check::at_most("a", 2.0, 1.0).advisory(), Check::at_least("b", 1.0, 1.0)];
        assert!(all_enforced_pass(&checks));
        assert!(checks[0].line().starts_with("MISS"));
    }
}
