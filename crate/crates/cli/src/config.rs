//! Flat `key = value` configuration.
//!
//! A run's configuration is layered: built-in defaults, then the quick
//! overlay (if requested), then the user's file, then command-line flags.
//! Every key must already exist in the defaults, so typos fail loudly.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config key '{key}': cannot parse '{value}': {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("reading config {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl Config {
    pub fn from_defaults(text: &str) -> Config {
        let values = parse_pairs(text)
            .expect("built-in defaults parse")
            .into_iter()
            .collect();
        Config { values }
    }

    /// Overrides existing keys from `text`.
    pub fn overlay_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (k, v) in parse_pairs(text)? {
            self.set(&k, v)?;
        }
        Ok(())
    }

    pub fn overlay_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.overlay_text(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> Result<(), ConfigError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(ConfigError::UnknownKey(key.to_string())),
        }
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("config key '{key}' missing from defaults"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        let v = self.raw(key);
        v.parse().map_err(|e: T::Err| ConfigError::Value {
            key: key.into(),
            value: v.into(),
            reason: e.to_string(),
        })
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: Display,
    {
        let v = self.raw(key);
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|e: T::Err| ConfigError::Value {
                    key: key.into(),
                    value: v.into(),
                    reason: e.to_string(),
                })
            })
            .collect()
    }

    pub fn bool(&self, key: &str) -> Result<bool, ConfigError> {
        self.get(key)
    }

    /// Canonical text: sorted `key = value` lines.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`Config::render`], hex encoded.
    pub fn hash_hex(&self) -> String {
        Sha256::digest(self.render().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// First eight bytes of the hash, little-endian.
    pub fn hash_u64(&self) -> u64 {
        let d = Sha256::digest(self.render().as_bytes());
        u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
    }
}
