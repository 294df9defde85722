//! Flat key=value run configuration with CLI overrides.
//!
//! The file format is deliberately schema-free: one `key = value` per line,
//! `#` comments, whitespace ignored. CLI flags override file values, which
//! override built-in defaults. Every resolved value ends up in the report
//! header so a run is reproducible from its own output.

use pinlab::disorder::DisorderLaw;
use pinlab::{Budget, Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::invalid("config", format!("cannot read {}: {e}", path.display()))
        })?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::invalid(
                    "config",
                    format!("line {}: expected key = value, got `{raw}`", lineno + 1),
                ));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn set_if_absent(&mut self, key: &str, value: impl ToString) {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::invalid(key, "missing required configuration key"))?;
        raw.parse()
            .map_err(|_| Error::invalid(key, format!("cannot parse `{raw}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.parse(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parse(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.parse(key)
    }

    /// Comma-separated u64 grid.
    pub fn u64_grid(&self, key: &str) -> Result<Vec<u64>> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::invalid(key, "missing required grid"))?;
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::invalid(key, format!("bad grid entry `{p}`")))
            })
            .collect()
    }

    /// Comma-separated f64 grid.
    pub fn f64_grid(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::invalid(key, "missing required grid"))?;
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::invalid(key, format!("bad grid entry `{p}`")))
            })
            .collect()
    }

    /// Disorder law descriptor: `gaussian` or `two-point:a`.
    pub fn law(&self) -> Result<DisorderLaw> {
        match self.get("law").unwrap_or("gaussian") {
            "gaussian" => Ok(DisorderLaw::Gaussian),
            other => {
                if let Some(a) = other.strip_prefix("two-point:") {
                    let a: f64 = a
                        .parse()
                        .map_err(|_| Error::invalid("law", format!("bad amplitude in `{other}`")))?;
                    Ok(DisorderLaw::TwoPoint { a })
                } else {
                    Err(Error::invalid(
                        "law",
                        format!("unknown disorder law `{other}` (gaussian | two-point:a)"),
                    ))
                }
            }
        }
    }

    pub fn budget(&self) -> Result<Budget> {
        match self.get("budget") {
            None => Ok(Budget::default()),
            Some(_) => Ok(Budget::from_ops(self.u64("budget")?)),
        }
    }
}
