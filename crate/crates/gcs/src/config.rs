//! `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment. Numeric parameters accept
//! four forms:
//!
//! | form          | meaning                                  |
//! |---------------|------------------------------------------|
//! | `17`          | fixed value                              |
//! | `15,16,17`    | list; training expands it into one job each, test sweeps use it as an axis |
//! | `15:20`       | uniform draw per batch                   |
//! | `log:lo:hi`   | log-uniform draw per batch               |

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use gcs_core::autoencoder::SamplingRule;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Fixed(f64),
    List(Vec<f64>),
    Uniform(f64, f64),
    LogUniform(f64, f64),
}

impl Param {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let t = text.trim();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("not a number: {:?}", s.trim()));
        if let Some(rest) = t.strip_prefix("log:") {
            let (a, b) = rest.split_once(':').ok_or_else(|| format!("expected log:lo:hi, got {t:?}"))?;
            let (lo, hi) = (num(a)?, num(b)?);
            if !(lo > 0.0 && lo <= hi) {
                return Err(format!("log-uniform range needs 0 < lo <= hi, got {t:?}"));
            }
            return Ok(Param::LogUniform(lo, hi));
        }
        if let Some((a, b)) = t.split_once(':') {
            let (lo, hi) = (num(a)?, num(b)?);
            if !(lo <= hi) {
                return Err(format!("uniform range needs lo <= hi, got {t:?}"));
            }
            return Ok(Param::Uniform(lo, hi));
        }
        if t.contains(',') {
            let v = t.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?;
            return Ok(Param::List(v));
        }
        let v = num(t)?;
        if !v.is_finite() {
            return Err(format!("not finite: {t:?}"));
        }
        Ok(Param::Fixed(v))
    }

    /// Values a training job grid iterates over; ranges count as one entry.
    pub fn job_values(&self) -> Vec<Option<f64>> {
        match self {
            Param::Fixed(v) => vec![Some(*v)],
            Param::List(v) => v.iter().map(|x| Some(*x)).collect(),
            _ => vec![None],
        }
    }

    /// Sampling rule for one job; `fixed` is that job's list entry.
    pub fn rule(&self, fixed: Option<f64>) -> SamplingRule {
        match (self, fixed) {
            (_, Some(v)) => SamplingRule::Fixed(v),
            (Param::Uniform(lo, hi), None) => SamplingRule::Uniform { lo: *lo, hi: *hi },
            (Param::LogUniform(lo, hi), None) => SamplingRule::LogUniform { lo: *lo, hi: *hi },
            (Param::Fixed(v), None) => SamplingRule::Fixed(*v),
            (Param::List(v), None) => SamplingRule::Fixed(v[0]),
        }
    }

    /// Axis values for a test sweep; ranges are rejected by the caller.
    pub fn axis(&self) -> Option<Vec<f64>> {
        match self {
            Param::Fixed(v) => Some(vec![*v]),
            Param::List(v) => Some(v.clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
pub struct ConfigFile {
    label: String,
    entries: BTreeMap<String, Entry>,
}

impl ConfigFile {
    pub fn parse(label: &str, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| Error::Config {
                path: label.into(),
                line,
                msg: format!("expected key = value, got {content:?}"),
            })?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config {
                    path: label.into(),
                    line,
                    msg: "empty key".into(),
                });
            }
            let entry = Entry {
                value: v.trim().to_string(),
                line,
            };
            if let Some(prev) = entries.insert(key.clone(), entry) {
                return Err(Error::Config {
                    path: label.into(),
                    line,
                    msg: format!("duplicate key {key:?} (first on line {})", prev.line),
                });
            }
        }
        Ok(ConfigFile {
            label: label.into(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    /// Splits off the keys starting with `prefix`; the returned section has
    /// the prefix stripped, `self` keeps the rest.
    pub fn take_section(&mut self, prefix: &str) -> ConfigFile {
        let keys: Vec<String> = self.entries.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
        let mut entries = BTreeMap::new();
        for k in keys {
            let e = self.entries.remove(&k).expect("key listed above");
            entries.insert(k[prefix.len()..].to_string(), e);
        }
        ConfigFile {
            label: self.label.clone(),
            entries,
        }
    }

    /// Resolves a path value relative to the directory of the file.
    pub fn path(&self, key: &str) -> Option<std::path::PathBuf> {
        self.string(key).map(|v| self.resolve(v))
    }

    pub fn resolve(&self, value: &str) -> std::path::PathBuf {
        let p = Path::new(value);
        if p.is_absolute() {
            return p.to_path_buf();
        }
        match Path::new(&self.label).parent() {
            Some(dir) if !dir.as_os_str().is_empty() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn error(&self, key: &str, msg: impl Into<String>) -> Error {
        Error::Config {
            path: self.label.clone(),
            line: self.entries.get(key).map_or(0, |e| e.line),
            msg: format!("{key}: {}", msg.into()),
        }
    }

    /// Rejects keys outside `allowed`, so typos do not silently fall back
    /// to defaults.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(self.error(key, "unknown key"));
            }
        }
        Ok(())
    }

    pub fn string(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.string(key).ok_or_else(|| Error::Config {
            path: self.label.clone(),
            line: 0,
            msg: format!("missing key {key:?}"),
        })
    }

    pub fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.string(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.error(key, format!("cannot parse {s:?}"))),
        }
    }

    pub fn value_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.value(key)?.unwrap_or(default))
    }

    pub fn param(&self, key: &str) -> Result<Option<Param>> {
        match self.string(key) {
            None => Ok(None),
            Some(s) => Param::parse(s).map(Some).map_err(|m| self.error(key, m)),
        }
    }

    pub fn require_param(&self, key: &str) -> Result<Param> {
        self.param(key)?.ok_or_else(|| Error::Config {
            path: self.label.clone(),
            line: 0,
            msg: format!("missing key {key:?}"),
        })
    }

    /// A fixed value or list, e.g. a test-sweep axis.
    pub fn axis(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.param(key)? {
            None => Ok(None),
            Some(p) => p
                .axis()
                .map(Some)
                .ok_or_else(|| self.error(key, "expected a value or a comma-separated list, not a range")),
        }
    }

    pub fn list(&self, key: &str) -> Option<Vec<String>> {
        self.string(key).map(|s| {
            s.split(',')
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect()
        })
    }
}
