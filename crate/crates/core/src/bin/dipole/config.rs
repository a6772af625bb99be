//! Flat `key = value` configuration files.
//!
//! One entry per line; `#` starts a comment; blank lines are ignored.
//! Values are taken verbatim after trimming. Command-line flags override
//! file entries, which override built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "DIPOLE_CONFIG";

pub const KEYS: [&str; 11] = [
    "model",
    "seed",
    "out",
    "emit_table",
    "abs_tol",
    "rel_tol",
    "max_depth",
    "truncation_radius",
    "pole_margin",
    "eps0",
    "eps_levels",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Syntax { path: String, line: usize, msg: String },
}

/// Parsed entries with the line each came from.
#[derive(Debug, Default)]
pub struct FileConfig {
    path: String,
    entries: BTreeMap<String, (usize, String)>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn parse(path: &str, text: &str) -> Result<Self, ConfigError> {
        let err = |line: usize, msg: String| ConfigError::Syntax {
            path: path.to_string(),
            line,
            msg,
        };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected key = value, got '{body}'")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(err(line, format!("unknown key '{k}' (known: {})", KEYS.join(", "))));
            }
            if v.is_empty() {
                return Err(err(line, format!("empty value for '{k}'")));
            }
            if let Some((first, _)) = entries.insert(k.to_string(), (line, v.to_string())) {
                return Err(err(line, format!("duplicate key '{k}' (first on line {first})")));
            }
        }
        Ok(FileConfig {
            path: path.to_string(),
            entries,
        })
    }

    /// Typed value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| ConfigError::Syntax {
                path: self.path.clone(),
                line: *line,
                msg: format!("bad value for '{key}': {e}"),
            }),
        }
    }

    pub fn path_value(&self, key: &str) -> Option<PathBuf> {
        self.entries.get(key).map(|(_, v)| PathBuf::from(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let c = FileConfig::parse("c", "# header\nrel_tol = 1e-8  # tighter\n\nseed=3\n").unwrap();
        assert_eq!(c.get::<f64>("rel_tol").unwrap(), Some(1e-8));
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(3));
        assert_eq!(c.get::<u64>("max_depth").unwrap(), None);
    }

    #[test]
    fn reports_lines() {
        let e = FileConfig::parse("c", "seed = 1\nbogus = 2\n").unwrap_err();
        assert!(e.to_string().starts_with("c:2:"), "{e}");
        let e = FileConfig::parse("c", "seed 1\n").unwrap_err();
        assert!(e.to_string().starts_with("c:1:"), "{e}");
        let c = FileConfig::parse("c", "\nseed = x\n").unwrap();
        assert!(c.get::<u64>("seed").unwrap_err().to_string().starts_with("c:2:"));
    }
}
