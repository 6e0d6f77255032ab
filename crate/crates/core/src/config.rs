//! Flat `key=value` experiment configuration and seed derivation.
//!
//! ```text
//! # comments start with '#'
//! seed=42
//! descriptor.name=hog
//! descriptor.cell=8
//! classifier.name=fine-gaussian-svm
//! ```
//!
//! Keys are free-form dotted paths; command-line flags override file values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::mix_seed;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{raw}'", n + 1)))?;
            let key = key.trim();
            let valid = !key.is_empty()
                && key.split('.').all(|part| {
                    !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                });
            if !valid {
                return Err(Error::Config(format!("line {}: bad key '{key}'", n + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", n + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => e.into(),
        })?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    /// Typed lookup; a present but unparsable value is an error.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'"))),
        }
    }

    /// `flag` if given, else the file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// 64-bit FNV-1a.
fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Seed for a named stage (`"synth"`, `"folds"`, `"model"`, ...) under one
/// top-level seed.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    mix_seed(seed, fnv1a(stage))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_keys() {
        let c = Config::parse("# exp\nseed = 7\ndescriptor.name=hog\ndescriptor.cell=8 # inline\n\n").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(c.raw("descriptor.name"), Some("hog"));
        assert_eq!(c.get::<usize>("descriptor.cell").unwrap(), Some(8));
        assert_eq!(c.get::<usize>("missing").unwrap(), None);
        assert!(c.get::<usize>("descriptor.name").is_err());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("novalue").is_err());
        assert!(Config::parse("a..b=1").is_err());
        assert!(Config::parse("a=1\na=2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let c = Config::parse("cv.folds=10").unwrap();
        assert_eq!(c.pick(Some(5usize), "cv.folds", 3).unwrap(), 5);
        assert_eq!(c.pick(None, "cv.folds", 3usize).unwrap(), 10);
        assert_eq!(c.pick(None, "other", 3usize).unwrap(), 3);
    }

    #[test]
    fn stage_seeds_differ_and_repeat() {
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(stage_seed(1, "folds"), stage_seed(1, "folds"));
        assert_ne!(stage_seed(1, "folds"), stage_seed(1, "model"));
        assert_ne!(stage_seed(1, "folds"), stage_seed(2, "folds"));
    }
}
