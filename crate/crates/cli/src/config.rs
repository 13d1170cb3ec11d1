//! Flat key-value experiment configuration: a TOML file of scalars, with
//! command-line flags overriding file values. The effective configuration is
//! hashed so every artifact can embed the exact settings that produced it.

use periocular::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Directory of the config file; relative paths resolve against it.
    base_dir: PathBuf,
}

fn scalar_to_string(key: &str, value: &toml::Value) -> Result<String> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(Error::Usage(format!(
            "config key {key:?} must be a scalar, got {}",
            other.type_str()
        ))),
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Usage(format!("bad config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            values.insert(key.clone(), scalar_to_string(&key, &value)?);
        }
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(Config { values, base_dir })
    }

    pub fn empty() -> Config {
        Config::default()
    }

    /// Flag overrides win over file values.
    pub fn set_override(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Usage(format!("config key {key:?} is required")))
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("config key {key:?} has bad value {raw:?}"))),
        }
    }

    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get_parsed(key)?.unwrap_or(default))
    }

    /// Comma-separated list values.
    pub fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|part| {
                    part.trim().parse().map_err(|_| {
                        Error::Usage(format!("config key {key:?} has bad element {part:?}"))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Resolve a path value against the config file's directory.
    pub fn resolve_path(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Hash of the effective (post-override) configuration.
    pub fn hash(&self) -> String {
        let mut canonical = String::new();
        for (k, v) in &self.values {
            canonical.push_str(k);
            canonical.push('=');
            canonical.push_str(v);
            canonical.push('\n');
        }
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The settings as stored, for embedding in report archives.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_and_applies_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "seed = 7\nmanifest = \"data/m.csv\"\ntrain_fraction = 0.6\n")
            .unwrap();
        let mut cfg = Config::from_file(&path).unwrap();
        assert_eq!(cfg.get_or("seed", 0u64).unwrap(), 7);
        assert_eq!(cfg.get_or("train_fraction", 0.5f64).unwrap(), 0.6);
        let before = cfg.hash();
        cfg.set_override("seed", 9);
        assert_eq!(cfg.get_or("seed", 0u64).unwrap(), 9);
        assert_ne!(cfg.hash(), before);
        assert!(cfg.resolve_path("data/m.csv").starts_with(dir.path()));
    }

    #[test]
    fn rejects_non_scalar_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "nested = { a = 1 }\n").unwrap();
        assert!(Config::from_file(&path).is_err());
    }

    #[test]
    fn hash_is_stable_across_instances() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "a = 1\nb = \"x\"\n").unwrap();
        let h1 = Config::from_file(&path).unwrap().hash();
        let h2 = Config::from_file(&path).unwrap().hash();
        assert_eq!(h1, h2);
    }

    #[test]
    fn parses_comma_lists() {
        let mut cfg = Config::empty();
        cfg.set_override("thresholds", "0.0, 0.001,0.02");
        let list: Vec<f64> = cfg.get_list("thresholds").unwrap().unwrap();
        assert_eq!(list, vec![0.0, 0.001, 0.02]);
    }
}
