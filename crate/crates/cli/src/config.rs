use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

/// `key = value` settings read from a config file. Keys accept either
/// dashes or underscores; `#` starts a comment.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`", no + 1);
            };
            let key = key.trim().replace('_', "-");
            let value = value.trim().trim_matches('"').to_string();
            if key.is_empty() {
                bail!("line {}: empty key", no + 1);
            }
            if values.insert(key.clone(), value).is_some() {
                bail!("line {}: duplicate key `{key}`", no + 1);
            }
        }
        Ok(FileConfig { values })
    }

    /// Fails on keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.values.keys() {
            if !allowed.contains(&key.as_str()) {
                bail!("unknown config key `{key}` (expected one of: {})", allowed.join(", "));
            }
        }
        Ok(())
    }

    /// `flag`, else the file value for `key`, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key `{key}`: {e}")),
            None => Ok(None),
        }
    }

    pub fn require<T>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.pick(flag, key)?
            .with_context(|| format!("missing --{key} (flag or config file)"))
    }
}
