use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `key = value` settings, one per line. `#` starts a comment; blank lines
/// are ignored; a repeated key keeps its last value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValueConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValueConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(idx + 1, format!("expected key = value, found '{line}'")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(idx + 1, "empty key"));
            }
            entries.insert(key.to_string(), (idx + 1, value.trim().to_string()));
        }
        Ok(KeyValueConfig { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        KeyValueConfig::parse(&text)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Typed value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((ln, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::parse(*ln, format!("invalid value '{v}' for '{key}'"))),
        }
    }

    /// Rejects keys outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for (key, (ln, _)) in &self.entries {
            if !known.contains(&key.as_str()) {
                return Err(Error::parse(*ln, format!("unknown setting '{key}'")));
            }
        }
        Ok(())
    }
}
