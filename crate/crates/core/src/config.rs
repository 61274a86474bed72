//! Flat `key = value` configuration files.
//!
//! One entry per line; `#` starts a comment; blank lines are ignored. Lists
//! are comma separated. Later duplicates override earlier ones.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("key {key:?}: cannot parse {value:?}")]
    Value { key: String, value: String },
    #[error("missing required key {0:?}")]
    Missing(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: idx + 1 })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: idx + 1 });
            }
            entries.insert(key.to_ascii_lowercase(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::Value {
                    key: key.into(),
                    value: v.into(),
                })
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|item| {
                        item.parse().map_err(|_| ConfigError::Value {
                            key: key.into(),
                            value: item.into(),
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn require_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError> {
        self.get_list(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }
}
