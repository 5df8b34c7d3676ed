//! Flat `key = value` configuration text, number lists, and manifest headers.
//!
//! ```text
//! # comment
//! seed = 7
//! angles = 0, 90, 225, 315   # degrees
//! ```
//!
//! Keys are case-sensitive; `_` and `-` are interchangeable and normalized
//! to `-`. A key may appear at most once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },

    #[error("line {line}: key `{key}` appears more than once")]
    DuplicateKey { line: usize, key: String },

    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("invalid list: {0}")]
    List(String),
}

/// Parsed key/value pairs in key order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(&normalize_key(key)).map(String::as_str)
    }

    /// Inserts or replaces `key`.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(normalize_key(key), value.into());
    }

    /// Entries of `other` replace entries of `self`.
    pub fn overlay(&mut self, other: &KeyValues) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.0.remove(&normalize_key(key))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key).map(|v| parse_value(key, v)).transpose()
    }

    /// Renders as config text that [`parse_key_values`] reads back.
    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

impl FromIterator<(String, String)> for KeyValues {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        KeyValues(iter.into_iter().map(|(k, v)| (normalize_key(&k), v)).collect())
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.')
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<(String, String)>, ConfigError> {
    let content = line.split_once('#').map_or(line, |(before, _)| before).trim();
    if content.is_empty() {
        return Ok(None);
    }
    let Some((key, value)) = content.split_once('=') else {
        return Err(ConfigError::Syntax {
            line: lineno,
            reason: format!("expected `key = value`, got `{content}`"),
        });
    };
    let key = normalize_key(key);
    if !valid_key(&key) {
        return Err(ConfigError::Syntax {
            line: lineno,
            reason: format!("invalid key `{key}`"),
        });
    }
    Ok(Some((key, value.trim().to_string())))
}

fn collect_lines<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<KeyValues, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in lines {
        if let Some((key, value)) = parse_line(line, lineno)? {
            if map.contains_key(&key) {
                return Err(ConfigError::DuplicateKey { line: lineno, key });
            }
            map.insert(key, value);
        }
    }
    Ok(KeyValues(map))
}

/// Parses config text.
pub fn parse_key_values(text: &str) -> Result<KeyValues, ConfigError> {
    collect_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
}

/// Reads the `# key=value` comment lines at the top of a CSV file. Reading
/// stops at the first line that does not start with `#`; comment lines
/// without `=` are ignored.
pub fn parse_manifest_header(text: &str) -> Result<KeyValues, ConfigError> {
    collect_lines(
        text.lines()
            .enumerate()
            .take_while(|(_, l)| l.starts_with('#'))
            .map(|(i, l)| (i + 1, l.trim_start_matches('#')))
            .filter(|(_, l)| l.contains('=')),
    )
}

/// Comma-separated finite numbers, e.g. `0, 90, 225.5` or `0.1,0.5`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NumberList(pub Vec<f64>);

impl FromStr for NumberList {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        if s.trim().is_empty() {
            return Err(ConfigError::List("empty list".into()));
        }
        s.split(',')
            .map(|item| {
                let item = item.trim();
                match item.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(ConfigError::List(format!("`{item}` is not a finite number"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(NumberList)
    }
}

impl fmt::Display for NumberList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Exactly four angles in degrees, `a,a′,b,b′`.
pub fn parse_angle_list(s: &str) -> Result<[f64; 4], ConfigError> {
    let list: NumberList = s.parse()?;
    list.0
        .try_into()
        .map_err(|v: Vec<f64>| ConfigError::List(format!("expected 4 angles, got {}", v.len())))
}

/// Reads typed values with defaults and records what was used, so the full
/// resolved configuration can be written back out.
#[derive(Debug, Clone)]
pub struct Resolver {
    source: KeyValues,
    resolved: KeyValues,
    known: BTreeSet<String>,
}

impl Resolver {
    pub fn new(source: KeyValues) -> Self {
        Resolver {
            source,
            resolved: KeyValues::new(),
            known: BTreeSet::new(),
        }
    }

    /// Value of `key`, or `default` when absent.
    pub fn get<T>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        let value = self.get_opt(key)?.unwrap_or(default);
        self.resolved.set(key, value.to_string());
        Ok(value)
    }

    /// Value of `key` if present; absent keys are not recorded.
    pub fn get_opt<T>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        self.known.insert(normalize_key(key));
        let value: Option<T> = self.source.parsed(key)?;
        if let Some(v) = &value {
            self.resolved.set(key, v.to_string());
        }
        Ok(value)
    }

    /// Marks keys as accepted without reading them.
    pub fn allow(&mut self, keys: &[&str]) {
        self.known.extend(keys.iter().map(|k| normalize_key(k)));
    }

    /// Resolved values; fails on keys nobody asked for.
    pub fn finish(self) -> Result<KeyValues, ConfigError> {
        if let Some((k, _)) = self.source.iter().find(|(k, _)| !self.known.contains(*k)) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        Ok(self.resolved)
    }
}
