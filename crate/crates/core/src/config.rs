//! Plain-text run recipes and grid syntax.
//!
//! A recipe has one `key = value` per line; `#` starts a comment. Keys match the
//! command-line flag names without the leading dashes.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    entries: Vec<(String, String)>,
}

impl ConfigFile {
    /// Last value given for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn parse_value<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::InvalidConfig(format!("key '{key}': {e}")))
            })
            .transpose()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("line {}: expected 'key = value', got '{line}'", n + 1))
        })?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::InvalidConfig(format!("line {}: bad key '{key}'", n + 1)));
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(ConfigFile { entries })
}

pub fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// `start:stop:step` (both ends included) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::InvalidConfig(format!("grid '{text}': {what}"));
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(&format!("'{}' is not a finite number", s.trim())))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [list] => list.split(',').map(num).collect(),
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 || stop < start {
                return Err(bad("need step > 0 and stop >= start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // snap to 12 decimals so 0.05 * 3 prints as 0.15
            Ok((0..=n)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        _ => Err(bad("expected start:stop:step or a comma list")),
    }
}

/// `a:b` (both ends included) or a comma-separated list of integers.
pub fn parse_int_list(text: &str) -> Result<Vec<isize>> {
    let bad = |s: &str| Error::InvalidConfig(format!("'{s}' is not an integer"));
    let int = |s: &str| s.trim().parse::<isize>().map_err(|_| bad(s.trim()));
    match text.split_once(':') {
        Some((a, b)) => {
            let (a, b) = (int(a)?, int(b)?);
            if b < a {
                return Err(Error::InvalidConfig(format!("empty range '{text}'")));
            }
            Ok((a..=b).collect())
        }
        None => text.split(',').map(int).collect(),
    }
}
