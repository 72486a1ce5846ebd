//! Flat `key = value` text configuration.
//!
//! One entry per line, `#` starts a comment, keys are dotted paths such as
//! `segment.thigh.mass_fraction`. Every entry remembers its line so that
//! later semantic checks can still point at the offending line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed key-value file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    source: String,
    entries: BTreeMap<String, Entry>,
}

impl KeyValues {
    pub fn parse(source: &str, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(located(source, line, "expected `key = value`"));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(located(source, line, format!("bad key '{key}'")));
            }
            if value.is_empty() {
                return Err(located(source, line, format!("{key}: missing value")));
            }
            let prev = entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
            if let Some(prev) = prev {
                return Err(located(
                    source,
                    line,
                    format!("{key}: duplicate key (first set on line {})", prev.line),
                ));
            }
        }
        Ok(KeyValues {
            source: source.to_string(),
            entries,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        let Some(entry) = self.entries.get(key) else {
            return Ok(None);
        };
        match entry.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.error_at(key, format!("'{}' is not a finite number", entry.value))),
        }
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        let Some(entry) = self.entries.get(key) else {
            return Ok(None);
        };
        match entry.value.to_ascii_lowercase().as_str() {
            "true" | "on" | "yes" | "1" => Ok(Some(true)),
            "false" | "off" | "no" | "0" => Ok(Some(false)),
            other => Err(self.error_at(key, format!("'{other}' is not a boolean"))),
        }
    }

    /// Error tagged with the line of `key`, or line 0 when the key is absent.
    pub fn error_at(&self, key: &str, message: impl std::fmt::Display) -> Error {
        located(
            &self.source,
            self.line_of(key).unwrap_or(0),
            format!("{key}: {message}"),
        )
    }

    /// Rejects keys that match none of the accepted prefixes.
    pub fn reject_unknown(&self, accepted: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            let known = accepted.iter().any(|p| {
                if let Some(stem) = p.strip_suffix('*') {
                    key.starts_with(stem)
                } else {
                    key == p
                }
            });
            if !known {
                return Err(self.error_at(key, "unknown key"));
            }
        }
        Ok(())
    }

    /// Entries in key order, for manifests.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect()
    }
}

fn located(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse(ParseError {
        source: source.to_string(),
        line,
        column: None,
        message: message.into(),
    })
}

/// Renders entries as `key = value` lines. Floats use the shortest
/// representation that parses back to the same bits.
pub fn render(entries: &[(String, f64)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k} = {v:?}");
    }
    out
}
