//! Flat `key = value` configuration files with `[section]` headers.
//!
//! Grammar, one construct per line:
//!
//! ```text
//! # comment            (also allowed after a value)
//! [section-name]
//! key = value
//! ```
//!
//! Keys before the first header belong to the section `""`. Section and key
//! names are case-sensitive; values are trimmed. Repeating a key within a
//! section is an error.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| BenchError::Config {
                    line: line_no,
                    message: format!("unterminated section header `{line}`"),
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(BenchError::Config {
                        line: line_no,
                        message: "empty section name".into(),
                    });
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BenchError::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(BenchError::Config {
                    line: line_no,
                    message: "empty key".into(),
                });
            }
            let section = sections.entry(current.clone()).or_default();
            if section
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(BenchError::Config {
                    line: line_no,
                    message: format!("duplicate key `{key}` in section [{current}]"),
                });
            }
        }
        Ok(Config { sections })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path.as_ref()).map_err(|e| BenchError::io(path.as_ref(), e))?;
        Self::parse(&text)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(String::as_str)
    }

    /// Sets a value, creating the section if needed.
    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.into());
    }

    pub fn keys(&self, section: &str) -> impl Iterator<Item = &str> {
        self.sections
            .get(section)
            .into_iter()
            .flat_map(|s| s.keys().map(String::as_str))
    }

    /// Parsed value, or `default` when the key is absent.
    pub fn parse_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => parse_value(section, key, v),
        }
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.get(section, key).ok_or_else(|| {
            BenchError::Setting(format!("missing key `{key}` in section [{section}]"))
        })?;
        parse_value(section, key, v)
    }

    /// Comma-separated list, or `default` when the key is absent.
    pub fn list_or<T: FromStr>(&self, section: &str, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => split_list(v)
                .map(|item| parse_value(section, key, item))
                .collect(),
        }
    }
}

pub fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_value<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e: T::Err| BenchError::Setting(format!("[{section}] {key} = `{v}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let cfg =
            Config::parse("top = 1\n# note\n[a]\nx = 2 # trailing\ny=hello world\n\n[b]\nx = 3\n")
                .unwrap();
        assert_eq!(cfg.get("", "top"), Some("1"));
        assert_eq!(cfg.get("a", "x"), Some("2"));
        assert_eq!(cfg.get("a", "y"), Some("hello world"));
        assert_eq!(cfg.parse_or::<u32>("b", "x", 0).unwrap(), 3);
        assert_eq!(cfg.parse_or::<u32>("b", "z", 9).unwrap(), 9);
    }

    #[test]
    fn reports_line_numbers() {
        let err = Config::parse("[a]\nx = 1\nnot a pair\n").unwrap_err();
        assert!(err.to_string().contains("line 3"));
        let err = Config::parse("[a]\nx = 1\nx = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        assert!(Config::parse("[a\n").is_err());
    }

    #[test]
    fn lists_and_typed_errors() {
        let cfg = Config::parse("[s]\nseeds = 1, 2,3\nbad = x\n").unwrap();
        assert_eq!(
            cfg.list_or::<u64>("s", "seeds", vec![]).unwrap(),
            vec![1, 2, 3]
        );
        assert!(cfg.parse_or::<u64>("s", "bad", 0).is_err());
        assert!(cfg.require::<u64>("s", "missing").is_err());
    }
}
