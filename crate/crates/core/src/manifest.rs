//! Plain-text `key = value` manifests.
//!
//! Blank lines and `#` comments are ignored. Keys may repeat; [`Manifest::get`]
//! returns the last value and [`Manifest::get_all`] every value in file order.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<Entry>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Manifest {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Manifest {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            entries.push(Entry {
                line: i + 1,
                key: key.to_string(),
                value: value.trim().to_string(),
            });
        }
        Ok(Manifest {
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.value.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    /// Parse the last value of `key`, if present.
    pub fn parse_value<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| Error::Manifest {
                    line: e.line,
                    message: format!("`{}`: {err}", e.key),
                }),
        }
    }
}

/// Comma- or whitespace-separated list.
pub fn split_list(value: &str) -> Vec<String> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_repeats_and_last_wins() {
        let m = Manifest::parse(
            "# c\nseed = 3\n\nrun = wine 9 # inline\nrun = auto 4\nseed=5\n",
            "/d",
        )
        .unwrap();
        assert_eq!(m.get("seed"), Some("5"));
        let runs: Vec<&str> = m.get_all("run").map(|e| e.value.as_str()).collect();
        assert_eq!(runs, vec!["wine 9", "auto 4"]);
        assert_eq!(m.parse_value::<u64>("seed").unwrap(), Some(5));
        assert_eq!(m.parse_value::<u64>("missing").unwrap(), None);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match Manifest::parse("a = 1\nnot a pair\n", ".") {
            Err(Error::Manifest { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let m = Manifest::parse("seed = x\n", ".").unwrap();
        assert!(matches!(
            m.parse_value::<u64>("seed"),
            Err(Error::Manifest { line: 1, .. })
        ));
    }

    #[test]
    fn lists() {
        assert_eq!(split_list("a, b c"), vec!["a", "b", "c"]);
    }
}
