//! Flat key/value config files.
//!
//! Shared grammar for schema and behavior-profile configs:
//!
//! ```text
//! # comment                 -- '#' starts a comment, whole line only
//!                           -- blank lines are ignored
//! key = value               -- exactly one '=' per line; both sides trimmed
//! ```
//!
//! Keys may repeat only where the consumer allows it (schema columns are
//! ordered and must be unique; the parser preserves file order and line
//! numbers for error reporting).

use crate::error::{Error, Result};

/// One parsed `key = value` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvEntry {
    pub key: String,
    pub value: String,
    /// 1-based line number in the source text.
    pub line: usize,
}

/// An ordered list of key/value entries.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: Vec<KvEntry>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<KvFile> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("expected 'key = value', found '{trimmed}'"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::ConfigParse {
                    line,
                    msg: "empty key".into(),
                });
            }
            entries.push(KvEntry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(KvFile { entries })
    }

    pub fn entries(&self) -> &[KvEntry] {
        &self.entries
    }

    /// Last value for `key`, if any.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.key == key)
            .map(|e| e.value.as_str())
    }

    /// Parse the value for `key` as an `f64`, reporting the line on failure.
    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.iter().rev().find(|e| e.key == key) {
            None => Ok(None),
            Some(e) => e.value.parse::<f64>().map(Some).map_err(|_| Error::ConfigParse {
                line: e.line,
                msg: format!("'{}' is not a number", e.value),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_pairs() {
        let kv = KvFile::parse("# header\n\na = 1\n  b = two words  \n").unwrap();
        assert_eq!(kv.entries().len(), 2);
        assert_eq!(kv.get("a"), Some("1"));
        assert_eq!(kv.get("b"), Some("two words"));
        assert_eq!(kv.entries()[1].line, 4);
    }

    #[test]
    fn rejects_lines_without_equals() {
        let err = KvFile::parse("a = 1\nnot a pair\n").unwrap_err();
        match err {
            Error::ConfigParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn rejects_empty_key() {
        assert!(KvFile::parse("= 3\n").is_err());
    }

    #[test]
    fn get_f64_reports_line() {
        let kv = KvFile::parse("x = abc").unwrap();
        let err = kv.get_f64("x").unwrap_err();
        match err {
            Error::ConfigParse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error: {other}"),
        }
    }
}
