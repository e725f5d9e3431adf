//! Flat `key = value` documents with optional `[section]` headers.
//!
//! Lines starting with `#` are comments. Keys inside a section are looked up
//! by section name; keys before the first header belong to the unnamed
//! section `""`. Order is preserved so that rendering is deterministic.

use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDocument {
    sections: Vec<(String, Vec<(String, String)>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

impl KvDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut doc = Self::new();
        let mut current = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| KvError {
                    line: no + 1,
                    message: "unterminated section header".into(),
                })?;
                current = name.trim().to_string();
                doc.section_mut(&current);
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| KvError {
                line: no + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(KvError {
                    line: no + 1,
                    message: "empty key".into(),
                });
            }
            doc.set(&current, key, v.trim());
        }
        Ok(doc)
    }

    fn section_mut(&mut self, name: &str) -> &mut Vec<(String, String)> {
        let pos = match self.sections.iter().position(|(s, _)| s == name) {
            Some(p) => p,
            None => {
                self.sections.push((name.to_string(), Vec::new()));
                self.sections.len() - 1
            }
        };
        &mut self.sections[pos].1
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        let value = value.into();
        let entries = self.section_mut(section);
        match entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .iter()
            .find(|(s, _)| s == section)
            .and_then(|(_, e)| e.iter().find(|(k, _)| k == key))
            .map(|(_, v)| v.as_str())
    }

    pub fn get_parsed<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, String> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| format!("[{section}] {key}: cannot parse `{v}`")),
        }
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.iter().any(|(s, _)| s == section)
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().map(|(s, _)| s.as_str())
    }

    /// Keys of `section` in insertion order (empty if absent).
    pub fn keys<'a>(&'a self, section: &'a str) -> impl Iterator<Item = &'a str> {
        self.sections
            .iter()
            .filter(move |(s, _)| s == section)
            .flat_map(|(_, e)| e.iter().map(|(k, _)| k.as_str()))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (name, entries)) in self.sections.iter().enumerate() {
            if !name.is_empty() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{name}]");
            }
            for (k, v) in entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}

/// 17 significant digits; round-trips every `f64`.
pub fn fmt_exact(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// 6 significant digits for human-facing summaries.
pub fn fmt_short(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.5e}")
    } else {
        format!("{v}")
    }
}

pub fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| fmt_exact(*v)).collect::<Vec<_>>().join(",")
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("cannot parse list element `{t}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_sections_and_comments() {
        let doc = KvDocument::parse(
            "# comment\nseed = 7\n\n[invariance]\nn = 3,4\ntrials=100\n[trace]\nsamples = 5\n",
        )
        .unwrap();
        assert_eq!(doc.get("", "seed"), Some("7"));
        assert_eq!(doc.get("invariance", "n"), Some("3,4"));
        assert_eq!(doc.get("invariance", "trials"), Some("100"));
        assert_eq!(doc.get_parsed::<usize>("trace", "samples").unwrap(), Some(5));
        assert!(doc.get("trace", "n").is_none());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = KvDocument::parse("a = 1\nnot a pair\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(KvDocument::parse("[open\n").is_err());
        assert!(KvDocument::parse(" = 3\n").is_err());
    }

    #[test]
    fn render_then_parse() {
        let mut doc = KvDocument::new();
        doc.set("", "experiment", "trace");
        doc.set("violation.0", "margin", fmt_exact(-1.5e-3));
        let back = KvDocument::parse(&doc.render()).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn exact_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(fmt_exact(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(parse_list::<f64>(&fmt_list(&[0.1, -3.0])).unwrap(), vec![0.1, -3.0]);
    }
}
