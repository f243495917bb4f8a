//! Reader for the sectioned key-value config format.
//!
//! Grammar, one construct per line after trimming surrounding whitespace:
//!
//! ```text
//! line     := blank | comment | section | pair
//! comment  := ('#' | ';') any*
//! section  := '[' name ']'
//! pair     := name '=' value [ws '#' any*]
//! name     := [A-Za-z0-9_.-]+
//! value    := any* (trimmed; may be empty)
//! ```
//!
//! Pairs before the first section, repeated sections and repeated keys
//! within a section are errors. A `#` preceded by whitespace starts a
//! trailing comment, so values cannot contain ` #`.

use crate::{LabError, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    /// Line number in the source (1-based); 0 for values set programmatically.
    pub line: usize,
}

/// Parsed document: section → key → entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ini {
    pub sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

fn strip_comment(v: &str) -> &str {
    let bytes = v.as_bytes();
    for i in 1..bytes.len() {
        if bytes[i] == b'#' && bytes[i - 1].is_ascii_whitespace() {
            return &v[..i];
        }
    }
    v
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self> {
        let mut ini = Ini::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| LabError::ConfigError(format!("line {line_no}: unterminated section header")))?
                    .trim();
                if !valid_name(name) {
                    return Err(LabError::ConfigError(format!("line {line_no}: invalid section name '{name}'")));
                }
                if ini.sections.contains_key(name) {
                    return Err(LabError::ConfigError(format!("line {line_no}: section [{name}] repeated")));
                }
                ini.sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::ConfigError(format!("line {line_no}: expected 'key = value'")))?;
            let key = k.trim();
            if !valid_name(key) {
                return Err(LabError::ConfigError(format!("line {line_no}: invalid key '{key}'")));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| LabError::ConfigError(format!("line {line_no}: '{key}' appears before any section")))?;
            let value = strip_comment(v).trim().to_string();
            let sec = ini.sections.get_mut(section).expect("section exists");
            if sec.contains_key(key) {
                return Err(LabError::ConfigError(format!("line {line_no}: key '{key}' repeated in [{section}]")));
            }
            sec.insert(key.to_string(), Entry { value, line: line_no });
        }
        Ok(ini)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(|e| e.value.as_str())
    }

    /// Set `section.key`, replacing any earlier value.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), Entry { value: value.to_string(), line: 0 });
    }

    /// Apply a `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (path, value) =
            spec.split_once('=').ok_or_else(|| LabError::ConfigError(format!("override '{spec}' is not section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| LabError::ConfigError(format!("override '{spec}' needs a section.key path")))?;
        if !valid_name(section) || !valid_name(key) {
            return Err(LabError::ConfigError(format!("override '{spec}' has an invalid name")));
        }
        self.set(section, key, value.trim());
        Ok(())
    }

    /// Serialize back to text, sections and keys in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, sec) in &self.sections {
            out.push_str(&format!("[{name}]\n"));
            for (k, e) in sec {
                out.push_str(&format!("{k} = {}\n", e.value));
            }
            out.push('\n');
        }
        out
    }

    pub fn location(&self, section: &str, key: &str) -> String {
        match self.sections.get(section).and_then(|s| s.get(key)) {
            Some(e) if e.line > 0 => format!("{section}.{key} (line {})", e.line),
            _ => format!("{section}.{key}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_trailing_comments() {
        let ini = Ini::parse("# top\n[a]\nx = 1  # one\ny=two words\n\n; semi\n[b]\nz =\n").unwrap();
        assert_eq!(ini.get("a", "x"), Some("1"));
        assert_eq!(ini.get("a", "y"), Some("two words"));
        assert_eq!(ini.get("b", "z"), Some(""));
        assert_eq!(ini.get("b", "x"), None);
    }

    #[test]
    fn hash_inside_a_token_is_kept() {
        let ini = Ini::parse("[a]\np = out#1.csv\n").unwrap();
        assert_eq!(ini.get("a", "p"), Some("out#1.csv"));
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["x = 1\n", "[a\n", "[a]\n[a]\n", "[a]\nx=1\nx=2\n", "[a]\nnovalue\n", "[a b]\n", "[a]\nk k = 1\n"] {
            assert!(matches!(Ini::parse(bad), Err(LabError::ConfigError(_))), "{bad:?}");
        }
    }

    #[test]
    fn errors_name_the_line() {
        let e = Ini::parse("[a]\nx = 1\nbroken\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn overrides_and_round_trip() {
        let mut ini = Ini::parse("[run]\niterations = 10\n").unwrap();
        ini.apply_override("run.iterations=20").unwrap();
        ini.apply_override("schedule.tau = 0.1").unwrap();
        assert_eq!(ini.get("run", "iterations"), Some("20"));
        assert_eq!(ini.get("schedule", "tau"), Some("0.1"));
        let again = Ini::parse(&ini.to_text()).unwrap();
        assert_eq!(again.get("schedule", "tau"), Some("0.1"));
        assert!(ini.apply_override("nodot=1").is_err());
        assert!(ini.apply_override("a.b").is_err());
    }
}
