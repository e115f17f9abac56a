use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Plain-text `key = value` file with optional `[section]` headers.
///
/// Keys inside a section are stored as `section.key`. `#` starts a comment
/// line. Later assignments override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    pairs: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut out = KeyValues::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| (lineno + 1, format!("unterminated section header `{line}`")))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| (lineno + 1, format!("expected `key = value`, got `{line}`")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err((lineno + 1, "empty key".into()));
            }
            let key = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            out.set(key, v.trim());
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, reason)| Error::Format {
            path: path.to_path_buf(),
            offset: byte_offset_of_line(&text, line),
            reason: format!("line {line}: {reason}"),
        })
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into();
        if let Some(slot) = self.pairs.iter_mut().find(|(k, _)| *k == key) {
            slot.1 = value;
        } else {
            self.pairs.push((key, value));
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> std::result::Result<Option<T>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| format!("cannot parse `{key} = {v}`")),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Renders top-level keys first, then one `[section]` block per prefix.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut sections: Vec<(&str, Vec<(&str, &str)>)> = Vec::new();
        for (k, v) in self.iter() {
            match k.rsplit_once('.') {
                Some((sec, key)) => match sections.iter_mut().find(|(s, _)| *s == sec) {
                    Some((_, items)) => items.push((key, v)),
                    None => sections.push((sec, vec![(key, v)])),
                },
                None => out.push_str(&format!("{k} = {v}\n")),
            }
        }
        for (sec, items) in sections {
            out.push_str(&format!("\n[{sec}]\n"));
            for (k, v) in items {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

fn byte_offset_of_line(text: &str, line: usize) -> u64 {
    text.split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(|l| l.len() as u64)
        .sum()
}
