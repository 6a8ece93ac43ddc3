//! Flat `key = value` reports. Keys keep insertion order; numbers are
//! written with 17 significant digits so they read back exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    pub fn num(&mut self, key: &str, v: f64) -> &mut Self {
        self.entries.push((key.to_string(), format!("{v:.16e}")));
        self
    }

    pub fn int(&mut self, key: &str, v: usize) -> &mut Self {
        self.entries.push((key.to_string(), v.to_string()));
        self
    }

    pub fn text(&mut self, key: &str, v: &str) -> &mut Self {
        self.entries.push((key.to_string(), v.replace('\n', " ")));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_num(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

pub fn parse_report(text: &str) -> Result<Report> {
    let mut r = Report::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            column: 1,
            message: "expected 'key = value'".into(),
        })?;
        r.entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(r)
}
