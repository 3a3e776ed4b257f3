//! Run reports: a JSON summary plus a pinned-format CSV.
//!
//! CSV format: `.` decimal separator, LF line endings, mandatory header row.
//! Probabilities and estimates are written with 18 significant digits so
//! reports round-trip losslessly.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, pass: bool, detail: String) -> Verdict {
        Verdict {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub config_hash: String,
    pub config: BTreeMap<String, String>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
    pub csv_rows: usize,
}

/// FNV-1a 64 over the canonical config text.
pub fn content_hash(canonical: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canonical.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{h:016x}")
}

/// Full-precision decimal form for CSV fields.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        Csv {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        file.write_all(self.render().as_bytes())?;
        Ok(())
    }
}

pub fn write_json(report: &RunReport, path: &Path) -> Result<()> {
    let mut file =
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer_pretty(&mut file, report)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        assert_eq!(content_hash("a=1\n"), content_hash("a=1\n"));
        assert_ne!(content_hash("a=1\n"), content_hash("a=2\n"));
    }

    #[test]
    fn csv_pinned_format() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.push(vec!["1".into(), fmt_f64(0.5)]);
        let text = csv.render();
        assert_eq!(text, "a,b\n1,5.00000000000000000e-1\n");
        assert!(!text.contains('\r'));
    }
}
