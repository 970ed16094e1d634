//! Report files: atomic writes, CSV tables, config hashing and the
//! separate timestamp file.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use specband_core::io::fmt;

use crate::CliError;

/// Outcome of one check inside a run or verification.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    /// Hard checks decide the exit status; soft ones are reported only.
    pub hard: bool,
    pub passed: bool,
    pub details: Value,
}

impl CheckOutcome {
    pub fn soft(name: impl Into<String>, details: Value) -> Self {
        CheckOutcome {
            name: name.into(),
            hard: false,
            passed: true,
            details,
        }
    }

    pub fn hard(name: impl Into<String>, passed: bool, details: Value) -> Self {
        CheckOutcome {
            name: name.into(),
            hard: true,
            passed,
            details,
        }
    }
}

/// A CSV file to be written next to the report.
#[derive(Clone, Debug)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Table {
    pub fn new(file: impl Into<String>, header: &[&str]) -> Self {
        Table {
            file: file.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes `bytes` to a temporary file in the target directory and renames
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<(), CliError> {
    for t in tables {
        write_atomic(&dir.join(&t.file), t.to_csv().as_bytes())?;
    }
    Ok(())
}

/// SHA-256 of the canonical JSON form of `value`.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

/// The only file carrying wall-clock information.
pub fn write_metadata(dir: &Path, command: &str) -> Result<(), CliError> {
    let meta = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": chrono::Utc::now().to_rfc3339(),
    });
    write_json(&dir.join("metadata.json"), &meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new("x.csv", &["r", "name", "n"]);
        t.push(vec![0.5.into(), "a".into(), 3usize.into()]);
        assert_eq!(t.to_csv(), "r,name,n\n5.0000000000000000e-1,a,3\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
