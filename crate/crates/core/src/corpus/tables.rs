//! Shipped static tables (regions, aliases, Belt and Road classes, topic concepts).
//!
//! Each table is a tab-separated file with a header row. The copies under
//! `data/` are compiled in; external copies can be loaded instead, in which
//! case they are checked against the same SHA-256 digests unless verification
//! is switched off.

use std::path::PathBuf;

use crate::digest::sha256_hex;

#[derive(Debug, Clone, Copy)]
pub struct TableSpec {
    pub name: &'static str,
    pub builtin: &'static str,
    pub sha256: &'static str,
}

pub const REGIONS: TableSpec = TableSpec {
    name: "regions.tsv",
    builtin: include_str!("../../data/regions.tsv"),
    sha256: "bd0be8396112a9864e7818cc53ecc344e0cc177b4fac5e1386a74bcc23532b2d",
};

pub const ALIASES: TableSpec = TableSpec {
    name: "aliases.tsv",
    builtin: include_str!("../../data/aliases.tsv"),
    sha256: "aef5f69c4065ef6ce5b01165af8734e9646ea85f600a6496eb4664355df14c02",
};

pub const BRI: TableSpec = TableSpec {
    name: "bri.tsv",
    builtin: include_str!("../../data/bri.tsv"),
    sha256: "d93050d986df68fbf74f562bc6aa986b19ac24fbcfd52e956fdcc2047988ca42",
};

pub const TOPICS: TableSpec = TableSpec {
    name: "topics.tsv",
    builtin: include_str!("../../data/topics.tsv"),
    sha256: "ac7b86b07559ad8752a13170b526b3d601770a1210c1ad4489bd2de2a1a5eaf9",
};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("reading table {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("table {table}: checksum mismatch (expected {expected}, found {found})")]
    ChecksumMismatch { table: &'static str, expected: &'static str, found: String },
    #[error("table {table}: header must be {expected:?}")]
    BadHeader { table: &'static str, expected: Vec<&'static str> },
    #[error("table {table} line {line}: {message}")]
    BadRow { table: &'static str, line: usize, message: String },
    #[error("table {table}: {message}")]
    Invalid { table: &'static str, message: String },
}

/// Where a table's text comes from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum TableSource {
    #[default]
    Builtin,
    Path(PathBuf),
}

impl TableSource {
    pub fn read(&self, spec: TableSpec) -> Result<String, TableError> {
        match self {
            TableSource::Builtin => Ok(spec.builtin.to_string()),
            TableSource::Path(p) => {
                std::fs::read_to_string(p).map_err(|source| TableError::Io { path: p.clone(), source })
            }
        }
    }
}

pub fn verify(spec: TableSpec, text: &str) -> Result<(), TableError> {
    let found = sha256_hex(text.as_bytes());
    if found != spec.sha256 {
        return Err(TableError::ChecksumMismatch { table: spec.name, expected: spec.sha256, found });
    }
    Ok(())
}

/// Data rows as `(1-based line number, trimmed cells)`; blank lines are skipped.
pub(crate) fn rows(
    table: &'static str,
    text: &str,
    header: &[&'static str],
) -> Result<Vec<(usize, Vec<String>)>, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| TableError::Invalid { table, message: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if found != header {
        return Err(TableError::BadHeader { table, expected: header.to_vec() });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| TableError::Invalid { table, message: e.to_string() })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if record.len() != header.len() {
            return Err(TableError::BadRow {
                table,
                line,
                message: format!("expected {} columns, found {}", header.len(), record.len()),
            });
        }
        let cells: Vec<String> = record.iter().map(|c| c.trim().to_string()).collect();
        if cells.iter().any(|c| c.is_empty()) {
            return Err(TableError::BadRow { table, line, message: "empty cell".into() });
        }
        out.push((line, cells));
    }
    Ok(out)
}
