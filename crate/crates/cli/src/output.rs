use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

/// A CSV table with '\n' line endings.
pub struct Table {
    header: String,
    rows: Vec<String>,
}

impl Table {
    pub fn new(header: impl Into<String>) -> Self {
        Self {
            header: header.into(),
            rows: Vec::new(),
        }
    }

    pub fn row(mut self, row: String) -> Self {
        self.rows.push(row);
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.clone();
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

pub struct Report {
    pub table: Table,
    pub json: Value,
    /// Written to stderr after the report.
    pub summary: Option<String>,
    pub status: u8,
}

impl Report {
    pub fn new(table: Table, json: Value) -> Self {
        Self {
            table,
            json,
            summary: None,
            status: 0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}
