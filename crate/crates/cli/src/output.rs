use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Empty,
    Int(u64),
    /// Exact decimal digits of an unbounded integer.
    Digits(String),
    Float(f64),
    Text(String),
    Flag(bool),
}

impl Cell {
    pub fn opt_float(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Float)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Digits(s) | Cell::Text(s) => s.clone(),
            Cell::Float(v) => format_float(*v),
            Cell::Flag(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Digits(s) | Cell::Text(s) => json!(s),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(format_float(*v)),
            Cell::Flag(b) => json!(b),
        }
    }
}

/// Seventeen significant digits, '.' decimal point, no locale.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let map = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(k, c)| (k.to_string(), c.json()))
                    .collect::<serde_json::Map<_, _>>();
                Value::Object(map)
            })
            .collect();
        Value::Array(rows)
    }
}

pub fn to_json_text<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Writes `data` to `out` with its manifest, or to stdout.
pub fn emit<C: Serialize>(data: &str, out: Option<&Path>, config: &C) -> anyhow::Result<()> {
    let Some(path) = out else {
        std::io::stdout().write_all(data.as_bytes())?;
        return Ok(());
    };
    fs::write(path, data).with_context(|| format!("writing {}", path.display()))?;
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "output": path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "sha256": sha256_hex(data.as_bytes()),
    });
    let mpath = manifest_path(path);
    fs::write(&mpath, to_json_text(&manifest)?).with_context(|| format!("writing {}", mpath.display()))?;
    Ok(())
}
