//! Tabular results and their CSV / JSON renderings.
//!
//! CSV: `#`-prefixed provenance lines (build, command, seed, config echo as
//! compact JSON), then a header row and one row per result. JSON: an object
//! with `build`, `command`, `seed`, `config`, `columns` and `rows`; each row
//! carries the same cells plus an optional `details` object with the full
//! result record.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Command, RunConfig};

pub const BUILD: &str = env!("SPINNET_BUILD");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => Value::String(format_f64(*v)),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // shortest round-trip spelling, plain or scientific
        let plain = format!("{v}");
        let sci = format!("{v:e}");
        if sci.len() < plain.len() { sci } else { plain }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cells: Vec<Cell>,
    pub details: Option<Value>,
}

impl Row {
    pub fn new(cells: Vec<Cell>) -> Self {
        Self { cells, details: None }
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).ok();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: Command,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(command: Command, columns: &[&str]) -> Self {
        Self {
            command,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r.cells[i]).collect())
    }
}

/// Config as echoed in the output; the output path is not part of it.
fn echo(cfg: &RunConfig) -> Value {
    let mut c = cfg.clone();
    c.output_path = None;
    serde_json::to_value(c).unwrap_or(Value::Null)
}

pub fn render_csv(table: &Table, cfg: &RunConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("# build: {BUILD}\n"));
    out.push_str(&format!("# command: {}\n", table.command));
    out.push_str(&format!("# seed: {}\n", cfg.seed));
    out.push_str(&format!("# config: {}\n", echo(cfg)));
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.cells.iter().map(Cell::csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn render_json(table: &Table, cfg: &RunConfig) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            for (c, v) in table.columns.iter().zip(&r.cells) {
                obj.insert(c.clone(), v.json());
            }
            if let Some(d) = &r.details {
                obj.insert("details".into(), d.clone());
            }
            Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "build": BUILD,
        "command": table.command.name(),
        "seed": cfg.seed,
        "config": echo(cfg),
        "columns": table.columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}
