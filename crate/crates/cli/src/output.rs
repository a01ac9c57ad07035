//! Result files: `results.json` and `results.csv` in the output directory.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Twelve significant digits, plain decimal for moderate magnitudes.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci
        .split_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-5..12).contains(&exp) {
        format!("{x:.*}", (11 - exp) as usize)
    } else {
        sci
    }
}

pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => sig12(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn non_finite(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .any(|c| matches!(c, Cell::Num(x) if !x.is_finite()))
    }
}

/// A serialized non-finite float becomes `null`; reports never use `null` otherwise.
fn has_null(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Array(a) => a.iter().any(has_null),
        Value::Object(o) => o.values().any(has_null),
        _ => false,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes both files, then fails with an invariant error if any number is not finite.
pub fn write_results<T: Serialize>(dir: &Path, report: &T, table: &Table) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let value = serde_json::to_value(report)
        .map_err(|e| CliError::Invariant(format!("report not serializable: {e}")))?;
    let json_path = dir.join("results.json");
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    std::fs::write(&json_path, text).map_err(io_err(&json_path))?;

    let csv_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| CliError::Io {
        path: csv_path.display().to_string(),
        source: e.into(),
    })?;
    let csv_err = |e: csv::Error| CliError::Io {
        path: csv_path.display().to_string(),
        source: e.into(),
    };
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(&csv_path))?;

    if has_null(&value) || table.non_finite() {
        return Err(CliError::Invariant("non-finite number in results".into()));
    }
    Ok(())
}
