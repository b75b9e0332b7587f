//! Tabular experiment reports with CSV and JSON output.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::Result;

/// One table cell. Failed computations carry their error message instead of a number.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
    Error(String),
}

impl Cell {
    pub fn num_or_err(r: std::result::Result<f64, String>) -> Cell {
        match r {
            Ok(v) => Cell::Num(v),
            Err(e) => Cell::Error(e),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Cell::Error(_))
    }

    /// Twelve significant digits in scientific notation; non-finite values spelled out.
    fn csv_text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => format_num(*v),
            Cell::Error(e) => format!("error: {e}"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Int(i) => json!(i),
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(format_num(*v)),
            Cell::Error(e) => json!({ "error": e }),
        }
    }
}

pub fn format_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.11e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Config echo, version, KL direction and similar; JSON output only.
    pub metadata: Map<String, Value>,
    /// True when every method failed everywhere.
    pub all_methods_failed: bool,
}

impl Report {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        let mut metadata = Map::new();
        metadata.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        Report {
            experiment: experiment.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata,
            all_methods_failed: false,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cells of column `name`, in row order.
    pub fn cells<'a>(&'a self, name: &str) -> impl Iterator<Item = &'a Cell> + 'a {
        let j = self.column(name);
        self.rows.iter().filter_map(move |r| j.map(|j| &r[j]))
    }

    /// Header plus one line per row. Contains no timing, so equal inputs give equal bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_text))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        json!({
            "experiment": self.experiment,
            "columns": self.columns,
            "rows": rows,
            "metadata": self.metadata,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }
}
