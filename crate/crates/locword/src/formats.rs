//! On-disk formats: CSV tables, canonical JSON, distribution and operator documents.

use std::fs;
use std::path::Path;

use locword_core::{TridiagonalOperator, Word, WordDistribution};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult, ExitCode};

/// `{words, weights}` document for a word distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionDoc {
    pub words: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DistributionDoc {
    pub fn from_distribution(dist: &WordDistribution) -> Self {
        Self { words: dist.words().iter().map(|w| w.letters().to_vec()).collect(), weights: dist.weights().to_vec() }
    }

    pub fn to_distribution(&self) -> CliResult<WordDistribution> {
        let words = self.words.iter().map(|w| Word::new(w.clone())).collect::<Result<Vec<_>, _>>()?;
        Ok(WordDistribution::new(words, self.weights.clone())?)
    }
}

/// `{a, b, diagonal}` document for a Dirichlet restriction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    pub a: i64,
    pub b: i64,
    pub diagonal: Vec<f64>,
}

impl OperatorDoc {
    pub fn from_operator(op: &TridiagonalOperator) -> Self {
        let (a, b) = op.window();
        Self { a, b, diagonal: op.diagonal().to_vec() }
    }

    pub fn to_operator(&self) -> CliResult<TridiagonalOperator> {
        if self.b - self.a + 1 != self.diagonal.len() as i64 {
            return Err(CliError::new(ExitCode::InvalidInput, "operator window does not match diagonal length"));
        }
        Ok(TridiagonalOperator::new(self.a, self.diagonal.clone())?)
    }
}

/// Round-trip representation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => fmt_f64(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(if b { "true" } else { "false" }.into())
    }
}

/// Header plus rows, rendered as RFC 4180 CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::new(ExitCode::Internal, format!("csv encoding: {e}"));
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        w.into_inner().map_err(|e| CliError::new(ExitCode::Internal, format!("csv encoding: {e}")))
    }
}

/// Parses a CSV produced by [`Table::to_csv`] back into header and string rows.
pub fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    let header = r.headers().map_err(|e| CliError::io(&path.display().to_string(), e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::io(&path.display().to_string(), e))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

/// Pretty JSON with keys sorted at every level, newline terminated.
pub fn canonical_json<T: Serialize>(value: &T) -> CliResult<String> {
    let v: Value = serde_json::to_value(value).map_err(|e| CliError::new(ExitCode::Internal, e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&sort_keys(v)).map_err(|e| CliError::new(ExitCode::Internal, e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}
