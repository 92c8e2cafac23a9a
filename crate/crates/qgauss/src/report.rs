//! Reports: a config echo, a fixed-column table and a pass/fail summary.
//! Table and summary floats are written with 17 significant digits.

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::config::ExperimentConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SEED_DERIVATION: &str = "ε(i,j) for sites i > j is +1 iff u < (1+q)/2, where u is the \
    53-bit uniform at word position 2·(i(i-1)/2 + j) of ChaCha8Rng::seed_from_u64(seed), stream 0";

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

struct F17(f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            RawValue::from_string(fmt17(self.0))
                .map_err(serde::ser::Error::custom)?
                .serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(i) => Some(i as f64),
            Cell::Float(x) => Some(x),
            _ => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt17(*x),
            Cell::Text(t) => t.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Float(x) => F17(*x).serialize(s),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Empty => s.serialize_none(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the columns");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric values of one column.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let i = self.column(name).expect("unknown column");
        self.rows.iter().filter_map(|r| r[i].as_f64()).collect()
    }
}

struct RowRef<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for RowRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for r in &self.rows {
            seq.serialize_element(&RowRef(&self.columns, r))?;
        }
        seq.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(serialize_with = "ser17")]
    pub value: f64,
    #[serde(serialize_with = "ser17")]
    pub tolerance: f64,
}

fn ser17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    F17(*x).serialize(s)
}

impl Check {
    /// Passes iff `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn new(checks: Vec<Check>) -> Self {
        Summary {
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Header {
    pub config: ExperimentConfig,
    pub version: &'static str,
    pub timestamp: String,
    pub seed_derivation: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub header: Header,
    pub rows: Table,
    pub summary: Summary,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    /// The rows alone as JSON; independent of the run time.
    pub fn rows_json(&self) -> String {
        serde_json::to_string(&self.rows).expect("rows serialize")
    }

    /// Header line with the column names, then one line per row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.rows.columns).expect("write to memory");
        for r in &self.rows.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}
