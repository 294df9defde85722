//! Tabular experiment reports with CSV and JSON emission.
//!
//! Reports carry a header with every descriptor and seed needed to reproduce
//! the run, one row per grid point (or per replica x grid point), and a
//! footer of named pass/fail checks. CSV uses a header row, `.` decimals,
//! and 17 significant digits; JSON is a single `{header, rows, footer}`
//! object. Nothing time-dependent is emitted, so identical runs produce
//! byte-identical bodies.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    U64(u64),
    I64(i64),
    F64(f64),
    Bool(bool),
    Str(String),
}

impl Value {
    fn to_csv(&self) -> String {
        match self {
            Value::U64(v) => v.to_string(),
            Value::I64(v) => v.to_string(),
            Value::F64(v) => format_float(*v),
            Value::Bool(v) => v.to_string(),
            Value::Str(s) => {
                if s.contains(',') || s.contains('"') || s.contains('\n') {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Value::U64(v) => serde_json::json!(v),
            Value::I64(v) => serde_json::json!(v),
            Value::F64(v) => {
                if v.is_finite() {
                    serde_json::json!(v)
                } else {
                    serde_json::json!(v.to_string())
                }
            }
            Value::Bool(v) => serde_json::json!(v),
            Value::Str(s) => serde_json::json!(s),
        }
    }
}

/// Full precision, 17 significant digits, `.` decimal separator.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Report header: command, code version, master seed, and the resolved
/// configuration as sorted key-value pairs.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ReportHeader {
    pub command: String,
    pub version: String,
    pub master_seed: u64,
    pub config: BTreeMap<String, String>,
}

impl ReportHeader {
    pub fn new(command: &str, master_seed: u64) -> Self {
        ReportHeader {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            config: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }
}

/// A named pass/fail line for the report footer.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Tabular grid results with provenance header and check footer.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub header: ReportHeader,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub footer: Vec<Check>,
}

impl ExperimentReport {
    pub fn new(header: ReportHeader, columns: &[&str]) -> Self {
        ExperimentReport {
            header,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_check(&mut self, check: Check) {
        self.footer.push(check);
    }

    pub fn all_checks_pass(&self) -> bool {
        self.footer.iter().all(|c| c.pass)
    }

    /// CSV body: a header row then one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Value::to_csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// The single `{header, rows, footer}` JSON body, keys in that order
    /// (struct serialization keeps field order; a Value round-trip would
    /// re-sort them).
    pub fn to_json_string(&self) -> String {
        #[derive(serde::Serialize)]
        struct Body<'a> {
            header: &'a ReportHeader,
            rows: Vec<serde_json::Value>,
            footer: &'a [Check],
        }
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    obj.insert(c.clone(), v.to_json());
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::to_string_pretty(&Body {
            header: &self.header,
            rows,
            footer: &self.footer,
        })
        .expect("report serialization")
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}
