//! Report rows shared by every bound method, and their JSON/CSV emission.
//!
//! Floats are rounded to 12 significant digits before printing so that
//! repeated runs produce identical bytes; non-finite values become `null`
//! in JSON and empty cells in CSV.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    Upper,
    /// Neither a lower nor an upper bound; shown for orientation only.
    Reference,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub method: String,
    pub kind: BoundKind,
    /// True when `value` is a rigorous bound in the direction of `kind`.
    pub certified: bool,
    pub model: String,
    pub params: BTreeMap<String, Value>,
    /// The reported bound; `None` when the point failed.
    pub value: Option<f64>,
    /// Uncorrected point estimate behind `value`, when it differs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guarantee_width: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, Value>,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BoundRow {
    pub fn new(method: &str, kind: BoundKind, model: &str) -> Self {
        Self {
            method: method.to_string(),
            kind,
            certified: false,
            model: model.to_string(),
            params: BTreeMap::new(),
            value: None,
            estimate: None,
            guarantee_width: None,
            extras: BTreeMap::new(),
            diagnostics: Diagnostics::default(),
            error: None,
        }
    }

    pub fn param(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), v.into());
        self
    }

    pub fn extra(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.extras.insert(key.to_string(), v.into());
        self
    }

    /// A row for a point that failed: parameters kept, numbers absent.
    pub fn failed(mut self, err: &crate::Error) -> Self {
        self.certified = false;
        self.value = None;
        self.estimate = None;
        self.guarantee_width = None;
        self.error = Some(err.to_string());
        self
    }
}

/// Where a CSV column takes its value from.
#[derive(Clone, Copy, Debug)]
pub enum Source {
    Method,
    Kind,
    Certified,
    Model,
    Param(&'static str),
    /// All parameters as `k=v` pairs joined by `;`.
    Params,
    Extra(&'static str),
    Value,
    Estimate,
    Width,
    Gap,
    Residual,
    Seconds,
}

pub type Columns = &'static [(&'static str, Source)];

/// Columns shared by all methods, for mixed-method tables.
pub const SUMMARY_COLUMNS: Columns = &[
    ("method", Source::Method),
    ("kind", Source::Kind),
    ("certified", Source::Certified),
    ("model", Source::Model),
    ("params", Source::Params),
    ("value", Source::Value),
    ("estimate", Source::Estimate),
    ("gap", Source::Gap),
    ("seconds", Source::Seconds),
];

/// Best lower and upper values over a set of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub model: String,
    #[serde(rename = "D")]
    pub dim: usize,
    pub lower: Option<f64>,
    pub lower_method: Option<String>,
    pub upper: Option<f64>,
    pub upper_method: Option<String>,
    pub width: Option<f64>,
    /// Finite-ring density, not a bound in either direction.
    pub reference: Option<f64>,
    pub rows: Vec<BoundRow>,
}

impl SandwichReport {
    pub fn from_rows(model: &str, dim: usize, rows: Vec<BoundRow>) -> Self {
        let pick = |kind: BoundKind, better: fn(f64, f64) -> bool| {
            rows.iter()
                .filter(|r| r.kind == kind && r.certified)
                .filter_map(|r| r.value.map(|v| (v, r.method.clone())))
                .fold(None, |acc: Option<(f64, String)>, (v, m)| match acc {
                    Some((a, _)) if !better(v, a) => acc,
                    _ => Some((v, m)),
                })
        };
        let lower = pick(BoundKind::Lower, |v, a| v > a);
        let upper = pick(BoundKind::Upper, |v, a| v < a);
        let reference = rows.iter().find(|r| r.kind == BoundKind::Reference).and_then(|r| r.value);
        let width = match (&lower, &upper) {
            (Some((l, _)), Some((u, _))) => Some(u - l),
            _ => None,
        };
        Self {
            model: model.to_string(),
            dim,
            lower: lower.as_ref().map(|x| x.0),
            lower_method: lower.map(|x| x.1),
            upper: upper.as_ref().map(|x| x.0),
            upper_method: upper.map(|x| x.1),
            width,
            reference,
            rows,
        }
    }
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest decimal form of the 12-digit rounding; empty for non-finite.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    let r = round_sig(x);
    if r == 0.0 {
        "0".to_string()
    } else if r.abs() < 1e-5 || r.abs() >= 1e16 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Rounds every float in a JSON tree and replaces non-finite ones by null.
pub fn normalize_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            serde_json::Number::from_f64(round_sig(x)).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize_json(v))).collect()),
        other => other,
    }
}

/// Zeroes every `seconds` field, for byte-identical reruns.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(o) => {
            for (k, x) in o.iter_mut() {
                if k == "seconds" {
                    *x = Value::from(0.0);
                } else {
                    strip_timing(x);
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

pub fn to_json_value<T: Serialize>(report: &T, timing: bool) -> Result<Value> {
    let mut v = serde_json::to_value(report)?;
    if !timing {
        strip_timing(&mut v);
    }
    Ok(normalize_json(v))
}

pub fn write_json<T: Serialize>(report: &T, timing: bool, mut out: impl Write) -> Result<()> {
    let v = to_json_value(report, timing)?;
    serde_json::to_writer_pretty(&mut out, &v)?;
    writeln!(out)?;
    Ok(())
}

fn value_cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) if n.is_f64() => format_float(n.as_f64().unwrap_or(f64::NAN)),
        Some(other) => other.to_string(),
    }
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub fn csv_cells(row: &BoundRow, columns: Columns, timing: bool) -> Vec<String> {
    let failed = row.error.is_some();
    columns
        .iter()
        .map(|(_, src)| match src {
            Source::Method => row.method.clone(),
            Source::Kind => value_cell(serde_json::to_value(row.kind).ok().as_ref()),
            Source::Certified => row.certified.to_string(),
            Source::Model => row.model.clone(),
            Source::Params => row
                .params
                .iter()
                .map(|(k, v)| format!("{k}={}", value_cell(Some(v))))
                .collect::<Vec<_>>()
                .join(";"),
            Source::Param(k) => value_cell(row.params.get(*k)),
            _ if failed => String::new(),
            Source::Extra(k) => value_cell(row.extras.get(*k)),
            Source::Value => opt_cell(row.value),
            Source::Estimate => opt_cell(row.estimate),
            Source::Width => opt_cell(row.guarantee_width),
            Source::Gap => opt_cell(row.diagnostics.gap),
            Source::Residual => opt_cell(row.diagnostics.residual),
            Source::Seconds => format_float(if timing { row.diagnostics.seconds } else { 0.0 }),
        })
        .collect()
}

/// Header plus one line per row. Failed rows keep their parameters and
/// leave every numeric cell empty.
pub fn write_csv(rows: &[BoundRow], columns: Columns, timing: bool, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns.iter().map(|c| c.0)).map_err(csv_err)?;
    for row in rows {
        w.write_record(csv_cells(row, columns, timing)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e.to_string()))
}
