//! Tabular reports with a metadata header, rendered as CSV or JSON.
//!
//! Every number is printed with 12 significant digits so that output is
//! stable across platforms and runs.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::bounds::BoundCurve;
use crate::error::Result;
use crate::oracle::TVSandwich;
use crate::tuner::TraceRow;

/// Fixed column order of the comparison table.
pub const COMPARE_COLUMNS: [&str; 8] = [
    "ell",
    "tv_lower",
    "tv_upper",
    "bound_uniform",
    "bound_rosenthal",
    "bound_dks_lower",
    "bound_dks_upper",
    "bound_spectral",
];

/// Formats `v` with 12 significant digits, trimming trailing zeros.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let prec = (11 - exp).max(0) as usize;
        trim_zeros(format!("{v:.prec$}"))
    } else {
        let s = format!("{v:.11e}");
        let (mant, e) = s.split_once('e').expect("exponent");
        format!("{}e{e}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `v` rounded to the printed precision.
pub fn round_sig(v: f64) -> f64 {
    fmt_num(v).parse().unwrap_or(v)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(round_sig(*v)),
            Cell::Num(v) => json!(fmt_num(*v)),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// A table plus `key: value` metadata (command, model, seed, hash, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub meta: BTreeMap<String, String>,
    pub table: Table,
}

impl Report {
    pub fn new(table: Table) -> Self {
        Report {
            meta: BTreeMap::new(),
            table,
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn meta_num(&mut self, key: &str, value: f64) -> &mut Self {
        self.meta(key, fmt_num(value))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Metadata as `# key: value` lines followed by the CSV table.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.table.columns)?;
        for row in &self.table.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        out.push_str(&String::from_utf8_lossy(&bytes));
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let rows: Vec<Value> = self
            .table
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
            .collect();
        let doc = json!({
            "meta": meta,
            "columns": self.table.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }
}

/// Long-format table `ell, value, kind, params_hash` for several curves.
pub fn curve_table(curves: &[&BoundCurve]) -> Table {
    let mut t = Table::new(&["ell", "value", "kind", "params_hash"]);
    for c in curves {
        let hash = c.params_hash();
        for (ell, v) in c.ells().zip(&c.values) {
            t.push(vec![
                Cell::Int(ell as u64),
                Cell::Num(*v),
                Cell::Text(c.kind.as_str().into()),
                Cell::Text(hash.clone()),
            ]);
        }
    }
    t
}

pub fn sandwich_table(s: &TVSandwich) -> Table {
    let mut t = Table::new(&["ell", "tv_lower", "tv_upper"]);
    for (ell, (lo, up)) in s.lower.iter().zip(&s.upper).enumerate() {
        t.push(vec![Cell::Int(ell as u64), Cell::Num(*lo), Cell::Num(*up)]);
    }
    t
}

pub fn trace_table(trace: &[TraceRow]) -> Table {
    let mut t = Table::new(&["r", "d", "b_param", "epsilon", "t", "objective"]);
    for row in trace {
        t.push(vec![
            Cell::Num(row.r),
            Cell::Num(row.d),
            Cell::Num(row.b_param),
            Cell::Num(row.epsilon),
            Cell::Num(row.t),
            Cell::Num(row.objective),
        ]);
    }
    t
}

/// Inputs of the comparison table; any curve may be missing.
#[derive(Debug, Clone, Default)]
pub struct Comparison<'a> {
    pub sandwich: Option<&'a TVSandwich>,
    pub uniform: Option<&'a BoundCurve>,
    pub rosenthal: Option<&'a BoundCurve>,
    pub dks_lower: Option<&'a BoundCurve>,
    pub dks_upper: Option<&'a BoundCurve>,
    pub spectral: Option<&'a BoundCurve>,
}

pub fn compare_table(c: &Comparison<'_>, ell_max: usize) -> Table {
    let mut t = Table::new(&COMPARE_COLUMNS);
    let at = |curve: Option<&BoundCurve>, ell: usize| -> Cell { curve.and_then(|c| c.value(ell)).into() };
    for ell in 0..=ell_max {
        t.push(vec![
            Cell::Int(ell as u64),
            c.sandwich.and_then(|s| s.lower.get(ell).copied()).into(),
            c.sandwich.and_then(|s| s.upper.get(ell).copied()).into(),
            at(c.uniform, ell),
            at(c.rosenthal, ell),
            at(c.dks_lower, ell),
            at(c.dks_upper, ell),
            at(c.spectral, ell),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(5.0 / 6.0), "0.833333333333");
        assert_eq!(fmt_num(1.0 / 6.0), "0.166666666667");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(3.0), "3");
        assert_eq!(fmt_num(-2.5e-9), "-2.5e-9");
        assert_eq!(fmt_num(1.0 / 54.0), "0.0185185185185");
        assert_eq!(fmt_num(123456789.123456789), "123456789.123");
        assert_eq!(fmt_num(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_and_json_render() {
        let mut t = Table::new(&["ell", "value", "note"]);
        t.push(vec![Cell::Int(0), Cell::Num(1.0 / 3.0), Cell::Empty]);
        let mut r = Report::new(t);
        r.meta("seed", "7");
        let csv = r.to_csv().unwrap();
        assert_eq!(csv, "# seed: 7\nell,value,note\n0,0.333333333333,\n");
        let json: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["rows"][0][1], json!(0.333333333333));
        assert_eq!(json["rows"][0][2], Value::Null);
        assert_eq!(json["meta"]["seed"], json!("7"));
    }
}
