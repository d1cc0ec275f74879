//! Tables and their CSV / JSON encodings.
//!
//! Floats are written with the shortest representation that parses back to
//! the same `f64`, so re-reading a file reproduces the in-memory values
//! exactly. Missing values are empty CSV fields or JSON `null`, as are NaNs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as u64)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x)
    }
}

impl From<u32> for Value {
    fn from(x: u32) -> Self {
        Value::Int(x.into())
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Missing, Into::into)
    }
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Value {
    fn csv_field(&self) -> String {
        match self {
            Value::Float(x) if x.is_nan() => String::new(),
            Value::Float(x) => format_float(*x),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
            Value::Missing => String::new(),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Float(x) if x.is_finite() => s.serialize_f64(*x),
            Value::Float(_) | Value::Missing => s.serialize_none(),
            Value::Int(i) => s.serialize_u64(*i),
            Value::Text(t) => s.serialize_str(t),
        }
    }
}

/// A named table; each row has one value per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv_field)).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>, CliError> {
        let mut out = serde_json::to_vec_pretty(&Records(self)).map_err(|e| CliError::Io(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn encode(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Array-of-records view that keeps the column order.
struct Records<'a>(&'a Table);

struct Record<'a> {
    columns: &'a [&'static str],
    values: &'a [Value],
}

impl Serialize for Records<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows.len()))?;
        for row in &self.0.rows {
            seq.serialize_element(&Record {
                columns: &self.0.columns,
                values: row,
            })?;
        }
        seq.end()
    }
}

impl Serialize for Record<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.columns.len()))?;
        for (c, v) in self.columns.iter().zip(self.values) {
            map.serialize_entry(c, v)?;
        }
        map.end()
    }
}

/// Encodes every table, then writes them and the manifest into `dir`.
/// Nothing is written if any encoding fails.
pub fn write_outputs(
    dir: &Path,
    format: Format,
    tables: &[Table],
    manifest: &serde_json::Value,
) -> Result<Vec<PathBuf>, CliError> {
    let encoded: Vec<(PathBuf, Vec<u8>)> = tables
        .iter()
        .map(|t| Ok((dir.join(format!("{}.{}", t.name, format.extension())), t.encode(format)?)))
        .collect::<Result<_, CliError>>()?;
    let mut manifest_bytes = serde_json::to_vec_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?;
    manifest_bytes.push(b'\n');

    let io = |path: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::with_capacity(encoded.len() + 1);
    for (path, bytes) in encoded {
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    let path = dir.join("manifest.json");
    fs::write(&path, manifest_bytes).map_err(|e| io(&path, e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("t", &["omega_over_J", "count", "label", "maybe"]);
        t.push(vec![0.1.into(), 3usize.into(), "a".into(), Value::Missing]);
        t.push(vec![(-2.5e-21).into(), 0usize.into(), "b,c".into(), Some(1.0 / 3.0).into()]);
        t.push(vec![f64::NAN.into(), 1usize.into(), "".into(), Some(7.0).into()]);
        t
    }

    #[test]
    fn floats_round_trip_through_csv() {
        let csv = String::from_utf8(sample().to_csv().unwrap()).unwrap();
        let mut r = csv::Reader::from_reader(csv.as_bytes());
        let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
        assert_eq!(rows[1][0].parse::<f64>().unwrap(), -2.5e-21);
        assert_eq!(rows[1][2].to_string(), "b,c");
        assert_eq!(rows[1][3].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(&rows[0][3], "");
        assert_eq!(&rows[2][0], "");
    }

    #[test]
    fn json_keeps_column_order_and_nulls() {
        let json = String::from_utf8(sample().to_json().unwrap()).unwrap();
        let first = json.find("omega_over_J").unwrap();
        assert!(first < json.find("count").unwrap() && json.find("count").unwrap() < json.find("label").unwrap());
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v[0]["maybe"].is_null());
        assert!(v[2]["omega_over_J"].is_null());
        assert_eq!(v[1]["maybe"].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn float_format_switches_to_exponent_for_extremes() {
        assert_eq!(format_float(0.25), "0.25");
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(1e-7), "1e-7");
        for x in [1e-300, 123456.789, -3.3e20, 0.1 + 0.2] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
