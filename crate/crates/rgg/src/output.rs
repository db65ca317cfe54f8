//! Result records (JSON) and tables (CSV).

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliResult;

/// One run: enough to reproduce it from `parameters` alone.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ResultRecord {
    pub command: String,
    pub parameters: Value,
    pub seed: u64,
    pub value: Value,
    pub std_error: Value,
    pub diagnostics: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl ResultRecord {
    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, T>(&mut self, row: I)
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Rows as JSON objects keyed by column; numeric cells become numbers.
    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(h, c)| {
                        let v = match c.parse::<f64>() {
                            Ok(x) if x.is_finite() => num(x),
                            _ => Value::String(c.clone()),
                        };
                        (h.clone(), v)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }

    pub fn write_to<W: Write>(&self, w: W) -> CliResult<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> CliResult<()> {
        self.write_to(std::fs::File::create(path)?)
    }
}

/// JSON-safe number: non-finite values become `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}
