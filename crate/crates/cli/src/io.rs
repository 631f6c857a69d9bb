use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use attraos_core::TimeSeries;
use serde::Serialize;

use crate::error::CliError;

/// A CSV table split into an optional leading `t` column and the value
/// channels.
pub struct Table {
    pub t: Option<Vec<f64>>,
    pub series: TimeSeries,
}

impl Table {
    /// Mean sample spacing over the time column.
    pub fn dt(&self) -> Option<f64> {
        let t = self.t.as_ref()?;
        let n = t.len();
        (n >= 2).then(|| (t[n - 1] - t[0]) / (n - 1) as f64).filter(|d| *d > 0.0)
    }
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let shown = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{shown}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{shown}: {e}")))?
        .clone();
    let has_t = headers.get(0) == Some("t");
    let width = headers.len();
    if width == usize::from(has_t) {
        return Err(CliError::Data(format!("{shown}: no value columns")));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); width];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{shown}: {e}")))?;
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!("{shown}: row {} column {}: cannot parse {field:?}", row + 2, col + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("{shown}: row {} holds a non-finite value", row + 2)));
            }
            columns[col].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(CliError::Data(format!("{shown}: no data rows")));
    }
    let t = has_t.then(|| columns.remove(0));
    let series = TimeSeries::from_channels(columns).map_err(|e| CliError::Data(format!("{shown}: {e}")))?;
    Ok(Table { t, series })
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::BufWriter::new(io::stdout().lock()))),
    }
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,<prefix>0,<prefix>1,...` rows with 17 significant digits.
pub fn write_table(path: Option<&Path>, t: &[f64], rows: &[Vec<f64>], prefix: &str) -> Result<(), CliError> {
    let io_err = |e: csv::Error| CliError::Data(format!("write failed: {e}"));
    let width = rows.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(sink(path)?);
    let mut header = vec!["t".to_string()];
    header.extend((0..width).map(|i| format!("{prefix}{i}")));
    w.write_record(&header).map_err(io_err)?;
    for (ti, row) in t.iter().zip(rows) {
        let mut rec = Vec::with_capacity(width + 1);
        rec.push(fmt_num(*ti));
        rec.extend(row.iter().map(|v| fmt_num(*v)));
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Data(format!("write failed: {e}")))
}

pub fn write_series(path: Option<&Path>, t: &[f64], series: &TimeSeries) -> Result<(), CliError> {
    write_table(path, t, &series.rows(), "v")
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut out = sink(path)?;
    serde_json::to_writer(&mut out, value).map_err(|e| CliError::Data(format!("write failed: {e}")))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::Data(format!("write failed: {e}")))
}
