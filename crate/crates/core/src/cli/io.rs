//! CSV and JSON artifacts.
//!
//! CSV files carry a header row, LF line endings and floats written in their
//! shortest round-trip form, so reading a file back reproduces every value
//! bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::series::TimeSeries;

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn writer(path: &Path) -> std::io::Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?)))
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Writes `t` followed by every column; times are multiplied by `time_factor`.
pub fn write_series(path: &Path, series: &TimeSeries, time_factor: f64) -> std::io::Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(series.names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    let mut row = Vec::with_capacity(header.len());
    for (i, &t) in series.times.iter().enumerate() {
        row.clear();
        row.push(format_float(t * time_factor));
        row.extend(series.columns.iter().map(|c| format_float(c[i])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
}

/// Writes two-column `(x, y)` data under the given header names.
pub fn write_points(path: &Path, names: [&str; 2], points: &[(f64, f64)]) -> std::io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(names).map_err(csv_err)?;
    for &(x, y) in points {
        w.write_record([format_float(x), format_float(y)]).map_err(csv_err)?;
    }
    w.flush()
}

/// Reads a CSV whose first column is time.
pub fn read_series(path: &Path) -> std::io::Result<TimeSeries> {
    let invalid = |msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || &header[0] != "t" {
        return Err(invalid("expected a header `t,<columns...>`".into()));
    }
    let names: Vec<&str> = header.iter().skip(1).collect();
    let mut series = TimeSeries::new(&names);
    let mut row = vec![0.0; names.len()];
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let parse = |j: usize| -> std::io::Result<f64> {
            record[j]
                .parse::<f64>()
                .map_err(|e| invalid(format!("row {}, column {}: {e}", line + 2, j + 1)))
        };
        let t = parse(0)?;
        for (j, v) in row.iter_mut().enumerate() {
            *v = parse(j + 1)?;
        }
        series.push(t, &row);
    }
    Ok(series)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}
