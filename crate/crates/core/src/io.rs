// SPDX-License-Identifier: MIT OR Apache-2.0

//! Plain-text formats. Series CSV: no header, one row per time step (row 1
//! is `t = 1`), `d` comma-separated decimals. Ground truth: one 1-based index
//! per line, ascending.

use std::io::{BufRead, Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{GroundTruth, TimeSeries};

pub fn read_series_csv<F: Scalar, R: Read>(input: R) -> Result<TimeSeries<F>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut values: Vec<F> = Vec::new();
    let mut d = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match d {
            None => d = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::Parse {
                    line,
                    column: record.len().min(d) + 1,
                    message: format!("expected {d} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: j + 1,
                message: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("`{field}` is not finite"),
                });
            }
            values.push(F::lit(v));
        }
        rows += 1;
    }
    let d = d.ok_or_else(|| Error::TooShort("input has no rows".into()))?;
    let data = Array2::from_shape_vec((rows, d), values).expect("row lengths checked");
    TimeSeries::new(data)
}

/// Writes with shortest round-trip decimal formatting.
pub fn write_series_csv<F: Scalar, W: Write>(series: &TimeSeries<F>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for row in series.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads indices; `n` bounds-checks them.
pub fn read_ground_truth<R: BufRead>(input: R, n: usize) -> Result<GroundTruth> {
    let mut idx = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        idx.push(s.parse::<usize>().map_err(|_| Error::Parse {
            line: i + 1,
            column: 1,
            message: format!("`{s}` is not a non-negative integer"),
        })?);
    }
    GroundTruth::new(idx, n)
}

pub fn write_ground_truth<W: Write>(truth: &GroundTruth, mut out: W) -> Result<()> {
    for t in truth.indices() {
        writeln!(out, "{t}")?;
    }
    Ok(())
}
