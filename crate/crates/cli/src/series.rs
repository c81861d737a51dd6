//! Per-snapshot diagnostic columns and their CSV form.
//!
//! Values are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub columns: Vec<String>,
    /// Column-major: `values[c][row]`.
    pub values: Vec<Vec<f64>>,
}

impl Series {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        if let Some(first) = self.values.first() {
            assert_eq!(first.len(), values.len(), "series columns must have equal length");
        }
        self.columns.push(name.into());
        self.values.push(values);
    }

    pub fn rows(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().position(|c| c == name).map(|i| self.values[i].as_slice())
    }

    /// Columns whose name starts with `prefix` followed by an index, in index order.
    pub fn indexed(&self, prefix: &str) -> Vec<&[f64]> {
        let mut found: Vec<(usize, &[f64])> = self
            .columns
            .iter()
            .zip(&self.values)
            .filter_map(|(c, v)| c.strip_prefix(prefix)?.parse().ok().map(|i: usize| (i, v.as_slice())))
            .collect();
        found.sort_by_key(|(i, _)| *i);
        found.into_iter().map(|(_, v)| v).collect()
    }
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the series atomically: nothing is left behind on error.
pub fn emit_series(series: &Series, path: &Path) -> Result<()> {
    if series.rows() == 0 {
        return Err(CliError::Validation(format!("refusing to write an empty series to {}", path.display())));
    }
    let tmp = path.with_extension("csv.partial");
    let write = || -> Result<()> {
        let file = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record(&series.columns)?;
        let mut record = Vec::with_capacity(series.columns.len());
        for r in 0..series.rows() {
            record.clear();
            record.extend(series.values.iter().map(|c| format_value(c[r])));
            w.write_record(&record)?;
        }
        let mut inner = w.into_inner().map_err(|e| CliError::io(&tmp, e.into_error()))?;
        inner.flush().map_err(|e| CliError::io(&tmp, e))?;
        Ok(())
    };
    if let Err(e) = write() {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn read_series(path: &Path) -> Result<Series> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Parse { path: path.to_owned(), msg: format!("{other:?}") },
    })?;
    let columns: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut values = vec![Vec::new(); columns.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (c, field) in rec.iter().enumerate() {
            let v = field.trim().parse::<f64>().map_err(|e| CliError::Parse {
                path: path.to_owned(),
                msg: format!("row {}, column {}: {e}", line + 2, columns[c]),
            })?;
            values[c].push(v);
        }
    }
    Ok(Series { columns, values })
}
