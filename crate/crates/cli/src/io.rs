//! CSV datasets and result files.

use std::fs::File;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::Serialize;
use wmfsel_core::{Dataset64, GlmDataset64};

use crate::error::{CliError, Result};

/// A parsed dataset: predictors, response and their column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub response: String,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

pub enum Loaded {
    Linear(Dataset64),
    Binary(GlmDataset64),
}

impl Table {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Responses made only of 0 and 1, with both present.
    pub fn is_binary(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
            && self.y.iter().any(|&v| v == 0.0)
            && self.y.iter().any(|&v| v == 1.0)
    }

    pub fn into_dataset(self) -> Result<Loaded> {
        Ok(if self.is_binary() {
            Loaded::Binary(GlmDataset64::new(self.x, self.y)?)
        } else {
            Loaded::Linear(Dataset64::new(self.x, self.y)?)
        })
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

/// Reads a headed, comma-separated file. `response` names the response
/// column; every other column is a predictor.
pub fn load_csv(path: &Path, response: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Format { path: path.into(), message: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let Some(yi) = headers.iter().position(|h| h == response) else {
        return Err(CliError::Format { path: path.into(), message: format!("no response column named `{response}`") });
    };
    let names: Vec<String> = headers.iter().enumerate().filter(|(j, _)| *j != yi).map(|(_, h)| h.clone()).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, record) in reader.records().enumerate() {
        // data rows are numbered from 2: the header is row 1
        let row = r + 2;
        let record = record.map_err(|e| CliError::Format { path: path.into(), message: e.to_string() })?;
        if record.len() != headers.len() {
            return Err(CliError::Parse {
                path: path.into(),
                row,
                column: headers.get(record.len()).cloned().unwrap_or_default(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| CliError::Parse {
                path: path.into(),
                row,
                column: headers[j].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::NonFiniteValue { path: path.into(), row, column: headers[j].clone() });
            }
            if j == yi {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    if ys.is_empty() {
        return Err(CliError::EmptyFile(path.into()));
    }
    let n = ys.len();
    let x = Array2::from_shape_vec((n, names.len()), xs).expect("row-major fill");
    Ok(Table { names, response: response.to_string(), x, y: Array1::from(ys) })
}

/// Float text used in every CSV: 17 significant digits.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn save_csv(path: &Path, table: &Table) -> Result<()> {
    let mut header = table.names.clone();
    header.push(table.response.clone());
    let mut rows = Vec::with_capacity(table.n());
    for i in 0..table.n() {
        let mut row: Vec<String> = table.x.row(i).iter().map(|&v| fmt_f(v)).collect();
        row.push(fmt_f(table.y[i]));
        rows.push(row);
    }
    write_rows(path, &header, rows)
}

pub fn write_rows(path: &Path, header: &[String], rows: Vec<Vec<String>>) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| CliError::Format { path: path.into(), message: e.to_string() };
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Absolute form of an input path, so manifests can be replayed from any
/// working directory.
pub fn absolute(path: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(path).map_err(|e| CliError::io(path, e))
}
