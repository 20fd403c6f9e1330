//! CSV I/O for datasets, measures, plans, and predictions.
//!
//! The data format is one row per point: d numeric feature columns, plus an
//! optional `label` column (string or integer) and, for measure files, an
//! optional `weight` column. A header row is required; feature columns keep
//! their file order.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use hotda_core::{DiscreteMeasure, Label, LabeledDataset, UnlabeledDataset};
use ndarray::{Array1, Array2};

use crate::CliError;

pub struct RawTable {
    pub points: Array2<f64>,
    pub labels: Option<Vec<Label>>,
    pub weights: Option<Vec<f64>>,
}

pub fn read_table(path: &Path) -> Result<RawTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: bad header: {e}", path.display())))?
        .clone();

    let mut label_col = None;
    let mut weight_col = None;
    let mut feature_cols = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        match name.to_ascii_lowercase().as_str() {
            "label" => label_col = Some(idx),
            "weight" => weight_col = Some(idx),
            _ => feature_cols.push(idx),
        }
    }
    if feature_cols.is_empty() {
        return Err(CliError::data(format!(
            "{}: no feature columns found",
            path.display()
        )));
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::data(format!("{}: row {line}: {e}", path.display())))?;
        for &c in &feature_cols {
            let raw = record.get(c).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                CliError::data(format!(
                    "{}: row {line}: '{raw}' is not a number",
                    path.display()
                ))
            })?;
            rows.push(v);
        }
        if let Some(c) = label_col {
            labels.push(Label::parse(record.get(c).unwrap_or("")));
        }
        if let Some(c) = weight_col {
            let raw = record.get(c).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                CliError::data(format!(
                    "{}: row {line}: weight '{raw}' is not a number",
                    path.display()
                ))
            })?;
            weights.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::data(format!("{}: no data rows", path.display())));
    }
    let points = Array2::from_shape_vec((n, feature_cols.len()), rows)
        .expect("row-major reshape matches counts");
    Ok(RawTable {
        points,
        labels: label_col.map(|_| labels),
        weights: weight_col.map(|_| weights),
    })
}

pub fn read_labeled(path: &Path) -> Result<LabeledDataset, CliError> {
    let table = read_table(path)?;
    let labels = table.labels.ok_or_else(|| {
        CliError::data(format!("{}: a label column is required", path.display()))
    })?;
    LabeledDataset::new(table.points, labels).map_err(CliError::from)
}

pub fn read_unlabeled(path: &Path) -> Result<UnlabeledDataset, CliError> {
    let table = read_table(path)?;
    UnlabeledDataset::new(table.points).map_err(CliError::from)
}

/// Read a measure file: points with an optional `weight` column, which is
/// normalized to the simplex (uniform when absent).
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    let table = read_table(path)?;
    match table.weights {
        None => DiscreteMeasure::uniform(table.points).map_err(CliError::from),
        Some(mut w) => {
            if w.iter().any(|&x| x < 0.0) {
                return Err(CliError::data(format!(
                    "{}: weights must be non-negative",
                    path.display()
                )));
            }
            let sum: f64 = w.iter().sum();
            if !(sum > 0.0) {
                return Err(CliError::data(format!(
                    "{}: weights must have positive total mass",
                    path.display()
                )));
            }
            for x in &mut w {
                *x /= sum;
            }
            let drift: f64 = 1.0 - w.iter().sum::<f64>();
            w[0] += drift;
            DiscreteMeasure::new(table.points, Array1::from_vec(w)).map_err(CliError::from)
        }
    }
}

pub fn write_points(
    path: &Path,
    points: ndarray::ArrayView2<'_, f64>,
    labels: Option<&[Label]>,
) -> Result<(), CliError> {
    let mut out = String::new();
    let d = points.ncols();
    for c in 0..d {
        if c > 0 {
            out.push(',');
        }
        out.push_str(&format!("x{c}"));
    }
    if labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for i in 0..points.nrows() {
        for c in 0..d {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", points[[i, c]]));
        }
        if let Some(labels) = labels {
            out.push_str(&format!(",{}", labels[i]));
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// Dense matrix as CSV with generated column names.
pub fn write_matrix(path: &Path, matrix: &Array2<f64>) -> Result<(), CliError> {
    let mut out = String::new();
    for j in 0..matrix.ncols() {
        if j > 0 {
            out.push(',');
        }
        out.push_str(&format!("c{j}"));
    }
    out.push('\n');
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", matrix[[i, j]]));
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::data(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let mut f = File::create(path)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
    f.write_all(bytes)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}
