//! CSV ingestion: header row, UTF-8, comma separator.
//!
//! The label and sensitive columns must each hold exactly two distinct
//! values, mapped to {0, 1} by lexicographic order of the raw strings.
//! Feature columns are classified by their first data row: a column whose
//! first cell parses as a finite number is numeric (later unparseable cells
//! are hard errors), anything else is categorical and one-hot encoded with
//! lexicographically ordered categories. Missing cells are hard errors.
//!
//! By default the feature set is every column except the label and
//! sensitive columns; pass an explicit feature list to include the
//! sensitive attribute among the features.
//!
//! Saving writes the encoded feature columns plus the raw label/sensitive
//! values, with floats in shortest round-trippable form, and a sidecar
//! `<file>.meta.json` recording the column encodings.

use std::collections::BTreeSet;
use std::path::Path;

use fairfix_core::dataset::{LabeledDataset, LabeledSample};
use serde::{Deserialize, Serialize};

use crate::{IoError, IoResult};

/// How one raw column maps into the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureEncoding {
    Numeric { column: String },
    OneHot { column: String, values: Vec<String> },
}

/// Binary column with its two raw values in index order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueMap {
    pub column: String,
    pub values: [String; 2],
}

/// Column encodings recorded at load time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub label: ValueMap,
    pub sensitive: ValueMap,
    pub features: Vec<FeatureEncoding>,
}

fn file_error(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

fn format_error(path: &Path, detail: impl Into<String>) -> IoError {
    IoError::Format {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

fn cell_error(path: &Path, row: usize, column: &str, detail: impl Into<String>) -> IoError {
    IoError::Cell {
        path: path.display().to_string(),
        row,
        column: column.to_string(),
        detail: detail.into(),
    }
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Maps a binary column to {0, 1} by lexicographic order of its raw values.
fn binary_map(path: &Path, name: &str, cells: &[String]) -> IoResult<(ValueMap, Vec<u8>)> {
    for (row, cell) in cells.iter().enumerate() {
        if cell.is_empty() {
            return Err(cell_error(path, row + 1, name, "missing value"));
        }
    }
    let distinct: BTreeSet<&String> = cells.iter().collect();
    if distinct.len() != 2 {
        return Err(format_error(
            path,
            format!(
                "column '{name}' must hold exactly two distinct values, found {}: {:?}",
                distinct.len(),
                distinct.iter().take(5).collect::<Vec<_>>()
            ),
        ));
    }
    let values: Vec<&String> = distinct.into_iter().collect();
    let map = ValueMap {
        column: name.to_string(),
        values: [values[0].clone(), values[1].clone()],
    };
    let codes = cells.iter().map(|cell| (cell == values[1]) as u8).collect();
    Ok((map, codes))
}

/// Loads a CSV into an (unannotated) dataset plus the encoding record.
pub fn load_csv(
    path: &Path,
    label_col: &str,
    sensitive_col: &str,
    feature_cols: Option<&[String]>,
) -> IoResult<(LabeledDataset, DatasetMeta)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| format_error(path, e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| format_error(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();

    let column_index = |name: &str| -> IoResult<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format_error(path, format!("column '{name}' not found in header")))
    };
    let label_idx = column_index(label_col)?;
    let sensitive_idx = column_index(sensitive_col)?;

    let feature_names: Vec<String> = match feature_cols {
        Some(cols) => {
            for col in cols {
                column_index(col)?;
            }
            cols.to_vec()
        }
        None => headers
            .iter()
            .filter(|h| h.as_str() != label_col && h.as_str() != sensitive_col)
            .cloned()
            .collect(),
    };

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_error(path, format!("row {}: {e}", i + 1)))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(format_error(path, "no data rows"));
    }

    let column = |idx: usize| -> Vec<String> { rows.iter().map(|r| r[idx].clone()).collect() };
    let (label_map, labels) = binary_map(path, label_col, &column(label_idx))?;
    let (sensitive_map, sensitive) = binary_map(path, sensitive_col, &column(sensitive_idx))?;

    let mut encodings = Vec::with_capacity(feature_names.len());
    let mut expanded_names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for name in &feature_names {
        let idx = column_index(name)?;
        let cells = column(idx);
        for (row, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(cell_error(path, row + 1, name, "missing value"));
            }
        }
        if parse_finite(&cells[0]).is_some() {
            let mut values = Vec::with_capacity(cells.len());
            for (row, cell) in cells.iter().enumerate() {
                let value = parse_finite(cell).ok_or_else(|| {
                    cell_error(
                        path,
                        row + 1,
                        name,
                        format!("cannot parse '{cell}' as a number"),
                    )
                })?;
                values.push(value);
            }
            encodings.push(FeatureEncoding::Numeric {
                column: name.clone(),
            });
            expanded_names.push(name.clone());
            columns.push(values);
        } else {
            let distinct: BTreeSet<&String> = cells.iter().collect();
            let categories: Vec<String> = distinct.into_iter().cloned().collect();
            for category in &categories {
                expanded_names.push(format!("{name}={category}"));
                columns.push(
                    cells
                        .iter()
                        .map(|cell| (cell == category) as u8 as f64)
                        .collect(),
                );
            }
            encodings.push(FeatureEncoding::OneHot {
                column: name.clone(),
                values: categories,
            });
        }
    }

    let feature_dim = columns.len();
    let samples: Vec<LabeledSample> = (0..rows.len())
        .map(|row| {
            let x = columns.iter().map(|col| col[row]).collect();
            LabeledSample::new(x, labels[row], sensitive[row])
        })
        .collect();
    let dataset = LabeledDataset::new(
        samples,
        feature_dim,
        expanded_names,
        label_col.to_string(),
        sensitive_col.to_string(),
        label_map.values.clone(),
        sensitive_map.values.clone(),
    )?;
    let meta = DatasetMeta {
        label: label_map,
        sensitive: sensitive_map,
        features: encodings,
    };
    Ok((dataset, meta))
}

/// Writes the dataset back out: encoded feature columns, then the raw label
/// and sensitive columns (one column when they coincide), plus the sidecar
/// encoding record.
pub fn save_csv(dataset: &LabeledDataset, path: &Path) -> IoResult<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| format_error(path, e.to_string()))?;
    let same_column = dataset.label_name == dataset.sensitive_name;
    let mut header: Vec<String> = dataset.feature_names.clone();
    header.push(dataset.label_name.clone());
    if !same_column {
        header.push(dataset.sensitive_name.clone());
    }
    writer
        .write_record(&header)
        .map_err(|e| format_error(path, e.to_string()))?;
    for sample in &dataset.samples {
        let mut record: Vec<String> = sample.x.iter().map(|v| format!("{v}")).collect();
        record.push(dataset.label_values[sample.y as usize].clone());
        if !same_column {
            record.push(dataset.sensitive_values[sample.s as usize].clone());
        }
        writer
            .write_record(&record)
            .map_err(|e| format_error(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| file_error(path, e))?;

    let meta = DatasetMeta {
        label: ValueMap {
            column: dataset.label_name.clone(),
            values: dataset.label_values.clone(),
        },
        sensitive: ValueMap {
            column: dataset.sensitive_name.clone(),
            values: dataset.sensitive_values.clone(),
        },
        features: dataset
            .feature_names
            .iter()
            .map(|name| FeatureEncoding::Numeric {
                column: name.clone(),
            })
            .collect(),
    };
    let sidecar = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta).expect("meta serialization cannot fail");
    std::fs::write(&sidecar, json).map_err(|e| file_error(&sidecar, e))
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".meta.json");
    std::path::PathBuf::from(name)
}
