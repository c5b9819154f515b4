//! Numeric CSV ingestion with per-column standardization.

use std::path::Path;

use mcd_core::discriminators::Standardizer;
use mcd_core::SupervisedDataset;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// A rectangular numeric table with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub data: Array2<f64>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn input_error(path: &Path, message: String) -> BenchError {
    BenchError::Input {
        path: path.display().to_string(),
        message,
    }
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<CsvTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input_error(path, e.to_string()))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(input_error(
            path,
            format!("need at least 2 columns, found {}", header.len()),
        ));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(input_error(
                path,
                format!(
                    "row {} has {} fields, header has {}",
                    r + 1,
                    record.len(),
                    header.len()
                ),
            ));
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                input_error(
                    path,
                    format!(
                        "row {}, column `{}`: `{cell}` is not a number",
                        r + 1,
                        header[c]
                    ),
                )
            })?;
            if !v.is_finite() {
                return Err(input_error(
                    path,
                    format!("row {}, column `{}`: non-finite value", r + 1, header[c]),
                ));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(input_error(path, "no data rows after the header".into()));
    }
    let data =
        Array2::from_shape_vec((rows, header.len()), values).expect("rectangular by construction");
    Ok(CsvTable { header, data })
}

/// Standardized supervised data plus what is needed to map back to the file's units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedDataset {
    pub dataset: SupervisedDataset,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub feature_scaling: Standardizer,
    pub target_scaling: Standardizer,
}

/// Splits `table` into features and the named target, standardizing every
/// column to zero mean and unit variance (constant columns become zero).
pub fn standardize_table(
    table: &CsvTable,
    target_column: &str,
    path: &Path,
) -> Result<IngestedDataset> {
    let t = table.column_index(target_column).ok_or_else(|| {
        input_error(
            path,
            format!(
                "target column `{target_column}` not found; columns are {}",
                table.header.join(", ")
            ),
        )
    })?;
    let feature_idx: Vec<usize> = (0..table.header.len()).filter(|&c| c != t).collect();
    let x = table.data.select(Axis(1), &feature_idx);
    let y = table.data.select(Axis(1), &[t]);
    let feature_scaling = Standardizer::fit(x.view())?;
    let target_scaling = Standardizer::fit(y.view())?;
    let dataset = SupervisedDataset::new(
        feature_scaling.transform(x.view())?,
        target_scaling.transform(y.view())?,
    )?;
    Ok(IngestedDataset {
        dataset,
        feature_names: feature_idx
            .iter()
            .map(|&c| table.header[c].clone())
            .collect(),
        target_name: target_column.to_string(),
        feature_scaling,
        target_scaling,
    })
}

pub fn ingest_csv(path: impl AsRef<Path>, target_column: &str) -> Result<IngestedDataset> {
    let path = path.as_ref();
    let table = read_csv(path)?;
    standardize_table(&table, target_column, path)
}

/// Selects `names` from a table in that order.
pub fn select_columns(table: &CsvTable, names: &[String], path: &Path) -> Result<Array2<f64>> {
    let idx = names
        .iter()
        .map(|n| {
            table
                .column_index(n)
                .ok_or_else(|| input_error(path, format!("column `{n}` not found")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table.data.select(Axis(1), &idx))
}
