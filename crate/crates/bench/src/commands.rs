//! `simulate`, `train` and `predict`.

use std::path::{Path, PathBuf};

use mcd_core::density_models::model_by_name;
use mcd_core::discriminators::Standardizer;
use mcd_core::{seeded_rng, McdEstimator};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{BenchError, Result};
use crate::ingest::{ingest_csv, read_csv, select_columns};
use crate::methods::{train_method, FittedMethod, McdSettings, MethodKind};
use crate::output::format_float;
use crate::protocol::derive_seed;

fn write_rows(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::Setting(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// `[simulate]`: `model`, `p` (default 10), `n` (default 100). Columns `x1..xp, y`.
pub fn simulate(cfg: &Config, seed: u64) -> Result<String> {
    let s = "simulate";
    let name: String = cfg.parse_or(s, "model", "basic_linear".to_string())?;
    let p: usize = cfg.parse_or(s, "p", 10)?;
    let n: usize = cfg.parse_or(s, "n", 100)?;
    let model = model_by_name(&name, p, derive_seed(seed, 0))?;
    let data = model.sample(n, &mut seeded_rng(derive_seed(seed, 2)))?;
    let mut header: Vec<String> = (1..=data.feature_dim()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let rows = (0..data.len()).map(|i| {
        data.x_row(i)
            .iter()
            .chain(data.y_row(i).iter())
            .map(|&v| format_float(v))
            .collect()
    });
    write_rows(&header, rows)
}

/// A trained estimator with the standardization of its training file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub feature_scaling: Standardizer,
    pub target_scaling: Standardizer,
    pub estimator: McdEstimator,
}

/// `[train]`: `data`, `target`, `method` (`mcd_mlp` or `mcd_logistic`) plus `[mcd]`.
pub fn train(cfg: &Config, seed: u64) -> Result<SavedModel> {
    let s = "train";
    let data = PathBuf::from(cfg.require::<String>(s, "data")?);
    let target: String = cfg.require(s, "target")?;
    let kind: MethodKind = cfg.parse_or(s, "method", MethodKind::McdMlp)?;
    if kind == MethodKind::Marginal {
        return Err(BenchError::Setting(
            "[train] method must be an MCD method".into(),
        ));
    }
    let ingested = ingest_csv(&data, &target)?;
    let settings = McdSettings::from_config(cfg)?;
    let trained = train_method(kind, &settings, (&ingested.dataset).into(), None, seed)?;
    let FittedMethod::Mcd(estimator) = trained.fitted else {
        unreachable!("MCD methods produce MCD estimators")
    };
    Ok(SavedModel {
        feature_names: ingested.feature_names,
        target_name: ingested.target_name,
        feature_scaling: ingested.feature_scaling,
        target_scaling: ingested.target_scaling,
        estimator: *estimator,
    })
}

pub fn save_model(model: &SavedModel, path: &Path) -> Result<()> {
    let text = serde_json::to_string(model)?;
    std::fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// `[predict]`: `model` (saved JSON), `data` (CSV with the feature columns), `grid_points` (default 200).
///
/// When `data` has the target column, writes the density at each row's
/// target; otherwise writes the density on a grid for each row. Output is
/// in the data's original units with columns `row, y, density`.
pub fn predict(cfg: &Config) -> Result<String> {
    let s = "predict";
    let model = load_model(Path::new(&cfg.require::<String>(s, "model")?))?;
    let data_path = PathBuf::from(cfg.require::<String>(s, "data")?);
    let grid_points: usize = cfg.parse_or(s, "grid_points", 200)?;
    let table = read_csv(&data_path)?;
    let x = select_columns(&table, &model.feature_names, &data_path)?;
    let xs = model.feature_scaling.transform(x.view())?;
    let (y_mean, y_scale) = (
        model.target_scaling.mean()[0],
        model.target_scaling.scale()[0],
    );
    let header = vec!["row".to_string(), "y".into(), "density".into()];
    let est = &model.estimator;
    let row =
        |i: usize, y: f64, d: f64| vec![i.to_string(), format_float(y), format_float(d / y_scale)];
    match table.column_index(&model.target_name) {
        Some(t) => {
            let y: Vec<f64> = table
                .data
                .column(t)
                .iter()
                .map(|&v| (v - y_mean) / y_scale)
                .collect();
            let dens = est.predict_pairs(&xs, &y)?;
            let rows = dens
                .iter()
                .enumerate()
                .map(|(i, &d)| row(i, table.data[[i, t]], d));
            write_rows(&header, rows)
        }
        None => {
            let grid = est.default_grid(grid_points)?;
            let dens = est.predict_pdf_on_grid_rows(&xs, &grid)?;
            let rows = dens.iter().enumerate().flat_map(|(i, d)| {
                grid.iter()
                    .zip(d)
                    .map(move |(&g, &v)| row(i, g * y_scale + y_mean, v))
            });
            write_rows(&header, rows.collect::<Vec<_>>())
        }
    }
}

pub const SEED_ENV: &str = "MCD_SEED";

/// `--seed` first, then `MCD_SEED`, then the top-level `seed` key, else 0.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, cfg: &Config) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(v) = env {
        return v
            .trim()
            .parse()
            .map_err(|_| BenchError::Setting(format!("{SEED_ENV} = `{v}` is not a u64")));
    }
    cfg.parse_or("", "seed", 0)
}
