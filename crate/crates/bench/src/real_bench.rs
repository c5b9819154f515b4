//! Held-out negative log-likelihood on a user-supplied CSV dataset.
//!
//! Reported values are NLL as defined: the sum of `-ln max(g, delta)` over
//! the test pairs, so lower is better.

use std::path::{Path, PathBuf};

use mcd_core::metrics::{empirical_nll, EvaluationReport, Metric, DEFAULT_DELTA};
use ndarray::Axis;

use crate::config::Config;
use crate::density_bench::map_cells;
use crate::error::{BenchError, Result};
use crate::ingest::ingest_csv;
use crate::methods::{parse_methods, train_method, McdSettings, MethodKind};
use crate::protocol::{derive_seed, split_train_test};

pub const SECTION: &str = "bench-real";

const STREAM_SPLIT: u64 = 0;
const STREAM_CELL: u64 = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RealBenchOptions {
    pub data: PathBuf,
    pub target: String,
    pub seeds: Vec<u64>,
    pub parallel: bool,
    pub timing: bool,
}

impl RealBenchOptions {
    pub fn from_config(cfg: &Config, seed: u64) -> Result<Self> {
        let opts = RealBenchOptions {
            data: PathBuf::from(cfg.require::<String>(SECTION, "data")?),
            target: cfg.require(SECTION, "target")?,
            seeds: cfg.list_or(SECTION, "seeds", vec![seed])?,
            parallel: cfg.parse_or(SECTION, "parallel", true)?,
            timing: cfg.parse_or(SECTION, "timing", false)?,
        };
        if opts.seeds.is_empty() {
            return Err(BenchError::Setting("[bench-real] seeds is empty".into()));
        }
        Ok(opts)
    }
}

fn dataset_label(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

/// One NLL report per (seed, method), seed-major.
pub fn run_real_bench(
    opts: &RealBenchOptions,
    settings: &McdSettings,
    methods: &[MethodKind],
) -> Result<Vec<EvaluationReport>> {
    let ingested = ingest_csv(&opts.data, &opts.target)?;
    let full = &ingested.dataset;
    let label = dataset_label(&opts.data);
    let jobs: Vec<(u64, usize)> = opts
        .seeds
        .iter()
        .flat_map(|&s| (0..methods.len()).map(move |m| (s, m)))
        .collect();
    map_cells(&jobs, opts.parallel, |&(seed, m)| {
        let start = std::time::Instant::now();
        let (train_idx, test_idx) = split_train_test(full.len(), derive_seed(seed, STREAM_SPLIT))?;
        let train = full.select(&train_idx);
        let test_x = full.x().select(Axis(0), &test_idx);
        let test_y: Vec<f64> = test_idx.iter().map(|&i| full.y()[[i, 0]]).collect();
        let kind = methods[m];
        let trained = train_method(
            kind,
            settings,
            (&train).into(),
            None,
            derive_seed(seed, STREAM_CELL + m as u64),
        )?;
        let dens = trained.fitted.predict_pairs(&test_x, &test_y)?;
        let report = EvaluationReport {
            method: kind.name().to_string(),
            model: label.clone(),
            metric: Metric::Nll,
            value: empirical_nll(&dens, DEFAULT_DELTA)?,
            contrast_size: trained.contrast_size,
            ratio: trained.ratio,
            seed,
            wall_time_seconds: if opts.timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
            n_test: test_idx.len(),
            grid_size: 0,
            setting: if kind == MethodKind::Marginal {
                String::new()
            } else {
                format!("{}:r={}", settings.construction, settings.ratio.value())
            },
        };
        report.validate()?;
        Ok(report)
    })
}

pub fn run_from_config(cfg: &Config, seed: u64) -> Result<Vec<EvaluationReport>> {
    let opts = RealBenchOptions::from_config(cfg, seed)?;
    let settings = McdSettings::from_config(cfg)?;
    let methods = parse_methods(cfg, SECTION)?;
    run_real_bench(&opts, &settings, &methods)
}
