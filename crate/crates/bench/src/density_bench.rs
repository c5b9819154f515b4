//! Synthetic benchmark: KL divergence between true and predicted
//! conditional densities on a shared grid, per method and seed.

use mcd_core::density_models::{model_by_name, DensityModel};
use mcd_core::estimator::{linspace, TrainingData};
use mcd_core::metrics::{
    empirical_kl_normalized, EvaluationReport, KlNormalization, Metric, DEFAULT_DELTA,
};
use mcd_core::{seeded_rng, MarginalDatasets};
use ndarray::Array2;
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{BenchError, Result};
use crate::methods::{parse_methods, train_method, McdSettings, MethodKind};
use crate::protocol::derive_seed;

pub const SECTION: &str = "bench-density";

pub const PILOT_DRAWS: usize = 100_000;
pub const GRID_LOWER_QUANTILE: f64 = 0.0005;
pub const GRID_UPPER_QUANTILE: f64 = 0.9995;

const STREAM_MODEL: u64 = 0;
const STREAM_PILOT: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_TEST: u64 = 3;
const STREAM_EXTRA: u64 = 4;
const STREAM_CELL: u64 = 1_000;

/// Options shared by the density benchmark and the ablation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub model: String,
    pub p: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub grid_points: usize,
    pub seeds: Vec<u64>,
    pub rescale: bool,
    pub normalization: KlNormalization,
    pub parallel: bool,
    pub timing: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            model: "basic_linear".into(),
            p: 10,
            n_train: 100,
            n_test: 100,
            grid_points: 10_000,
            seeds: vec![0],
            rescale: false,
            normalization: KlNormalization::Total,
            parallel: true,
            timing: false,
        }
    }
}

fn parse_normalization(v: &str) -> Result<KlNormalization> {
    match v {
        "total" => Ok(KlNormalization::Total),
        "per_test_point" => Ok(KlNormalization::PerTestPoint),
        other => Err(BenchError::Setting(format!(
            "kl_normalization = `{other}`; expected total or per_test_point"
        ))),
    }
}

impl EvalOptions {
    /// Reads the common keys of `section`; `seed` is the run seed used when
    /// the section lists no `seeds`.
    pub fn from_config(cfg: &Config, section: &str, seed: u64) -> Result<Self> {
        let d = EvalOptions::default();
        let opts = EvalOptions {
            model: cfg.get(section, "model").unwrap_or(&d.model).to_string(),
            p: cfg.parse_or(section, "p", d.p)?,
            n_train: cfg.parse_or(section, "n_train", d.n_train)?,
            n_test: cfg.parse_or(section, "n_test", d.n_test)?,
            grid_points: cfg.parse_or(section, "grid_points", d.grid_points)?,
            seeds: cfg.list_or(section, "seeds", vec![seed])?,
            rescale: cfg.parse_or(section, "rescale", d.rescale)?,
            normalization: match cfg.get(section, "kl_normalization") {
                Some(v) => parse_normalization(v)?,
                None => d.normalization,
            },
            parallel: cfg.parse_or(section, "parallel", d.parallel)?,
            timing: cfg.parse_or(section, "timing", d.timing)?,
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train < 2 {
            return Err(BenchError::Setting(format!(
                "n_train must be at least 2, got {}",
                self.n_train
            )));
        }
        if self.n_test == 0 {
            return Err(BenchError::Setting("n_test must be positive".into()));
        }
        if self.grid_points < 2 {
            return Err(BenchError::Setting(format!(
                "grid_points must be at least 2, got {}",
                self.grid_points
            )));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Setting("seeds is empty".into()));
        }
        Ok(())
    }
}

/// Quantile of already sorted values with linear interpolation.
fn sorted_quantile(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Evenly spaced grid between the pilot quantiles of the model's marginal.
pub fn pilot_grid(model: &dyn DensityModel, points: usize, seed: u64) -> Result<Vec<f64>> {
    let pilot = model.sample(PILOT_DRAWS, &mut seeded_rng(seed))?;
    let mut ys: Vec<f64> = pilot.y().iter().copied().collect();
    ys.sort_by(f64::total_cmp);
    Ok(linspace(
        sorted_quantile(&ys, GRID_LOWER_QUANTILE),
        sorted_quantile(&ys, GRID_UPPER_QUANTILE),
        points,
    )?)
}

/// Everything drawn from one seed: the model instance, grid, test features and their true densities.
pub struct SeedFixture {
    pub seed: u64,
    pub model: Box<dyn DensityModel>,
    pub grid: Vec<f64>,
    pub test_x: Array2<f64>,
    pub true_pdfs: Vec<Vec<f64>>,
}

impl SeedFixture {
    pub fn new(opts: &EvalOptions, seed: u64) -> Result<Self> {
        let model = model_by_name(&opts.model, opts.p, derive_seed(seed, STREAM_MODEL))?;
        let grid = pilot_grid(
            model.as_ref(),
            opts.grid_points,
            derive_seed(seed, STREAM_PILOT),
        )?;
        let test_x =
            model.sample_features(opts.n_test, &mut seeded_rng(derive_seed(seed, STREAM_TEST)));
        let true_pdfs = test_x
            .rows()
            .into_iter()
            .map(|x| model.true_conditional_pdf(x, &grid))
            .collect();
        Ok(SeedFixture {
            seed,
            model,
            grid,
            test_x,
            true_pdfs,
        })
    }

    pub fn train_data(&self, n: usize) -> Result<mcd_core::SupervisedDataset> {
        Ok(self
            .model
            .sample(n, &mut seeded_rng(derive_seed(self.seed, STREAM_TRAIN)))?)
    }

    pub fn train_multi(&self, n: usize, m: usize) -> Result<mcd_core::MultiTargetDataset> {
        Ok(self
            .model
            .sample_multi(n, m, &mut seeded_rng(derive_seed(self.seed, STREAM_TRAIN)))?)
    }

    /// `n_x` extra feature rows and `n_y` extra target values, drawn independently.
    pub fn extra_marginals(&self, n_x: usize, n_y: usize) -> Result<MarginalDatasets> {
        let mut rng = seeded_rng(derive_seed(self.seed, STREAM_EXTRA));
        let extra_x = self.model.sample_features(n_x, &mut rng);
        let extra_y = if n_y == 0 {
            Array2::zeros((0, 1))
        } else {
            self.model.sample(n_y, &mut rng)?.y().clone()
        };
        Ok(MarginalDatasets::new(extra_x, extra_y)?)
    }

    /// Seed for the training randomness of cell `cell`.
    pub fn cell_seed(&self, cell: u64) -> u64 {
        derive_seed(self.seed, STREAM_CELL + cell)
    }
}

/// One trained method scored against a fixture.
pub struct CellInput<'a> {
    pub kind: MethodKind,
    pub settings: &'a McdSettings,
    pub data: TrainingData<'a>,
    pub extra: Option<&'a MarginalDatasets>,
    pub cell: u64,
    pub setting: String,
}

pub fn evaluate_cell(
    opts: &EvalOptions,
    fx: &SeedFixture,
    input: CellInput<'_>,
) -> Result<EvaluationReport> {
    let start = std::time::Instant::now();
    let trained = train_method(
        input.kind,
        input.settings,
        input.data,
        input.extra,
        fx.cell_seed(input.cell),
    )?;
    let pred = trained
        .fitted
        .predict_grid(&fx.test_x, &fx.grid, opts.rescale)?;
    let value = empirical_kl_normalized(&fx.true_pdfs, &pred, DEFAULT_DELTA, opts.normalization)?;
    let wall = if opts.timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let report = EvaluationReport {
        method: input.kind.name().to_string(),
        model: opts.model.clone(),
        metric: Metric::Kl,
        value,
        contrast_size: trained.contrast_size,
        ratio: trained.ratio,
        seed: fx.seed,
        wall_time_seconds: wall,
        n_test: opts.n_test,
        grid_size: fx.grid.len(),
        setting: input.setting,
    };
    report.validate()?;
    Ok(report)
}

/// Runs `f` over `items` in parallel or serially; output order follows `items`.
pub fn map_cells<T: Sync, R: Send>(
    items: &[T],
    parallel: bool,
    f: impl Fn(&T) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// Reports for every (seed, method) pair, seed-major.
pub fn run_density_bench(
    opts: &EvalOptions,
    settings: &McdSettings,
    methods: &[MethodKind],
) -> Result<Vec<EvaluationReport>> {
    opts.validate()?;
    let fixtures = map_cells(&opts.seeds, opts.parallel, |&s| SeedFixture::new(opts, s))?;
    let cells: Vec<(usize, usize)> = (0..fixtures.len())
        .flat_map(|f| (0..methods.len()).map(move |m| (f, m)))
        .collect();
    let setting = format!("{}:r={}", settings.construction, settings.ratio.value());
    map_cells(&cells, opts.parallel, |&(f, m)| {
        let fx = &fixtures[f];
        let data = fx.train_data(opts.n_train)?;
        evaluate_cell(
            opts,
            fx,
            CellInput {
                kind: methods[m],
                settings,
                data: (&data).into(),
                extra: None,
                cell: m as u64,
                setting: if methods[m] == MethodKind::Marginal {
                    String::new()
                } else {
                    setting.clone()
                },
            },
        )
    })
}

/// Reads `[bench-density]` and `[mcd]` and runs the benchmark.
pub fn run_from_config(cfg: &Config, seed: u64) -> Result<Vec<EvaluationReport>> {
    let opts = EvalOptions::from_config(cfg, SECTION, seed)?;
    let settings = McdSettings::from_config(cfg)?;
    let methods = parse_methods(cfg, SECTION)?;
    run_density_bench(&opts, &settings, &methods)
}
