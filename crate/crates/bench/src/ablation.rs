//! Ablation grids over construction, ratio, extra marginal sizes and draws per row.
//!
//! A cell is written `construction:ratio[:nx=N][:ny=N][:m=M]`, for example
//! `id:0.05`, `iid_additional:0.5:nx=100:ny=0` or `id_multitarget:0.15:m=10`.

use mcd_core::metrics::EvaluationReport;
use mcd_core::{Construction, Ratio};

use crate::config::{split_list, Config};
use crate::density_bench::{evaluate_cell, map_cells, CellInput, EvalOptions, SeedFixture};
use crate::error::{BenchError, Result};
use crate::methods::{McdSettings, MethodKind};

pub const SECTION: &str = "ablation";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationCell {
    pub construction: Construction,
    pub ratio: Ratio,
    pub n_x: usize,
    pub n_y: usize,
    pub m: Option<usize>,
}

impl AblationCell {
    pub fn new(construction: Construction, ratio: f64) -> Result<Self> {
        Ok(AblationCell {
            construction,
            ratio: Ratio::new(ratio)?,
            n_x: 0,
            n_y: 0,
            m: None,
        })
    }

    pub fn with_extra(mut self, n_x: usize, n_y: usize) -> Self {
        self.n_x = n_x;
        self.n_y = n_y;
        self
    }

    pub fn with_draws(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let additional = matches!(
            self.construction,
            Construction::IidAdditional | Construction::IdAdditional
        );
        if (self.n_x > 0 || self.n_y > 0) && !additional {
            return Err(BenchError::Setting(format!(
                "cell `{self}`: nx/ny need iid_additional or id_additional"
            )));
        }
        match (self.construction, self.m) {
            (Construction::IdMultitarget, None) => Err(BenchError::Setting(format!(
                "cell `{self}`: id_multitarget needs m"
            ))),
            (Construction::IdMultitarget, Some(0)) => Err(BenchError::Setting(format!(
                "cell `{self}`: m must be positive"
            ))),
            (Construction::IdMultitarget, Some(_)) => Ok(()),
            (_, Some(_)) => Err(BenchError::Setting(format!(
                "cell `{self}`: m needs id_multitarget"
            ))),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for AblationCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.construction, self.ratio.value())?;
        if self.n_x > 0 || self.n_y > 0 {
            write!(f, ":nx={}:ny={}", self.n_x, self.n_y)?;
        }
        if let Some(m) = self.m {
            write!(f, ":m={m}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for AblationCell {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| BenchError::Setting(format!("ablation cell `{s}`: {why}"));
        let mut parts = s.split(':').map(str::trim);
        let construction: Construction = parts.next().unwrap_or_default().parse()?;
        let ratio: f64 = parts
            .next()
            .ok_or_else(|| bad("missing ratio"))?
            .parse()
            .map_err(|_| bad("ratio is not a number"))?;
        let mut cell = AblationCell::new(construction, ratio)?;
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad("expected key=value"))?;
            let v: usize = v
                .parse()
                .map_err(|_| bad("size is not a non-negative integer"))?;
            match k {
                "nx" => cell.n_x = v,
                "ny" => cell.n_y = v,
                "m" => cell.m = Some(v),
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        cell.validate()?;
        Ok(cell)
    }
}

/// Reports for every (seed, cell) pair, seed-major.
pub fn run_ablation(
    opts: &EvalOptions,
    base: &McdSettings,
    method: MethodKind,
    cells: &[AblationCell],
) -> Result<Vec<EvaluationReport>> {
    opts.validate()?;
    if method == MethodKind::Marginal {
        return Err(BenchError::Setting("ablation needs an MCD method".into()));
    }
    if cells.is_empty() {
        return Err(BenchError::Setting("no ablation cells".into()));
    }
    for c in cells {
        c.validate()?;
    }
    let fixtures = map_cells(&opts.seeds, opts.parallel, |&s| SeedFixture::new(opts, s))?;
    let jobs: Vec<(usize, usize)> = (0..fixtures.len())
        .flat_map(|f| (0..cells.len()).map(move |c| (f, c)))
        .collect();
    map_cells(&jobs, opts.parallel, |&(f, c)| {
        let fx = &fixtures[f];
        let cell = &cells[c];
        let settings = McdSettings {
            construction: cell.construction,
            ratio: cell.ratio,
            ..base.clone()
        };
        let input = |data, extra| CellInput {
            kind: method,
            settings: &settings,
            data,
            extra,
            cell: c as u64,
            setting: cell.to_string(),
        };
        match cell.construction {
            Construction::IdMultitarget => {
                let data = fx.train_multi(opts.n_train, cell.m.unwrap_or(1))?;
                evaluate_cell(opts, fx, input((&data).into(), None))
            }
            Construction::IidAdditional | Construction::IdAdditional => {
                let data = fx.train_data(opts.n_train)?;
                let extra = fx.extra_marginals(cell.n_x, cell.n_y)?;
                evaluate_cell(opts, fx, input((&data).into(), Some(&extra)))
            }
            Construction::Iid | Construction::Id => {
                let data = fx.train_data(opts.n_train)?;
                evaluate_cell(opts, fx, input((&data).into(), None))
            }
        }
    })
}

/// Reads `[ablation]` (`cells`, `method` plus the common evaluation keys) and `[mcd]`.
pub fn run_from_config(cfg: &Config, seed: u64) -> Result<Vec<EvaluationReport>> {
    let opts = EvalOptions::from_config(cfg, SECTION, seed)?;
    let base = McdSettings::from_config(cfg)?;
    let method: MethodKind = cfg.parse_or(SECTION, "method", MethodKind::McdMlp)?;
    let cells_raw = cfg
        .get(SECTION, "cells")
        .ok_or_else(|| BenchError::Setting("missing key `cells` in section [ablation]".into()))?;
    let cells = split_list(cells_raw)
        .map(str::parse)
        .collect::<Result<Vec<AblationCell>>>()?;
    run_ablation(&opts, &base, method, &cells)
}
