//! Benchmarked methods: MCD with a chosen discriminator, and the
//! marginal-only baseline that ignores the features.

use mcd_core::discriminators::{DiscriminatorKind, LogisticParams, MlpParams};
use mcd_core::estimator::{TrainingData, DEFAULT_EPSILON};
use mcd_core::{
    Construction, DiscriminatorSpec, MarginalDatasets, MarginalDensityModel, McdConfig,
    McdEstimator, Ratio,
};
use ndarray::Array2;

use crate::config::Config;
use crate::error::{BenchError, Result};

pub const MCD_SECTION: &str = "mcd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    McdMlp,
    McdLogistic,
    Marginal,
}

impl MethodKind {
    pub const ALL: [MethodKind; 3] = [
        MethodKind::McdMlp,
        MethodKind::McdLogistic,
        MethodKind::Marginal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::McdMlp => "MCD:MLP",
            MethodKind::McdLogistic => "MCD:E.Net",
            MethodKind::Marginal => "Marginal",
        }
    }

    fn key(self) -> &'static str {
        match self {
            MethodKind::McdMlp => "mcd_mlp",
            MethodKind::McdLogistic => "mcd_logistic",
            MethodKind::Marginal => "marginal",
        }
    }
}

impl std::str::FromStr for MethodKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| {
                let keys: Vec<_> = MethodKind::ALL.iter().map(|m| m.key()).collect();
                format!("unknown method `{s}`; expected one of {}", keys.join(", "))
            })
    }
}

/// MCD settings read from the `[mcd]` section.
///
/// | key             | default |
/// |-----------------|---------|
/// | `construction`  | `id`    |
/// | `ratio`         | `0.05`  |
/// | `epsilon`       | `1e-6`  |
/// | `hidden`        | `64,64` |
/// | `learning_rate` | `1e-3`  |
/// | `epochs`        | `200`   |
/// | `batch_size`    | `64`    |
/// | `l1`, `l2`      | `1e-4`  |
/// | `max_iter`      | `1000`  |
#[derive(Debug, Clone, PartialEq)]
pub struct McdSettings {
    pub construction: Construction,
    pub ratio: Ratio,
    pub epsilon: f64,
    pub mlp: MlpParams,
    pub logistic: LogisticParams,
}

impl Default for McdSettings {
    fn default() -> Self {
        McdSettings {
            construction: Construction::Id,
            ratio: Ratio::new(0.05).expect("valid"),
            epsilon: DEFAULT_EPSILON,
            mlp: MlpParams::default(),
            logistic: LogisticParams::default(),
        }
    }
}

impl McdSettings {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let d = McdSettings::default();
        let s = MCD_SECTION;
        let ratio: f64 = cfg.parse_or(s, "ratio", d.ratio.value())?;
        let construction = match cfg.get(s, "construction") {
            Some(c) => c.parse()?,
            None => d.construction,
        };
        let mlp = MlpParams {
            hidden: cfg.list_or(s, "hidden", d.mlp.hidden.clone())?,
            learning_rate: cfg.parse_or(s, "learning_rate", d.mlp.learning_rate)?,
            epochs: cfg.parse_or(s, "epochs", d.mlp.epochs)?,
            batch_size: cfg.parse_or(s, "batch_size", d.mlp.batch_size)?,
            ..d.mlp
        };
        let logistic = LogisticParams {
            l1: cfg.parse_or(s, "l1", d.logistic.l1)?,
            l2: cfg.parse_or(s, "l2", d.logistic.l2)?,
            max_iter: cfg.parse_or(s, "max_iter", d.logistic.max_iter)?,
            tol: cfg.parse_or(s, "tol", d.logistic.tol)?,
        };
        let out = McdSettings {
            construction,
            ratio: Ratio::new(ratio)?,
            epsilon: cfg.parse_or(s, "epsilon", d.epsilon)?,
            mlp,
            logistic,
        };
        out.mlp.validate()?;
        out.logistic.validate()?;
        Ok(out)
    }

    pub fn config_for(&self, kind: MethodKind, seed: u64) -> Option<McdConfig> {
        let disc = match kind {
            MethodKind::McdMlp => DiscriminatorKind::Mlp(self.mlp.clone()),
            MethodKind::McdLogistic => DiscriminatorKind::LogisticElasticnet(self.logistic.clone()),
            MethodKind::Marginal => return None,
        };
        let spec = DiscriminatorSpec {
            kind: disc,
            seed: crate::protocol::derive_seed(seed, 1),
        };
        let mut cfg = McdConfig::new(self.ratio, self.construction, spec)
            .with_seed(crate::protocol::derive_seed(seed, 2));
        cfg.epsilon = self.epsilon;
        Some(cfg)
    }
}

pub fn parse_methods(cfg: &Config, section: &str) -> Result<Vec<MethodKind>> {
    let methods: Vec<MethodKind> = cfg.list_or(
        section,
        "methods",
        vec![MethodKind::McdMlp, MethodKind::Marginal],
    )?;
    if methods.is_empty() {
        return Err(BenchError::Setting(format!("[{section}] methods is empty")));
    }
    Ok(methods)
}

/// A trained method ready to predict conditional densities.
#[derive(Debug, Clone)]
pub enum FittedMethod {
    Mcd(Box<McdEstimator>),
    Marginal(MarginalDensityModel),
}

/// Training outcome with the contrast-set size and plug-in ratio it used.
#[derive(Debug, Clone)]
pub struct TrainedMethod {
    pub kind: MethodKind,
    pub fitted: FittedMethod,
    pub contrast_size: usize,
    pub ratio: f64,
}

fn all_targets(data: TrainingData<'_>, extra: Option<&MarginalDatasets>) -> Vec<f64> {
    let mut ys: Vec<f64> = match data {
        TrainingData::Paired(d) => d.y().iter().copied().collect(),
        TrainingData::MultiTarget(d) => d.y().iter().copied().collect(),
    };
    if let Some(e) = extra {
        ys.extend(e.extra_y().iter().copied());
    }
    ys
}

pub fn train_method(
    kind: MethodKind,
    settings: &McdSettings,
    data: TrainingData<'_>,
    extra: Option<&MarginalDatasets>,
    seed: u64,
) -> Result<TrainedMethod> {
    match settings.config_for(kind, seed) {
        None => Ok(TrainedMethod {
            kind,
            fitted: FittedMethod::Marginal(MarginalDensityModel::fit(&all_targets(data, extra))?),
            contrast_size: 0,
            ratio: 0.0,
        }),
        Some(cfg) => {
            let est = McdEstimator::train(data, extra, &cfg)?;
            let contrast_size = est.contrast_summary().map_or(0, |s| s.total());
            Ok(TrainedMethod {
                kind,
                ratio: est.ratio().value(),
                fitted: FittedMethod::Mcd(Box::new(est)),
                contrast_size,
            })
        }
    }
}

impl FittedMethod {
    pub fn marginal(&self) -> &MarginalDensityModel {
        match self {
            FittedMethod::Mcd(e) => e.marginal(),
            FittedMethod::Marginal(m) => m,
        }
    }

    /// Conditional density on `grid` for every row of `xs`, optionally rescaled to integrate to one.
    pub fn predict_grid(
        &self,
        xs: &Array2<f64>,
        grid: &[f64],
        rescale: bool,
    ) -> Result<Vec<Vec<f64>>> {
        let raw = match self {
            FittedMethod::Mcd(e) => e.predict_pdf_on_grid_rows(xs, grid)?,
            FittedMethod::Marginal(m) => vec![m.pdf_batch(grid); xs.nrows()],
        };
        if !rescale {
            return Ok(raw);
        }
        Ok(raw
            .iter()
            .map(|v| mcd_core::estimator::rescale(v, grid))
            .collect::<mcd_core::Result<Vec<_>>>()?)
    }

    /// Conditional density at each `(x_i, y_i)`.
    pub fn predict_pairs(&self, xs: &Array2<f64>, ys: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            FittedMethod::Mcd(e) => e.predict_pairs(xs, ys)?,
            FittedMethod::Marginal(m) => m.pdf_batch(ys),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_from_config() {
        let cfg =
            Config::parse("[mcd]\nratio = 0.15\nconstruction = iid\nhidden = 8, 4\nepochs = 3\n")
                .unwrap();
        let s = McdSettings::from_config(&cfg).unwrap();
        assert_eq!(s.ratio.value(), 0.15);
        assert_eq!(s.construction, Construction::Iid);
        assert_eq!(s.mlp.hidden, vec![8, 4]);
        assert_eq!(s.mlp.epochs, 3);
        assert_eq!(s.mlp.batch_size, 64);
        let bad = Config::parse("[mcd]\nratio = 1.5\n").unwrap();
        assert!(McdSettings::from_config(&bad).is_err());
        let bad = Config::parse("[mcd]\nconstruction = fancy\n").unwrap();
        assert!(McdSettings::from_config(&bad).is_err());
    }

    #[test]
    fn method_names() {
        let cfg = Config::parse("[x]\nmethods = mcd_logistic, marginal\n").unwrap();
        assert_eq!(
            parse_methods(&cfg, "x").unwrap(),
            vec![MethodKind::McdLogistic, MethodKind::Marginal]
        );
        let bad = Config::parse("[x]\nmethods = nnkcde\n").unwrap();
        assert!(parse_methods(&bad, "x").is_err());
    }
}
