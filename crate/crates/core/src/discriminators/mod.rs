//! Binary classifiers estimating `P[Z = 1 | W = w]` on contrast datasets.

pub mod logistic;
pub mod mlp;
pub mod standardizer;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::constructions::ContrastDataset;
use crate::error::{McdError, Result};

pub use logistic::{LogisticModel, LogisticParams};
pub use mlp::{MlpModel, MlpParams};
pub use standardizer::Standardizer;

#[inline]
pub(crate) fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^s)` without overflow.
#[inline]
pub(crate) fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// A fitted classifier whose class-1 probability estimates the contrast.
pub trait Discriminator {
    /// Expected row width `p + k`.
    fn input_width(&self) -> usize;

    fn predict_proba(&self, w: ArrayView1<f64>) -> Result<f64>;

    fn predict_proba_batch(&self, w: ArrayView2<f64>) -> Result<Array1<f64>> {
        if w.ncols() != self.input_width() {
            return Err(McdError::ShapeMismatch(format!(
                "input has width {}, model expects {}",
                w.ncols(),
                self.input_width()
            )));
        }
        w.rows()
            .into_iter()
            .map(|row| self.predict_proba(row))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscriminatorKind {
    LogisticElasticnet(LogisticParams),
    Mlp(MlpParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorSpec {
    pub kind: DiscriminatorKind,
    pub seed: u64,
}

impl DiscriminatorSpec {
    pub fn logistic() -> Self {
        DiscriminatorSpec {
            kind: DiscriminatorKind::LogisticElasticnet(LogisticParams::default()),
            seed: 0,
        }
    }

    pub fn mlp() -> Self {
        DiscriminatorSpec {
            kind: DiscriminatorKind::Mlp(MlpParams::default()),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DiscriminatorKind::LogisticElasticnet(_) => "logistic",
            DiscriminatorKind::Mlp(_) => "mlp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DiscriminatorKind::LogisticElasticnet(p) => p.validate(),
            DiscriminatorKind::Mlp(p) => p.validate(),
        }
    }

    /// Fits on a contrast dataset containing both classes.
    pub fn fit(&self, data: &ContrastDataset) -> Result<FittedDiscriminator> {
        self.validate()?;
        if data.n_joint() == 0 || data.n_marg() == 0 {
            return Err(McdError::DegenerateContrast(format!(
                "both classes are required, got {} matched and {} mismatched samples",
                data.n_joint(),
                data.n_marg()
            )));
        }
        Ok(match &self.kind {
            DiscriminatorKind::LogisticElasticnet(p) => {
                FittedDiscriminator::Logistic(LogisticModel::fit(p, data.w().view(), data.z())?)
            }
            DiscriminatorKind::Mlp(p) => {
                FittedDiscriminator::Mlp(MlpModel::fit(p, data.w().view(), data.z(), self.seed)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedDiscriminator {
    Logistic(LogisticModel),
    Mlp(MlpModel),
}

impl Discriminator for FittedDiscriminator {
    fn input_width(&self) -> usize {
        match self {
            FittedDiscriminator::Logistic(m) => m.input_width(),
            FittedDiscriminator::Mlp(m) => m.input_width(),
        }
    }

    fn predict_proba(&self, w: ArrayView1<f64>) -> Result<f64> {
        match self {
            FittedDiscriminator::Logistic(m) => m.predict_proba(w),
            FittedDiscriminator::Mlp(m) => m.predict_proba(w),
        }
    }

    fn predict_proba_batch(&self, w: ArrayView2<f64>) -> Result<Array1<f64>> {
        match self {
            FittedDiscriminator::Logistic(m) => m.predict_proba_batch(w),
            FittedDiscriminator::Mlp(m) => m.predict_proba_batch(w),
        }
    }
}
