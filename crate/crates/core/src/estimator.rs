//! Training and prediction for the marginal contrastive estimator.
//!
//! Training fits a KDE on the targets, builds a contrast dataset with the
//! chosen construction and fits a discriminator on it. Prediction thresholds
//! the discriminator output at `1 - epsilon` and applies the plug-in
//! formula `p(y | x) = p(y) * q / (1 - q) * (1 - r) / r`.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::constructions::{
    build_id, build_id_additional, build_id_multitarget, build_iid, build_iid_additional,
    id_additional_mismatched_pool, id_mismatched_pool, multitarget_mismatched_pool,
    ratio_to_counts, ContrastDataset,
};
use crate::contrast::{conditional_from_contrast, Ratio};
use crate::data::{MarginalDatasets, MultiTargetDataset, SupervisedDataset};
use crate::discriminators::{Discriminator, DiscriminatorSpec, FittedDiscriminator};
use crate::error::{McdError, Result};
use crate::kde::MarginalDensityModel;

pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Iid,
    Id,
    IidAdditional,
    IdAdditional,
    IdMultitarget,
}

impl Construction {
    pub const ALL: [Construction; 5] = [
        Construction::Iid,
        Construction::Id,
        Construction::IidAdditional,
        Construction::IdAdditional,
        Construction::IdMultitarget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Construction::Iid => "iid",
            Construction::Id => "id",
            Construction::IidAdditional => "iid_additional",
            Construction::IdAdditional => "id_additional",
            Construction::IdMultitarget => "id_multitarget",
        }
    }

    /// Whether samples are only identically distributed (exact label counts).
    pub fn is_id(self) -> bool {
        matches!(
            self,
            Construction::Id | Construction::IdAdditional | Construction::IdMultitarget
        )
    }
}

impl std::str::FromStr for Construction {
    type Err = McdError;

    fn from_str(s: &str) -> Result<Self> {
        Construction::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Construction::ALL.iter().map(|c| c.name()).collect();
                McdError::InvalidArgument(format!(
                    "unknown construction `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl std::fmt::Display for Construction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdConfig {
    pub ratio: Ratio,
    pub construction: Construction,
    pub discriminator: DiscriminatorSpec,
    pub epsilon: f64,
    /// Seeds the contrast construction; the discriminator has its own seed.
    pub seed: u64,
}

impl McdConfig {
    pub fn new(ratio: Ratio, construction: Construction, discriminator: DiscriminatorSpec) -> Self {
        McdConfig {
            ratio,
            construction,
            discriminator,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(McdError::InvalidArgument(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        self.discriminator.validate()
    }
}

/// Training input: paired data or several target draws per observation.
#[derive(Debug, Clone, Copy)]
pub enum TrainingData<'a> {
    Paired(&'a SupervisedDataset),
    MultiTarget(&'a MultiTargetDataset),
}

impl<'a> From<&'a SupervisedDataset> for TrainingData<'a> {
    fn from(d: &'a SupervisedDataset) -> Self {
        TrainingData::Paired(d)
    }
}

impl<'a> From<&'a MultiTargetDataset> for TrainingData<'a> {
    fn from(d: &'a MultiTargetDataset) -> Self {
        TrainingData::MultiTarget(d)
    }
}

/// Builds the contrast dataset prescribed by `cfg`, returning it with the
/// ratio to use in the plug-in formula (nominal for i.i.d. constructions,
/// realized `n_joint / N` otherwise).
pub fn build_contrast(
    data: TrainingData<'_>,
    extra: Option<&MarginalDatasets>,
    cfg: &McdConfig,
) -> Result<(ContrastDataset, Ratio)> {
    let mut rng = crate::seeded_rng(cfg.seed);
    let r = cfg.ratio;
    let incompatible = |msg: &str| {
        Err(McdError::InvalidArgument(format!(
            "construction {}: {msg}",
            cfg.construction
        )))
    };
    let contrast = match (cfg.construction, data, extra) {
        (Construction::IdMultitarget, TrainingData::MultiTarget(d), None) => {
            let joint = d.len() * d.draws_per_row();
            let (nj, nm) = ratio_to_counts(
                joint,
                r,
                multitarget_mismatched_pool(d.len(), d.draws_per_row()),
            )?;
            build_id_multitarget(d, nj, nm, &mut rng)?
        }
        (Construction::IdMultitarget, _, _) => {
            return incompatible("requires multi-target data and no unpaired data")
        }
        (_, TrainingData::MultiTarget(_), _) => {
            return incompatible("multi-target data requires id_multitarget")
        }
        (Construction::Iid, TrainingData::Paired(d), None) => build_iid(d, r, &mut rng)?,
        (Construction::Id, TrainingData::Paired(d), None) => {
            let (nj, nm) = ratio_to_counts(d.len(), r, id_mismatched_pool(d.len()))?;
            build_id(d, nj, nm, &mut rng)?
        }
        (Construction::IidAdditional, TrainingData::Paired(d), Some(e)) => {
            build_iid_additional(d, e, r, &mut rng)?
        }
        (Construction::IdAdditional, TrainingData::Paired(d), Some(e)) => {
            let pool = id_additional_mismatched_pool(d.len(), e.n_x(), e.n_y());
            let (nj, nm) = ratio_to_counts(d.len(), r, pool)?;
            build_id_additional(d, e, nj, nm, &mut rng)?
        }
        (Construction::Iid | Construction::Id, _, Some(_)) => {
            return incompatible("unpaired data needs iid_additional or id_additional")
        }
        (_, _, None) => return incompatible("requires unpaired data"),
    };
    let plug_in = if cfg.construction.is_id() {
        Ratio::new(contrast.realized_ratio())?
    } else {
        r
    };
    Ok((contrast, plug_in))
}

/// Size summary of the contrast set an estimator was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastSummary {
    pub n_joint: usize,
    pub n_marg: usize,
}

impl ContrastSummary {
    pub fn total(&self) -> usize {
        self.n_joint + self.n_marg
    }
}

/// Fitted estimator: target marginal, discriminator, plug-in ratio, threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdEstimator<D = FittedDiscriminator> {
    marginal: MarginalDensityModel,
    discriminator: D,
    ratio: Ratio,
    epsilon: f64,
    feature_dim: usize,
    contrast: Option<ContrastSummary>,
}

impl McdEstimator<FittedDiscriminator> {
    pub fn train<'a>(
        data: impl Into<TrainingData<'a>>,
        extra: Option<&MarginalDatasets>,
        cfg: &McdConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let data = data.into();
        let (feature_dim, mut targets) = match data {
            TrainingData::Paired(d) => {
                if d.target_dim() != 1 {
                    return Err(McdError::InvalidArgument(format!(
                        "the marginal estimator is univariate; got {} target columns",
                        d.target_dim()
                    )));
                }
                (d.feature_dim(), d.y().iter().copied().collect::<Vec<_>>())
            }
            TrainingData::MultiTarget(d) => (d.feature_dim(), d.y().iter().copied().collect()),
        };
        if let Some(e) = extra {
            targets.extend(e.extra_y().iter().copied());
        }
        let marginal = MarginalDensityModel::fit(&targets)?;
        let (contrast, ratio) = build_contrast(data, extra, cfg)?;
        let discriminator = cfg.discriminator.fit(&contrast)?;
        Ok(McdEstimator {
            marginal,
            discriminator,
            ratio,
            epsilon: cfg.epsilon,
            feature_dim,
            contrast: Some(ContrastSummary {
                n_joint: contrast.n_joint(),
                n_marg: contrast.n_marg(),
            }),
        })
    }
}

impl<D: Discriminator> McdEstimator<D> {
    /// Assemble from fitted parts; the discriminator must accept `feature_dim + 1` inputs.
    pub fn from_parts(
        marginal: MarginalDensityModel,
        discriminator: D,
        ratio: Ratio,
        epsilon: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(McdError::InvalidArgument(format!(
                "epsilon must lie in (0, 0.5), got {epsilon}"
            )));
        }
        let width = discriminator.input_width();
        if width < 2 {
            return Err(McdError::ShapeMismatch(format!(
                "discriminator width {width} leaves no feature columns"
            )));
        }
        Ok(McdEstimator {
            marginal,
            discriminator,
            ratio,
            epsilon,
            feature_dim: width - 1,
            contrast: None,
        })
    }

    pub fn marginal(&self) -> &MarginalDensityModel {
        &self.marginal
    }

    pub fn discriminator(&self) -> &D {
        &self.discriminator
    }

    /// Ratio used in the plug-in formula.
    pub fn ratio(&self) -> Ratio {
        self.ratio
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn contrast_summary(&self) -> Option<ContrastSummary> {
        self.contrast
    }

    fn check_features(&self, x: ArrayView1<f64>) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(McdError::ShapeMismatch(format!(
                "feature vector has length {}, estimator expects {}",
                x.len(),
                self.feature_dim
            )));
        }
        Ok(())
    }

    fn plug_in(&self, p_y: f64, q_raw: f64) -> Result<f64> {
        let q = q_raw.min(1.0 - self.epsilon);
        conditional_from_contrast(p_y, q, self.ratio)
    }

    /// Thresholded contrast `min(q~, 1 - epsilon)` at `(x, y)`.
    pub fn predict_contrast(&self, x: ArrayView1<f64>, y: f64) -> Result<f64> {
        self.check_features(x)?;
        let mut w: Vec<f64> = x.to_vec();
        w.push(y);
        Ok(self
            .discriminator
            .predict_proba(ArrayView1::from(&w))?
            .min(1.0 - self.epsilon))
    }

    pub fn predict_pointwise(&self, x: ArrayView1<f64>, y: f64) -> Result<f64> {
        self.check_features(x)?;
        let mut w: Vec<f64> = x.to_vec();
        w.push(y);
        let q = self.discriminator.predict_proba(ArrayView1::from(&w))?;
        self.plug_in(self.marginal.pdf(y), q)
    }

    /// Conditional density of each `(x_i, y_i)` pair.
    pub fn predict_pairs(&self, xs: &Array2<f64>, ys: &[f64]) -> Result<Vec<f64>> {
        if xs.nrows() != ys.len() {
            return Err(McdError::ShapeMismatch(format!(
                "{} feature rows but {} targets",
                xs.nrows(),
                ys.len()
            )));
        }
        if xs.ncols() != self.feature_dim {
            return Err(McdError::ShapeMismatch(format!(
                "features have width {}, estimator expects {}",
                xs.ncols(),
                self.feature_dim
            )));
        }
        let mut w = Array2::zeros((ys.len(), self.feature_dim + 1));
        w.slice_mut(ndarray::s![.., ..self.feature_dim]).assign(xs);
        w.column_mut(self.feature_dim).assign(&ArrayView1::from(ys));
        let q = self.discriminator.predict_proba_batch(w.view())?;
        let p = self.marginal.pdf_batch(ys);
        p.iter()
            .zip(q.iter())
            .map(|(&p, &q)| self.plug_in(p, q))
            .collect()
    }

    /// Conditional density of `y | x` at every grid point.
    pub fn predict_pdf_on_grid(&self, x: ArrayView1<f64>, grid: &[f64]) -> Result<Vec<f64>> {
        self.check_features(x)?;
        check_grid(grid)?;
        let mut w = Array2::zeros((grid.len(), self.feature_dim + 1));
        for (mut row, &y) in w.rows_mut().into_iter().zip(grid) {
            row.slice_mut(ndarray::s![..self.feature_dim]).assign(&x);
            row[self.feature_dim] = y;
        }
        let q = self.discriminator.predict_proba_batch(w.view())?;
        let p = self.marginal.pdf_batch(grid);
        p.iter()
            .zip(q.iter())
            .map(|(&p, &q)| self.plug_in(p, q))
            .collect()
    }

    /// [`McdEstimator::predict_pdf_on_grid`] for every row of `xs`; the
    /// marginal is evaluated on the grid only once.
    pub fn predict_pdf_on_grid_rows(
        &self,
        xs: &Array2<f64>,
        grid: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        check_grid(grid)?;
        if xs.ncols() != self.feature_dim {
            return Err(McdError::ShapeMismatch(format!(
                "features have width {}, estimator expects {}",
                xs.ncols(),
                self.feature_dim
            )));
        }
        let p = self.marginal.pdf_batch(grid);
        let mut w = Array2::zeros((grid.len(), self.feature_dim + 1));
        w.column_mut(self.feature_dim)
            .assign(&ArrayView1::from(grid));
        xs.rows()
            .into_iter()
            .map(|x| {
                for mut row in w.rows_mut() {
                    row.slice_mut(ndarray::s![..self.feature_dim]).assign(&x);
                }
                let q = self.discriminator.predict_proba_batch(w.view())?;
                p.iter()
                    .zip(q.iter())
                    .map(|(&p, &q)| self.plug_in(p, q))
                    .collect()
            })
            .collect()
    }

    /// `points` evenly spaced values between the 0.001 and 0.999 quantiles of the marginal.
    pub fn default_grid(&self, points: usize) -> Result<Vec<f64>> {
        let lo = self.marginal.quantile(0.001)?;
        let hi = self.marginal.quantile(0.999)?;
        linspace(lo, hi, points)
    }
}

/// `points` evenly spaced values from `lo` to `hi`, endpoints included.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(McdError::InvalidArgument(format!(
            "a grid needs at least 2 points, got {points}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(McdError::InvalidArgument(format!(
            "invalid grid bounds [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    let mut g: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    g[points - 1] = hi;
    Ok(g)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(McdError::InvalidArgument(format!(
            "a grid needs at least 2 points, got {}",
            grid.len()
        )));
    }
    if let Some(i) = grid
        .windows(2)
        .position(|w| w[0].is_nan() || w[1].is_nan() || w[0] >= w[1])
    {
        return Err(McdError::InvalidArgument(format!(
            "grid must be strictly increasing (positions {i} and {})",
            i + 1
        )));
    }
    Ok(())
}

/// Trapezoidal integral of `values` over `grid`.
pub fn trapezoid(values: &[f64], grid: &[f64]) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(McdError::ShapeMismatch(format!(
            "{} values on a grid of {} points",
            values.len(),
            grid.len()
        )));
    }
    check_grid(grid)?;
    Ok(values
        .windows(2)
        .zip(grid.windows(2))
        .map(|(v, t)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
        .sum())
}

/// Divides `values` by their trapezoidal integral over `grid`.
pub fn rescale(values: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(McdError::Domain(format!(
            "density values must be finite and nonnegative, got {v}"
        )));
    }
    let total = trapezoid(values, grid)?;
    if total.is_nan() || total <= 0.0 {
        return Err(McdError::DegenerateDensity(
            "trapezoidal integral is zero".into(),
        ));
    }
    Ok(values.iter().map(|v| v / total).collect())
}
