//! In-memory datasets for the three data settings: paired samples, paired
//! samples with extra unpaired features/targets, and several target draws
//! per observation.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{McdError, Result};

fn check_finite(m: &Array2<f64>, what: &str) -> Result<()> {
    if let Some((idx, v)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(McdError::InvalidArgument(format!(
            "{what} contains non-finite value {v} at row {}, column {}",
            idx.0, idx.1
        )));
    }
    Ok(())
}

/// Paired sample `(X_i, Y_i)`, `i = 1..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedDataset {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl SupervisedDataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(McdError::InvalidArgument(
                "dataset must have at least one row".into(),
            ));
        }
        if x.nrows() != y.nrows() {
            return Err(McdError::ShapeMismatch(format!(
                "X has {} rows but Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if y.ncols() == 0 {
            return Err(McdError::InvalidArgument(
                "Y needs at least one column".into(),
            ));
        }
        check_finite(&x, "X")?;
        check_finite(&y, "Y")?;
        Ok(SupervisedDataset { x, y })
    }

    /// Single-target convenience constructor.
    pub fn from_target_vec(x: Array2<f64>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        let y = Array2::from_shape_vec((n, 1), y)
            .map_err(|e| McdError::ShapeMismatch(e.to_string()))?;
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.y.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }

    pub fn x_row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn y_row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.y.row(i)
    }

    /// Rows selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        SupervisedDataset {
            x: self.x.select(Axis(0), indices),
            y: self.y.select(Axis(0), indices),
        }
    }

    /// Collapse a multi-target set by keeping only the first draw per row.
    pub fn first_draws(multi: &MultiTargetDataset) -> Self {
        let y = multi.y().slice(ndarray::s![.., 0..1]).to_owned();
        SupervisedDataset {
            x: multi.x().clone(),
            y,
        }
    }
}

/// `n` observations with `m` conditionally i.i.d. scalar targets each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTargetDataset {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl MultiTargetDataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(McdError::InvalidArgument(
                "dataset must have at least one row".into(),
            ));
        }
        if x.nrows() != y.nrows() {
            return Err(McdError::ShapeMismatch(format!(
                "X has {} rows but the target block has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if y.ncols() == 0 {
            return Err(McdError::InvalidArgument(
                "need at least one target draw per row (m >= 1)".into(),
            ));
        }
        check_finite(&x, "X")?;
        check_finite(&y, "Y")?;
        Ok(MultiTargetDataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn draws_per_row(&self) -> usize {
        self.y.ncols()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// `n x m` block; row `i` holds the draws of observation `i`.
    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }
}

/// Unpaired extra features and/or targets. Either block may have zero rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDatasets {
    extra_x: Array2<f64>,
    extra_y: Array2<f64>,
}

impl MarginalDatasets {
    pub fn new(extra_x: Array2<f64>, extra_y: Array2<f64>) -> Result<Self> {
        check_finite(&extra_x, "extra X")?;
        check_finite(&extra_y, "extra Y")?;
        Ok(MarginalDatasets { extra_x, extra_y })
    }

    pub fn empty(feature_dim: usize, target_dim: usize) -> Self {
        MarginalDatasets {
            extra_x: Array2::zeros((0, feature_dim)),
            extra_y: Array2::zeros((0, target_dim)),
        }
    }

    pub fn extra_x(&self) -> &Array2<f64> {
        &self.extra_x
    }

    pub fn extra_y(&self) -> &Array2<f64> {
        &self.extra_y
    }

    pub fn n_x(&self) -> usize {
        self.extra_x.nrows()
    }

    pub fn n_y(&self) -> usize {
        self.extra_y.nrows()
    }

    pub(crate) fn check_widths(&self, d: &SupervisedDataset) -> Result<()> {
        if self.n_x() > 0 && self.extra_x.ncols() != d.feature_dim() {
            return Err(McdError::ShapeMismatch(format!(
                "extra X has width {} but the paired features have width {}",
                self.extra_x.ncols(),
                d.feature_dim()
            )));
        }
        if self.n_y() > 0 && self.extra_y.ncols() != d.target_dim() {
            return Err(McdError::ShapeMismatch(format!(
                "extra Y has width {} but the paired targets have width {}",
                self.extra_y.ncols(),
                d.target_dim()
            )));
        }
        Ok(())
    }
}
