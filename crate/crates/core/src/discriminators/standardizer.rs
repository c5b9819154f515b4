use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{McdError, Result};

/// Per-column affine map `(v - mean) / scale` captured on training data.
///
/// Constant columns get scale 1, so they map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl Standardizer {
    pub fn fit(data: ArrayView2<f64>) -> Result<Self> {
        let n = data.nrows();
        if n == 0 {
            return Err(McdError::InvalidArgument(
                "cannot standardize zero rows".into(),
            ));
        }
        let mean = data.mean_axis(Axis(0)).expect("nonempty");
        let ddof = if n > 1 { 1.0 } else { 0.0 };
        let scale =
            data.std_axis(Axis(0), ddof)
                .mapv(|s| if s > 0.0 && s.is_finite() { s } else { 1.0 });
        Ok(Standardizer { mean, scale })
    }

    /// The identity map on `width` columns.
    pub fn identity(width: usize) -> Self {
        Standardizer {
            mean: Array1::zeros(width),
            scale: Array1::ones(width),
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn scale(&self) -> &Array1<f64> {
        &self.scale
    }

    fn check(&self, width: usize) -> Result<()> {
        if width != self.width() {
            return Err(McdError::ShapeMismatch(format!(
                "input has width {width}, model expects {}",
                self.width()
            )));
        }
        Ok(())
    }

    pub fn transform(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(data.ncols())?;
        Ok((&data - &self.mean) / &self.scale)
    }

    pub fn transform_row(&self, row: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(row.len())?;
        Ok((&row - &self.mean) / &self.scale)
    }

    pub fn inverse_transform(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(data.ncols())?;
        Ok(&data * &self.scale + &self.mean)
    }
}
