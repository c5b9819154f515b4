//! Logistic regression with an elastic-net penalty, fitted by proximal
//! gradient descent with a backtracking line search.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::standardizer::Standardizer;
use super::{sigmoid, softplus, Discriminator};
use crate::error::{McdError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub l1: f64,
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the norm of the gradient mapping falls below this.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l1: 1e-4,
            l2: 1e-4,
            max_iter: 1000,
            tol: 1e-8,
        }
    }
}

impl LogisticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l1 >= 0.0 && self.l2 >= 0.0 && self.l1.is_finite() && self.l2.is_finite()) {
            return Err(McdError::InvalidArgument(
                "regularization weights must be >= 0".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(McdError::InvalidArgument("max_iter must be >= 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(McdError::InvalidArgument(
                "tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Smooth part of the training objective on already standardized inputs:
/// mean binary cross-entropy plus `0.5 * l2 * |w|^2`. The bias is not
/// penalized. Parameters are laid out as `[w_1, .., w_d, bias]`.
pub struct LogisticObjective<'a> {
    x: ArrayView2<'a, f64>,
    z: &'a [u8],
    l2: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(x: ArrayView2<'a, f64>, z: &'a [u8], l2: f64) -> Result<Self> {
        if x.nrows() != z.len() || z.is_empty() {
            return Err(McdError::ShapeMismatch(format!(
                "{} rows but {} labels",
                x.nrows(),
                z.len()
            )));
        }
        Ok(LogisticObjective { x, z, l2 })
    }

    pub fn dim(&self) -> usize {
        self.x.ncols() + 1
    }

    fn logits(&self, theta: &[f64]) -> Array1<f64> {
        let d = self.x.ncols();
        let w = ArrayView1::from(&theta[..d]);
        self.x.dot(&w) + theta[d]
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        let d = self.x.ncols();
        let s = self.logits(theta);
        let bce: f64 = s
            .iter()
            .zip(self.z)
            .map(|(&s, &z)| softplus(s) - if z == 1 { s } else { 0.0 })
            .sum::<f64>()
            / self.z.len() as f64;
        let ridge: f64 = theta[..d].iter().map(|w| w * w).sum();
        bce + 0.5 * self.l2 * ridge
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.x.ncols();
        let n = self.z.len() as f64;
        let s = self.logits(theta);
        let resid: Array1<f64> = s
            .iter()
            .zip(self.z)
            .map(|(&s, &z)| (sigmoid(s) - z as f64) / n)
            .collect();
        let gw = self.x.t().dot(&resid);
        let mut g: Vec<f64> = gw
            .iter()
            .zip(&theta[..d])
            .map(|(g, w)| g + self.l2 * w)
            .collect();
        g.push(resid.sum());
        g
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Fitted logistic discriminator `sigmoid(w . standardize(v) + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    standardizer: Standardizer,
    weights: Array1<f64>,
    bias: f64,
    iterations: usize,
}

impl LogisticModel {
    /// Model with the given coefficients acting on raw (identity-standardized) inputs.
    pub fn from_parameters(weights: Array1<f64>, bias: f64) -> Self {
        LogisticModel {
            standardizer: Standardizer::identity(weights.len()),
            weights,
            bias,
            iterations: 0,
        }
    }

    pub fn fit(params: &LogisticParams, w: ArrayView2<f64>, z: &[u8]) -> Result<Self> {
        params.validate()?;
        let standardizer = Standardizer::fit(w)?;
        let xs = standardizer.transform(w)?;
        let obj = LogisticObjective::new(xs.view(), z, params.l2)?;
        let d = xs.ncols();
        let mut theta = vec![0.0; d + 1];
        let mut f = obj.loss(&theta);
        let mut step = 1.0;
        let mut iterations = 0;
        for _ in 0..params.max_iter {
            iterations += 1;
            let g = obj.gradient(&theta);
            step *= 2.0;
            let (candidate, f_new) = loop {
                let mut c: Vec<f64> = theta.iter().zip(&g).map(|(t, g)| t - step * g).collect();
                for v in &mut c[..d] {
                    *v = soft_threshold(*v, step * params.l1);
                }
                let f_c = obj.loss(&c);
                let lin: f64 = c
                    .iter()
                    .zip(&theta)
                    .zip(&g)
                    .map(|((c, t), g)| g * (c - t))
                    .sum();
                let quad: f64 = c
                    .iter()
                    .zip(&theta)
                    .map(|(c, t)| (c - t) * (c - t))
                    .sum::<f64>()
                    / (2.0 * step);
                if f_c <= f + lin + quad + 1e-15 * f.abs() || step < 1e-12 {
                    break (c, f_c);
                }
                step *= 0.5;
            };
            let mapping_norm = candidate
                .iter()
                .zip(&theta)
                .map(|(c, t)| (t - c) * (t - c))
                .sum::<f64>()
                .sqrt()
                / step;
            theta = candidate;
            f = f_new;
            if mapping_norm < params.tol {
                break;
            }
        }
        Ok(LogisticModel {
            standardizer,
            weights: Array1::from(theta[..d].to_vec()),
            bias: theta[d],
            iterations,
        })
    }

    /// Coefficients on the standardized inputs.
    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }
}

impl Discriminator for LogisticModel {
    fn input_width(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, w: ArrayView1<f64>) -> Result<f64> {
        let x = self.standardizer.transform_row(w)?;
        Ok(sigmoid(x.dot(&self.weights) + self.bias))
    }

    fn predict_proba_batch(&self, w: ArrayView2<f64>) -> Result<Array1<f64>> {
        let x = self.standardizer.transform(w)?;
        Ok((x.dot(&self.weights) + self.bias).mapv(sigmoid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};

    #[test]
    fn zero_model_is_one_half() {
        let m = LogisticModel::from_parameters(Array1::zeros(3), 0.0);
        assert_eq!(m.predict_proba(array![4.0, -2.0, 9.0].view()).unwrap(), 0.5);
    }

    #[test]
    fn hand_computed_sigmoid() {
        let m = LogisticModel::from_parameters(array![0.5, -1.0], 0.25);
        // 0.5*2 - 1*1 + 0.25 = 0.25
        let want = 1.0 / (1.0 + (-0.25f64).exp());
        assert_relative_eq!(
            m.predict_proba(array![2.0, 1.0].view()).unwrap(),
            want,
            max_relative = 1e-15
        );
        assert!(m.predict_proba(array![1.0].view()).is_err());
    }

    #[test]
    fn separable_toy() {
        let n = 200;
        let w = Array2::from_shape_fn((n, 1), |(i, _)| if i % 2 == 0 { 1.0 } else { -1.0 });
        let z: Vec<u8> = (0..n).map(|i| (i % 2 == 0) as u8).collect();
        let m = LogisticModel::fit(&LogisticParams::default(), w.view(), &z).unwrap();
        let p = m.predict_proba_batch(w.view()).unwrap();
        let acc = p
            .iter()
            .zip(&z)
            .filter(|(p, &z)| (**p >= 0.5) == (z == 1))
            .count() as f64
            / n as f64;
        assert!(acc >= 0.99);
    }

    #[test]
    fn objective_rejects_mismatch() {
        let x = Array2::<f64>::zeros((3, 2));
        assert!(LogisticObjective::new(x.view(), &[1, 0], 0.0).is_err());
    }
}
