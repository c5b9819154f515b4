//! Univariate Gaussian kernel density estimator for the target marginal.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI};

use serde::{Deserialize, Serialize};

use crate::error::{McdError, Result};

/// `1 / sqrt(2 pi)`.
pub const INV_SQRT_2PI: f64 = 0.5 * FRAC_2_SQRT_PI * FRAC_1_SQRT_2;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function, accurate in both tails.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Fitted Gaussian KDE `p(y) = (1 / (n h)) sum_i phi((y - y_i) / h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDensityModel {
    samples: Vec<f64>,
    bandwidth: f64,
}

/// Normal-reference bandwidth `1.06 * sd * n^(-1/5)`, with a small fallback
/// when every sample is equal.
pub fn normal_reference_bandwidth(y: &[f64]) -> Result<f64> {
    let n = y.len();
    if n == 0 {
        return Err(McdError::InvalidArgument(
            "cannot fit a KDE on zero samples".into(),
        ));
    }
    let sd = if n > 1 {
        let mean = y.iter().sum::<f64>() / n as f64;
        let ss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    if sd > 0.0 {
        Ok(1.06 * sd * (n as f64).powf(-0.2))
    } else {
        Ok(1e-3 * y[0].abs().max(1.0))
    }
}

impl MarginalDensityModel {
    /// Fit with the normal-reference bandwidth.
    pub fn fit(y: &[f64]) -> Result<Self> {
        let bandwidth = normal_reference_bandwidth(y)?;
        Self::with_bandwidth(y, bandwidth)
    }

    pub fn with_bandwidth(y: &[f64], bandwidth: f64) -> Result<Self> {
        if y.is_empty() {
            return Err(McdError::InvalidArgument(
                "cannot fit a KDE on zero samples".into(),
            ));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(McdError::InvalidArgument(format!(
                "KDE sample {v} is not finite"
            )));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(McdError::InvalidArgument(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        let mut samples = y.to_vec();
        samples.sort_by(f64::total_cmp);
        Ok(MarginalDensityModel { samples, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Training samples in ascending order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let inv_h = 1.0 / self.bandwidth;
        let s: f64 = self
            .samples
            .iter()
            .map(|&yi| std_normal_pdf((y - yi) * inv_h))
            .sum();
        s * inv_h / self.samples.len() as f64
    }

    pub fn pdf_batch(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.pdf(y)).collect()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let inv_h = 1.0 / self.bandwidth;
        let s: f64 = self
            .samples
            .iter()
            .map(|&yi| std_normal_cdf((y - yi) * inv_h))
            .sum();
        s / self.samples.len() as f64
    }

    /// Solves `cdf(y) = p` by bisection.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(McdError::Domain(format!(
                "quantile level must lie in (0, 1), got {p}"
            )));
        }
        let h = self.bandwidth;
        let (min, max) = (self.samples[0], self.samples[self.samples.len() - 1]);
        let tol = 1e-9 * (max - min + h);
        let (mut lo, mut hi) = (min - 40.0 * h, max + 40.0 * h);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn trapezoid(xs: &[f64], fs: &[f64]) -> f64 {
        xs.windows(2)
            .zip(fs.windows(2))
            .map(|(x, f)| 0.5 * (f[0] + f[1]) * (x[1] - x[0]))
            .sum()
    }

    #[test]
    fn single_kernel_peak() {
        let m = MarginalDensityModel::fit(&[0.0]).unwrap();
        assert_eq!(m.bandwidth(), 1e-3);
        assert_relative_eq!(
            m.pdf(0.0),
            1.0 / (m.bandwidth() * (2.0 * std::f64::consts::PI).sqrt()),
            max_relative = 1e-14
        );
    }

    #[test]
    fn constant_samples_fallback() {
        let m = MarginalDensityModel::fit(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(m.bandwidth(), 5e-3);
    }

    #[test]
    fn normal_reference_value() {
        // sd of {0, 2} with n - 1 = sqrt(2)
        let h = normal_reference_bandwidth(&[0.0, 2.0]).unwrap();
        assert_relative_eq!(
            h,
            1.06 * 2f64.sqrt() * 2f64.powf(-0.2),
            max_relative = 1e-15
        );
        assert!(normal_reference_bandwidth(&[]).is_err());
    }

    #[test]
    fn symmetric_samples() {
        let m = MarginalDensityModel::fit(&[-1.0, 1.0]).unwrap();
        for t in [0.1, 0.7, 1.3, 4.0] {
            assert_relative_eq!(m.pdf(t), m.pdf(-t), max_relative = 1e-14);
        }
        assert!(m.quantile(0.5).unwrap().abs() < 1e-8);
    }

    #[test]
    fn two_kernel_hand_value() {
        let m = MarginalDensityModel::with_bandwidth(&[0.0, 2.0], 1.0).unwrap();
        assert_relative_eq!(m.pdf(1.0), 0.241_970_724_519_143_37, max_relative = 1e-12);
    }

    #[test]
    fn tail_and_own_kernel() {
        let ys = [0.3, -1.2, 2.2, 0.9];
        let m = MarginalDensityModel::fit(&ys).unwrap();
        assert!(m.pdf(2.2 + 50.0 * m.bandwidth()) < 1e-12);
        for &y in &ys {
            assert!(m.pdf(y) >= std_normal_pdf(0.0) / (4.0 * m.bandwidth()));
        }
    }

    #[test]
    fn single_sample_quantile() {
        let m = MarginalDensityModel::with_bandwidth(&[0.0], 1.0).unwrap();
        assert!((m.quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-8);
        assert!(m.quantile(0.0).is_err());
        assert!(m.quantile(1.0).is_err());
    }

    #[test]
    fn standard_normal_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ys: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let m = MarginalDensityModel::fit(&ys).unwrap();
        assert!((m.pdf(0.0) - 0.398_942_28).abs() < 0.05);
    }

    #[test]
    fn normalization_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ys: Vec<f64> = (0..300)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                2.0 * v + 1.0
            })
            .collect();
        let m = MarginalDensityModel::fit(&ys).unwrap();
        let (a, b) = (m.quantile(1e-4).unwrap(), m.quantile(1.0 - 1e-4).unwrap());
        let grid: Vec<f64> = (0..100_000)
            .map(|i| a + (b - a) * i as f64 / 99_999.0)
            .collect();
        let total = trapezoid(&grid, &m.pdf_batch(&grid));
        assert!((total - 1.0).abs() < 1e-3, "{total}");
        for p in [0.001, 0.1, 0.5, 0.9, 0.999] {
            assert!((m.cdf(m.quantile(p).unwrap()) - p).abs() < 1e-8);
        }
    }

    #[test]
    fn quantile_is_monotone() {
        let m = MarginalDensityModel::fit(&[0.0, 0.1, 3.0, 3.5, 10.0]).unwrap();
        let qs: Vec<f64> = [0.01, 0.2, 0.4, 0.6, 0.8, 0.99]
            .iter()
            .map(|&p| m.quantile(p).unwrap())
            .collect();
        assert!(qs.windows(2).all(|w| w[0] < w[1]));
    }
}
