//! Synthetic conditional-density models with exact ground-truth densities.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::contrast::{marginal_contrast, DensityTriple, Ratio};
use crate::data::{MultiTargetDataset, SupervisedDataset};
use crate::error::{McdError, Result};
use crate::kde::std_normal_pdf;

pub const DEFAULT_SIGMA: f64 = 0.3;

fn normal_pdf(y: f64, mean: f64, sd: f64) -> f64 {
    std_normal_pdf((y - mean) / sd) / sd
}

fn std_normal(rng: &mut dyn RngCore) -> f64 {
    StandardNormal.sample(rng)
}

/// A model of `(X, Y)` with a known conditional density of `Y` given `X`.
pub trait DensityModel: Send + Sync {
    fn name(&self) -> &str;

    fn feature_dim(&self) -> usize;

    /// Draws `n` feature vectors.
    fn sample_features(&self, n: usize, rng: &mut dyn RngCore) -> Array2<f64> {
        Array2::from_shape_simple_fn((n, self.feature_dim()), || std_normal(rng))
    }

    /// Draws one target given `x`.
    fn sample_target(&self, x: ArrayView1<f64>, rng: &mut dyn RngCore) -> f64;

    fn conditional_pdf(&self, x: ArrayView1<f64>, y: f64) -> f64;

    /// A central point of the conditional law, used to place integration windows.
    fn conditional_center(&self, x: ArrayView1<f64>) -> f64;

    /// A scale of the conditional law; `center +- 8 * spread` holds all but
    /// a negligible fraction of the mass.
    fn conditional_spread(&self) -> f64;

    fn true_conditional_pdf(&self, x: ArrayView1<f64>, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&y| self.conditional_pdf(x, y)).collect()
    }

    fn sample(&self, n: usize, rng: &mut dyn RngCore) -> Result<SupervisedDataset> {
        let x = self.sample_features(n, rng);
        let y: Vec<f64> = x
            .rows()
            .into_iter()
            .map(|row| self.sample_target(row, rng))
            .collect();
        SupervisedDataset::from_target_vec(x, y)
    }

    /// `n` observations with `m` conditionally independent targets each.
    fn sample_multi(
        &self,
        n: usize,
        m: usize,
        rng: &mut dyn RngCore,
    ) -> Result<MultiTargetDataset> {
        let x = self.sample_features(n, rng);
        let mut y = Array2::zeros((n, m));
        for (i, row) in x.rows().into_iter().enumerate() {
            for l in 0..m {
                y[[i, l]] = self.sample_target(row, rng);
            }
        }
        MultiTargetDataset::new(x, y)
    }
}

fn check_dim(p: usize) -> Result<()> {
    if p == 0 {
        return Err(McdError::InvalidArgument(
            "feature dimension must be >= 1".into(),
        ));
    }
    Ok(())
}

fn check_positive(v: f64, what: &str) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(McdError::InvalidArgument(format!(
            "{what} must be positive, got {v}"
        )));
    }
    Ok(())
}

fn uniform_coefficients(p: usize, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array1::from_shape_simple_fn(p, || rng.random::<f64>())
}

fn scaled_sum(x: ArrayView1<f64>) -> f64 {
    x.sum() / (x.len() as f64).sqrt()
}

/// `Y = X'beta + sigma * eps` with `beta_j ~ U(0, 1)` frozen at creation.
#[derive(Debug, Clone)]
pub struct BasicLinear {
    beta: Array1<f64>,
    sigma: f64,
}

impl BasicLinear {
    pub fn new(p: usize, sigma: f64, seed: u64) -> Result<Self> {
        check_dim(p)?;
        check_positive(sigma, "sigma")?;
        Ok(BasicLinear {
            beta: uniform_coefficients(p, seed),
            sigma,
        })
    }

    pub fn beta(&self) -> &Array1<f64> {
        &self.beta
    }

    pub fn location(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.beta)
    }
}

impl DensityModel for BasicLinear {
    fn name(&self) -> &str {
        "basic_linear"
    }

    fn feature_dim(&self) -> usize {
        self.beta.len()
    }

    fn sample_target(&self, x: ArrayView1<f64>, rng: &mut dyn RngCore) -> f64 {
        self.location(x) + self.sigma * std_normal(rng)
    }

    fn conditional_pdf(&self, x: ArrayView1<f64>, y: f64) -> f64 {
        normal_pdf(y, self.location(x), self.sigma)
    }

    fn conditional_center(&self, x: ArrayView1<f64>) -> f64 {
        self.location(x)
    }

    fn conditional_spread(&self) -> f64 {
        self.sigma
    }
}

/// `Y = X'beta + sigma * |eps|`: a half-normal starting at `X'beta`.
#[derive(Debug, Clone)]
pub struct AsymmetricLinear {
    beta: Array1<f64>,
    sigma: f64,
}

impl AsymmetricLinear {
    pub fn new(p: usize, sigma: f64, seed: u64) -> Result<Self> {
        check_dim(p)?;
        check_positive(sigma, "sigma")?;
        Ok(AsymmetricLinear {
            beta: uniform_coefficients(p, seed),
            sigma,
        })
    }

    pub fn beta(&self) -> &Array1<f64> {
        &self.beta
    }

    pub fn location(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.beta)
    }
}

impl DensityModel for AsymmetricLinear {
    fn name(&self) -> &str {
        "asymmetric_linear"
    }

    fn feature_dim(&self) -> usize {
        self.beta.len()
    }

    fn sample_target(&self, x: ArrayView1<f64>, rng: &mut dyn RngCore) -> f64 {
        self.location(x) + self.sigma * std_normal(rng).abs()
    }

    fn conditional_pdf(&self, x: ArrayView1<f64>, y: f64) -> f64 {
        let loc = self.location(x);
        if y < loc {
            0.0
        } else {
            2.0 * normal_pdf(y, loc, self.sigma)
        }
    }

    fn conditional_center(&self, x: ArrayView1<f64>) -> f64 {
        self.location(x)
    }

    fn conditional_spread(&self) -> f64 {
        self.sigma
    }
}

/// `Y = a + b * sum(x) / sqrt(p) + sigma * eps`.
#[derive(Debug, Clone)]
pub struct LinearGauss {
    p: usize,
    a: f64,
    b: f64,
    sigma: f64,
}

impl LinearGauss {
    pub fn new(p: usize, a: f64, b: f64, sigma: f64) -> Result<Self> {
        check_dim(p)?;
        check_positive(sigma, "sigma")?;
        if !(a.is_finite() && b.is_finite()) {
            return Err(McdError::InvalidArgument(
                "coefficients must be finite".into(),
            ));
        }
        Ok(LinearGauss { p, a, b, sigma })
    }

    pub fn location(&self, x: ArrayView1<f64>) -> f64 {
        self.a + self.b * scaled_sum(x)
    }

    /// Marginal density of `Y`, which is `N(a, b^2 + sigma^2)`.
    pub fn marginal_pdf(&self, y: f64) -> f64 {
        normal_pdf(
            y,
            self.a,
            (self.b * self.b + self.sigma * self.sigma).sqrt(),
        )
    }

    /// Exact contrast `q(x, y)` with ratio `r`.
    pub fn contrast(&self, x: ArrayView1<f64>, y: f64, r: Ratio) -> Result<f64> {
        // the scaled sum of p standard normals is standard normal
        let s = scaled_sum(x);
        let px = std_normal_pdf(s);
        let joint = px * self.conditional_pdf(x, y);
        marginal_contrast(DensityTriple::new(joint, px, self.marginal_pdf(y))?, r)
    }
}

impl DensityModel for LinearGauss {
    fn name(&self) -> &str {
        "linear_gauss"
    }

    fn feature_dim(&self) -> usize {
        self.p
    }

    fn sample_target(&self, x: ArrayView1<f64>, rng: &mut dyn RngCore) -> f64 {
        self.location(x) + self.sigma * std_normal(rng)
    }

    fn conditional_pdf(&self, x: ArrayView1<f64>, y: f64) -> f64 {
        normal_pdf(y, self.location(x), self.sigma)
    }

    fn conditional_center(&self, x: ArrayView1<f64>) -> f64 {
        self.location(x)
    }

    fn conditional_spread(&self) -> f64 {
        self.sigma
    }
}

/// Density of the standard Student t distribution with `dof` degrees of freedom.
pub fn student_t_pdf(t: f64, dof: f64) -> f64 {
    let log_norm =
        libm::lgamma(0.5 * (dof + 1.0)) - libm::lgamma(0.5 * dof) - 0.5 * (dof * PI).ln();
    (log_norm - 0.5 * (dof + 1.0) * (t * t / dof).ln_1p()).exp()
}

/// `Y = X'beta / sqrt(p) + scale * T` with `T ~ t(dof)`.
#[derive(Debug, Clone)]
pub struct LinearStudent {
    beta: Array1<f64>,
    dof: f64,
    scale: f64,
    noise: StudentT<f64>,
}

impl LinearStudent {
    pub fn new(p: usize, dof: f64, scale: f64, seed: u64) -> Result<Self> {
        check_dim(p)?;
        check_positive(scale, "scale")?;
        if !(dof.is_finite() && dof > 1.0) {
            return Err(McdError::InvalidArgument(format!(
                "degrees of freedom must exceed 1, got {dof}"
            )));
        }
        let noise = StudentT::new(dof).map_err(|e| McdError::InvalidArgument(e.to_string()))?;
        Ok(LinearStudent {
            beta: uniform_coefficients(p, seed),
            dof,
            scale,
            noise,
        })
    }

    pub fn location(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.beta) / (self.beta.len() as f64).sqrt()
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }
}

impl DensityModel for LinearStudent {
    fn name(&self) -> &str {
        "linear_student"
    }

    fn feature_dim(&self) -> usize {
        self.beta.len()
    }

    fn sample_target(&self, x: ArrayView1<f64>, rng: &mut dyn RngCore) -> f64 {
        self.location(x) + self.scale * self.noise.sample(rng)
    }

    fn conditional_pdf(&self, x: ArrayView1<f64>, y: f64) -> f64 {
        student_t_pdf((y - self.location(x)) / self.scale, self.dof) / self.scale
    }

    fn conditional_center(&self, x: ArrayView1<f64>) -> f64 {
        self.location(x)
    }

    fn conditional_spread(&self) -> f64 {
        // heavy tails need a wider window than the scale alone
        self.scale * (3.0 + 30.0 / self.dof)
    }
}

/// Mixture of normals whose component means all shift by `sum(x) / sqrt(p)`.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    p: usize,
    weights: Vec<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(p: usize, weights: Vec<f64>, means: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        check_dim(p)?;
        if weights.is_empty() || weights.len() != means.len() || weights.len() != scales.len() {
            return Err(McdError::InvalidArgument(
                "weights, means and scales must be nonempty and of equal length".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(McdError::InvalidArgument(format!(
                "mixture weights must be nonnegative, got {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(McdError::InvalidArgument(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(McdError::InvalidArgument(
                "mixture means must be finite".into(),
            ));
        }
        for &s in &scales {
            check_positive(s, "mixture scale")?;
        }
        Ok(GaussianMixture {
            p,
            weights,
            means,
            scales,
        })
    }

    /// Two equal components at -1 and 1 with scale 0.4.
    pub fn two_component(p: usize) -> Result<Self> {
        Self::new(p, vec![0.5, 0.5], vec![-1.0, 1.0], vec![0.4, 0.4])
    }

    pub fn shift(&self, x: ArrayView1<f64>) -> f64 {
        scaled_sum(x)
    }
}

impl DensityModel for GaussianMixture {
    fn name(&self) -> &str {
        "gaussian_mixture"
    }

    fn feature_dim(&self) -> usize {
        self.p
    }

    fn sample_target(&self, x: ArrayView1<f64>, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut c = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                c = i;
                break;
            }
        }
        self.shift(x) + self.means[c] + self.scales[c] * std_normal(rng)
    }

    fn conditional_pdf(&self, x: ArrayView1<f64>, y: f64) -> f64 {
        let s = self.shift(x);
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.scales)
            .map(|((w, m), sd)| w * normal_pdf(y, s + m, *sd))
            .sum()
    }

    fn conditional_center(&self, x: ArrayView1<f64>) -> f64 {
        let mean: f64 = self
            .weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum();
        self.shift(x) + mean
    }

    fn conditional_spread(&self) -> f64 {
        let center: f64 = self
            .weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum();
        let reach = self
            .means
            .iter()
            .zip(&self.scales)
            .map(|(m, s)| (m - center).abs() / 8.0 + s)
            .fold(0.0, f64::max);
        reach
    }
}

/// Standard bivariate normal `(X, Y)` with correlation `rho`.
#[derive(Debug, Clone)]
pub struct BivariateGauss {
    rho: f64,
}

impl BivariateGauss {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho.abs() < 1.0) {
            return Err(McdError::InvalidArgument(format!(
                "correlation must satisfy |rho| < 1, got {rho}"
            )));
        }
        Ok(BivariateGauss { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn joint_pdf(&self, x: f64, y: f64) -> f64 {
        let one_minus = 1.0 - self.rho * self.rho;
        let quad = (x * x - 2.0 * self.rho * x * y + y * y) / one_minus;
        (-0.5 * quad).exp() / (2.0 * PI * one_minus.sqrt())
    }

    /// Either marginal density (both are standard normal).
    pub fn marginal_pdf(&self, v: f64) -> f64 {
        std_normal_pdf(v)
    }

    /// Exact contrast `q(x, y)` with ratio `r`.
    pub fn contrast(&self, x: f64, y: f64, r: Ratio) -> Result<f64> {
        let d = DensityTriple::new(
            self.joint_pdf(x, y),
            self.marginal_pdf(x),
            self.marginal_pdf(y),
        )?;
        marginal_contrast(d, r)
    }
}

impl DensityModel for BivariateGauss {
    fn name(&self) -> &str {
        "bivariate_gauss"
    }

    fn feature_dim(&self) -> usize {
        1
    }

    fn sample_target(&self, x: ArrayView1<f64>, rng: &mut dyn RngCore) -> f64 {
        self.rho * x[0] + (1.0 - self.rho * self.rho).sqrt() * std_normal(rng)
    }

    fn conditional_pdf(&self, x: ArrayView1<f64>, y: f64) -> f64 {
        normal_pdf(y, self.rho * x[0], (1.0 - self.rho * self.rho).sqrt())
    }

    fn conditional_center(&self, x: ArrayView1<f64>) -> f64 {
        self.rho * x[0]
    }

    fn conditional_spread(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }
}

pub const MODEL_NAMES: [&str; 6] = [
    "basic_linear",
    "asymmetric_linear",
    "linear_gauss",
    "linear_student",
    "gaussian_mixture",
    "bivariate_gauss",
];

/// Registry lookup with default parameters. `p` is ignored by the
/// one-dimensional bivariate model, which uses correlation 0.8.
pub fn model_by_name(name: &str, p: usize, seed: u64) -> Result<Box<dyn DensityModel>> {
    Ok(match name {
        "basic_linear" => Box::new(BasicLinear::new(p, DEFAULT_SIGMA, seed)?),
        "asymmetric_linear" => Box::new(AsymmetricLinear::new(p, DEFAULT_SIGMA, seed)?),
        "linear_gauss" => Box::new(LinearGauss::new(p, 0.0, 1.0, 0.5)?),
        "linear_student" => Box::new(LinearStudent::new(p, 3.0, 0.3, seed)?),
        "gaussian_mixture" => Box::new(GaussianMixture::two_component(p)?),
        "bivariate_gauss" => Box::new(BivariateGauss::new(0.8)?),
        other => {
            return Err(McdError::InvalidArgument(format!(
                "unknown density model `{other}`; available: {}",
                MODEL_NAMES.join(", ")
            )))
        }
    })
}
