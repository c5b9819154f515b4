//! Algebra linking the joint density, the product of marginals, the
//! marginal contrast `q` and the conditional density.
//!
//! For a ratio `r` in (0, 1) the marginal contrast is
//!
//! ```text
//! q(x, y) = r p(x, y) / (r p(x, y) + (1 - r) p(x) p(y))
//! ```
//!
//! and the conditional density is recovered as
//! `p(y | x) = p(y) * q / (1 - q) * (1 - r) / r`.
//!
//! Everything here works on density *values*; no estimation happens.

use serde::{Deserialize, Serialize};

use crate::error::{McdError, Result};

/// Fraction of matched (joint-law) pairs in a contrast dataset. Always in the
/// open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Ratio(f64);

impl Ratio {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && r > 0.0 && r < 1.0 {
            Ok(Ratio(r))
        } else {
            Err(McdError::Domain(format!(
                "ratio must lie in (0, 1), got {r}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `(1 - r) / r`, the prior-odds correction in the plug-in formula.
    #[inline]
    pub fn odds_correction(self) -> f64 {
        (1.0 - self.0) / self.0
    }
}

impl TryFrom<f64> for Ratio {
    type Error = McdError;

    fn try_from(r: f64) -> Result<Self> {
        Ratio::new(r)
    }
}

impl From<Ratio> for f64 {
    fn from(r: Ratio) -> f64 {
        r.0
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Joint density and both marginal densities evaluated at one point `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityTriple {
    pub joint: f64,
    pub feature_marginal: f64,
    pub target_marginal: f64,
}

impl DensityTriple {
    pub fn new(joint: f64, feature_marginal: f64, target_marginal: f64) -> Result<Self> {
        for (name, v) in [
            ("joint density", joint),
            ("feature marginal", feature_marginal),
            ("target marginal", target_marginal),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(McdError::Domain(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(DensityTriple {
            joint,
            feature_marginal,
            target_marginal,
        })
    }

    #[inline]
    pub fn product_of_marginals(&self) -> f64 {
        self.feature_marginal * self.target_marginal
    }
}

/// Marginal contrast function `q` with ratio `r` at one point.
pub fn marginal_contrast(d: DensityTriple, r: Ratio) -> Result<f64> {
    let matched = r.value() * d.joint;
    let denom = matched + (1.0 - r.value()) * d.product_of_marginals();
    if denom <= 0.0 {
        return Err(McdError::Domain(format!(
            "zero denominator in marginal contrast: p_xy = {}, p_x = {}, p_y = {}, r = {}",
            d.joint,
            d.feature_marginal,
            d.target_marginal,
            r.value()
        )));
    }
    Ok(matched / denom)
}

/// Plug-in conversion of a contrast value back into a conditional density.
///
/// `q` must already be strictly below one; thresholding is the caller's job.
pub fn conditional_from_contrast(p_y: f64, q: f64, r: Ratio) -> Result<f64> {
    if !(p_y.is_finite() && p_y >= 0.0) {
        return Err(McdError::Domain(format!(
            "marginal density must be finite and nonnegative, got {p_y}"
        )));
    }
    if !(q.is_finite() && (0.0..1.0).contains(&q)) {
        return Err(McdError::Domain(format!(
            "contrast must lie in [0, 1), got {q}; threshold before plugging in"
        )));
    }
    Ok(p_y * (q / (1.0 - q)) * r.odds_correction())
}

/// Inverse of [`conditional_from_contrast`]: the contrast value implied by a
/// conditional density and the target marginal.
pub fn contrast_from_conditional(p_cond: f64, p_y: f64, r: Ratio) -> Result<f64> {
    if !(p_cond.is_finite() && p_cond >= 0.0) {
        return Err(McdError::Domain(format!(
            "conditional density must be finite and nonnegative, got {p_cond}"
        )));
    }
    if !(p_y.is_finite() && p_y > 0.0) {
        return Err(McdError::Domain(format!(
            "marginal density must be finite and positive, got {p_y}"
        )));
    }
    let matched = r.value() * p_cond;
    Ok(matched / (matched + (1.0 - r.value()) * p_y))
}
