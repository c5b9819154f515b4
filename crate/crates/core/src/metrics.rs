//! Evaluation functionals: empirical KL divergence on a grid and empirical
//! negative log-likelihood, both with a lower clamp `delta`.

use serde::{Deserialize, Serialize};

use crate::error::{McdError, Result};

pub const DEFAULT_DELTA: f64 = 1e-6;

/// How the KL double sum is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlNormalization {
    /// Plain sum over test points and grid points.
    #[default]
    Total,
    /// Sum divided by the number of test points.
    PerTestPoint,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(McdError::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    Ok(())
}

fn check_shapes(true_pdfs: &[Vec<f64>], pred_pdfs: &[Vec<f64>]) -> Result<()> {
    if true_pdfs.len() != pred_pdfs.len() {
        return Err(McdError::ShapeMismatch(format!(
            "{} true densities but {} predicted",
            true_pdfs.len(),
            pred_pdfs.len()
        )));
    }
    for (i, (f, g)) in true_pdfs.iter().zip(pred_pdfs).enumerate() {
        if f.len() != g.len() {
            return Err(McdError::ShapeMismatch(format!(
                "test point {i}: {} true values but {} predicted",
                f.len(),
                g.len()
            )));
        }
    }
    Ok(())
}

/// `sum_x sum_y f ln(f / g)` with `f` and `g` clamped below at `delta`.
///
/// There is no grid-spacing weight; see [`weighted_kl`] for the Riemann form.
pub fn empirical_kl(true_pdfs: &[Vec<f64>], pred_pdfs: &[Vec<f64>], delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_shapes(true_pdfs, pred_pdfs)?;
    let mut total = 0.0;
    for (f, g) in true_pdfs.iter().zip(pred_pdfs) {
        for (&fv, &gv) in f.iter().zip(g) {
            let (fv, gv) = (fv.max(delta), gv.max(delta));
            total += fv * (fv / gv).ln();
        }
    }
    Ok(total)
}

/// [`empirical_kl`] with the chosen normalization.
pub fn empirical_kl_normalized(
    true_pdfs: &[Vec<f64>],
    pred_pdfs: &[Vec<f64>],
    delta: f64,
    normalization: KlNormalization,
) -> Result<f64> {
    let total = empirical_kl(true_pdfs, pred_pdfs, delta)?;
    Ok(match normalization {
        KlNormalization::Total => total,
        KlNormalization::PerTestPoint => total / true_pdfs.len().max(1) as f64,
    })
}

/// Mean over test points of the trapezoid-weighted clamped KL on `grid`.
pub fn weighted_kl(
    true_pdfs: &[Vec<f64>],
    pred_pdfs: &[Vec<f64>],
    grid: &[f64],
    delta: f64,
) -> Result<f64> {
    check_delta(delta)?;
    check_shapes(true_pdfs, pred_pdfs)?;
    if true_pdfs.is_empty() {
        return Err(McdError::InvalidArgument("no test points".into()));
    }
    let mut total = 0.0;
    for (f, g) in true_pdfs.iter().zip(pred_pdfs) {
        if f.len() != grid.len() {
            return Err(McdError::ShapeMismatch(format!(
                "{} values on a grid of {}",
                f.len(),
                grid.len()
            )));
        }
        let terms: Vec<f64> = f
            .iter()
            .zip(g)
            .map(|(&fv, &gv)| {
                let (fv, gv) = (fv.max(delta), gv.max(delta));
                fv * (fv / gv).ln()
            })
            .collect();
        total += crate::estimator::trapezoid(&terms, grid)?;
    }
    Ok(total / true_pdfs.len() as f64)
}

/// `-sum ln(max(g, delta))` over predicted densities at the true targets.
pub fn empirical_nll(pred_at_true_targets: &[f64], delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(-pred_at_true_targets
        .iter()
        .map(|&g| g.max(delta).ln())
        .sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "KL")]
    Kl,
    #[serde(rename = "NLL")]
    Nll,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Kl => "KL",
            Metric::Nll => "NLL",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = McdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "KL" => Ok(Metric::Kl),
            "NLL" => Ok(Metric::Nll),
            other => Err(McdError::InvalidArgument(format!(
                "unknown metric `{other}`"
            ))),
        }
    }
}

/// One cell of a benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub model: String,
    pub metric: Metric,
    pub value: f64,
    /// Contrast-set size used for training; 0 for methods without one.
    pub contrast_size: usize,
    pub ratio: f64,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub n_test: usize,
    pub grid_size: usize,
    /// Free-form cell label (construction, extra sizes, draws per row).
    pub setting: String,
}

impl EvaluationReport {
    pub fn validate(&self) -> Result<()> {
        if !self.value.is_finite() {
            return Err(McdError::Domain(format!(
                "{} on {} produced non-finite {}",
                self.method,
                self.model,
                self.metric.name()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kl_examples() {
        let f = vec![vec![0.3, 0.2, 0.5], vec![1.0, 0.0, 2.0]];
        assert_eq!(empirical_kl(&f, &f, DEFAULT_DELTA).unwrap(), 0.0);
        assert_relative_eq!(
            empirical_kl(&[vec![1.0]], &[vec![1e-6]], DEFAULT_DELTA).unwrap(),
            13.815_510_557_964_274,
            max_relative = 1e-12
        );
        let want = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        let got = empirical_kl(&[vec![0.5, 0.5]], &[vec![0.25, 0.75]], DEFAULT_DELTA).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-12);
        assert!((got - 0.143_84).abs() < 1e-5);
        assert!(empirical_kl(&[vec![1.0]], &[vec![1.0, 2.0]], DEFAULT_DELTA).is_err());
        assert!(empirical_kl(&[vec![1.0]], &[], DEFAULT_DELTA).is_err());
    }

    #[test]
    fn kl_normalization_flag() {
        let f = vec![vec![1.0]; 4];
        let g = vec![vec![0.5]; 4];
        let total = empirical_kl_normalized(&f, &g, DEFAULT_DELTA, KlNormalization::Total).unwrap();
        let per =
            empirical_kl_normalized(&f, &g, DEFAULT_DELTA, KlNormalization::PerTestPoint).unwrap();
        assert_relative_eq!(total, 4.0 * 2f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(per, 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn nll_examples() {
        assert_eq!(empirical_nll(&[1.0; 5], DEFAULT_DELTA).unwrap(), -0.0);
        assert_relative_eq!(
            empirical_nll(&[std::f64::consts::E; 10], DEFAULT_DELTA).unwrap(),
            -10.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            empirical_nll(&[1e-9], DEFAULT_DELTA).unwrap(),
            13.815_510_557_964_274,
            max_relative = 1e-12
        );
        assert!(empirical_nll(&[1.0], 0.0).is_err());
    }

    #[test]
    fn weighted_kl_of_shifted_normal() {
        // KL(N(0,1) || N(1,1)) = 0.5
        let grid = crate::estimator::linspace(-10.0, 10.0, 20_001).unwrap();
        let f: Vec<f64> = grid
            .iter()
            .map(|&t| crate::kde::std_normal_pdf(t))
            .collect();
        let g: Vec<f64> = grid
            .iter()
            .map(|&t| crate::kde::std_normal_pdf(t - 1.0))
            .collect();
        let kl = weighted_kl(&[f], &[g], &grid, 1e-300).unwrap();
        assert!((kl - 0.5).abs() < 1e-6, "{kl}");
    }

    #[test]
    fn reports_reject_non_finite_values() {
        let r = EvaluationReport {
            method: "m".into(),
            model: "x".into(),
            metric: Metric::Kl,
            value: f64::NAN,
            contrast_size: 0,
            ratio: 0.5,
            seed: 0,
            wall_time_seconds: 0.0,
            n_test: 1,
            grid_size: 2,
            setting: String::new(),
        };
        assert!(r.validate().is_err());
    }

    fn brute_force(f: &[Vec<f64>], g: &[Vec<f64>], delta: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..f.len() {
            for j in 0..f[i].len() {
                let a = if f[i][j] < delta { delta } else { f[i][j] };
                let b = if g[i][j] < delta { delta } else { g[i][j] };
                s += a * a.ln() - a * b.ln();
            }
        }
        s
    }

    proptest! {
        #[test]
        fn matches_direct_summation(f in prop::collection::vec(prop::collection::vec(0.0f64..3.0, 5), 1..6),
                                    seed in 0u64..1000) {
            let g: Vec<Vec<f64>> = f
                .iter()
                .enumerate()
                .map(|(i, row)| row.iter().enumerate().map(|(j, v)| (v + 0.1 * ((seed as usize + i * 5 + j) % 7) as f64) * 0.9).collect())
                .collect();
            let got = empirical_kl(&f, &g, DEFAULT_DELTA).unwrap();
            let want = brute_force(&f, &g, DEFAULT_DELTA);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }

        #[test]
        fn grows_as_prediction_moves_away(f in prop::collection::vec(0.1f64..2.0, 5), t1 in 0.0f64..0.4, dt in 0.01f64..0.4) {
            // move g along g = f * exp(-t) so every ratio grows with t
            let at = |t: f64| vec![f.iter().map(|v| v * (-t).exp()).collect::<Vec<f64>>()];
            let fv = vec![f.clone()];
            let a = empirical_kl(&fv, &at(t1), DEFAULT_DELTA).unwrap();
            let b = empirical_kl(&fv, &at(t1 + dt), DEFAULT_DELTA).unwrap();
            prop_assert!(b > a);
        }
    }
}
