//! Loss objects that need the true conditional mean: integrated mean squared
//! errors, the optimality ratio and the squared-residual decomposition.

use crate::data::{Dataset, PredictionTrack};
use crate::error::{Error, Result};

/// Integrated mean squared errors of one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ImseReport {
    pub model_id: String,
    /// L_T: full-sample fitted means.
    pub l_full: f64,
    /// L̃_T: leave-out means, when computed.
    pub l_loo: Option<f64>,
    /// L̈_T: one-step forecasts, with the first forecast row.
    pub l_poos: Option<(f64, usize)>,
}

impl ImseReport {
    /// L̃_T / L_T.
    pub fn ratio_loo_full(&self) -> Option<f64> {
        self.l_loo.map(|l| l / self.l_full)
    }
}

fn mean_squared_gap(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} values", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Empty);
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}

fn mu_slice(data: &Dataset) -> Result<&[f64]> {
    Ok(data.truth_pair()?.0.as_slice())
}

/// L_T(α) = mean of (μ_i − μ̂_i)².
pub fn imse_full(data: &Dataset, mu_hat: &[f64]) -> Result<f64> {
    mean_squared_gap(mu_slice(data)?, mu_hat)
}

/// L̃_T(α) = mean of (μ_i − μ̃_{−i})².
pub fn imse_loo(data: &Dataset, mu_loo: &[f64]) -> Result<f64> {
    mean_squared_gap(mu_slice(data)?, mu_loo)
}

/// L̈_T(α) over the track's evaluation range, divided by the number of
/// forecasts.
pub fn imse_poos(data: &Dataset, track: &PredictionTrack) -> Result<f64> {
    let mu = mu_slice(data)?;
    let range = track.indices();
    if range.end > mu.len() {
        return Err(Error::DimensionMismatch(format!(
            "track ends at row {} but T = {}",
            range.end,
            mu.len()
        )));
    }
    mean_squared_gap(&mu[range], &track.preds)
}

/// Values below this are treated as exact zeros by [`optimality_ratio`].
pub const ZERO_IMSE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioFlag {
    Regular,
    /// Both the selected and the best IMSE are zero; the ratio is 1.
    BothZero,
    /// The best IMSE is zero but the selected one is not; the ratio is +∞.
    ZeroDenominator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityRatio {
    pub value: f64,
    pub flag: RatioFlag,
}

/// `L(selected) / min_α L(α)`.
pub fn optimality_ratio(imse_by_model: &[(String, f64)], selected: &str) -> Result<OptimalityRatio> {
    if imse_by_model.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(index) = imse_by_model.iter().position(|(_, l)| !l.is_finite() || *l < 0.0) {
        return Err(Error::NonFinite { index });
    }
    let chosen = imse_by_model
        .iter()
        .find(|(id, _)| id == selected)
        .map(|(_, l)| *l)
        .ok_or_else(|| Error::UnknownModel(selected.to_owned()))?;
    let best = imse_by_model.iter().map(|(_, l)| *l).fold(f64::INFINITY, f64::min);
    Ok(if best >= ZERO_IMSE {
        OptimalityRatio { value: chosen / best, flag: RatioFlag::Regular }
    } else if chosen < ZERO_IMSE {
        OptimalityRatio { value: 1.0, flag: RatioFlag::BothZero }
    } else {
        OptimalityRatio { value: f64::INFINITY, flag: RatioFlag::ZeroDenominator }
    })
}

/// Which out-of-sample (or in-sample) means a decomposition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Loo,
    Full,
    Poos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionCheck {
    pub variant: Variant,
    /// Largest elementwise error of
    /// `ẽ_i² = ε_i² + 2(μ_i − m_i)ε_i + (μ_i − m_i)²` with `ẽ_i = y_i − m_i`.
    pub max_abs_identity_error: f64,
    /// Error of the averaged identity
    /// `mean ẽ² = mean ε² + cross_mu − cross_model + L`.
    pub aggregate_identity_error: f64,
    /// `(1/n) Σ 2 μ_i ε_i`.
    pub cross_term_mu_eps: f64,
    /// `(1/n) Σ 2 m_i ε_i`.
    pub cross_term_model_eps: f64,
    /// `(1/n) Σ (μ_i − m_i)²`.
    pub imse: f64,
}

/// Checks the squared-residual decomposition for the means `mu_out`.
///
/// `mu_out` has one entry per observation for the leave-out and full-sample
/// variants. For forecasts it may be shorter and is aligned with the last
/// rows of the sample.
pub fn decomposition_check(data: &Dataset, mu_out: &[f64], variant: Variant) -> Result<DecompositionCheck> {
    let (mu, eps) = data.truth_pair()?;
    let t = data.len();
    let n = mu_out.len();
    if n == 0 || n > t || (variant != Variant::Poos && n != t) {
        return Err(Error::DimensionMismatch(format!("{n} means for T = {t} ({variant:?})")));
    }
    let offset = t - n;
    let y = data.y();
    let mut max_err: f64 = 0.0;
    let (mut sq_res, mut sq_eps, mut cross_mu, mut cross_model, mut imse) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &m) in mu_out.iter().enumerate() {
        let i = offset + k;
        let e_out = y[i] - m;
        let gap = mu[i] - m;
        let rhs = eps[i] * eps[i] + 2.0 * gap * eps[i] + gap * gap;
        max_err = max_err.max((e_out * e_out - rhs).abs());
        sq_res += e_out * e_out;
        sq_eps += eps[i] * eps[i];
        cross_mu += 2.0 * mu[i] * eps[i];
        cross_model += 2.0 * m * eps[i];
        imse += gap * gap;
    }
    let nf = n as f64;
    let (sq_res, sq_eps, cross_mu, cross_model, imse) =
        (sq_res / nf, sq_eps / nf, cross_mu / nf, cross_model / nf, imse / nf);
    Ok(DecompositionCheck {
        variant,
        max_abs_identity_error: max_err,
        aggregate_identity_error: (sq_res - (sq_eps + cross_mu - cross_model + imse)).abs(),
        cross_term_mu_eps: cross_mu,
        cross_term_model_eps: cross_model,
        imse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Scheme;
    use nalgebra::DMatrix;

    fn with_truth(y: &[f64], mu: &[f64]) -> Dataset {
        let eps: Vec<f64> = y.iter().zip(mu).map(|(a, b)| a - b).collect();
        Dataset::new(y.to_vec(), DMatrix::from_element(y.len(), 1, 1.0))
            .unwrap()
            .with_truth(mu.to_vec(), eps)
            .unwrap()
    }

    #[test]
    fn imse_hand_values() {
        let d = with_truth(&[0.5, -0.5], &[0.0, 0.0]);
        assert_eq!(imse_full(&d, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(imse_full(&d, &[1.0, -1.0]).unwrap(), 1.0);

        let d = with_truth(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]);
        let l = imse_loo(&d, &[2.5, 2.0, 1.5]).unwrap();
        assert!((l - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn imse_poos_over_evaluation_range() {
        let d = with_truth(&[1.0, 2.0, 3.0, 4.0], &[2.5; 4]);
        let track = PredictionTrack { start: 2, preds: vec![1.5, 2.5], scheme: Scheme::Rolling { window: 2 } };
        assert!((imse_poos(&d, &track).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn missing_truth_is_reported() {
        let d = Dataset::new(vec![1.0, 2.0], DMatrix::from_element(2, 1, 1.0)).unwrap();
        assert_eq!(imse_full(&d, &[1.0, 2.0]).unwrap_err(), Error::MissingTruth);
        assert_eq!(decomposition_check(&d, &[1.0, 2.0], Variant::Full).unwrap_err(), Error::MissingTruth);
    }

    #[test]
    fn ratio_cases() {
        let m = vec![("a".to_string(), 2.0), ("b".to_string(), 1.0)];
        assert_eq!(optimality_ratio(&m, "a").unwrap().value, 2.0);
        assert_eq!(optimality_ratio(&m, "b").unwrap().value, 1.0);
        assert_eq!(optimality_ratio(&m, "c").unwrap_err(), Error::UnknownModel("c".into()));
        let z = vec![("a".to_string(), 0.0), ("b".to_string(), 0.5)];
        assert_eq!(optimality_ratio(&z, "a").unwrap().flag, RatioFlag::BothZero);
        let r = optimality_ratio(&z, "b").unwrap();
        assert_eq!(r.flag, RatioFlag::ZeroDenominator);
        assert!(r.value.is_infinite());
    }

    #[test]
    fn decomposition_with_exact_means() {
        let d = with_truth(&[1.0, 2.5, 0.25], &[1.5, 2.0, 0.5]);
        let mu: Vec<f64> = d.mu_true().unwrap().iter().copied().collect();
        let c = decomposition_check(&d, &mu, Variant::Loo).unwrap();
        assert!(c.max_abs_identity_error <= 1e-15);
        assert_eq!(c.cross_term_model_eps, c.cross_term_mu_eps);
        assert_eq!(c.imse, 0.0);
    }
}
