//! Criterion scores and argmin selection.
//!
//! Cross-validation and pseudo-out-of-sample criteria score the mean loss of
//! held-out residuals. Information criteria score
//! `ln(MSE) + λ_T p / T` on full-sample residuals.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::PredictionTrack;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    #[default]
    Squared,
    Absolute,
}

impl Loss {
    fn apply(self, r: f64) -> f64 {
        match self {
            Loss::Squared => r * r,
            Loss::Absolute => r.abs(),
        }
    }
}

/// User-supplied penalty coefficient `λ_T = f(T, p)`.
#[derive(Clone)]
pub struct CustomPenalty {
    pub name: String,
    pub f: Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomPenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomPenalty({})", self.name)
    }
}

impl PartialEq for CustomPenalty {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f)
    }
}

/// Penalty coefficient catalogue for information criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PenaltyKind {
    Aic,
    Bic,
    Hqic {
        #[serde(default = "default_hqic_c")]
        c: f64,
    },
    Ric,
    Fixed {
        lambda: f64,
    },
    #[serde(skip)]
    Custom(CustomPenalty),
}

fn default_hqic_c() -> f64 {
    2.01
}

impl PenaltyKind {
    pub fn hqic() -> Self {
        PenaltyKind::Hqic { c: default_hqic_c() }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        PenaltyKind::Custom(CustomPenalty { name: name.into(), f: Arc::new(f) })
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyKind::Aic => write!(f, "aic"),
            PenaltyKind::Bic => write!(f, "bic"),
            PenaltyKind::Hqic { c } => write!(f, "hqic(c={c})"),
            PenaltyKind::Ric => write!(f, "ric"),
            PenaltyKind::Fixed { lambda } => write!(f, "fixed({lambda})"),
            PenaltyKind::Custom(c) => write!(f, "custom({})", c.name),
        }
    }
}

/// A criterion with every sample-size dependent setting resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Criterion {
    Loo,
    HBlock { h: usize },
    KFold { k: usize },
    Ic(PenaltyKind),
    Rolling { window: usize },
    Recursive { t0: usize },
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Loo => write!(f, "loo-cv"),
            Criterion::HBlock { h } => write!(f, "hblock-cv(h={h})"),
            Criterion::KFold { k } => write!(f, "kfold-cv(k={k})"),
            Criterion::Ic(p) => write!(f, "ic({p})"),
            Criterion::Rolling { window } => write!(f, "rolling(R={window})"),
            Criterion::Recursive { t0 } => write!(f, "recursive(t0={t0})"),
        }
    }
}

/// Score of one candidate under one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionScore {
    pub model_id: String,
    pub pdim: usize,
    pub criterion: Criterion,
    /// Mean loss for CV/POOS criteria, `ln(MSE)` for information criteria.
    pub loss_part: f64,
    pub penalty_part: f64,
    pub total: f64,
}

impl CriterionScore {
    pub fn unpenalised(model_id: impl Into<String>, pdim: usize, criterion: Criterion, loss: f64) -> Self {
        Self { model_id: model_id.into(), pdim, criterion, loss_part: loss, penalty_part: 0.0, total: loss }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Mean loss of a residual vector.
pub fn cv_score(residuals: &[f64], loss: Loss) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::Empty);
    }
    check_finite(residuals)?;
    Ok(residuals.iter().map(|&r| loss.apply(r)).sum::<f64>() / residuals.len() as f64)
}

/// Penalty coefficient λ_T.
pub fn penalty_value(penalty: &PenaltyKind, t: usize, pdim: usize) -> Result<f64> {
    if t < 2 {
        return Err(Error::BadArgs(format!("penalty needs T >= 2, got {t}")));
    }
    if pdim < 1 {
        return Err(Error::BadArgs("penalty needs at least one predictor".into()));
    }
    let value = match penalty {
        PenaltyKind::Aic => 2.0,
        PenaltyKind::Bic => (t as f64).ln(),
        PenaltyKind::Hqic { c } => {
            if c.is_nan() || *c <= 2.0 {
                return Err(Error::BadArgs(format!("HQIC constant must exceed 2, got {c}")));
            }
            if t < 3 {
                return Err(Error::BadArgs("HQIC needs T >= 3 so that ln ln T is defined".into()));
            }
            c * (t as f64).ln().ln()
        }
        PenaltyKind::Ric => 2.0 * (pdim as f64).ln(),
        PenaltyKind::Fixed { lambda } => {
            if *lambda <= 1.0 {
                log::warn!("fixed penalty {lambda} is not above 1");
            }
            *lambda
        }
        PenaltyKind::Custom(c) => (c.f)(t, pdim),
    };
    if !value.is_finite() {
        return Err(Error::BadArgs(format!("penalty {penalty} is not finite at T = {t}")));
    }
    Ok(value)
}

/// `ln(mean ε̂²) + λ_T pdim / T` on full-sample residuals.
pub fn ic_score(
    model_id: &str,
    residuals: &[f64],
    pdim: usize,
    t: usize,
    penalty: &PenaltyKind,
) -> Result<CriterionScore> {
    if residuals.len() != t {
        return Err(Error::DimensionMismatch(format!("{} residuals for T = {t}", residuals.len())));
    }
    let mse = cv_score(residuals, Loss::Squared)?;
    if mse <= 1e-300 {
        return Err(Error::PerfectFit);
    }
    let loss_part = mse.ln();
    let penalty_part = penalty_value(penalty, t, pdim)? * pdim as f64 / t as f64;
    Ok(CriterionScore {
        model_id: model_id.to_owned(),
        pdim,
        criterion: Criterion::Ic(penalty.clone()),
        loss_part,
        penalty_part,
        total: loss_part + penalty_part,
    })
}

/// Mean loss of the forecast errors over the track's evaluation range; the
/// divisor is the number of forecasts, `T - start`.
pub fn poos_score(
    model_id: &str,
    pdim: usize,
    track: &PredictionTrack,
    y: &nalgebra::DVector<f64>,
    loss: Loss,
) -> Result<CriterionScore> {
    let errors = track.errors(y)?;
    let criterion = match track.scheme {
        crate::data::Scheme::Rolling { window } => Criterion::Rolling { window },
        crate::data::Scheme::Recursive { t0 } => Criterion::Recursive { t0 },
    };
    Ok(CriterionScore::unpenalised(model_id, pdim, criterion, cv_score(&errors, loss)?))
}

/// Position of the minimising score. Exact ties go to the smaller model,
/// then to the earlier position.
pub fn select_index(scores: &[CriterionScore]) -> Result<usize> {
    let first = scores.first().ok_or(Error::Empty)?;
    if scores.iter().any(|s| s.criterion != first.criterion) {
        return Err(Error::MixedCriteria);
    }
    if let Some(index) = scores.iter().position(|s| !s.total.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        let b = &scores[best];
        if s.total < b.total || (s.total == b.total && s.pdim < b.pdim) {
            best = i;
        }
    }
    Ok(best)
}

/// Model id of the minimising score; see [`select_index`] for tie-breaks.
pub fn select(scores: &[CriterionScore]) -> Result<&str> {
    select_index(scores).map(|i| scores[i].model_id.as_str())
}
