//! Scoring a candidate set on one dataset and picking the minimiser.

use std::cell::OnceCell;

use crate::criteria::{self, Criterion, CriterionScore};
use crate::data::{Dataset, FitResult, ModelSpec, PredictionTrack};
use crate::error::{Error, Result};
use crate::estimators::{self, KFold};
use crate::oracle::{self, ImseReport, OptimalityRatio};

use super::schedule::ResolvedCriterion;

/// Outcome of one selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub label: String,
    pub criterion: Criterion,
    /// Scores of the candidates that could be evaluated, in candidate order.
    pub scores: Vec<CriterionScore>,
    /// Candidates dropped because they are not identified on this sample.
    pub excluded: Vec<(String, Error)>,
    pub selected: String,
    /// Position of the selected model in the candidate list.
    pub selected_index: usize,
    /// One entry per candidate with a full-sample fit; empty without truth.
    pub imse: Vec<ImseReport>,
    /// `L_T(selected) / min_α L_T(α)`; `None` without truth.
    pub ratio: Option<OptimalityRatio>,
}

/// Per-dataset cache of full fits and leave-one-out residuals, shared by
/// every criterion evaluated on the same sample.
pub struct Evaluator<'a> {
    data: &'a Dataset,
    candidates: &'a [ModelSpec],
    fits: Vec<OnceCell<Result<FitResult>>>,
    loo: Vec<OnceCell<Result<Vec<f64>>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(data: &'a Dataset, candidates: &'a [ModelSpec]) -> Self {
        let n = candidates.len();
        Self {
            data,
            candidates,
            fits: (0..n).map(|_| OnceCell::new()).collect(),
            loo: (0..n).map(|_| OnceCell::new()).collect(),
        }
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn candidates(&self) -> &[ModelSpec] {
        self.candidates
    }

    pub fn pmax(&self) -> usize {
        self.candidates.iter().map(ModelSpec::pdim).max().unwrap_or(0)
    }

    pub fn fit(&self, i: usize) -> Result<&FitResult> {
        self.fits[i].get_or_init(|| estimators::fit(self.data, &self.candidates[i])).as_ref().map_err(Clone::clone)
    }

    /// Leave-one-out residuals, by the leverage shortcut when the fit has
    /// leverage values and by refitting otherwise.
    pub fn loo_residuals(&self, i: usize) -> Result<&[f64]> {
        self.loo[i]
            .get_or_init(|| {
                let fit = self.fit(i)?;
                if fit.leverage.is_some() {
                    estimators::loo_residuals_fast(fit)
                } else {
                    estimators::loo_residuals_refit(self.data, &self.candidates[i])
                }
            })
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    /// Leave-one-out means `μ̃_{−i} = y_i − ẽ_i`.
    pub fn loo_means(&self, i: usize) -> Result<Vec<f64>> {
        let r = self.loo_residuals(i)?;
        Ok(self.data.y().iter().zip(r).map(|(y, e)| y - e).collect())
    }

    fn track(&self, i: usize, criterion: &Criterion) -> Result<Option<PredictionTrack>> {
        let spec = &self.candidates[i];
        match criterion {
            Criterion::Rolling { window } => estimators::rolling_track(self.data, spec, *window).map(Some),
            Criterion::Recursive { t0 } => estimators::recursive_track(self.data, spec, *t0).map(Some),
            _ => Ok(None),
        }
    }

    /// Score of candidate `i`, and its forecast track for POOS criteria.
    pub fn score(&self, i: usize, rc: &ResolvedCriterion) -> Result<(CriterionScore, Option<PredictionTrack>)> {
        let spec = &self.candidates[i];
        let pdim = spec.pdim();
        let unpenalised =
            |r: &[f64]| Ok(CriterionScore::unpenalised(&spec.id, pdim, rc.criterion.clone(), criteria::cv_score(r, rc.loss)?));
        match &rc.criterion {
            Criterion::Loo => Ok((unpenalised(self.loo_residuals(i)?)?, None)),
            Criterion::HBlock { h } => {
                Ok((unpenalised(&estimators::hblock_residuals_fast(self.data, spec, *h)?)?, None))
            }
            Criterion::KFold { k } => {
                let folds = KFold { k: *k, shuffle_seed: rc.shuffle_seed };
                Ok((unpenalised(&estimators::kfold_residuals(self.data, spec, folds)?)?, None))
            }
            Criterion::Ic(penalty) => {
                let fit = self.fit(i)?;
                let score = criteria::ic_score(&spec.id, fit.residuals.as_slice(), pdim, self.data.len(), penalty)?;
                Ok((score, None))
            }
            Criterion::Rolling { .. } | Criterion::Recursive { .. } => {
                let track = self.track(i, &rc.criterion)?.expect("forecast criterion");
                let mut score = criteria::poos_score(&spec.id, pdim, &track, self.data.y(), rc.loss)?;
                score.criterion = rc.criterion.clone();
                Ok((score, Some(track)))
            }
        }
    }

    /// Runs one criterion over the whole candidate set.
    ///
    /// Candidates that fail with an identification error (rank deficiency,
    /// unit leverage) are excluded with a warning; any other error aborts.
    pub fn select(&self, rc: &ResolvedCriterion) -> Result<SelectionReport> {
        let mut scores = Vec::new();
        let mut positions = Vec::new();
        let mut tracks = Vec::new();
        let mut excluded = Vec::new();
        for (i, spec) in self.candidates.iter().enumerate() {
            match self.score(i, rc) {
                Ok((score, track)) => {
                    scores.push(score);
                    positions.push(i);
                    tracks.push(track);
                }
                Err(e) if e.is_identification_failure() => {
                    log::info!("excluding {} under {}: {e}", spec.id, rc.label);
                    excluded.push((spec.id.clone(), e));
                }
                Err(e) => return Err(e),
            }
        }
        if scores.is_empty() {
            return Err(Error::BadArgs(format!("every candidate was excluded under {}", rc.label)));
        }
        let best = criteria::select_index(&scores)?;
        let selected_index = positions[best];
        let selected = self.candidates[selected_index].id.clone();

        let (imse, ratio) = if self.data.has_truth() {
            let mut reports = Vec::new();
            for (i, spec) in self.candidates.iter().enumerate() {
                let Ok(fit) = self.fit(i) else { continue };
                let l_full = oracle::imse_full(self.data, fit.mu_hat.as_slice())?;
                let l_loo = match self.loo_means(i) {
                    Ok(m) => Some(oracle::imse_loo(self.data, &m)?),
                    Err(e) if e.is_identification_failure() => None,
                    Err(e) => return Err(e),
                };
                let l_poos = match positions.iter().position(|&p| p == i).and_then(|k| tracks[k].as_ref()) {
                    Some(track) => Some((oracle::imse_poos(self.data, track)?, track.start)),
                    None => None,
                };
                reports.push(ImseReport { model_id: spec.id.clone(), l_full, l_loo, l_poos });
            }
            let pairs: Vec<(String, f64)> = reports.iter().map(|r| (r.model_id.clone(), r.l_full)).collect();
            // A candidate without a full-sample fit (one-sided kernels) has no L_T.
            let ratio = match pairs.iter().any(|(id, _)| *id == selected) {
                true => Some(oracle::optimality_ratio(&pairs, &selected)?),
                false => None,
            };
            (reports, ratio)
        } else {
            (Vec::new(), None)
        };

        Ok(SelectionReport {
            label: rc.label.clone(),
            criterion: rc.criterion.clone(),
            scores,
            excluded,
            selected,
            selected_index,
            imse,
            ratio,
        })
    }
}

/// Scores every candidate under `criterion` and selects the minimiser.
pub fn run_selection(data: &Dataset, candidates: &[ModelSpec], criterion: &ResolvedCriterion) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::Empty);
    }
    for c in candidates {
        c.validate(data.ncols(), data.len())?;
    }
    Evaluator::new(data, candidates).select(criterion)
}
