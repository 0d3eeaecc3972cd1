//! Monte Carlo experiments over a grid of sample sizes.
//!
//! Each (T, replication) pair is an independent task whose data stream is
//! addressed by `stream_seed(base_seed, [T, r])`. Rows are persisted per
//! (T, criterion, replication) and summaries are pure functions of the rows,
//! so results do not depend on the execution mode or thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Estimator, ModelSpec};
use crate::dgp::{candidate_set, generate, stream_seed, CandidateKind, DgpSpec};
use crate::error::{Error, Result};
use crate::estimators::{fit_tvp_kernel, tvp_block_spread};
use crate::oracle::{self, Variant};

use super::exec::{ordered_map, Execution};
use super::quantile::{median, quantile_type8, sorted};
use super::schedule::CriterionSpec;
use super::selection::Evaluator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Template; `t` and `seed` are set per task.
    pub dgp: DgpSpec,
    pub t_grid: Vec<usize>,
    pub replications: usize,
    pub candidates: CandidateKind,
    pub criteria: Vec<CriterionSpec>,
    #[serde(default)]
    pub base_seed: u64,
    /// Candidate used for the cross-term and leave-out diagnostics; the
    /// last candidate when absent.
    #[serde(default)]
    pub reference_model: Option<String>,
}

impl ExperimentConfig {
    /// Checks the grid, the criteria and that every criterion and candidate
    /// set resolves at every T (on a probe sample).
    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() || self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadConfig("t_grid must be nonempty and strictly increasing".into()));
        }
        if self.replications == 0 {
            return Err(Error::BadConfig("replications must be at least 1".into()));
        }
        if self.criteria.is_empty() {
            return Err(Error::BadConfig("criteria must not be empty".into()));
        }
        let mut labels = BTreeSet::new();
        for c in &self.criteria {
            if !labels.insert(c.label()) {
                return Err(Error::BadConfig(format!("criterion label `{}` is used twice", c.label())));
            }
        }
        for &t in &self.t_grid {
            let probe = generate(&self.dgp.with_t(t).with_seed(self.replication_seed(t, 0)))?;
            let candidates = candidate_set(&self.candidates, &probe)?;
            let pmax = candidates.iter().map(ModelSpec::pdim).max().unwrap_or(0);
            if let Some(id) = &self.reference_model {
                if !candidates.iter().any(|c| &c.id == id) {
                    return Err(Error::BadConfig(format!("reference_model `{id}` is not a candidate")));
                }
            }
            for c in &self.criteria {
                c.resolve(t, pmax)?;
            }
        }
        Ok(())
    }

    pub fn replication_seed(&self, t: usize, replication: usize) -> u64 {
        stream_seed(self.base_seed, &[t as u64, replication as u64])
    }

    fn criterion_position(&self, label: &str) -> Option<usize> {
        self.criteria.iter().position(|c| c.label() == label)
    }
}

/// One (T, criterion, replication) outcome. Failed cells carry a message and
/// NaN numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub t: usize,
    pub label: String,
    /// The criterion with its settings at this T, e.g. `hblock-cv(h=7)`.
    pub criterion: String,
    pub replication: usize,
    pub seed: u64,
    pub selected: String,
    pub selected_pdim: usize,
    pub ratio: f64,
    pub l_selected: f64,
    pub l_best: f64,
    pub n_excluded: usize,
    /// `(1/T) Σ 2 μ_i ε_i`.
    pub cross_mu_eps: f64,
    /// `(1/T) Σ 2 μ̃_{−i} ε_i` for the reference model.
    pub cross_loo_eps: f64,
    /// `|L̃_T / L_T − 1|` for the reference model.
    pub lemma1: f64,
    pub error: String,
}

impl ReplicationRow {
    pub fn failed(&self) -> bool {
        !self.error.is_empty()
    }
}

struct Diagnostics {
    cross_mu_eps: f64,
    cross_loo_eps: f64,
    lemma1: f64,
}

fn reference_diagnostics(ev: &Evaluator<'_>, reference: usize) -> Result<Diagnostics> {
    let fit = ev.fit(reference)?;
    let loo = ev.loo_means(reference)?;
    let check = oracle::decomposition_check(ev.data(), &loo, Variant::Loo)?;
    let l_full = oracle::imse_full(ev.data(), fit.mu_hat.as_slice())?;
    Ok(Diagnostics {
        cross_mu_eps: check.cross_term_mu_eps,
        cross_loo_eps: check.cross_term_model_eps,
        lemma1: (check.imse / l_full - 1.0).abs(),
    })
}

fn run_task(config: &ExperimentConfig, t: usize, replication: usize) -> Vec<ReplicationRow> {
    let seed = config.replication_seed(t, replication);
    let blank = |label: String, error: String| ReplicationRow {
        t,
        label,
        criterion: String::new(),
        replication,
        seed,
        selected: String::new(),
        selected_pdim: 0,
        ratio: f64::NAN,
        l_selected: f64::NAN,
        l_best: f64::NAN,
        n_excluded: 0,
        cross_mu_eps: f64::NAN,
        cross_loo_eps: f64::NAN,
        lemma1: f64::NAN,
        error,
    };
    let prepared = generate(&config.dgp.with_t(t).with_seed(seed))
        .and_then(|data| candidate_set(&config.candidates, &data).map(|c| (data, c)));
    let (data, candidates) = match prepared {
        Ok(v) => v,
        Err(e) => return config.criteria.iter().map(|c| blank(c.label(), e.to_string())).collect(),
    };
    let ev = Evaluator::new(&data, &candidates);
    let reference = match &config.reference_model {
        Some(id) => candidates.iter().position(|c| &c.id == id).unwrap_or(candidates.len() - 1),
        None => candidates.len() - 1,
    };
    let diag = reference_diagnostics(&ev, reference).unwrap_or(Diagnostics {
        cross_mu_eps: f64::NAN,
        cross_loo_eps: f64::NAN,
        lemma1: f64::NAN,
    });

    config
        .criteria
        .iter()
        .map(|spec| {
            let mut row = blank(spec.label(), String::new());
            row.cross_mu_eps = diag.cross_mu_eps;
            row.cross_loo_eps = diag.cross_loo_eps;
            row.lemma1 = diag.lemma1;
            let outcome = spec.resolve(t, ev.pmax()).and_then(|rc| {
                row.criterion = rc.criterion.to_string();
                ev.select(&rc)
            });
            match outcome {
                Ok(report) => match report.ratio {
                    Some(ratio) => {
                        row.selected_pdim = candidates[report.selected_index].pdim();
                        row.selected = report.selected;
                        row.ratio = ratio.value;
                        row.l_selected = report.imse.iter().find(|r| r.model_id == row.selected).map_or(f64::NAN, |r| r.l_full);
                        row.l_best = report.imse.iter().map(|r| r.l_full).fold(f64::INFINITY, f64::min);
                        row.n_excluded = report.excluded.len();
                    }
                    None => row.error = format!("no optimality ratio for {}", report.selected),
                },
                Err(e) => row.error = e.to_string(),
            }
            row
        })
        .collect()
}

/// Summary of one (T, criterion) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub t: usize,
    pub label: String,
    pub criterion: String,
    pub replications: usize,
    pub failed: usize,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q90: f64,
    pub mean: f64,
    /// How often each model was selected, by model id; sums to
    /// `replications - failed`.
    pub frequencies: BTreeMap<String, usize>,
    pub mean_excluded: f64,
}

/// Per-T diagnostics of the reference model.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDiagnostics {
    pub t: usize,
    pub median_abs_cross_mu_eps: f64,
    pub median_abs_cross_loo_eps: f64,
    pub median_lemma1: f64,
    /// Summed task time, in seconds; `None` when re-aggregated from rows.
    pub compute_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MCSummary {
    pub cells: Vec<CellSummary>,
    pub diagnostics: Vec<SampleDiagnostics>,
}

impl MCSummary {
    pub fn cell(&self, t: usize, label: &str) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.t == t && c.label == label)
    }

    /// Median optimality ratios of one criterion along the grid.
    pub fn median_path(&self, label: &str) -> Vec<(usize, f64)> {
        self.cells.iter().filter(|c| c.label == label).map(|c| (c.t, c.q50)).collect()
    }

    pub fn any_failed(&self) -> bool {
        self.cells.iter().any(|c| c.failed > 0)
    }
}

/// Rows and summary of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MCRun {
    pub rows: Vec<ReplicationRow>,
    pub summary: MCSummary,
}

/// Summarises persisted rows. Rows for T values or labels outside the
/// config are rejected.
pub fn aggregate(config: &ExperimentConfig, rows: &[ReplicationRow]) -> Result<MCSummary> {
    let mut cells = Vec::new();
    let mut diagnostics = Vec::new();
    for row in rows {
        if !config.t_grid.contains(&row.t) || config.criterion_position(&row.label).is_none() {
            return Err(Error::BadConfig(format!("row (T = {}, {}) is not part of the experiment", row.t, row.label)));
        }
    }
    for &t in &config.t_grid {
        for spec in &config.criteria {
            let label = spec.label();
            let cell: Vec<&ReplicationRow> = rows.iter().filter(|r| r.t == t && r.label == label).collect();
            let ok: Vec<&&ReplicationRow> = cell.iter().filter(|r| !r.failed()).collect();
            let ratios = sorted(ok.iter().map(|r| r.ratio));
            let mut frequencies = BTreeMap::new();
            for r in &ok {
                *frequencies.entry(r.selected.clone()).or_insert(0) += 1;
            }
            let n = ok.len() as f64;
            cells.push(CellSummary {
                t,
                label: label.clone(),
                criterion: cell.iter().find(|r| !r.criterion.is_empty()).map_or_else(String::new, |r| r.criterion.clone()),
                replications: cell.len(),
                failed: cell.len() - ok.len(),
                q25: quantile_type8(&ratios, 0.25),
                q50: quantile_type8(&ratios, 0.5),
                q75: quantile_type8(&ratios, 0.75),
                q90: quantile_type8(&ratios, 0.9),
                mean: if ok.is_empty() { f64::NAN } else { ratios.iter().sum::<f64>() / n },
                frequencies,
                mean_excluded: if ok.is_empty() { f64::NAN } else { ok.iter().map(|r| r.n_excluded as f64).sum::<f64>() / n },
            });
        }
        let first = config.criteria[0].label();
        let reps: Vec<&ReplicationRow> = rows.iter().filter(|r| r.t == t && r.label == first).collect();
        let finite = |v: f64| v.is_finite().then_some(v);
        diagnostics.push(SampleDiagnostics {
            t,
            median_abs_cross_mu_eps: median(reps.iter().filter_map(|r| finite(r.cross_mu_eps.abs()))),
            median_abs_cross_loo_eps: median(reps.iter().filter_map(|r| finite(r.cross_loo_eps.abs()))),
            median_lemma1: median(reps.iter().filter_map(|r| finite(r.lemma1))),
            compute_seconds: None,
        });
    }
    Ok(MCSummary { cells, diagnostics })
}

fn sort_rows(config: &ExperimentConfig, rows: &mut [ReplicationRow]) {
    let t_pos = |t: usize| config.t_grid.iter().position(|&g| g == t).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (t_pos(r.t), config.criterion_position(&r.label).unwrap_or(usize::MAX), r.replication));
}

/// Runs the experiment, reusing every (T, replication) task that is fully
/// present in `previous`.
pub fn monte_carlo_resume(config: &ExperimentConfig, exec: Execution, previous: Vec<ReplicationRow>) -> Result<MCRun> {
    config.validate()?;
    let mut done: BTreeMap<(usize, usize), Vec<ReplicationRow>> = BTreeMap::new();
    for row in previous {
        if config.t_grid.contains(&row.t) && row.replication < config.replications {
            done.entry((row.t, row.replication)).or_default().push(row);
        }
    }
    done.retain(|_, rows| {
        rows.len() == config.criteria.len()
            && config.criteria.iter().all(|c| rows.iter().any(|r| r.label == c.label()))
            && rows.iter().all(|r| r.seed == config.replication_seed(r.t, r.replication))
    });

    let tasks: Vec<(usize, usize)> = config
        .t_grid
        .iter()
        .flat_map(|&t| (0..config.replications).map(move |r| (t, r)))
        .filter(|key| !done.contains_key(key))
        .collect();
    let fresh = ordered_map(&tasks, exec, |&(t, r)| {
        let start = Instant::now();
        let rows = run_task(config, t, r);
        (t, rows, start.elapsed().as_secs_f64())
    });

    let mut seconds: BTreeMap<usize, f64> = BTreeMap::new();
    let mut rows: Vec<ReplicationRow> = done.into_values().flatten().collect();
    for (t, task_rows, secs) in fresh {
        *seconds.entry(t).or_default() += secs;
        rows.extend(task_rows);
    }
    sort_rows(config, &mut rows);
    let mut summary = aggregate(config, &rows)?;
    for d in &mut summary.diagnostics {
        d.compute_seconds = seconds.get(&d.t).copied();
    }
    Ok(MCRun { rows, summary })
}

pub fn monte_carlo_with(config: &ExperimentConfig, exec: Execution) -> Result<MCRun> {
    monte_carlo_resume(config, exec, Vec::new())
}

/// Runs the experiment with the default execution mode.
pub fn monte_carlo(config: &ExperimentConfig) -> Result<MCSummary> {
    monte_carlo_with(config, Execution::default()).map(|run| run.summary)
}

/// Least-squares slope of `ln y` on `ln x`. Needs at least three points with
/// positive finite coordinates.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::DegenerateGrid(format!("{} points; at least 3 are needed", points.len())));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(x.is_finite() && *x > 0.0 && y.is_finite() && *y > 0.0)) {
        return Err(Error::DegenerateGrid(format!("point ({x}, {y}) has no logarithm")));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateGrid("all grid points coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Slope of the log median `|(1/T) Σ 2 μ̃_{−i} ε_i|` against `ln T`.
pub fn cross_term_slope_of(summary: &MCSummary) -> Result<f64> {
    let points: Vec<(f64, f64)> =
        summary.diagnostics.iter().map(|d| (d.t as f64, d.median_abs_cross_loo_eps)).collect();
    log_log_slope(&points)
}

pub fn cross_term_slope(config: &ExperimentConfig) -> Result<f64> {
    if config.t_grid.len() < 3 {
        return Err(Error::DegenerateGrid(format!("T grid has {} points; at least 3 are needed", config.t_grid.len())));
    }
    cross_term_slope_of(&monte_carlo(config)?)
}

/// Largest within-block coefficient spread of a time-varying kernel fit,
/// over contiguous blocks of `block_len` observations.
pub fn tvp_block_diagnostic(data: &Dataset, spec: &ModelSpec, block_len: usize) -> Result<f64> {
    if !matches!(spec.estimator, Estimator::TvpKernel { .. }) {
        return Err(Error::Unsupported(format!("{} is not a time-varying kernel model", spec.id)));
    }
    tvp_block_spread(&fit_tvp_kernel(data, spec)?, block_len)
}
