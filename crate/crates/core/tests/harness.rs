use modsel_core::criteria::{Criterion, PenaltyKind};
use modsel_core::dgp::{candidate_set, generate, CandidateKind, DgpSpec};
use modsel_core::estimators::{default_block_size, default_recursive_start, default_window};
use modsel_core::harness::*;
use modsel_core::{Dataset, Error, Kernel, ModelSpec, Side};
use nalgebra::DMatrix;

fn baseline_config(t_grid: Vec<usize>, replications: usize) -> ExperimentConfig {
    ExperimentConfig {
        dgp: DgpSpec::baseline(100, 0),
        t_grid,
        replications,
        candidates: CandidateKind::SubsetLattice { pmax: 3 },
        criteria: [CriterionKind::Loo, CriterionKind::Hblock, CriterionKind::Bic, CriterionKind::Recursive]
            .into_iter()
            .map(CriterionSpec::new)
            .collect(),
        base_seed: 42,
        reference_model: None,
    }
}

fn without_timing(mut s: MCSummary) -> MCSummary {
    s.diagnostics.iter_mut().for_each(|d| d.compute_seconds = None);
    s
}

#[test]
fn loo_selection_ratio_is_at_least_one() {
    let data = generate(&DgpSpec::baseline(400, 1)).unwrap();
    let candidates = candidate_set(&CandidateKind::SubsetLattice { pmax: 3 }, &data).unwrap();
    let report = run_selection(&data, &candidates, &ResolvedCriterion::plain(Criterion::Loo)).unwrap();
    let ratio = report.ratio.unwrap().value;
    assert!(ratio >= 1.0 && ratio.is_finite());
    assert_eq!(report.scores.len(), 8);
    assert_eq!(report.imse.len(), 8);
}

#[test]
fn aic_and_bic_share_loss_parts() {
    let data = generate(&DgpSpec::baseline(200, 2)).unwrap();
    let candidates = candidate_set(&CandidateKind::SubsetLattice { pmax: 3 }, &data).unwrap();
    let aic = run_selection(&data, &candidates, &ResolvedCriterion::plain(Criterion::Ic(PenaltyKind::Aic))).unwrap();
    let bic = run_selection(&data, &candidates, &ResolvedCriterion::plain(Criterion::Ic(PenaltyKind::Bic))).unwrap();
    for (a, b) in aic.scores.iter().zip(&bic.scores) {
        assert_eq!(a.loss_part, b.loss_part);
        assert_ne!(a.penalty_part, b.penalty_part);
    }
}

#[test]
fn single_candidate_has_unit_ratio() {
    let data = generate(&DgpSpec::baseline(100, 3)).unwrap();
    let report = run_selection(&data, &[ModelSpec::ols(vec![0, 1])], &ResolvedCriterion::plain(Criterion::Loo)).unwrap();
    assert_eq!(report.selected, "ols:0+1");
    assert_eq!(report.ratio.unwrap().value, 1.0);
}

#[test]
fn rank_deficient_candidates_are_excluded() {
    let t = 30;
    let x = DMatrix::from_fn(t, 3, |i, j| match j {
        0 => 1.0,
        1 => (i as f64).sin(),
        _ => 2.0 * (i as f64).sin(),
    });
    let y: Vec<f64> = (0..t).map(|i| (i as f64 * 0.3).cos()).collect();
    let data = Dataset::new(y, x).unwrap();
    let candidates = vec![ModelSpec::ols(vec![0]), ModelSpec::ols(vec![0, 1, 2]), ModelSpec::ols(vec![0, 1])];
    let report = run_selection(&data, &candidates, &ResolvedCriterion::plain(Criterion::Loo)).unwrap();
    assert_eq!(report.excluded.len(), 1);
    assert_eq!(report.excluded[0].0, "ols:0+1+2");
    assert_eq!(report.scores.len(), 2);
    assert!(report.ratio.is_none());
}

#[test]
fn single_replication_quantiles_coincide() {
    let summary = monte_carlo(&baseline_config(vec![80], 1)).unwrap();
    for c in &summary.cells {
        assert_eq!(c.q25, c.q50);
        assert_eq!(c.q50, c.q75);
        assert_eq!(c.q75, c.q90);
        assert_eq!(c.q90, c.mean);
        assert_eq!(c.frequencies.values().sum::<usize>(), 1);
    }
}

#[test]
fn summaries_are_deterministic_across_execution_modes() {
    let config = baseline_config(vec![60, 120], 12);
    let seq = monte_carlo_with(&config, Execution::Sequential).unwrap();
    let par = monte_carlo_with(&config, Execution::Parallel { threads: Some(4) }).unwrap();
    assert_eq!(seq.rows, par.rows);
    assert_eq!(without_timing(seq.summary.clone()), without_timing(par.summary));
    let again = monte_carlo_with(&config, Execution::Sequential).unwrap();
    assert_eq!(seq.rows, again.rows);
}

#[test]
fn reaggregation_reproduces_the_summary() {
    let config = baseline_config(vec![60, 120], 10);
    let run = monte_carlo_with(&config, Execution::default()).unwrap();
    assert_eq!(aggregate(&config, &run.rows).unwrap(), without_timing(run.summary.clone()));
    for c in &run.summary.cells {
        assert_eq!(c.frequencies.values().sum::<usize>() + c.failed, c.replications);
        assert!(c.q25 <= c.q50 && c.q50 <= c.q75 && c.q75 <= c.q90);
    }
}

#[test]
fn resume_recomputes_only_missing_replications() {
    let config = baseline_config(vec![60, 120], 8);
    let full = monte_carlo_with(&config, Execution::default()).unwrap();
    let partial: Vec<ReplicationRow> = full.rows.iter().filter(|r| r.replication != 3).cloned().collect();
    let resumed = monte_carlo_resume(&config, Execution::default(), partial).unwrap();
    assert_eq!(resumed.rows, full.rows);
}

#[test]
fn config_errors_are_reported() {
    let mut c = baseline_config(vec![100, 100], 2);
    assert!(matches!(c.validate(), Err(Error::BadConfig(_))));
    c.t_grid = vec![100];
    c.replications = 0;
    assert!(matches!(c.validate(), Err(Error::BadConfig(_))));
    c.replications = 1;
    c.criteria.push(CriterionSpec::new(CriterionKind::Loo));
    assert!(c.validate().unwrap_err().to_string().contains("loo"));
}

#[test]
fn slope_needs_three_usable_points() {
    assert!(matches!(cross_term_slope(&baseline_config(vec![50, 100], 2)), Err(Error::DegenerateGrid(_))));
    // White-noise means make every cross term zero.
    let zero = [(100.0, 0.0), (400.0, 0.0), (1600.0, 0.0)];
    assert!(matches!(log_log_slope(&zero), Err(Error::DegenerateGrid(_))));
    let exact = [(100.0, 1.0), (400.0, 0.5), (1600.0, 0.25)];
    assert!((log_log_slope(&exact).unwrap() + 0.5).abs() < 1e-12);
}

#[test]
fn noise_scale_moves_the_cross_term_but_not_its_rate() {
    let mut config = baseline_config(vec![200, 800, 3200], 100);
    config.criteria = vec![CriterionSpec::new(CriterionKind::Bic)];
    config.reference_model = Some("ols:0+1+2".into());
    let a = monte_carlo(&config).unwrap();
    config.dgp.noise_sd = 2.0;
    let b = monte_carlo(&config).unwrap();
    let (sa, sb) = (cross_term_slope_of(&a).unwrap(), cross_term_slope_of(&b).unwrap());
    assert!((-0.7..=-0.3).contains(&sa) && (-0.7..=-0.3).contains(&sb), "{sa} {sb}");
    let scale = b.diagnostics[0].median_abs_cross_loo_eps / a.diagnostics[0].median_abs_cross_loo_eps;
    assert!((1.5..=2.5).contains(&scale), "{scale}");
}

#[test]
fn default_schedules_grow_but_vanish_relative_to_t() {
    let grid = [100usize, 400, 1600, 6400];
    let h: Vec<usize> = grid.iter().map(|&t| default_block_size(t)).collect();
    let r: Vec<usize> = grid.iter().map(|&t| default_window(t)).collect();
    assert!(h.windows(2).all(|w| w[0] < w[1]));
    assert!(r.windows(2).all(|w| w[0] < w[1]));
    for (i, &t) in grid.iter().enumerate() {
        assert!((2 * h[i] + 1) as f64 / t as f64 <= 0.1);
        assert!(r[i] as f64 / t as f64 <= 0.25);
    }
    // The recursive start depends on the model set only.
    assert_eq!(default_recursive_start(4), 14);
}

#[test]
fn block_diagnostic_on_exact_constant_coefficients() {
    let t = 200;
    let x = DMatrix::from_fn(t, 2, |i, j| if j == 0 { 1.0 } else { (i as f64 * 0.7).sin() });
    let y: Vec<f64> = (0..t).map(|i| 1.0 + 2.0 * x[(i, 1)]).collect();
    let data = Dataset::new(y, x).unwrap();
    let spec = ModelSpec::tvp(vec![0, 1], 0.1, Kernel::Epanechnikov, Side::TwoSided);
    assert!(tvp_block_diagnostic(&data, &spec, 5).unwrap() < 1e-6);
    assert_eq!(tvp_block_diagnostic(&data, &spec, 1).unwrap(), 0.0);
    assert!(matches!(tvp_block_diagnostic(&data, &ModelSpec::ols(vec![0]), 3), Err(Error::Unsupported(_))));
}
