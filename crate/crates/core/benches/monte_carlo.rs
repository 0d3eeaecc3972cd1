use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use modsel_core::dgp::{generate, CandidateKind, DgpSpec};
use modsel_core::estimators::{fit_ols, loo_residuals_fast, loo_residuals_refit};
use modsel_core::harness::{monte_carlo_with, CriterionKind, CriterionSpec, Execution, ExperimentConfig};
use modsel_core::ModelSpec;

fn config() -> ExperimentConfig {
    ExperimentConfig {
        dgp: DgpSpec::baseline(100, 0),
        t_grid: vec![100, 400],
        replications: 32,
        candidates: CandidateKind::SubsetLattice { pmax: 3 },
        criteria: [CriterionKind::Loo, CriterionKind::Hblock, CriterionKind::Bic, CriterionKind::Recursive]
            .into_iter()
            .map(CriterionSpec::new)
            .collect(),
        base_seed: 1,
        reference_model: None,
    }
}

fn execution_modes(c: &mut Criterion) {
    let config = config();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| monte_carlo_with(black_box(&config), Execution::Sequential)));
    group.bench_function("parallel", |b| {
        b.iter(|| monte_carlo_with(black_box(&config), Execution::Parallel { threads: None }))
    });
    group.finish();
}

fn leave_one_out(c: &mut Criterion) {
    let data = generate(&DgpSpec::baseline(400, 3)).unwrap();
    let spec = ModelSpec::ols(vec![0, 1, 2, 3]);
    let mut group = c.benchmark_group("loo_t400");
    group.bench_function("leverage", |b| b.iter(|| loo_residuals_fast(&fit_ols(black_box(&data), &spec).unwrap())));
    group.bench_function("refit", |b| b.iter(|| loo_residuals_refit(black_box(&data), &spec)));
    group.finish();
}

criterion_group!(benches, execution_modes, leave_one_out);
criterion_main!(benches);
