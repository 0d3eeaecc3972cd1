use std::path::{Path, PathBuf};

use modsel_core::dgp::{candidate_set, generate};
use modsel_core::harness::{cross_term_slope_of, monte_carlo_resume, run_selection, Execution, MCRun};
use modsel_core::{Dataset, ModelSpec};
use nalgebra::DMatrix;

use crate::config::{self, Config, DataSource};
use crate::exit::Failure;
use crate::output::{self, real, Outputs, RunManifest};

pub struct RunArgs {
    pub command: &'static str,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub resume: bool,
}

struct Context {
    config: Config,
    hash: String,
    config_dir: PathBuf,
    outputs: Outputs,
    started: f64,
}

fn prepare(args: &RunArgs) -> Result<Context, Failure> {
    let loaded = config::load(&args.config)?;
    let dir = match (&args.out, &loaded.config.output) {
        (Some(out), _) => out.clone(),
        (None, Some(o)) => loaded.dir.join(&o.dir),
        (None, None) => return Err(Failure::config("no output directory: pass --out or set `output.dir`")),
    };
    Ok(Context {
        config: loaded.config,
        hash: loaded.hash,
        config_dir: loaded.dir,
        outputs: Outputs::new(dir),
        started: output::unix_seconds(),
    })
}

fn finish(ctx: Context, args: &RunArgs, base_seed: u64, compute_seconds: Vec<(usize, f64)>) -> Result<(), Failure> {
    let mut outputs = ctx.outputs.written.clone();
    outputs.push("manifest.json".into());
    RunManifest {
        tool: "modsel",
        version: env!("CARGO_PKG_VERSION"),
        command: args.command.into(),
        config_sha256: ctx.hash,
        base_seed,
        threads: args.threads,
        started_unix: ctx.started,
        finished_unix: output::unix_seconds(),
        outputs,
        compute_seconds,
    }
    .write(&ctx.outputs.dir)
}

/// Reads a dataset: header row, one response column, optional `mu_true` and
/// `eps_true` columns, every other column a regressor in file order.
pub fn read_dataset(path: &Path, source: &DataSource) -> Result<Dataset, Failure> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| Failure::data(e.to_string()))?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let response = find(&source.response)
        .ok_or_else(|| Failure::data(format!("response column `{}` not found", source.response)))?;
    let (mu_col, eps_col) = (find("mu_true"), find("eps_true"));
    if mu_col.is_some() != eps_col.is_some() {
        return Err(Failure::data("columns `mu_true` and `eps_true` must appear together"));
    }
    let regressors: Vec<usize> =
        (0..header.len()).filter(|&k| k != response && Some(k) != mu_col && Some(k) != eps_col).collect();

    let (mut y, mut mu, mut eps, mut cells) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (n, record) in reader.records().enumerate() {
        let rec = record.map_err(|e| Failure::data(format!("record {}: {e}", n + 1)))?;
        let value = |k: usize| {
            rec[k].trim().parse::<f64>().map_err(|_| {
                Failure::data(format!("record {}, column `{}`: `{}` is not a number", n + 1, &header[k], &rec[k]))
            })
        };
        y.push(value(response)?);
        if let (Some(m), Some(e)) = (mu_col, eps_col) {
            mu.push(value(m)?);
            eps.push(value(e)?);
        }
        if source.intercept {
            cells.push(1.0);
        }
        for &k in &regressors {
            cells.push(value(k)?);
        }
    }
    let cols = regressors.len() + usize::from(source.intercept);
    if y.is_empty() || cols == 0 {
        return Err(Failure::data(format!("{} has no observations or no regressors", path.display())));
    }
    let x = DMatrix::from_row_slice(y.len(), cols, &cells);
    let data = Dataset::new(y, x)?;
    Ok(if mu_col.is_some() { data.with_truth(mu, eps)? } else { data })
}

const SCORE_HEADER: [&str; 8] = ["model_id", "criterion", "loss_part", "penalty_part", "total", "L_full", "L_loo", "ratio"];

pub fn select(args: &RunArgs) -> Result<(), Failure> {
    let mut ctx = prepare(args)?;
    let cfg = &ctx.config;
    let (data, seed) = match (&cfg.dgp, &cfg.data) {
        (Some(dgp), None) => {
            let spec = match args.seed {
                Some(s) => dgp.with_seed(s),
                None => dgp.clone(),
            };
            (generate(&spec)?, spec.seed)
        }
        (None, Some(source)) => (read_dataset(&ctx.config_dir.join(&source.csv), source)?, args.seed.unwrap_or(0)),
        _ => return Err(Failure::config("`select` needs exactly one of the sections `dgp` and `data`")),
    };
    if cfg.criteria.is_empty() {
        return Err(Failure::config("`criteria` must not be empty"));
    }
    let candidates = candidate_set(&cfg.candidates, &data)?;
    let pmax = candidates.iter().map(ModelSpec::pdim).max().unwrap_or(0);

    let mut scores = Vec::new();
    let mut selections = Vec::new();
    for spec in &cfg.criteria {
        let rc = spec.resolve(data.len(), pmax)?;
        let report = run_selection(&data, &candidates, &rc)?;
        let best = report.imse.iter().map(|r| r.l_full).fold(f64::INFINITY, f64::min);
        for s in &report.scores {
            let imse = report.imse.iter().find(|r| r.model_id == s.model_id);
            scores.push(vec![
                s.model_id.clone(),
                s.criterion.to_string(),
                real(s.loss_part),
                real(s.penalty_part),
                real(s.total),
                imse.map_or_else(String::new, |r| real(r.l_full)),
                imse.and_then(|r| r.l_loo).map_or_else(String::new, real),
                imse.map_or_else(String::new, |r| real(r.l_full / best)),
            ]);
        }
        let excluded: Vec<&str> = report.excluded.iter().map(|(id, _)| id.as_str()).collect();
        selections.push(vec![
            report.label.clone(),
            report.criterion.to_string(),
            report.selected.clone(),
            report.ratio.map_or_else(String::new, |r| real(r.value)),
            excluded.join(";"),
        ]);
    }
    ctx.outputs.csv("scores.csv", &SCORE_HEADER, scores)?;
    ctx.outputs.csv("selection.csv", &["label", "criterion", "selected", "ratio", "excluded"], selections)?;
    finish(ctx, args, seed, Vec::new())
}

fn run_experiment(ctx: &Context, args: &RunArgs) -> Result<(MCRun, u64), Failure> {
    let exp = ctx.config.experiment(args.seed)?;
    let previous = match ctx.outputs.dir.join("replications.csv") {
        p if args.resume && p.exists() => output::read_replications(&p)?,
        _ => Vec::new(),
    };
    let run = monte_carlo_resume(&exp, Execution::with_threads(args.threads), previous)?;
    Ok((run, exp.base_seed))
}

fn compute_seconds(run: &MCRun) -> Vec<(usize, f64)> {
    run.summary.diagnostics.iter().filter_map(|d| d.compute_seconds.map(|s| (d.t, s))).collect()
}

fn failed_cells(run: &MCRun) -> Result<(), Failure> {
    let failed: usize = run.summary.cells.iter().map(|c| c.failed).sum();
    match failed {
        0 => Ok(()),
        n => Err(Failure::numerical(format!("{n} replication cells failed; see the `error` column"))),
    }
}

pub fn simulate(args: &RunArgs) -> Result<(), Failure> {
    let mut ctx = prepare(args)?;
    let (run, seed) = run_experiment(&ctx, args)?;
    let outputs = &mut ctx.outputs;
    outputs.csv("replications.csv", &output::REPLICATION_HEADER, run.rows.iter().map(output::replication_record))?;

    let diag = |t: usize| run.summary.diagnostics.iter().find(|d| d.t == t).expect("diagnostics per T");
    let summary = run.summary.cells.iter().map(|c| {
        let d = diag(c.t);
        vec![
            c.t.to_string(),
            c.label.clone(),
            c.criterion.clone(),
            c.replications.to_string(),
            c.failed.to_string(),
            real(c.q25),
            real(c.q50),
            real(c.q75),
            real(c.q90),
            real(c.mean),
            real(c.mean_excluded),
            real(d.median_abs_cross_mu_eps),
            real(d.median_abs_cross_loo_eps),
            real(d.median_lemma1),
        ]
    });
    let header = [
        "T",
        "label",
        "criterion",
        "replications",
        "failed",
        "q25",
        "q50",
        "q75",
        "q90",
        "mean",
        "mean_excluded",
        "median_abs_cross_mu_eps",
        "median_abs_cross_loo_eps",
        "median_lemma1",
    ];
    outputs.csv("summary.csv", &header, summary)?;
    let freq = run.summary.cells.iter().flat_map(|c| {
        c.frequencies.iter().map(|(id, n)| vec![c.t.to_string(), c.label.clone(), id.clone(), n.to_string()])
    });
    outputs.csv("frequencies.csv", &["T", "label", "model_id", "count"], freq.collect::<Vec<_>>())?;
    let secs = compute_seconds(&run);
    finish(ctx, args, seed, secs)?;
    failed_cells(&run)
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn convergence(args: &RunArgs) -> Result<(), Failure> {
    let mut ctx = prepare(args)?;
    let (run, seed) = run_experiment(&ctx, args)?;
    let slope = match run.summary.diagnostics.len() {
        n if n >= 3 => cross_term_slope_of(&run.summary).map_or_else(
            |e| {
                log::warn!("cross-term slope: {e}");
                String::new()
            },
            real,
        ),
        _ => String::new(),
    };
    let outputs = &mut ctx.outputs;
    outputs.csv("replications.csv", &output::REPLICATION_HEADER, run.rows.iter().map(output::replication_record))?;
    let table = run.summary.cells.iter().map(|c| {
        let d = run.summary.diagnostics.iter().find(|d| d.t == c.t).expect("diagnostics per T");
        vec![c.t.to_string(), c.label.clone(), real(c.q50), real(c.q90), real(d.median_abs_cross_loo_eps), slope.clone()]
    });
    let header = ["T", "criterion", "median_ratio", "q90_ratio", "median_cross_term", "slope"];
    outputs.csv("convergence.csv", &header, table.collect::<Vec<_>>())?;
    for spec in &ctx.config.criteria {
        let label = spec.label();
        let path = run.summary.median_path(&label).into_iter().map(|(t, m)| vec![t.to_string(), real(m)]);
        outputs.csv(&format!("plot_{}.csv", file_stem(&label)), &["T", "median_ratio"], path.collect::<Vec<_>>())?;
    }
    let secs = compute_seconds(&run);
    finish(ctx, args, seed, secs)?;
    failed_cells(&run)
}
