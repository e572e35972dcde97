//! Batch execution: every requested variant on the same `A`, `M`, `b`, `x₀`.
//!
//! Solves run in parallel, one variant per task and single-threaded inside.
//! Files are written afterwards by [`write_results`] from the calling thread.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use pipecg_core::linalg::read_matrix_market;
use pipecg_core::{
    build_model_problem, run, ConvergenceHistory, LinalgError, ParseError, Preconditioner, Probe, SolveStatus,
    SolverError, SparseMatrix, VariantConfig,
};

use crate::config::{ExperimentConfig, PrecondKind, ProblemSource, RhsRule};
use crate::fetch::{default_cache_dir, FetchError, Fetcher};
use crate::output::{emit_csv, emit_plot_data, OutputError, SummaryCell, SummaryRow, SummaryTable};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("cannot read matrix {path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("problem setup: {0}")]
    Linalg(#[from] LinalgError),
    #[error("solver setup: {0}")]
    Solver(#[from] SolverError),
    #[error("writing results: {0}")]
    Output(#[from] OutputError),
}

pub struct LoadedProblem {
    pub name: String,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub x_star: Vec<f64>,
}

pub fn fetcher_for(cfg: &ExperimentConfig) -> Fetcher {
    let mut f = Fetcher::http(cfg.cache_dir.clone().unwrap_or_else(default_cache_dir)).with_offline(cfg.offline);
    if let Some(url) = &cfg.base_url {
        f = f.with_base_url(url.clone());
    }
    f
}

fn read(path: &Path) -> Result<SparseMatrix, ExperimentError> {
    read_matrix_market(path).map_err(|source| ExperimentError::Parse { path: path.to_path_buf(), source })
}

/// Builds `A`, `x*` and `b = A x*` for the configured problem.
pub fn load_problem(cfg: &ExperimentConfig, fetcher: &Fetcher) -> Result<LoadedProblem, ExperimentError> {
    let a = match &cfg.problem {
        ProblemSource::Matrix(name) => read(&fetcher.fetch_matrix(name)?)?,
        ProblemSource::Path(p) => read(p)?,
        ProblemSource::Model(m) => build_model_problem(&m.spec(cfg.seed))?.0,
    };
    let n = a.n();
    let x_star: Vec<f64> = match cfg.rhs {
        RhsRule::InvSqrtN => vec![1.0 / (n as f64).sqrt(); n],
        RhsRule::Random => {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
        }
    };
    let b = a.spmv(&x_star)?;
    Ok(LoadedProblem { name: cfg.problem_name(), a, b, x_star })
}

pub struct VariantRun {
    pub label: String,
    pub history: ConvergenceHistory,
}

pub struct ExperimentResult {
    pub problem: String,
    pub preconditioner: PrecondKind,
    pub max_iter: usize,
    pub runs: Vec<VariantRun>,
    pub row: SummaryRow,
}

impl ExperimentResult {
    pub fn breakdowns(&self) -> impl Iterator<Item = &VariantRun> {
        self.runs.iter().filter(|r| matches!(r.history.status, SolveStatus::Breakdown { .. }))
    }
}

fn preconditioner(kind: PrecondKind, a: &SparseMatrix) -> Result<Preconditioner, LinalgError> {
    match kind {
        PrecondKind::None => Ok(Preconditioner::Identity),
        PrecondKind::Jacobi => Preconditioner::jacobi(a),
    }
}

/// Runs one variant. Exposed so a single variant can be reproduced on its own.
pub fn run_variant(
    cfg: &ExperimentConfig,
    problem: &LoadedProblem,
    m: &Preconditioner,
    variant: VariantConfig,
    max_iter: usize,
) -> Result<ConvergenceHistory, SolverError> {
    let x0 = vec![0.0; problem.a.n()];
    let mut probe = Probe::new(&problem.a, m, &problem.b, Some(&problem.x_star)).with_cadence(cfg.cadence);
    let mut h = run(variant, &problem.a, m, &problem.b, &x0, max_iter, cfg.stop.rule(), &mut probe)?;
    h.problem = problem.name.clone();
    Ok(h)
}

/// One result per configured preconditioner, in config order. Breakdowns end
/// up in the history status and the summary row, not as errors.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    problem: &LoadedProblem,
) -> Result<Vec<ExperimentResult>, ExperimentError> {
    let mut precs = Vec::new();
    for &kind in &cfg.preconditioners {
        precs.push((kind, preconditioner(kind, &problem.a)?, cfg.max_iter_for(kind, problem.a.n())));
    }
    let jobs: Vec<(usize, VariantConfig)> =
        (0..precs.len()).flat_map(|i| cfg.variants.iter().map(move |&v| (i, v))).collect();
    let histories: Vec<Result<ConvergenceHistory, SolverError>> =
        jobs.par_iter().map(|&(i, v)| run_variant(cfg, problem, &precs[i].1, v, precs[i].2)).collect();

    let mut results: Vec<ExperimentResult> = precs
        .iter()
        .map(|(kind, _, max_iter)| ExperimentResult {
            problem: problem.name.clone(),
            preconditioner: *kind,
            max_iter: *max_iter,
            runs: Vec::new(),
            row: SummaryRow { problem: problem.name.clone(), preconditioner: kind.name().into(), cells: Vec::new() },
        })
        .collect();
    for (&(i, v), h) in jobs.iter().zip(histories) {
        let history = h?;
        let label = v.label();
        let res = &mut results[i];
        res.row.cells.push((label.clone(), SummaryCell::from_records(&label, &history.records)));
        res.runs.push(VariantRun { label, history });
    }
    Ok(results)
}

/// `<out>/<problem>/<preconditioner>`
pub fn result_dir(out: &Path, problem: &str, precond: &str) -> PathBuf {
    out.join(problem).join(precond)
}

/// Writes per-variant CSVs, plot data and the summary for each result.
pub fn write_results(results: &[ExperimentResult], out: &Path) -> Result<SummaryTable, ExperimentError> {
    let mut table = SummaryTable::default();
    let mut statuses = Vec::new();
    for res in results {
        let dir = result_dir(out, &res.problem, res.preconditioner.name());
        fs::create_dir_all(&dir).map_err(OutputError::from)?;
        for run in &res.runs {
            let f = fs::File::create(dir.join(format!("{}.csv", run.label))).map_err(OutputError::from)?;
            emit_csv(&run.history.records, BufWriter::new(f))?;
            statuses.push((
                res.problem.clone(),
                res.preconditioner.name().to_string(),
                run.label.clone(),
                run.history.status,
            ));
        }
        let histories: Vec<&ConvergenceHistory> = res.runs.iter().map(|r| &r.history).collect();
        let f = fs::File::create(dir.join(PLOT_FILE)).map_err(OutputError::from)?;
        emit_plot_data(&histories, BufWriter::new(f))?;
        table.push(res.row.clone());
    }
    let f = fs::File::create(out.join(SUMMARY_CSV)).map_err(OutputError::from)?;
    table.emit_csv(&statuses, BufWriter::new(f))?;
    fs::write(out.join(SUMMARY_TXT), table.emit_table()).map_err(OutputError::from)?;
    Ok(table)
}

pub const PLOT_FILE: &str = "plot.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

/// Rebuilds the summary table from the per-variant CSVs under `out`.
///
/// Rows come from `<problem>/<preconditioner>` directories, problems sorted
/// by name and unpreconditioned before Jacobi; columns follow the standard
/// variant order, then other labels sorted.
pub fn summarize_dir(out: &Path) -> Result<SummaryTable, OutputError> {
    let mut table = SummaryTable::default();
    for problem in sorted_dirs(out)? {
        let mut precs = sorted_dirs(&problem)?;
        precs.sort_by_key(|p| {
            let name = file_name(p);
            (name.parse::<PrecondKind>().ok(), name)
        });
        for prec in precs {
            let mut cells: Vec<(String, SummaryCell)> = Vec::new();
            for entry in fs::read_dir(&prec)? {
                let path = entry?.path();
                let Some(label) = path.file_stem().and_then(|s| s.to_str()) else { continue };
                if path.extension().is_none_or(|e| e != "csv") || path.file_name().is_some_and(|f| f == PLOT_FILE) {
                    continue;
                }
                let records = crate::output::parse_csv(fs::File::open(&path)?)?;
                cells.push((label.to_string(), SummaryCell::from_records(label, &records)));
            }
            if cells.is_empty() {
                continue;
            }
            cells.sort_by_key(|(l, _)| column_key(l));
            table.push(SummaryRow { problem: file_name(&problem), preconditioner: file_name(&prec), cells });
        }
    }
    Ok(table)
}

fn column_key(label: &str) -> (usize, String) {
    let pos = pipecg_core::VariantId::ALL.iter().position(|v| v.short_name() == label);
    (pos.unwrap_or(usize::MAX), label.to_string())
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn sorted_dirs(p: &Path) -> Result<Vec<PathBuf>, OutputError> {
    let mut dirs: Vec<PathBuf> =
        fs::read_dir(p)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    dirs.sort();
    Ok(dirs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;

    fn small_cfg() -> ExperimentConfig {
        let mut cfg =
            ExperimentConfig::new(ProblemSource::Model(ModelConfig { n: 12, rho: 0.9, kappa: 50.0, seed: None }));
        cfg.preconditioners = vec![PrecondKind::None, PrecondKind::Jacobi];
        cfg
    }

    #[test]
    fn rows_follow_config_order() {
        let cfg = small_cfg();
        let f = Fetcher::http("unused").with_offline(true);
        let p = load_problem(&cfg, &f).unwrap();
        assert_eq!(p.x_star, vec![1.0 / 12f64.sqrt(); 12]);
        let res = run_experiment(&cfg, &p).unwrap();
        assert_eq!(res.len(), 2);
        assert_eq!(res[1].preconditioner, PrecondKind::Jacobi);
        assert_eq!(res[0].max_iter, 120);
        let labels: Vec<&str> = res[0].runs.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["HS", "CG", "M", "PR", "GV", "PPRM", "PPR"]);
        for r in &res {
            for run in &r.runs {
                assert!(r.row.cell(&run.label).unwrap().iters.is_some(), "{}", run.label);
                assert_eq!(run.history.problem, "model_12_9_2");
            }
        }
    }

    #[test]
    fn random_rhs_depends_on_seed() {
        let mut cfg = small_cfg();
        cfg.rhs = RhsRule::Random;
        let f = Fetcher::http("unused").with_offline(true);
        let a = load_problem(&cfg, &f).unwrap();
        cfg.seed = 1;
        let b = load_problem(&cfg, &f).unwrap();
        assert_ne!(a.x_star, b.x_star);
        assert_eq!(a.b, a.a.spmv(&a.x_star).unwrap());
    }
}
