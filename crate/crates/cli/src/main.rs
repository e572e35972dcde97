use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pipecg_cli::catalog::{CATALOG, DEFAULT_BASE_URL};
use pipecg_cli::experiment::{fetcher_for, ExperimentError};
use pipecg_cli::fetch::{default_cache_dir, FetchError, Fetcher, CACHE_ENV};
use pipecg_cli::{
    exit, load_problem, run_experiment, summarize_dir, write_results, ConfigError, ExperimentConfig, Overrides,
    PrecondKind, ProblemSource, RhsRule, StopConfig,
};
use pipecg_core::costmodel::SCALING_ITERATIONS;
use pipecg_core::linalg::read_matrix_market;
use pipecg_core::{predict_scaling, ScalingScenario, VariantConfig, VariantId};

#[derive(Parser)]
#[command(name = "pipecg", version, about = "Conjugate gradient variant experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download matrices into the cache.
    Fetch(FetchArgs),
    /// Run variants on a problem and write CSVs and a summary table.
    Run(RunArgs),
    /// Rebuild the summary table from a results directory.
    Summarize(SummarizeArgs),
    /// Predict strong-scaling times from the per-iteration cost model.
    PredictScaling(ScalingArgs),
    /// Print the available variants and their flags.
    ListVariants,
}

#[derive(Args)]
struct CacheArgs {
    /// Matrix cache directory.
    #[arg(long, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
    /// Base URL of the Matrix Market tree.
    #[arg(long)]
    base_url: Option<String>,
    /// Fail instead of downloading on a cache miss.
    #[arg(long)]
    offline: bool,
}

#[derive(Args)]
struct FetchArgs {
    /// Catalogue names, e.g. nos4 494_bus.
    names: Vec<String>,
    /// Fetch every catalogued matrix.
    #[arg(long)]
    all: bool,
    /// Download again and check the content against the recorded hash.
    #[arg(long)]
    refresh: bool,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; flags below override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Catalogue name, .mtx path, `model`, `model_<n>_<rho*10>_<log10 kappa>` or `model:<n>:<rho>:<kappa>`.
    #[arg(long, short)]
    problem: Option<String>,
    /// none, jacobi, or a comma-separated list such as none,jacobi.
    #[arg(long, value_delimiter = ',')]
    precond: Option<Vec<String>>,
    /// Variant labels, e.g. HS,PR,PPR,PR-norecnu.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// stagnation[:window[:min_improvement]], error-reduction[:threshold], max-iter, fixed:<n>.
    #[arg(long)]
    stop: Option<String>,
    /// Record every n-th iterate under the fixed and max-iter rules.
    #[arg(long)]
    cadence: Option<usize>,
    /// inv-sqrt-n or random.
    #[arg(long)]
    rhs: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
    #[command(flatten)]
    cache: CacheArgs,
    /// Exit with a distinct code if any variant broke down.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Directory written by `run`.
    dir: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ScalingArgs {
    /// TOML scenario: nodes, t_mv_1, c_gr_0, c_gr_log, c_mv_0, c_mv_log, t_2mv_ratio.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Variants to predict (default: all).
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Fetch(String),
    Other(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<FetchError> for Failure {
    fn from(e: FetchError) -> Self {
        Self::Fetch(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Fetch(f) => f.into(),
            ExperimentError::Parse { .. } | ExperimentError::Linalg(_) | ExperimentError::Solver(_) => {
                Self::Config(e.to_string())
            }
            ExperimentError::Output(_) => Self::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Other(e.to_string())
    }
}

fn parse_all<T: std::str::FromStr>(items: Option<Vec<String>>) -> Result<Option<Vec<T>>, Failure>
where
    T::Err: std::fmt::Display,
{
    items
        .map(|v| v.iter().map(|s| s.trim().parse::<T>().map_err(|e| Failure::Config(e.to_string()))).collect())
        .transpose()
}

fn fetcher(cache: &CacheArgs) -> Fetcher {
    let mut f = Fetcher::http(cache.cache_dir.clone().unwrap_or_else(default_cache_dir)).with_offline(cache.offline);
    if let Some(url) = &cache.base_url {
        f = f.with_base_url(url.clone());
    }
    f
}

fn cmd_fetch(args: FetchArgs) -> Result<i32, Failure> {
    let names: Vec<String> =
        if args.all { CATALOG.iter().map(|e| e.name.to_string()).collect() } else { args.names.clone() };
    if names.is_empty() {
        return Err(Failure::Config("no matrix names given (or use --all)".into()));
    }
    let f = fetcher(&args.cache);
    let mut failed = Vec::new();
    for name in &names {
        let got = if args.refresh { f.refetch_matrix(name) } else { f.fetch_matrix(name) };
        match got.map_err(Failure::from).and_then(|p| {
            let a = read_matrix_market(&p).map_err(|e| Failure::Fetch(e.to_string()))?;
            Ok((p, a))
        }) {
            Ok((p, a)) => println!("{name}\tn={}\tnnz={}\t{}", a.n(), a.nnz(), p.display()),
            Err(Failure::Fetch(msg) | Failure::Config(msg) | Failure::Other(msg)) => {
                eprintln!("{name}: {msg}");
                failed.push(name.clone());
            }
        }
    }
    if failed.is_empty() {
        Ok(exit::OK)
    } else {
        Err(Failure::Fetch(format!("{} of {} matrices failed: {}", failed.len(), names.len(), failed.join(" "))))
    }
}

fn cmd_run(args: RunArgs) -> Result<i32, Failure> {
    let base = args.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let overrides = Overrides {
        problem: args.problem.as_deref().map(str::parse::<ProblemSource>).transpose()?,
        preconditioners: parse_all::<PrecondKind>(args.precond)?,
        variants: parse_all::<VariantConfig>(args.variants)?,
        max_iter: args.max_iter,
        stop: args.stop.as_deref().map(str::parse::<StopConfig>).transpose()?,
        cadence: args.cadence,
        rhs: args.rhs.as_deref().map(str::parse::<RhsRule>).transpose()?,
        seed: args.seed,
        output_dir: args.output_dir,
        cache_dir: args.cache.cache_dir,
        base_url: args.cache.base_url,
        offline: args.cache.offline,
    };
    let cfg = overrides.resolve(base)?;
    let problem = load_problem(&cfg, &fetcher_for(&cfg))?;
    let results = run_experiment(&cfg, &problem)?;
    let table = write_results(&results, &cfg.output_dir)?;
    print!("{}", table.emit_table());
    let mut broke = false;
    for res in &results {
        for run in res.breakdowns() {
            broke = true;
            eprintln!("{} [{}] {}: {}", res.problem, res.preconditioner, run.label, run.history.status);
        }
    }
    Ok(if broke && args.strict { exit::BREAKDOWN } else { exit::OK })
}

fn cmd_summarize(args: SummarizeArgs) -> Result<i32, Failure> {
    if !args.dir.is_dir() {
        return Err(Failure::Config(format!("{} is not a directory", args.dir.display())));
    }
    let table = summarize_dir(&args.dir).map_err(|e| Failure::Other(e.to_string()))?;
    match args.format {
        Format::Text => print!("{}", table.emit_table()),
        Format::Csv => table.emit_csv(&[], io::stdout().lock()).map_err(|e| Failure::Other(e.to_string()))?,
    }
    Ok(exit::OK)
}

fn default_scenario() -> ScalingScenario {
    // latency-bound reductions that grow with log2 of the node count
    ScalingScenario {
        nodes: vec![1, 2, 4, 8, 16, 32, 64, 128],
        t_mv_1: 1e-2,
        c_gr_0: 2e-5,
        c_gr_log: 1e-5,
        c_mv_0: 1e-5,
        c_mv_log: 0.0,
        t_2mv_ratio: 1.5,
    }
}

fn cmd_scaling(args: ScalingArgs) -> Result<i32, Failure> {
    let scenario = match &args.scenario {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            toml::from_str::<ScalingScenario>(&text).map_err(|e| Failure::Config(e.to_string()))?
        }
        None => default_scenario(),
    };
    let variants = parse_all::<VariantId>(args.variants)?.unwrap_or_else(|| VariantId::ALL.to_vec());
    let mut preds = Vec::new();
    for v in variants {
        preds.push(predict_scaling(v, &scenario).map_err(|e| Failure::Config(e.to_string()))?);
    }
    let sink: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| Failure::Other(e.to_string());
    w.write_record(["variant", "nodes", "time", "hs_time", "speedup_over_hs"]).map_err(csv_err)?;
    for p in &preds {
        for pt in &p.points {
            w.serialize((p.variant.short_name(), pt.nodes, pt.time, pt.hs_time, pt.hs_time / pt.time))
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    drop(w);
    for p in &preds {
        match p.crossover_nodes {
            Some(n) => eprintln!("{}: faster than HS from {n} nodes ({SCALING_ITERATIONS} iterations)", p.variant),
            None if p.variant == VariantId::Hs => {}
            None => eprintln!("{}: never faster than HS on these node counts", p.variant),
        }
    }
    Ok(exit::OK)
}

fn cmd_list_variants() -> Result<i32, Failure> {
    println!("{:<5} {:<14} {:>7}  description", "name", "long name", "vectors");
    for id in VariantId::ALL {
        let (base, extra) = id.memory_vectors();
        println!("{:<5} {:<14} {:>4}+{:<2}  {}", id.short_name(), id.long_name(), base, extra, id.description());
    }
    println!();
    println!("label suffixes (e.g. PR-norecnu):");
    println!("  -norecnu   keep the predicted nu instead of recomputing it (PR, PPR)");
    println!("  -norecw    keep the recursive w instead of recomputing A r (PPR)");
    println!("  -nuexp     expanded predictor expression for nu");
    println!("  -nusimp    simplified predictor expression for nu");
    println!("  -numeur    Meurant's predictor expression for nu");
    println!("  -muunsimp  unsimplified expression for mu (CG, GV)");
    println!();
    println!("matrices are fetched from {DEFAULT_BASE_URL} unless --base-url is given");
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Fetch(a) => cmd_fetch(a),
        Command::Run(a) => cmd_run(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::PredictScaling(a) => cmd_scaling(a),
        Command::ListVariants => cmd_list_variants(),
    };
    let code = match res {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            exit::CONFIG
        }
        Err(Failure::Fetch(msg)) => {
            eprintln!("error: {msg}");
            exit::FETCH
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            exit::FAILURE
        }
    };
    ExitCode::from(code as u8)
}
