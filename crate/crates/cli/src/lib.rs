//! Experiment runner for the CG variants: matrix fetching and caching,
//! configuration, batch runs and CSV/table output.

pub mod catalog;
pub mod config;
pub mod experiment;
pub mod fetch;
pub mod output;

pub use config::{ConfigError, ExperimentConfig, Overrides, PrecondKind, ProblemSource, RhsRule, StopConfig};
pub use experiment::{load_problem, run_experiment, summarize_dir, write_results, ExperimentError, ExperimentResult};
pub use fetch::{FetchError, Fetcher, Transport, TransportError};
pub use output::{emit_csv, emit_plot_data, parse_csv, Flag, SummaryCell, SummaryRow, SummaryTable};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const FETCH: i32 = 3;
    /// A variant broke down and `--strict` was given.
    pub const BREAKDOWN: i32 = 4;
}
