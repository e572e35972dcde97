//! Conjugate gradient variants (standard, communication-hiding and pipelined
//! predict-and-recompute) with instrumentation for their finite precision
//! behavior, plus a simple communication cost model.
//!
//! ```
//! use pipecg_core::{build_model_problem, run, ModelProblemSpec, Preconditioner, Probe, StopRule, VariantConfig, VariantId};
//!
//! let spec = ModelProblemSpec { n: 48, rho: 0.8, kappa: 1e3, seed: 0 };
//! let (a, _) = build_model_problem(&spec).unwrap();
//! let x_star = vec![1.0 / (48f64).sqrt(); 48];
//! let b = a.spmv(&x_star).unwrap();
//! let m = Preconditioner::Identity;
//! let mut probe = Probe::new(&a, &m, &b, Some(&x_star));
//! let cfg = VariantConfig::new(VariantId::PipePr);
//! let h = run(cfg, &a, &m, &b, &[0.0; 48], 200, StopRule::ErrorReduction(1e-8), &mut probe).unwrap();
//! assert!(h.last().unwrap().rel_err_a_norm.unwrap() < 1e-8);
//! ```

pub mod costmodel;
pub mod diagnostics;
pub mod linalg;
pub mod variants;

pub use costmodel::{iteration_time, predict_scaling, CostParams, ScalingScenario};
pub use diagnostics::{probe, summarize, ConvergenceHistory, IterationRecord, Probe, Summary};
pub use linalg::{
    build_model_problem, parse_matrix_market, write_matrix_market, LinalgError, LinearOperator, ModelProblemSpec,
    ParseError, Preconditioner, SparseMatrix,
};
pub use variants::{
    initialize, run, step, BreakdownReason, MuExpression, NuExpression, SolveStatus, SolverError, SolverState,
    StopCriterion, StopRule, VariantConfig, VariantId,
};
