//! Time per iteration from communication and matrix-product costs, and a
//! strong-scaling prediction built on it.
//!
//! Vector updates and local inner-product work are ignored, and communication
//! time does not depend on message size. Each variant's time is the critical
//! path of its global reductions (`c_gr`) and matrix products
//! (`t_mv` computation plus `c_mv` communication):
//!
//! | variant         | time                           |
//! |-----------------|--------------------------------|
//! | HS              | `2 c_gr + t_mv + c_mv`         |
//! | CG, M, PR       | `c_gr + t_mv + c_mv`           |
//! | GV              | `max(c_gr, t_mv + c_mv)`       |
//! | PPRM, PPR       | `max(c_gr, t_2mv + c_mv)`      |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::variants::VariantId;

/// Iterations timed per node count.
pub const SCALING_ITERATIONS: usize = 1500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("cost parameter {name} = {value} must be finite and non-negative")]
    Negative { name: &'static str, value: f64 },
    #[error("t_2mv = {t_2mv} must lie in [t_mv, 2 t_mv] = [{t_mv}, {}]", 2.0 * t_mv)]
    FusedOutOfRange { t_mv: f64, t_2mv: f64 },
    #[error("scaling scenario has no node counts")]
    EmptyScenario,
    #[error("node counts must be positive and strictly increasing")]
    NodeOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// global reduction
    pub c_gr: f64,
    /// matrix-vector product computation
    pub t_mv: f64,
    /// matrix-vector product communication
    pub c_mv: f64,
    /// fused product with two vectors, computation
    pub t_2mv: f64,
}

impl CostParams {
    pub fn validate(&self) -> Result<(), CostError> {
        for (name, value) in [("c_gr", self.c_gr), ("t_mv", self.t_mv), ("c_mv", self.c_mv), ("t_2mv", self.t_2mv)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(CostError::Negative { name, value });
            }
        }
        // tolerate rounding in configured ratios such as 1.5 * t_mv
        let slack = 1e-12 * self.t_mv;
        if self.t_2mv < self.t_mv - slack || self.t_2mv > 2.0 * self.t_mv + slack {
            return Err(CostError::FusedOutOfRange { t_mv: self.t_mv, t_2mv: self.t_2mv });
        }
        Ok(())
    }
}

pub fn iteration_time(variant: VariantId, p: &CostParams) -> f64 {
    match variant {
        VariantId::Hs => 2.0 * p.c_gr + p.t_mv + p.c_mv,
        VariantId::CgCg | VariantId::M | VariantId::Pr => p.c_gr + p.t_mv + p.c_mv,
        VariantId::Gv => p.c_gr.max(p.t_mv + p.c_mv),
        VariantId::PipePrM | VariantId::PipePr => p.c_gr.max(p.t_2mv + p.c_mv),
    }
}

/// Node-count dependence of the cost parameters:
///
/// ```text
/// t_mv(N)  = t_mv_1 / N
/// c_gr(N)  = c_gr_0 + c_gr_log · log2(N)
/// c_mv(N)  = c_mv_0 + c_mv_log · log2(N)
/// t_2mv(N) = t_2mv_ratio · t_mv(N)
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingScenario {
    pub nodes: Vec<usize>,
    pub t_mv_1: f64,
    #[serde(default)]
    pub c_gr_0: f64,
    #[serde(default)]
    pub c_gr_log: f64,
    #[serde(default)]
    pub c_mv_0: f64,
    #[serde(default)]
    pub c_mv_log: f64,
    #[serde(default = "default_ratio")]
    pub t_2mv_ratio: f64,
}

fn default_ratio() -> f64 {
    1.5
}

impl ScalingScenario {
    pub fn validate(&self) -> Result<(), CostError> {
        if self.nodes.is_empty() {
            return Err(CostError::EmptyScenario);
        }
        if self.nodes[0] == 0 || self.nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CostError::NodeOrder);
        }
        for &n in &self.nodes {
            self.params(n).validate()?;
        }
        Ok(())
    }

    pub fn params(&self, nodes: usize) -> CostParams {
        let lg = (nodes as f64).log2();
        let t_mv = self.t_mv_1 / nodes as f64;
        CostParams {
            c_gr: self.c_gr_0 + self.c_gr_log * lg,
            t_mv,
            c_mv: self.c_mv_0 + self.c_mv_log * lg,
            t_2mv: self.t_2mv_ratio * t_mv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub nodes: usize,
    /// seconds for [`SCALING_ITERATIONS`] iterations
    pub time: f64,
    pub hs_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPrediction {
    pub variant: VariantId,
    pub points: Vec<ScalingPoint>,
    /// First node count at which `variant` is strictly faster than HS.
    pub crossover_nodes: Option<usize>,
}

pub fn predict_scaling(variant: VariantId, scenario: &ScalingScenario) -> Result<ScalingPrediction, CostError> {
    scenario.validate()?;
    let iters = SCALING_ITERATIONS as f64;
    let points: Vec<ScalingPoint> = scenario
        .nodes
        .iter()
        .map(|&nodes| {
            let p = scenario.params(nodes);
            ScalingPoint {
                nodes,
                time: iters * iteration_time(variant, &p),
                hs_time: iters * iteration_time(VariantId::Hs, &p),
            }
        })
        .collect();
    let crossover_nodes = points.iter().find(|pt| pt.time < pt.hs_time).map(|pt| pt.nodes);
    Ok(ScalingPrediction { variant, points, crossover_nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_costs() {
        let p = CostParams { c_gr: 1.0, t_mv: 1.0, c_mv: 0.0, t_2mv: 1.5 };
        assert_eq!(iteration_time(VariantId::Hs, &p), 3.0);
        assert_eq!(iteration_time(VariantId::Pr, &p), 2.0);
        assert_eq!(iteration_time(VariantId::Gv, &p), 1.0);
        assert_eq!(iteration_time(VariantId::PipePr, &p), 1.5);
    }

    #[test]
    fn zero_costs() {
        let p = CostParams { c_gr: 0.0, t_mv: 0.0, c_mv: 0.0, t_2mv: 0.0 };
        for id in VariantId::ALL {
            assert_eq!(iteration_time(id, &p), 0.0);
        }
        let q = CostParams { c_gr: 0.0, t_mv: 2.0, c_mv: 0.5, t_2mv: 3.0 };
        assert_eq!(iteration_time(VariantId::Hs, &q), iteration_time(VariantId::Pr, &q));
        assert_eq!(iteration_time(VariantId::Gv, &q), 2.5);
        assert_eq!(iteration_time(VariantId::PipePr, &q), 3.5);
    }

    #[test]
    fn params_are_validated() {
        let ok = CostParams { c_gr: 1.0, t_mv: 1.0, c_mv: 0.0, t_2mv: 1.5 };
        assert!(ok.validate().is_ok());
        assert!(matches!(CostParams { c_gr: -1.0, ..ok }.validate(), Err(CostError::Negative { name: "c_gr", .. })));
        assert!(matches!(CostParams { t_2mv: 0.5, ..ok }.validate(), Err(CostError::FusedOutOfRange { .. })));
        assert!(matches!(CostParams { t_2mv: 2.5, ..ok }.validate(), Err(CostError::FusedOutOfRange { .. })));
    }

    #[test]
    fn scenario_errors() {
        let s = ScalingScenario {
            nodes: vec![],
            t_mv_1: 1.0,
            c_gr_0: 0.1,
            c_gr_log: 0.0,
            c_mv_0: 0.0,
            c_mv_log: 0.0,
            t_2mv_ratio: 1.5,
        };
        assert_eq!(predict_scaling(VariantId::PipePr, &s), Err(CostError::EmptyScenario));
        let s = ScalingScenario { nodes: vec![2, 2], ..s };
        assert_eq!(predict_scaling(VariantId::PipePr, &s), Err(CostError::NodeOrder));
    }

    #[test]
    fn pipelined_variant_overtakes_hs() {
        let s = ScalingScenario {
            nodes: vec![1, 2, 4, 8, 16, 32, 64],
            t_mv_1: 1e-2,
            c_gr_0: 1e-5,
            c_gr_log: 2e-5,
            c_mv_0: 0.0,
            c_mv_log: 0.0,
            t_2mv_ratio: 1.8,
        };
        let pred = predict_scaling(VariantId::PipePr, &s).unwrap();
        assert!(pred.points[0].time > pred.points[0].hs_time);
        let c = pred.crossover_nodes.unwrap();
        assert!(c > 1);
        for pt in pred.points.iter().filter(|pt| pt.nodes >= c) {
            assert!(pt.time < pt.hs_time);
        }
        assert_eq!(pred.points[3].time, 1500.0 * iteration_time(VariantId::PipePr, &s.params(8)));
    }
}
