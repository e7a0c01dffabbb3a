//! End-to-end construction for one configuration.

use std::sync::Arc;

use renorm::glue::PolyhedralFinal;
use renorm::oracle::{
    default_probes, numeric_tower, BasisConstants, EuclideanGauge, InfconvSettings, NumericTower, Oracle,
    PolytopeGauge,
};
use renorm::planner::{plan_and_build, plan_lambda, ParameterPlan};
use renorm::scalar::format_rational;
use renorm::{ExactTower, Glue, Rational, Scalar};
use serde_json::{json, Value};

use crate::config::{Mode, RunConfig, Seed};
use crate::CliError;

/// Relative accuracy required of the numeric tower's level relations.
pub const NUMERIC_BUDGET: f64 = 1e-7;

/// The exact side of a run: tower, parameters, and (outside oracle mode) the
/// glued family.
#[derive(Debug, Clone)]
pub struct ExactRun {
    pub tower: ExactTower,
    pub plan: ParameterPlan,
    pub glue: Option<Glue>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: RunConfig,
    pub epsilon: Vec<Rational>,
    pub levels: usize,
    pub lambda: Vec<Rational>,
    pub exact: Option<ExactRun>,
    pub numeric: Option<NumericTower>,
}

impl Pipeline {
    pub fn build(config: &RunConfig) -> Result<Self, CliError> {
        config.validate()?;
        let epsilon = config.epsilon()?;
        let levels = config.levels();
        let seed = config.seed()?;
        let (lambda, exact) = match &seed {
            Seed::Polytope(b0) => {
                let (tower, plan) = plan_and_build(b0, &epsilon, levels)?;
                let glue = match config.mode {
                    Mode::Smooth => Some(Glue::smooth(&tower, &plan)?),
                    Mode::Polyhedral => Some(Glue::polyhedral(&tower, &plan)?),
                    Mode::Oracle => None,
                };
                (plan.lambda.clone(), Some(ExactRun { tower, plan, glue }))
            }
            Seed::Euclidean => (plan_lambda(&epsilon, levels)?, None),
        };
        let numeric = if config.mode == Mode::Oracle {
            let lf: Vec<f64> = lambda.iter().map(|l| l.to_f64_lossy()).collect();
            let probes = default_probes(config.dimension);
            let (oracle, constants): (Oracle, BasisConstants) = match &exact {
                Some(run) => (
                    Arc::new(PolytopeGauge::from_body(run.tower.body(0))),
                    BasisConstants::Given((0..levels).map(|n| run.tower.basis_constant(n).to_f64_lossy()).collect()),
                ),
                None => (Arc::new(EuclideanGauge::unit(config.dimension)), BasisConstants::Estimate),
            };
            let t = numeric_tower(oracle, &lf, levels, &constants, &probes, NUMERIC_BUDGET, InfconvSettings::default())
                .map_err(|e| CliError::Run(format!("numeric tower: {e}")))?;
            Some(t)
        } else {
            None
        };
        Ok(Self { config: config.clone(), epsilon, levels, lambda, exact, numeric })
    }

    pub fn dim(&self) -> usize {
        self.config.dimension
    }

    pub fn glue(&self) -> Option<&Glue> {
        self.exact.as_ref().and_then(|r| r.glue.as_ref())
    }

    /// Exact final body; only in polyhedral mode.
    pub fn polyhedral_final(&self) -> Result<Option<PolyhedralFinal>, CliError> {
        match self.glue() {
            Some(g) if self.config.mode == Mode::Polyhedral => Ok(Some(g.polyhedral_final()?)),
            _ => Ok(None),
        }
    }

    /// Plan echo used by `plan` and at the head of every report.
    pub fn plan_document(&self) -> Value {
        let fmt = |v: &[Rational]| v.iter().map(format_rational).collect::<Vec<_>>();
        let parameters = match &self.exact {
            Some(run) => serde_json::to_value(run.plan.to_document()).expect("plan serializes"),
            None => {
                let gamma = self
                    .numeric
                    .as_ref()
                    .map(|t| t.gammas[1..].iter().map(|g| format!("{g:.17e}")).collect::<Vec<_>>())
                    .unwrap_or_default();
                json!({
                    "scheme": "half-log-split",
                    "epsilon": fmt(&self.epsilon[..=self.levels]),
                    "lambda": fmt(&self.lambda),
                    "gamma_estimate": gamma,
                })
            }
        };
        json!({
            "dimension": self.config.dimension,
            "levels": self.levels,
            "mode": self.config.mode.name(),
            "random_seed": self.config.random_seed,
            "seed_norm": self.config.seed_norm,
            "parameters": parameters,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(mode: &str) -> RunConfig {
        let text = format!("dimension = 2\nseed_norm = \"ellinf\"\nepsilon = [\"1/2\", \"1/4\", \"1/8\"]\nmode = \"{mode}\"\n");
        RunConfig::parse(&text, false).unwrap()
    }

    #[test]
    fn builds_every_mode_on_the_fixture() {
        for mode in ["smooth", "polyhedral", "oracle"] {
            let p = Pipeline::build(&fixture(mode)).unwrap();
            assert_eq!(p.levels, 2);
            assert_eq!(p.exact.as_ref().unwrap().tower.levels(), 2);
            assert_eq!(p.glue().is_some(), mode != "oracle");
            assert_eq!(p.numeric.is_some(), mode == "oracle");
        }
    }

    #[test]
    fn euclidean_seed_uses_estimated_constants() {
        let text = "dimension = 2\nseed_norm = \"ell2\"\nepsilon = [\"1/2\", \"1/4\"]\nmode = \"oracle\"\n";
        let p = Pipeline::build(&RunConfig::parse(text, false).unwrap()).unwrap();
        let t = p.numeric.unwrap();
        assert!((t.basis_constants[0] - 1.0).abs() < 1e-12);
        assert!(p.exact.is_none());
    }
}
