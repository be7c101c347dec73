//! One snapshot end to end: joint moments, activations, symmetry report.

use serde::Serialize;

use crate::dynamics::{inverse_dynamics, GeneralizedForces};
use crate::error::Result;
use crate::model::Side;
use crate::model::{attach_crutches, CrutchConfig, Model};
use crate::redundancy::{solve_static_optimization, ActivationSolution, SolverParams};
use crate::report::{symmetry_report, RiskThresholds, SolutionRecord, SymmetryReport};
use crate::scenarios::{build_snapshot, Case, ScenarioConfig, ScenarioSnapshot};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRun {
    pub snapshot: ScenarioSnapshot,
    pub tau: GeneralizedForces,
    pub solution: ActivationSolution,
    pub report: SymmetryReport,
}

impl CaseRun {
    pub fn solution_record(&self, model: &Model) -> SolutionRecord {
        SolutionRecord::new(
            model,
            self.snapshot.config.case,
            self.snapshot.config.phase,
            &self.tau,
            &self.solution,
        )
    }
}

/// Crutch configuration a case needs: none, one in the healthy hand, or two.
pub fn crutches_for(case: Case, injured_side: Side) -> CrutchConfig {
    match case {
        Case::Normal => CrutchConfig::none(),
        Case::SingleCrutch => CrutchConfig::single(injured_side),
        Case::DoubleCrutch => CrutchConfig::double(injured_side),
    }
}

/// `base` with the crutches `case` needs attached.
pub fn model_for_case(base: &Model, case: Case, injured_side: Side) -> Result<Model> {
    attach_crutches(base, &crutches_for(case, injured_side))
}

pub fn run_snapshot(
    model: &Model,
    snapshot: ScenarioSnapshot,
    params: &SolverParams,
    thresholds: &RiskThresholds,
) -> Result<CaseRun> {
    let tau = inverse_dynamics(model, &snapshot.posture, &snapshot.loads)?;
    let solution = solve_static_optimization(model, &snapshot.posture, &tau, params)?;
    let report = symmetry_report(model, &snapshot, &solution, params.exponent, thresholds)?;
    Ok(CaseRun {
        snapshot,
        tau,
        solution,
        report,
    })
}

/// Library snapshot for `config` on a model already fitted for the case.
pub fn run_case(
    model: &Model,
    config: &ScenarioConfig,
    params: &SolverParams,
    thresholds: &RiskThresholds,
) -> Result<CaseRun> {
    let snapshot = build_snapshot(config, model)?;
    run_snapshot(model, snapshot, params, thresholds)
}
