//! Static optimization: split the generalized forces at one instant across the
//! muscles, minimizing `Σ a_i^p` plus a penalty on per-coordinate reserve
//! torques, with activations boxed to `[0, 1]` and muscle force `a_i·f_max,i`.

mod oracle;
mod qp;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use oracle::{
    brute_force_oracle, random_instance, run_oracle_check, OracleCase, OracleCheck,
    OracleCheckConfig, OracleSolution, RandomInstance, MAX_ORACLE_MUSCLES,
};

use crate::dynamics::GeneralizedForces;
use crate::error::{Error, Result};
use crate::kinematics::{moment_arm_matrix, Posture};
use crate::model::Model;
use qp::{BoxObjective, BoxSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Cost power on activations, one of 1, 2 or 3.
    pub exponent: u8,
    pub reserve_weight: f64,
    pub max_iters: usize,
    /// Bound on the equilibrium residual, relative to `max(1, |tau_j|)`.
    pub tolerance: f64,
    pub reserves_enabled: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            exponent: 2,
            reserve_weight: 1e3,
            max_iters: 500,
            tolerance: 1e-8,
            reserves_enabled: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.exponent) {
            return Err(Error::Config(format!(
                "exponent must be 1, 2 or 3, got {}",
                self.exponent
            )));
        }
        if !(self.reserve_weight.is_finite() && self.reserve_weight > 0.0) {
            return Err(Error::Config("reserve_weight must be positive".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Not produced by a successful solve; infeasible problems are reported
    /// as [`Error::Infeasible`]. Present so stored results can record it.
    Infeasible,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationSolution {
    pub activations: Vec<f64>,
    /// Per-coordinate reserve torque, zero when reserves are disabled.
    pub reserves: Vec<f64>,
    /// `|Σ_i a_i·f_max,i·r_ij + reserve_j − tau_j|` per coordinate.
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// Set for `p = 1` when the optimum is not unique: more unsaturated muscles
    /// than independent constraint directions.
    pub degenerate: bool,
    pub iterations: usize,
}

impl ActivationSolution {
    /// Largest residual relative to `max(1, |tau_j|)`.
    pub fn max_relative_residual(&self, tau: &[f64]) -> f64 {
        self.residuals
            .iter()
            .zip(tau)
            .map(|(r, t)| r / t.abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

/// Solve at a model posture. Moment arms are evaluated at `posture.q`.
pub fn solve_static_optimization(
    model: &Model,
    posture: &Posture,
    tau: &GeneralizedForces,
    params: &SolverParams,
) -> Result<ActivationSolution> {
    posture.check(model)?;
    if tau.tau.len() != model.dof() {
        return Err(Error::Dimension {
            what: "tau",
            expected: model.dof(),
            got: tau.tau.len(),
        });
    }
    let r = moment_arm_matrix(model, posture)?;
    let f_max: Vec<f64> = model.muscles().iter().map(|m| m.f_max).collect();
    solve_activations(&f_max, &r, &tau.tau, params).map_err(|e| match e {
        Error::Infeasible {
            coordinate,
            residual,
        } => Error::Infeasible {
            coordinate: coordinate
                .parse::<usize>()
                .ok()
                .and_then(|j| model.coordinates().get(j))
                .map(|c| c.name.clone())
                .unwrap_or(coordinate),
            residual,
        },
        e => e,
    })
}

/// Solve from raw data. `r` is muscles × coordinates. An infeasible problem
/// names the offending coordinate by its index.
pub fn solve_activations(
    f_max: &[f64],
    r: &DMatrix<f64>,
    tau: &[f64],
    params: &SolverParams,
) -> Result<ActivationSolution> {
    params.validate()?;
    let a = force_matrix(f_max, r, tau)?;
    let tau = DVector::from_column_slice(tau);
    if params.reserves_enabled {
        Ok(solve_with_reserves(&a, &tau, params))
    } else {
        solve_exact(&a, &tau, params)
    }
}

/// Coordinates × muscles matrix of full-activation moments `f_max,i·r_ij`.
pub(crate) fn force_matrix(f_max: &[f64], r: &DMatrix<f64>, tau: &[f64]) -> Result<DMatrix<f64>> {
    if r.nrows() != f_max.len() {
        return Err(Error::Dimension {
            what: "moment-arm rows",
            expected: f_max.len(),
            got: r.nrows(),
        });
    }
    if r.ncols() != tau.len() {
        return Err(Error::Dimension {
            what: "tau",
            expected: r.ncols(),
            got: tau.len(),
        });
    }
    if f_max.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::Config("f_max must be positive and finite".into()));
    }
    if r.iter().chain(tau).any(|x| !x.is_finite()) {
        return Err(Error::Config("moment arms and tau must be finite".into()));
    }
    Ok(DMatrix::from_fn(tau.len(), f_max.len(), |j, i| {
        f_max[i] * r[(i, j)]
    }))
}

fn effort(a: &DVector<f64>, p: u8) -> f64 {
    a.iter().map(|x| x.powi(p as i32)).sum()
}

fn effort_gradient(a: &DVector<f64>, p: u8) -> DVector<f64> {
    a.map(|x| p as f64 * x.powi(p as i32 - 1))
}

fn effort_curvature(a: &DVector<f64>, p: u8) -> DVector<f64> {
    a.map(|x| match p {
        1 => 0.0,
        2 => 2.0,
        _ => 6.0 * x,
    })
}

/// `Σ a^p + μ/2·‖B a − b‖² − λᵀ(B a − b)`; covers the reserve penalty
/// (λ = 0), the augmented Lagrangian and, with `effort = false`, plain
/// bounded least squares.
struct Penalized<'a> {
    b_mat: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    lambda: DVector<f64>,
    mu: f64,
    p: u8,
    effort: bool,
}

impl Penalized<'_> {
    fn residual(&self, a: &DVector<f64>) -> DVector<f64> {
        self.b_mat * a - self.b
    }
}

impl BoxObjective for Penalized<'_> {
    fn value(&self, a: &DVector<f64>) -> f64 {
        let r = self.residual(a);
        let e = if self.effort { effort(a, self.p) } else { 0.0 };
        e + 0.5 * self.mu * r.norm_squared() - self.lambda.dot(&r)
    }

    fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        let r = self.residual(a);
        let mut g = self.b_mat.tr_mul(&(self.mu * r - &self.lambda));
        if self.effort {
            g += effort_gradient(a, self.p);
        }
        g
    }

    fn hessian(&self, a: &DVector<f64>) -> DMatrix<f64> {
        let mut h = self.mu * self.b_mat.tr_mul(self.b_mat);
        if self.effort {
            for (i, c) in effort_curvature(a, self.p).iter().enumerate() {
                h[(i, i)] += c;
            }
        }
        h
    }
}

/// Projected-gradient tolerance for the inner solves, relative to the
/// curvature the penalty term contributes.
fn settings(objective: &Penalized, max_iters: usize) -> BoxSettings {
    let curvature = objective.mu * objective.b_mat.norm_squared();
    BoxSettings {
        lower: 0.0,
        upper: 1.0,
        tolerance: 1e-12 * (1.0 + curvature),
        max_iters,
    }
}

fn tau_scale(tau: &DVector<f64>) -> f64 {
    tau.amax().max(1.0)
}

fn solve_with_reserves(
    a_mat: &DMatrix<f64>,
    tau: &DVector<f64>,
    params: &SolverParams,
) -> ActivationSolution {
    let n = a_mat.ncols();
    let scale = tau_scale(tau);
    // reserve_j = tau_j − (A a)_j eliminated analytically; normalize so the
    // penalty reads w·‖(A a − tau)/τs‖²
    let b_mat = a_mat / scale;
    let b = tau / scale;
    let objective = Penalized {
        b_mat: &b_mat,
        b: &b,
        lambda: DVector::zeros(b.len()),
        mu: 2.0 * params.reserve_weight,
        p: params.exponent,
        effort: true,
    };
    let sol = qp::minimize(
        &objective,
        DVector::zeros(n),
        settings(&objective, params.max_iters),
    );
    let act = sol.x;
    let reserves = tau - a_mat * &act;
    let status = if sol.converged {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIters
    };
    finish(a_mat, tau, act, reserves, params, status, sol.iterations)
}

fn solve_exact(
    a_mat: &DMatrix<f64>,
    tau: &DVector<f64>,
    params: &SolverParams,
) -> Result<ActivationSolution> {
    let n = a_mat.ncols();
    let m = a_mat.nrows();
    // rows scaled so the tolerance test becomes |B a − b|_j ≤ tolerance
    let row_scale: Vec<f64> = tau.iter().map(|t| t.abs().max(1.0)).collect();
    let b_mat = DMatrix::from_fn(m, n, |j, i| a_mat[(j, i)] / row_scale[j]);
    let b = DVector::from_fn(m, |j, _| tau[j] / row_scale[j]);

    // phase 1: closest achievable moments
    let phase1 = Penalized {
        b_mat: &b_mat,
        b: &b,
        lambda: DVector::zeros(m),
        mu: 1.0,
        p: params.exponent,
        effort: false,
    };
    let feasible = qp::minimize(
        &phase1,
        DVector::zeros(n),
        settings(&phase1, params.max_iters),
    );
    let mut x = feasible.x;
    polish(&b_mat, &b, &mut x);
    let r = &b_mat * &x - &b;
    if let Some((j, v)) = worst(&r) {
        if v > params.tolerance {
            return Err(Error::Infeasible {
                coordinate: j.to_string(),
                residual: v * row_scale[j],
            });
        }
    }

    // phase 2: augmented Lagrangian from the feasible point
    let mut lagrangian = Penalized {
        b_mat: &b_mat,
        b: &b,
        lambda: DVector::zeros(m),
        mu: 10.0,
        p: params.exponent,
        effort: true,
    };
    let mut iterations = feasible.iterations;
    let mut previous = f64::INFINITY;
    let mut converged = false;
    for _ in 0..params.max_iters {
        let inner = qp::minimize(
            &lagrangian,
            x.clone(),
            settings(&lagrangian, params.max_iters),
        );
        iterations += inner.iterations;
        let moved = (&inner.x - &x).amax();
        x = inner.x;
        let r = lagrangian.residual(&x);
        let violation = r.amax();
        lagrangian.lambda -= lagrangian.mu * &r;
        if inner.converged && violation <= params.tolerance && moved <= 1e-9 {
            converged = true;
            break;
        }
        if violation > 0.25 * previous {
            lagrangian.mu = (lagrangian.mu * 10.0).min(1e8);
        }
        previous = violation;
    }
    polish(&b_mat, &b, &mut x);
    let r = &b_mat * &x - &b;
    let within = worst(&r).is_none_or(|(_, v)| v <= params.tolerance);
    let status = if converged && within {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIters
    };
    Ok(finish(
        a_mat,
        tau,
        x,
        DVector::zeros(m),
        params,
        status,
        iterations,
    ))
}

fn worst(r: &DVector<f64>) -> Option<(usize, f64)> {
    r.iter()
        .map(|v| v.abs())
        .enumerate()
        .fold(None, |best, (j, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((j, v)),
        })
}

/// Minimum-norm correction of the unsaturated activations onto `B a = b`,
/// kept only when it stays inside the box and reduces the residual.
fn polish(b_mat: &DMatrix<f64>, b: &DVector<f64>, x: &mut DVector<f64>) {
    let free: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0 && x[i] < 1.0).collect();
    if free.is_empty() {
        return;
    }
    let r = b - b_mat * &*x;
    let b_f = b_mat.select_columns(&free);
    let Ok(delta) = b_f.clone().svd(true, true).solve(&r, 1e-12) else {
        return;
    };
    let mut candidate = x.clone();
    for (k, &i) in free.iter().enumerate() {
        candidate[i] += delta[k];
    }
    if candidate.iter().all(|v| (0.0..=1.0).contains(v))
        && (b_mat * &candidate - b).amax() <= r.amax()
    {
        *x = candidate;
    }
}

fn finish(
    a_mat: &DMatrix<f64>,
    tau: &DVector<f64>,
    mut act: DVector<f64>,
    reserves: DVector<f64>,
    params: &SolverParams,
    status: SolveStatus,
    iterations: usize,
) -> ActivationSolution {
    act.apply(|v| *v = v.clamp(0.0, 1.0));
    let moments = a_mat * &act;
    let residuals: Vec<f64> = (0..tau.len())
        .map(|j| (moments[j] + reserves[j] - tau[j]).abs())
        .collect();
    let scale = tau_scale(tau);
    let objective = effort(&act, params.exponent)
        + params.reserve_weight * reserves.iter().map(|r| (r / scale).powi(2)).sum::<f64>();
    let degenerate = params.exponent == 1 && {
        let free: Vec<usize> = (0..act.len())
            .filter(|&i| act[i] > 1e-9 && act[i] < 1.0 - 1e-9)
            .collect();
        !free.is_empty() && {
            let rank = a_mat
                .select_columns(&free)
                .rank(1e-9 * a_mat.amax().max(1.0));
            free.len() > rank
        }
    };
    ActivationSolution {
        activations: act.iter().copied().collect(),
        reserves: reserves.iter().copied().collect(),
        residuals,
        objective,
        status,
        degenerate,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_coordinate(arms: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(arms.len(), 1, arms)
    }

    fn exact() -> SolverParams {
        SolverParams {
            reserves_enabled: false,
            ..Default::default()
        }
    }

    #[test]
    fn symmetric_agonists_split_evenly() {
        let s = solve_activations(
            &[1000.0, 1000.0],
            &one_coordinate(&[0.05, 0.05]),
            &[50.0],
            &exact(),
        )
        .unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.activations[0] - 0.5).abs() < 1e-9);
        assert!((s.activations[1] - 0.5).abs() < 1e-9);
        assert!((s.objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn symmetric_agonists_with_reserves_nearly_split() {
        let s = solve_activations(
            &[1000.0, 1000.0],
            &one_coordinate(&[0.05, 0.05]),
            &[50.0],
            &SolverParams::default(),
        )
        .unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        // reserve penalty w/τs² = 0.4 per N·m² trades a sliver of demand
        assert!((s.activations[0] - s.activations[1]).abs() < 1e-12);
        assert!((s.activations[0] - 0.5).abs() < 1e-3);
        assert!(s.residuals[0] < 1e-9);
    }

    #[test]
    fn antagonist_pair_at_capacity() {
        let s = solve_activations(
            &[1000.0, 1000.0],
            &one_coordinate(&[0.05, -0.05]),
            &[50.0],
            &exact(),
        )
        .unwrap();
        assert_eq!(s.activations, vec![1.0, 0.0]);
        assert!(s.residuals[0] <= 1e-8 * 50.0);
    }

    #[test]
    fn beyond_capacity_is_infeasible() {
        let err =
            solve_activations(&[1000.0], &one_coordinate(&[0.05]), &[100.0], &exact()).unwrap_err();
        match err {
            Error::Infeasible {
                coordinate,
                residual,
            } => {
                assert_eq!(coordinate, "0");
                assert!((residual - 50.0).abs() < 1e-6);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn zero_demand_is_silent() {
        let r = DMatrix::from_row_slice(3, 2, &[0.05, -0.02, -0.03, 0.04, 0.01, 0.0]);
        let s = solve_activations(
            &[800.0, 900.0, 1000.0],
            &r,
            &[0.0, 0.0],
            &SolverParams::default(),
        )
        .unwrap();
        assert!(s.activations.iter().all(|&a| a == 0.0));
        assert!(s.reserves.iter().all(|&r| r == 0.0));
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn scaling_forces_and_demand_keeps_activations() {
        let r = DMatrix::from_row_slice(3, 2, &[0.05, -0.02, -0.03, 0.04, 0.01, 0.03]);
        let f = [800.0, 900.0, 1000.0];
        let tau = [20.0, 15.0];
        for params in [SolverParams::default(), exact()] {
            let base = solve_activations(&f, &r, &tau, &params).unwrap();
            let f3: Vec<f64> = f.iter().map(|x| x * 3.0).collect();
            let t3: Vec<f64> = tau.iter().map(|x| x * 3.0).collect();
            let scaled = solve_activations(&f3, &r, &t3, &params).unwrap();
            for (a, b) in base.activations.iter().zip(&scaled.activations) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn linear_cost_flags_degenerate_split() {
        let params = SolverParams {
            exponent: 1,
            ..exact()
        };
        let s = solve_activations(
            &[1000.0, 1000.0],
            &one_coordinate(&[0.05, 0.05]),
            &[50.0],
            &params,
        )
        .unwrap();
        assert!((s.activations[0] + s.activations[1] - 1.0).abs() < 1e-8);
        assert!((s.objective - 1.0).abs() < 1e-8);
        assert!(s.degenerate);
    }

    #[test]
    fn linear_cost_prefers_longer_arm() {
        let params = SolverParams {
            exponent: 1,
            ..exact()
        };
        let s = solve_activations(
            &[1000.0, 1000.0],
            &one_coordinate(&[0.05, 0.02]),
            &[20.0],
            &params,
        )
        .unwrap();
        assert!((s.activations[0] - 0.4).abs() < 1e-8);
        assert!(s.activations[1].abs() < 1e-8);
        assert!(!s.degenerate);
    }

    #[test]
    fn cubic_cost_solves_and_stays_in_box() {
        let params = SolverParams {
            exponent: 3,
            ..exact()
        };
        let s = solve_activations(
            &[1000.0, 500.0],
            &one_coordinate(&[0.05, 0.05]),
            &[30.0],
            &params,
        )
        .unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        // stationarity: 3a1² / 50 = 3a2² / 25 ⇒ a1 = √2·a2
        assert!((s.activations[0] - 2f64.sqrt() * s.activations[1]).abs() < 1e-6);
        assert!(s.max_relative_residual(&[30.0]) <= 1e-8);
    }

    #[test]
    fn parameter_validation() {
        let bad = [
            SolverParams {
                exponent: 0,
                ..Default::default()
            },
            SolverParams {
                exponent: 4,
                ..Default::default()
            },
            SolverParams {
                reserve_weight: 0.0,
                ..Default::default()
            },
            SolverParams {
                tolerance: -1.0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let err = solve_activations(&[1000.0], &one_coordinate(&[0.05]), &[1.0, 2.0], &exact());
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn uncovered_coordinate_goes_to_reserve() {
        // second coordinate has no muscle
        let r = DMatrix::from_row_slice(1, 2, &[0.05, 0.0]);
        let s = solve_activations(&[1000.0], &r, &[10.0, 7.0], &SolverParams::default()).unwrap();
        assert!((s.reserves[1] - 7.0).abs() < 1e-12);
        assert!(s.residuals.iter().all(|&r| r < 1e-12));
    }
}
