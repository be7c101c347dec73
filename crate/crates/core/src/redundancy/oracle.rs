//! Exhaustive grid search over activations, used to cross-check the solver on
//! small random problems.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{force_matrix, solve_activations, ActivationSolution, SolveStatus, SolverParams};
use crate::error::{Error, Result};

pub const MAX_ORACLE_MUSCLES: usize = 6;
/// Upper bound on candidate points per search.
const MAX_GRID_POINTS: f64 = 5e8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub solution: ActivationSolution,
    /// Allowance for the objective gap between the grid optimum and the
    /// continuous one, `p·n·step`.
    pub objective_slack: f64,
    pub points_visited: u64,
}

/// Minimum of `Σ a_i^p` over exactly feasible grid-anchored points.
///
/// For every basis (a set of `rank(A)` muscles with independent moment
/// columns) the other muscles range over the grid `{0, step, 2·step, …} ∪ {1}`
/// and the basis activations are solved from the moment balance; completions
/// outside `[0, 1]` are discarded. Every candidate meets `tau` to rounding
/// error, so the result never undercuts the true optimum. Steps above 0.1 are
/// accepted but give loose bounds.
pub fn brute_force_oracle(
    f_max: &[f64],
    r: &DMatrix<f64>,
    tau: &[f64],
    p: u8,
    grid_step: f64,
) -> Result<OracleSolution> {
    if f_max.len() > MAX_ORACLE_MUSCLES {
        return Err(Error::TooLarge(format!(
            "{} muscles exceed the oracle limit of {MAX_ORACLE_MUSCLES}",
            f_max.len()
        )));
    }
    if !(grid_step.is_finite() && grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::Config(format!(
            "grid step must be in (0, 1], got {grid_step}"
        )));
    }
    if !(1..=3).contains(&p) {
        return Err(Error::Config(format!(
            "exponent must be 1, 2 or 3, got {p}"
        )));
    }
    let a_mat = force_matrix(f_max, r, tau)?;
    let (m, n) = a_mat.shape();
    let tau_v = DVector::from_column_slice(tau);

    let mut grid: Vec<f64> = (0..)
        .map(|k| k as f64 * grid_step)
        .take_while(|&v| v < 1.0 - 1e-12)
        .collect();
    grid.push(1.0);

    let scale = a_mat.amax().max(1.0);
    let rank = if n == 0 { 0 } else { a_mat.rank(1e-10 * scale) };
    let bases: Vec<Vec<usize>> = subsets(n, rank)
        .into_iter()
        .filter(|b| rank == 0 || a_mat.select_columns(b).rank(1e-10 * scale) == rank)
        .collect();
    let total = bases.len() as f64 * (grid.len() as f64).powi((n - rank) as i32);
    if total > MAX_GRID_POINTS {
        return Err(Error::TooLarge(format!(
            "{total:.3e} grid points (step {grid_step}, {n} muscles)"
        )));
    }

    let feasible_tol: Vec<f64> = tau.iter().map(|t| 1e-9 * t.abs().max(1.0)).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut visited = 0u64;
    for basis in &bases {
        let others: Vec<usize> = (0..n).filter(|i| !basis.contains(i)).collect();
        let a_b = a_mat.select_columns(basis);
        let a_n = a_mat.select_columns(&others);
        let pinv = match a_b.clone().pseudo_inverse(1e-12 * scale) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let mut idx = vec![0usize; others.len()];
        loop {
            let a_free = DVector::from_iterator(others.len(), idx.iter().map(|&k| grid[k]));
            let partial: f64 = a_free.iter().map(|v| v.powi(p as i32)).sum();
            if best.as_ref().is_none_or(|(_, b)| partial < *b) {
                visited += 1;
                let rhs = &tau_v - &a_n * &a_free;
                let x_b = &pinv * &rhs;
                if x_b.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)) {
                    let mut act = vec![0.0; n];
                    for (k, &i) in basis.iter().enumerate() {
                        act[i] = x_b[k].clamp(0.0, 1.0);
                    }
                    for (k, &i) in others.iter().enumerate() {
                        act[i] = a_free[k];
                    }
                    let moments = &a_mat * DVector::from_column_slice(&act);
                    let balanced = (0..m).all(|j| (moments[j] - tau[j]).abs() <= feasible_tol[j]);
                    let cost: f64 = act.iter().map(|v| v.powi(p as i32)).sum();
                    if balanced && best.as_ref().is_none_or(|(_, b)| cost < *b) {
                        best = Some((act, cost));
                    }
                }
            }
            // odometer over the grid indices of the non-basic muscles
            let mut d = 0;
            while d < idx.len() {
                idx[d] += 1;
                if idx[d] < grid.len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == idx.len() {
                break;
            }
        }
    }

    let (activations, cost) = best.ok_or_else(|| {
        let reach = |j: usize, f: fn(f64) -> f64| (0..n).map(|i| f(a_mat[(j, i)])).sum::<f64>();
        let worst = (0..m)
            .map(|j| {
                let lo = reach(j, |v| v.min(0.0));
                let hi = reach(j, |v| v.max(0.0));
                (j, (tau[j] - tau[j].clamp(lo, hi)).abs())
            })
            .fold((0, 0.0), |b, c| if c.1 > b.1 { c } else { b });
        Error::Infeasible {
            coordinate: worst.0.to_string(),
            residual: worst.1,
        }
    })?;

    let moments = &a_mat * DVector::from_column_slice(&activations);
    let residuals = (0..m).map(|j| (moments[j] - tau[j]).abs()).collect();
    Ok(OracleSolution {
        solution: ActivationSolution {
            activations,
            reserves: vec![0.0; m],
            residuals,
            objective: cost,
            status: SolveStatus::Optimal,
            degenerate: false,
            iterations: 0,
        },
        objective_slack: p as f64 * n as f64 * grid_step,
        points_visited: visited,
    })
}

/// All `k`-element subsets of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomInstance {
    pub f_max: Vec<f64>,
    /// Muscles × coordinates.
    pub moment_arms: DMatrix<f64>,
    pub tau: Vec<f64>,
}

/// A feasible instance: `tau` is generated from activations drawn in `[0, 1]`.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_muscles: usize,
    max_coordinates: usize,
) -> RandomInstance {
    let n = rng.random_range(1..=max_muscles.max(1));
    let m = rng.random_range(1..=max_coordinates.max(1));
    let f_max: Vec<f64> = (0..n).map(|_| rng.random_range(500.0..1500.0)).collect();
    let moment_arms = DMatrix::from_fn(n, m, |_, _| rng.random_range(-0.08..0.08));
    let truth: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let tau = (0..m)
        .map(|j| {
            (0..n)
                .map(|i| truth[i] * f_max[i] * moment_arms[(i, j)])
                .sum()
        })
        .collect();
    RandomInstance {
        f_max,
        moment_arms,
        tau,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheckConfig {
    pub instances: usize,
    pub seed: u64,
    pub max_muscles: usize,
    pub max_coordinates: usize,
    pub grid_step: f64,
    pub exponent: u8,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            instances: 100,
            seed: 42,
            max_muscles: 4,
            max_coordinates: 2,
            grid_step: 0.01,
            exponent: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCase {
    pub muscles: usize,
    pub coordinates: usize,
    pub solver_objective: f64,
    pub oracle_objective: f64,
    pub deviation: f64,
    pub allowed: f64,
    pub max_relative_residual: f64,
    pub status: SolveStatus,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub cases: Vec<OracleCase>,
    pub max_deviation: f64,
    pub failures: usize,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Solver versus grid search on seeded random instances, reserves disabled.
/// A case passes when objectives agree within `1e-3 + objective_slack`, the
/// solve is optimal and its residuals meet the solver tolerance.
pub fn run_oracle_check(config: &OracleCheckConfig) -> Result<OracleCheck> {
    if config.max_muscles > MAX_ORACLE_MUSCLES {
        return Err(Error::TooLarge(format!(
            "{} muscles exceed the oracle limit of {MAX_ORACLE_MUSCLES}",
            config.max_muscles
        )));
    }
    if config.max_muscles == 0 || config.max_coordinates == 0 {
        return Err(Error::Config("instance sizes must be at least 1".into()));
    }
    let params = SolverParams {
        exponent: config.exponent,
        reserves_enabled: false,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cases = Vec::with_capacity(config.instances);
    for _ in 0..config.instances {
        let inst = random_instance(&mut rng, config.max_muscles, config.max_coordinates);
        let solved = solve_activations(&inst.f_max, &inst.moment_arms, &inst.tau, &params)?;
        let oracle = brute_force_oracle(
            &inst.f_max,
            &inst.moment_arms,
            &inst.tau,
            config.exponent,
            config.grid_step,
        )?;
        let deviation = (solved.objective - oracle.solution.objective).abs();
        let allowed = 1e-3 + oracle.objective_slack;
        let rel = solved.max_relative_residual(&inst.tau);
        let passed = deviation <= allowed
            && solved.status == SolveStatus::Optimal
            && rel <= params.tolerance;
        cases.push(OracleCase {
            muscles: inst.f_max.len(),
            coordinates: inst.tau.len(),
            solver_objective: solved.objective,
            oracle_objective: oracle.solution.objective,
            deviation,
            allowed,
            max_relative_residual: rel,
            status: solved.status,
            passed,
        });
    }
    let max_deviation = cases.iter().fold(0.0f64, |m, c| m.max(c.deviation));
    let failures = cases.iter().filter(|c| !c.passed).count();
    Ok(OracleCheck {
        cases,
        max_deviation,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric() -> (Vec<f64>, DMatrix<f64>) {
        (
            vec![1000.0, 1000.0],
            DMatrix::from_column_slice(2, 1, &[0.05, 0.05]),
        )
    }

    #[test]
    fn symmetric_pair() {
        let (f, r) = symmetric();
        let o = brute_force_oracle(&f, &r, &[50.0], 2, 0.01).unwrap();
        assert_eq!(o.solution.activations, vec![0.5, 0.5]);
        assert!((o.solution.objective - 0.5).abs() < 1e-12);
        assert!((o.objective_slack - 0.04).abs() < 1e-15);
    }

    #[test]
    fn zero_demand() {
        let r = DMatrix::from_row_slice(3, 2, &[0.05, -0.02, -0.03, 0.04, 0.01, 0.0]);
        let o = brute_force_oracle(&[800.0, 900.0, 1000.0], &r, &[0.0, 0.0], 2, 0.05).unwrap();
        assert!(o.solution.activations.iter().all(|&a| a == 0.0));
        assert_eq!(o.solution.objective, 0.0);
    }

    #[test]
    fn seven_muscles_too_large() {
        let r = DMatrix::from_element(7, 1, 0.05);
        let err = brute_force_oracle(&[1000.0; 7], &r, &[10.0], 2, 0.1).unwrap_err();
        assert!(matches!(err, Error::TooLarge(_)));
    }

    #[test]
    fn fine_grid_on_many_muscles_too_large() {
        let r = DMatrix::from_element(6, 1, 0.05);
        let err = brute_force_oracle(&[1000.0; 6], &r, &[10.0], 2, 0.001).unwrap_err();
        assert!(matches!(err, Error::TooLarge(_)));
    }

    #[test]
    fn bad_step() {
        let (f, r) = symmetric();
        for step in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                brute_force_oracle(&f, &r, &[50.0], 2, step),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn unreachable_demand() {
        let r = DMatrix::from_column_slice(1, 1, &[0.05]);
        let err = brute_force_oracle(&[1000.0], &r, &[100.0], 2, 0.01).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn never_undercuts_a_known_optimum() {
        // two muscles, one coordinate: optimum of a1² + a2² on a1 + 2·a2 = 1
        // is (0.2, 0.4), objective 0.2
        let r = DMatrix::from_column_slice(2, 1, &[0.05, 0.10]);
        let o = brute_force_oracle(&[1000.0, 1000.0], &r, &[50.0], 2, 0.01).unwrap();
        assert!(o.solution.objective >= 0.2 - 1e-12);
        assert!(o.solution.objective - 0.2 < 1e-3);
        assert!(o.solution.residuals[0] < 1e-9);
    }

    #[test]
    fn subsets_enumerated() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(2, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn default_check_passes() {
        let report = run_oracle_check(&OracleCheckConfig::default()).unwrap();
        assert_eq!(report.cases.len(), 100);
        assert!(
            report.passed(),
            "{:#?}",
            report
                .cases
                .iter()
                .filter(|c| !c.passed)
                .collect::<Vec<_>>()
        );
    }
}
