//! Projected Newton method for smooth convex objectives over a box
//! (Bertsekas, 1982). On strictly convex quadratics it identifies the active
//! set in finitely many steps and then converges in one Newton step.

use nalgebra::{DMatrix, DVector};

pub(crate) trait BoxObjective {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub(crate) struct BoxSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BoxSettings {
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub max_iters: usize,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn project(x: &mut DVector<f64>, lo: f64, hi: f64) {
    x.apply(|v| *v = v.clamp(lo, hi));
}

fn projected_gradient(x: &DVector<f64>, g: &DVector<f64>, lo: f64, hi: f64) -> f64 {
    x.iter()
        .zip(g.iter())
        .map(|(&xi, &gi)| (xi - (xi - gi).clamp(lo, hi)).abs())
        .fold(0.0, f64::max)
}

/// Cholesky of `h + μI`, raising μ until the factorization succeeds.
fn regularized_solve(h: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let scale = h.diagonal().iter().fold(1.0f64, |m, d| m.max(d.abs()));
    let mut mu = 0.0;
    loop {
        let mut m = h.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += mu;
        }
        if let Some(chol) = m.cholesky() {
            return chol.solve(rhs);
        }
        mu = if mu == 0.0 { 1e-12 * scale } else { mu * 10.0 };
    }
}

pub(crate) fn minimize<F: BoxObjective>(
    objective: &F,
    x0: DVector<f64>,
    settings: BoxSettings,
) -> BoxSolution {
    let BoxSettings {
        lower: lo,
        upper: hi,
        tolerance,
        max_iters,
    } = settings;
    let n = x0.len();
    let mut x = x0;
    project(&mut x, lo, hi);
    let mut fx = objective.value(&x);
    let mut iterations = 0;

    for iter in 0..max_iters {
        let g = objective.gradient(&x);
        let pg = projected_gradient(&x, &g, lo, hi);
        if pg <= tolerance {
            return BoxSolution {
                x,
                iterations: iter,
                converged: true,
            };
        }

        // variables pinned at a bound with the gradient pushing outward
        let eps = pg.min(1e-3);
        let bound: Vec<bool> = (0..n)
            .map(|i| (x[i] <= lo + eps && g[i] > 0.0) || (x[i] >= hi - eps && g[i] < 0.0))
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| !bound[i]).collect();

        let h = objective.hessian(&x);
        let mut d = DVector::zeros(n);
        if !free.is_empty() {
            let h_ff = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let g_f = DVector::from_iterator(free.len(), free.iter().map(|&i| -g[i]));
            let step = regularized_solve(h_ff, &g_f);
            for (k, &i) in free.iter().enumerate() {
                d[i] = step[k];
            }
        }
        for i in (0..n).filter(|&i| bound[i]) {
            let curvature = if h[(i, i)] > 1e-12 { h[(i, i)] } else { 1.0 };
            d[i] = -g[i] / curvature;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial = &x + alpha * &d;
            project(&mut trial, lo, hi);
            let predicted: f64 = (0..n)
                .map(|i| {
                    if bound[i] {
                        g[i] * (x[i] - trial[i])
                    } else {
                        -alpha * g[i] * d[i]
                    }
                })
                .sum();
            let ft = objective.value(&trial);
            if fx - ft >= ARMIJO * predicted {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        iterations = iter + 1;
        match accepted {
            Some((trial, ft)) => {
                let moved = (&trial - &x).amax();
                x = trial;
                fx = ft;
                if moved == 0.0 {
                    break;
                }
            }
            None => break,
        }
    }

    let g = objective.gradient(&x);
    let pg = projected_gradient(&x, &g, lo, hi);
    BoxSolution {
        x,
        iterations,
        converged: pg <= tolerance,
    }
}
