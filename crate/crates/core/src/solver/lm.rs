use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{build_residual, norm, Evaluator, SolveError, SolveProblem};
use crate::tol::{FD_STEP, SOLVE_SUCCESS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iter: usize,
    pub fd_step: f64,
    /// Success threshold on the residual norm.
    pub tol: f64,
    /// Stop once the residual has improved by less than this factor over
    /// `stall_window` accepted steps.
    pub stall_ratio: f64,
    pub stall_window: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            fd_step: FD_STEP,
            tol: SOLVE_SUCCESS,
            stall_ratio: 1e-3,
            stall_window: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmResult {
    /// Best point found (free coordinates).
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Central-difference Jacobian. Returns `None` if any evaluation fails.
pub fn fd_jacobian(
    f: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    x: &[f64],
    m: usize,
    h: f64,
) -> Option<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        let step = h * (1.0 + x[k].abs());
        xp[k] = x[k] + step;
        let fp = f(&xp)?;
        xp[k] = x[k] - step;
        let fm = f(&xp)?;
        xp[k] = x[k];
        if fp.len() != m || fm.len() != m {
            return None;
        }
        for r in 0..m {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    Some(jac)
}

/// Levenberg–Marquardt on an arbitrary residual map.
pub fn minimise(f: &dyn Fn(&[f64]) -> Option<Vec<f64>>, x0: &[f64], opts: &LmOptions) -> LmResult {
    let mut x = x0.to_vec();
    let Some(mut r) = f(&x) else {
        return LmResult {
            x,
            residual: f64::INFINITY,
            iterations: 0,
            converged: false,
        };
    };
    let mut cost = norm(&r);
    let mut lambda = 1e-3;
    let mut history = vec![cost];
    let mut iterations = 0;
    while iterations < opts.max_iter && cost >= opts.tol {
        iterations += 1;
        let Some(jac) = fd_jacobian(f, &x, r.len(), opts.fd_step) else {
            break;
        };
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let diag: Vec<f64> = (0..a.nrows()).map(|k| a[(k, k)].max(1e-12)).collect();
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for (k, d) in diag.iter().enumerate() {
                damped[(k, k)] += lambda * d;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            if let Some(rt) = f(&trial) {
                let ct = norm(&rt);
                if ct.is_finite() && ct < cost {
                    x = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 3.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
        history.push(cost);
        if history.len() > opts.stall_window {
            let old = history[history.len() - 1 - opts.stall_window];
            if cost > old * (1.0 - opts.stall_ratio) {
                break;
            }
        }
    }
    LmResult {
        converged: cost < opts.tol,
        x,
        residual: cost,
        iterations,
    }
}

/// Levenberg–Marquardt from `x0` (free coordinates). Failure to converge is
/// reported through `converged = false` together with the best point.
pub fn solve_lm(p: &SolveProblem, x0: &[f64], opts: &LmOptions) -> Result<LmResult, SolveError> {
    p.validate()?;
    build_residual(p, x0)?;
    let ev = Evaluator::new(p);
    let f = |x: &[f64]| ev.residual(x).ok();
    Ok(minimise(&f, x0, opts))
}
