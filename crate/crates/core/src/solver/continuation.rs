use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::{fd_jacobian, minimise, LmOptions};
use super::{build_residual, norm, Evaluator, SolveError, SolveProblem};
use crate::tol::{CONTINUATION_POINT, SOLVE_SUCCESS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Arclength step.
    pub step: f64,
    pub min_step: f64,
    pub max_points: usize,
    /// Singular values below `rank_tol · max(1, s_max)` count as null directions.
    pub rank_tol: f64,
    /// Halt when the direction coordinate turns back.
    pub halt_on_fold: bool,
    pub lm: LmOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            step: 0.05,
            min_step: 1e-5,
            max_points: 200,
            rank_tol: 1e-6,
            halt_on_fold: true,
            lm: LmOptions {
                tol: 1e-11,
                max_iter: 100,
                ..LmOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    /// Free coordinates.
    pub x: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Halt {
    MaxPoints,
    /// The path came back to its first point.
    ClosedLoop {
        gap: f64,
    },
    /// The direction coordinate stopped increasing.
    Fold {
        at: usize,
        slope: f64,
    },
    /// The dimension of the solution set changed.
    RankDrop {
        at: usize,
        nullity_before: usize,
        nullity_after: usize,
        singular_values: Vec<f64>,
    },
    /// No corrected point was found even at the minimum step.
    CorrectorFailed {
        at: usize,
        residual: f64,
    },
    /// The residual could not be evaluated at a predicted point.
    Domain {
        at: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub direction: String,
    pub points: Vec<PathPoint>,
    pub halt: Halt,
    /// Dimension of the solution set at the start.
    pub nullity: usize,
}

/// Null space basis (columns) and all singular values of `jac`.
fn null_space(jac: &DMatrix<f64>, rank_tol: f64) -> (DMatrix<f64>, Vec<f64>) {
    let n = jac.ncols();
    let mut sq = DMatrix::zeros(jac.nrows().max(n), n);
    sq.view_mut((0, 0), (jac.nrows(), n)).copy_from(jac);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let thr = rank_tol * smax.max(1.0);
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < thr)
        .map(|(k, _)| vt.row(k).transpose())
        .collect();
    let basis = if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    (basis, sv)
}

fn project(basis: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    basis * (basis.transpose() * v)
}

/// Pseudo-arclength continuation of the solution set of `p` through `start`
/// (free coordinates), heading towards increasing `direction`.
pub fn continue_family(
    p: &SolveProblem,
    start: &[f64],
    direction: &str,
    opts: &ContinuationOptions,
) -> Result<ContinuationReport, SolveError> {
    let dir = p.free_index(direction)?;
    let r0 = build_residual(p, start)?;
    let res0 = norm(&r0);
    if res0 >= SOLVE_SUCCESS {
        return Err(SolveError::NotASolution(res0));
    }
    let ev = Evaluator::new(p);
    let f = |x: &[f64]| ev.residual(x).ok();
    let m = r0.len();
    let jac = |x: &[f64]| fd_jacobian(&f, x, m, opts.lm.fd_step);

    let mut points = vec![PathPoint {
        x: start.to_vec(),
        residual: res0,
    }];
    let (basis, _) = null_space(
        &jac(start).ok_or_else(|| SolveError::Assembly("jacobian".into()))?,
        opts.rank_tol,
    );
    let nullity = basis.ncols();
    let report = |points, halt| {
        Ok(ContinuationReport {
            direction: direction.into(),
            points,
            halt,
            nullity,
        })
    };
    let mut e = DVector::zeros(start.len());
    e[dir] = 1.0;
    let mut tangent = project(&basis, &e);
    if nullity == 0 || tangent.norm() < 1e-6 {
        return report(
            points,
            Halt::Fold {
                at: 0,
                slope: tangent.norm(),
            },
        );
    }
    tangent /= tangent.norm();
    let mut x = DVector::from_column_slice(start);
    let mut h = opts.step;

    while points.len() < opts.max_points {
        let at = points.len();
        // Predictor and corrector on the hyperplane orthogonal to the tangent.
        let (y, res) = loop {
            let pred = &x + &tangent * h;
            let t = tangent.clone();
            let p0 = pred.clone();
            let g = |y: &[f64]| {
                let mut r = f(y)?;
                let yv = DVector::from_column_slice(y);
                r.push(t.dot(&(yv - &p0)));
                Some(r)
            };
            let sol = minimise(&g, pred.as_slice(), &opts.lm);
            let fr = f(&sol.x).map(|r| norm(&r));
            match fr {
                Some(res) if res < CONTINUATION_POINT && sol.residual < CONTINUATION_POINT => {
                    break (sol.x, res)
                }
                Some(res) if h / 2.0 < opts.min_step => {
                    return report(points, Halt::CorrectorFailed { at, residual: res });
                }
                None if h / 2.0 < opts.min_step => {
                    return report(
                        points,
                        Halt::Domain {
                            at,
                            message: "residual not defined".into(),
                        },
                    );
                }
                _ => h /= 2.0,
            }
        };
        let yv = DVector::from_column_slice(&y);
        let Some(jy) = jac(&y) else {
            return report(
                points,
                Halt::Domain {
                    at,
                    message: "jacobian not defined".into(),
                },
            );
        };
        let (basis, sv) = null_space(&jy, opts.rank_tol);
        if basis.ncols() != nullity {
            points.push(PathPoint {
                x: y,
                residual: res,
            });
            return report(
                points,
                Halt::RankDrop {
                    at,
                    nullity_before: nullity,
                    nullity_after: basis.ncols(),
                    singular_values: sv,
                },
            );
        }
        let mut next = project(&basis, &tangent);
        if next.norm() < 1e-8 {
            next = project(&basis, &(&yv - &x));
        }
        next /= next.norm();
        let gap = (&yv - DVector::from_column_slice(&points[0].x)).norm();
        points.push(PathPoint {
            x: y,
            residual: res,
        });
        if points.len() > 3 && gap < 0.6 * h {
            return report(points, Halt::ClosedLoop { gap });
        }
        if opts.halt_on_fold && next[dir] <= 1e-3 {
            return report(
                points,
                Halt::Fold {
                    at,
                    slope: next[dir],
                },
            );
        }
        tangent = next;
        x = yv;
        h = (h * 1.5).min(opts.step);
    }
    report(points, Halt::MaxPoints)
}
