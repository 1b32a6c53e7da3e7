//! Damped Newton iteration for inverting maps without a closed-form inverse.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::InverseConfig;
use crate::error::{Error, Result};

/// Converged Newton iterate.
#[derive(Debug, Clone)]
pub(crate) struct NewtonSolution {
    pub point: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn failure(reason: &str, x: &DVector<f64>, residual: f64, iterations: usize) -> Error {
    Error::Inversion {
        reason: reason.to_string(),
        last_iterate: x.iter().copied().collect(),
        residual,
        iterations,
    }
}

/// Solves `F(x) = 0` by Newton steps with backtracking on `‖F‖`.
///
/// `residual` returns `None` for points outside the admissible region;
/// such trial points are treated like a failed decrease. Converges once
/// `‖F‖ ≤ cfg.tolerance`, iterating further while that still pays off.
pub(crate) fn damped_newton<F, J>(residual: F, jacobian: J, x0: DVector<f64>, cfg: &InverseConfig) -> Result<NewtonSolution>
where
    F: Fn(&DVector<f64>) -> Option<DVector<f64>>,
    J: Fn(&DVector<f64>) -> Option<DMatrix<f64>>,
{
    let mut x = x0;
    let mut r = residual(&x).ok_or_else(|| failure("initial guess outside admissible region", &x, f64::NAN, 0))?;
    let mut rn = r.norm();
    let polish = cfg.tolerance * 1e-3;
    for it in 0..cfg.max_iterations {
        if rn <= polish {
            return Ok(NewtonSolution {
                point: x,
                residual: rn,
                iterations: it,
            });
        }
        let jac = jacobian(&x).ok_or_else(|| failure("Jacobian unavailable", &x, rn, it))?;
        let Some(delta) = jac.lu().solve(&(-&r)) else {
            return Err(failure("singular Jacobian", &x, rn, it));
        };
        if !delta.iter().all(|v| v.is_finite()) {
            return Err(failure("non-finite Newton direction", &x, rn, it));
        }
        let mut lambda = 1.0;
        loop {
            let candidate = &x + &delta * lambda;
            if let Some(rc) = residual(&candidate) {
                let rcn = rc.norm();
                if rcn.is_finite() && rcn < rn {
                    x = candidate;
                    r = rc;
                    rn = rcn;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < cfg.min_damping {
                // no further decrease available; accept if already converged
                return if rn <= cfg.tolerance {
                    Ok(NewtonSolution {
                        point: x,
                        residual: rn,
                        iterations: it + 1,
                    })
                } else {
                    Err(failure("line search stalled", &x, rn, it + 1))
                };
            }
        }
    }
    if rn <= cfg.tolerance {
        Ok(NewtonSolution {
            point: x,
            residual: rn,
            iterations: cfg.max_iterations,
        })
    } else {
        Err(failure("iteration limit reached", &x, rn, cfg.max_iterations))
    }
}

/// Central-difference Jacobian, falling back to one-sided differences
/// next to the boundary of the admissible region.
pub(crate) fn fd_jacobian<F>(residual: &F, x: &DVector<f64>, rel_step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let f0 = residual(x)?;
    let mut jac = DMatrix::zeros(f0.len(), x.len());
    let mut p = x.clone();
    for i in 0..x.len() {
        let h = rel_step * (1.0 + x[i].abs());
        p[i] = x[i] + h;
        let up = residual(&p);
        p[i] = x[i] - h;
        let down = residual(&p);
        p[i] = x[i];
        let col = match (up, down) {
            (Some(u), Some(d)) => (u - d) / (2.0 * h),
            (Some(u), None) => (u - &f0) / h,
            (None, Some(d)) => (&f0 - d) / h,
            (None, None) => return None,
        };
        jac.set_column(i, &col);
    }
    Some(jac)
}
