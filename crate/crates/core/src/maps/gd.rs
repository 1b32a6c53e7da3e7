use nalgebra::{DMatrix, DVector};

use super::{MapInstance, StepOutcome};
use crate::dynamics::InverseConfig;
use crate::error::{Error, Result};
use crate::newton::damped_newton;
use crate::objectives::ObjectiveSpec;
use crate::state::State;

/// `x − η∇f(x)`.
pub fn gd_step(obj: &ObjectiveSpec, eta: f64, x: &State) -> Result<State> {
    step(obj, eta, x).map(|o| o.state)
}

pub(super) fn step(obj: &ObjectiveSpec, eta: f64, x: &State) -> Result<StepOutcome> {
    let g = obj.gradient(x.coords());
    let next: Vec<f64> = x.coords().iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("gradient step overflowed".into()));
    }
    Ok(StepOutcome {
        state: x.with_coords(next)?,
        renorm_defect: 0.0,
    })
}

/// Solves `y − η∇f(y) = x` with Jacobian `I − η∇²f(y)`, starting from the
/// first-order guess `x + η∇f(x)`.
pub(super) fn inverse(map: &MapInstance, x: &State, cfg: &InverseConfig) -> Result<State> {
    let obj = map.objective();
    let eta = map.step_sizes()[0];
    let target = DVector::from_column_slice(x.coords());
    let d = x.dim();
    let residual = |y: &DVector<f64>| {
        let g = obj.gradient(y.as_slice());
        let r = DVector::from_iterator(d, (0..d).map(|i| y[i] - eta * g[i] - target[i]));
        r.iter().all(|v| v.is_finite()).then_some(r)
    };
    let jacobian = |y: &DVector<f64>| Some(DMatrix::identity(d, d) - obj.hessian_or_fd(y.as_slice()) * eta);
    let g0 = obj.gradient(x.coords());
    let y0 = DVector::from_iterator(d, (0..d).map(|i| x.coords()[i] + eta * g0[i]));
    let sol = damped_newton(residual, jacobian, y0, cfg)?;
    let y: Vec<f64> = sol.point.iter().copied().collect();
    if !obj.in_region(&y) {
        return Err(Error::Inversion {
            reason: "preimage left the declared working region".into(),
            last_iterate: y,
            residual: sol.residual,
            iterations: sol.iterations,
        });
    }
    x.with_coords(y)
}
