use nalgebra::{DMatrix, DVector};

use super::{MapInstance, StepOutcome};
use crate::dynamics::InverseConfig;
use crate::error::{Error, Result};
use crate::newton::{damped_newton, fd_jacobian};
use crate::objectives::ObjectiveSpec;
use crate::state::{dot, norm, State};

/// `(I − xxᵀ)∇f(x)`.
pub fn riemannian_gradient(obj: &ObjectiveSpec, x: &[f64]) -> Vec<f64> {
    let g = obj.gradient(x);
    let gx = dot(&g, x);
    g.iter().zip(x).map(|(gi, xi)| gi - gx * xi).collect()
}

/// Metric-projection retraction `(x + s)/‖x + s‖`.
pub fn retract(x: &[f64], s: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + b).collect();
    let n = norm(&v);
    v.into_iter().map(|c| c / n).collect()
}

/// `Retr_x(−η grad f(x))`.
pub fn rgd_sphere_step(obj: &ObjectiveSpec, eta: f64, x: &State) -> Result<State> {
    step(obj, eta, x).map(|o| o.state)
}

pub(super) fn step(obj: &ObjectiveSpec, eta: f64, x: &State) -> Result<StepOutcome> {
    let grad = riemannian_gradient(obj, x.coords());
    let s: Vec<f64> = grad.iter().map(|g| -eta * g).collect();
    // ‖x + s‖² = 1 + ‖s‖² for tangent s, so the retraction is always defined
    let mut y = retract(x.coords(), &s);
    let n = norm(&y);
    let renorm_defect = (n - 1.0).abs();
    y.iter_mut().for_each(|c| *c /= n);
    Ok(StepOutcome {
        state: x.with_coords(y)?,
        renorm_defect,
    })
}

/// Orthonormal basis of the tangent space at unit `x`, from the columns of
/// the Householder reflection that sends a coordinate axis to `±x`.
pub(crate) fn tangent_basis(x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let (k, _) = x
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bk, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bk, bv) });
    let mut v = DVector::from_column_slice(x);
    // v = x + sign(x_k) e_k, never close to zero since |x_k| ≥ 1/√d
    v[k] += if x[k] >= 0.0 { 1.0 } else { -1.0 };
    let vv = v.dot(&v);
    let h = DMatrix::identity(d, d) - (&v * v.transpose()) * (2.0 / vv);
    let cols: Vec<DVector<f64>> = (0..d).filter(|&j| j != k).map(|j| h.column(j).into_owned()).collect();
    DMatrix::from_columns(&cols)
}

/// Newton in the tangent chart at `x`: solve `T(Retr_x(Bc)) = x` for the
/// tangent coordinates `c`, `B` an orthonormal tangent basis.
pub(super) fn inverse(map: &MapInstance, x: &State, cfg: &InverseConfig) -> Result<State> {
    let d = x.dim();
    if d < 2 {
        return Err(Error::Domain("sphere needs at least two ambient dimensions".into()));
    }
    let obj = map.objective();
    let eta = map.step_sizes()[0];
    let basis = tangent_basis(x.coords());
    let xv = DVector::from_column_slice(x.coords());
    let chart = |c: &DVector<f64>| -> Vec<f64> {
        let s = &basis * c;
        retract(x.coords(), s.as_slice())
    };
    let image = |c: &DVector<f64>| -> Option<DVector<f64>> {
        let y = chart(c);
        let s: Vec<f64> = riemannian_gradient(obj, &y).iter().map(|g| -eta * g).collect();
        let t = retract(&y, &s);
        t.iter().all(|v| v.is_finite()).then(|| DVector::from_vec(t))
    };
    let residual = |c: &DVector<f64>| {
        let t = image(c)?;
        if t.dot(&xv) <= 0.0 {
            return None;
        }
        Some(basis.transpose() * (t - &xv))
    };
    let jacobian = |c: &DVector<f64>| fd_jacobian(&residual, c, 1e-7);
    let grad = DVector::from_vec(riemannian_gradient(obj, x.coords()));
    let c0 = basis.transpose() * grad * eta;
    let sol = damped_newton(residual, jacobian, c0, cfg)?;
    let y = chart(&sol.point);
    let pre = x.with_coords(y)?;
    let err = map.step(&pre)?.distance(x);
    if err > cfg.tolerance {
        return Err(Error::Inversion {
            reason: "tangent-chart preimage misses the target".into(),
            last_iterate: pre.into_coords(),
            residual: err,
            iterations: sol.iterations,
        });
    }
    Ok(pre)
}
