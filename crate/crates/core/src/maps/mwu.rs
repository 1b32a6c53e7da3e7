use nalgebra::DVector;

use super::{MapInstance, MapKind, StepOutcome};
use crate::dynamics::InverseConfig;
use crate::error::{Error, Result};
use crate::newton::{damped_newton, fd_jacobian};
use crate::objectives::{ObjectiveSpec, Region};
use crate::sampling::seeded;
use crate::state::{Chart, State};

fn blocks_of(x: &State) -> Result<Vec<std::ops::Range<usize>>> {
    match x.chart() {
        Chart::SimplexProduct { .. } => Ok(x.chart().block_ranges(x.dim())),
        c => Err(Error::Domain(format!("multiplicative weights need a simplex product, got {}", c.name()))),
    }
}

fn check_rates(eps: &[f64], blocks: usize) -> Result<()> {
    if eps.len() != blocks {
        return Err(Error::InvalidParameter(format!("{} learning rates for {blocks} agents", eps.len())));
    }
    Ok(())
}

/// Divides every block by its sum; returns the largest `|sum − 1|` seen.
fn renormalize(v: &mut [f64], ranges: &[std::ops::Range<usize>]) -> f64 {
    let mut defect = 0.0_f64;
    for r in ranges {
        let s: f64 = v[r.clone()].iter().sum();
        defect = defect.max((s - 1.0).abs());
        v[r.clone()].iter_mut().for_each(|c| *c /= s);
    }
    defect
}

/// Multiplicative weights with exponential factors `exp(−εᵢ ∂f/∂x_ij)`.
pub fn mwu_exp_step(obj: &ObjectiveSpec, eps: &[f64], x: &State) -> Result<State> {
    step_exp(obj, eps, x).map(|o| o.state)
}

/// Multiplicative weights with linear factors `1 − εᵢ ∂f/∂x_ij`.
pub fn mwu_lin_step(obj: &ObjectiveSpec, eps: &[f64], x: &State) -> Result<State> {
    step_lin(obj, eps, x).map(|o| o.state)
}

pub(super) fn step_exp(obj: &ObjectiveSpec, eps: &[f64], x: &State) -> Result<StepOutcome> {
    let ranges = blocks_of(x)?;
    check_rates(eps, ranges.len())?;
    let next = exp_update(obj, eps, &ranges, x.coords());
    finish(x, next, &ranges)
}

pub(super) fn step_lin(obj: &ObjectiveSpec, eps: &[f64], x: &State) -> Result<StepOutcome> {
    let ranges = blocks_of(x)?;
    check_rates(eps, ranges.len())?;
    let g = obj.gradient(x.coords());
    let c = x.coords();
    let mut next = vec![0.0; c.len()];
    for (b, r) in ranges.iter().enumerate() {
        let e = eps[b];
        for (j, i) in r.clone().enumerate() {
            let factor = 1.0 - e * g[i];
            if factor <= 0.0 {
                return Err(Error::StepSize {
                    block: b,
                    coordinate: j,
                    factor,
                });
            }
        }
        let denom = 1.0 - e * r.clone().map(|s| c[s] * g[s]).sum::<f64>();
        for i in r.clone() {
            next[i] = c[i] * (1.0 - e * g[i]) / denom;
        }
    }
    finish(x, next, &ranges)
}

fn exp_update(obj: &ObjectiveSpec, eps: &[f64], ranges: &[std::ops::Range<usize>], c: &[f64]) -> Vec<f64> {
    let g = obj.gradient(c);
    let mut next = vec![0.0; c.len()];
    for (b, r) in ranges.iter().enumerate() {
        let e = eps[b];
        // shift the exponent so the largest weight is exp(0)
        let shift = r.clone().map(|i| e * g[i]).fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = r.clone().map(|i| c[i] * (-(e * g[i] - shift)).exp()).collect();
        let z: f64 = w.iter().sum();
        for (k, i) in r.clone().enumerate() {
            next[i] = w[k] / z;
        }
    }
    next
}

fn finish(x: &State, mut next: Vec<f64>, ranges: &[std::ops::Range<usize>]) -> Result<StepOutcome> {
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("multiplicative update is not finite".into()));
    }
    let renorm_defect = renormalize(&mut next, ranges);
    Ok(StepOutcome {
        state: x.with_coords(next)?,
        renorm_defect,
    })
}

/// The update formula applied to an unnormalized positive vector; outputs
/// sum to one per block. `None` off the positive orthant or when a linear
/// factor is non-positive.
fn ambient_update(kind: MapKind, obj: &ObjectiveSpec, eps: &[f64], ranges: &[std::ops::Range<usize>], y: &[f64]) -> Option<Vec<f64>> {
    if y.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let g = obj.gradient(y);
    let mut out = vec![0.0; y.len()];
    for (b, r) in ranges.iter().enumerate() {
        let e = eps[b];
        let w: Vec<f64> = match kind {
            MapKind::MwuExp => {
                let shift = r.clone().map(|i| e * g[i]).fold(f64::INFINITY, f64::min);
                r.clone().map(|i| y[i] * (-(e * g[i] - shift)).exp()).collect()
            }
            _ => {
                let w: Vec<f64> = r.clone().map(|i| y[i] * (1.0 - e * g[i])).collect();
                if w.iter().any(|v| *v <= 0.0) {
                    return None;
                }
                w
            }
        };
        let z: f64 = w.iter().sum();
        for (k, i) in r.clone().enumerate() {
            out[i] = w[k] / z;
        }
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Newton in ambient coordinates on `T̃(y) − x + (block sums − 1)`; the
/// extra term pins the scale the update itself ignores. The solution is
/// renormalized blockwise. Leaving the open simplex is a failure.
pub(super) fn inverse(map: &MapInstance, x: &State, cfg: &InverseConfig) -> Result<State> {
    let ranges = blocks_of(x)?;
    let eps = map.step_sizes();
    let obj = map.objective();
    let kind = map.kind();
    if let Some(i) = x.coords().iter().position(|v| *v <= 0.0) {
        return Err(Error::Inversion {
            reason: format!("coordinate {i} is on the simplex boundary; preimages need an interior state"),
            last_iterate: x.coords().to_vec(),
            residual: f64::NAN,
            iterations: 0,
        });
    }
    let target = x.coords();
    let residual = |y: &DVector<f64>| {
        let t = ambient_update(kind, obj, eps, &ranges, y.as_slice())?;
        let mut r = DVector::from_iterator(t.len(), t.iter().zip(target).map(|(a, b)| a - b));
        for rg in &ranges {
            let s: f64 = rg.clone().map(|i| y[i]).sum::<f64>() - 1.0;
            let n = rg.len() as f64;
            for i in rg.clone() {
                r[i] += s / n;
            }
        }
        Some(r)
    };
    let jacobian = |y: &DVector<f64>| fd_jacobian(&residual, y, 1e-7);

    // first-order guess: undo the multiplicative factor at x
    let g = obj.gradient(target);
    let mut y0: Vec<f64> = Vec::with_capacity(target.len());
    for (b, r) in ranges.iter().enumerate() {
        for i in r.clone() {
            y0.push(target[i] * (eps[b] * g[i]).clamp(-50.0, 50.0).exp());
        }
    }
    renormalize(&mut y0, &ranges);

    let sol = damped_newton(residual, jacobian, DVector::from_vec(y0), cfg)?;
    let mut y: Vec<f64> = sol.point.iter().copied().collect();
    if y.iter().any(|v| *v <= 0.0) {
        return Err(Error::Inversion {
            reason: "Newton iterate left the simplex interior".into(),
            last_iterate: y,
            residual: sol.residual,
            iterations: sol.iterations,
        });
    }
    renormalize(&mut y, &ranges);
    let pre = x.with_coords(y)?;
    let image = map.step(&pre)?;
    let err = image.distance(x);
    if err > cfg.tolerance {
        return Err(Error::Inversion {
            reason: "renormalized preimage misses the target".into(),
            last_iterate: pre.into_coords(),
            residual: err,
            iterations: sol.iterations,
        });
    }
    Ok(pre)
}

/// Checks the map is a local diffeomorphism at `samples` interior points:
/// every step succeeds (linear factors positive) and the Jacobian of the
/// map in reduced coordinates (last coordinate of each block dropped) has
/// positive determinant.
pub fn local_diffeomorphism_spot_check(map: &MapInstance, samples: usize, seed: u64) -> Result<bool> {
    let blocks = match map.chart() {
        Chart::SimplexProduct { blocks } => blocks.clone(),
        _ => return Err(Error::Domain("spot check needs a simplex-product map".into())),
    };
    let region = Region::SimplexProduct { blocks: blocks.clone() };
    let reduced_dim: usize = blocks.iter().map(|b| b - 1).sum();
    let mut rng = seeded(seed);
    let expand = |r: &[f64]| -> Vec<f64> {
        let mut full = Vec::with_capacity(map.dimension());
        let mut k = 0;
        for &b in &blocks {
            let part = &r[k..k + b - 1];
            full.extend_from_slice(part);
            full.push(1.0 - part.iter().sum::<f64>());
            k += b - 1;
        }
        full
    };
    let reduce = |full: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(reduced_dim);
        let mut k = 0;
        for &b in &blocks {
            out.extend_from_slice(&full[k..k + b - 1]);
            k += b;
        }
        out
    };
    for _ in 0..samples {
        let x = region.sample(&mut rng, map.dimension());
        if x.iter().any(|v| *v < 1e-6) {
            continue;
        }
        let state = State::simplex(x.clone(), blocks.clone())?;
        map.step(&state)?;
        if reduced_dim == 0 {
            continue;
        }
        let f = |r: &DVector<f64>| {
            let full = expand(r.as_slice());
            if full.iter().any(|v| *v <= 0.0) {
                return None;
            }
            let s = State::simplex_normalized(full, blocks.clone()).ok()?;
            let img = map.step(&s).ok()?;
            Some(DVector::from_vec(reduce(img.coords())))
        };
        let jac = fd_jacobian(&f, &DVector::from_vec(reduce(&x)), 1e-7)
            .ok_or_else(|| Error::Domain("Jacobian unavailable at sample".into()))?;
        if jac.determinant() <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}
