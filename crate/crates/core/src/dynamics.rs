//! Forward and backward iteration of a map.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::maps::MapInstance;
use crate::state::{FixedPointSet, OrbitSegment, State};

pub const DEFAULT_FIXED_POINT_TOLERANCE: f64 = 1e-10;

/// Controls for the Newton inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseConfig {
    /// Required `‖T(y) − x‖` of the returned preimage.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Smallest backtracking factor tried before giving up.
    pub min_damping: f64,
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig {
            tolerance: 1e-12,
            max_iterations: 100,
            min_damping: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub inverse: InverseConfig,
    pub fixed_point_tolerance: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            inverse: InverseConfig::default(),
            fixed_point_tolerance: DEFAULT_FIXED_POINT_TOLERANCE,
        }
    }
}

/// `T(x)`.
pub fn step(map: &MapInstance, x: &State) -> Result<State> {
    map.step(x)
}

/// `T⁻¹(x)` with `‖T(y) − x‖ ≤ cfg.tolerance`.
pub fn inverse_step(map: &MapInstance, x: &State, cfg: &InverseConfig) -> Result<State> {
    map.inverse(x, cfg)
}

/// Whether `‖T(x) − x‖ ≤ tol`.
pub fn detect_fixed_point(map: &MapInstance, x: &State, tol: f64) -> Result<bool> {
    Ok(map.step(x)?.distance(x) <= tol)
}

/// Materializes `T^{-n_backward}x, …, T^{n_forward}x`.
///
/// Iteration in a direction stops early once the current state is a fixed
/// point; `fixed_point_at` records the index. Step and inversion failures
/// carry the index at which they happened.
pub fn orbit(map: &MapInstance, x: &State, n_forward: usize, n_backward: usize, cfg: &OrbitConfig) -> Result<OrbitSegment> {
    let mut seg = OrbitSegment {
        origin: x.clone(),
        forward: Vec::with_capacity(n_forward),
        backward: Vec::with_capacity(n_backward),
        map_id: map.describe(),
        fixed_point_at: None,
    };
    if n_forward == 0 && n_backward == 0 {
        return Ok(seg);
    }
    if detect_fixed_point(map, x, cfg.fixed_point_tolerance).map_err(|e| e.at(0))? {
        seg.fixed_point_at = Some(0);
        return Ok(seg);
    }
    let mut current = x.clone();
    for k in 1..=n_forward {
        let next = map.step(&current).map_err(|e| e.at(k as i64 - 1))?;
        let fixed = next.distance(&current) <= cfg.fixed_point_tolerance;
        seg.forward.push(next.clone());
        current = next;
        if fixed && detect_fixed_point(map, &current, cfg.fixed_point_tolerance).map_err(|e| e.at(k as i64))? {
            seg.fixed_point_at = Some(k as i64);
            break;
        }
    }
    let mut current = x.clone();
    for k in 1..=n_backward {
        let prev = map.inverse(&current, &cfg.inverse).map_err(|e| e.at(-(k as i64)))?;
        let fixed = prev.distance(&current) <= cfg.fixed_point_tolerance;
        seg.backward.push(prev.clone());
        current = prev;
        if fixed {
            seg.fixed_point_at.get_or_insert(-(k as i64));
            break;
        }
    }
    Ok(seg)
}

/// Runs each seed forward for up to `max_iter` steps and collects the
/// fixed points reached.
pub fn find_fixed_points(map: &MapInstance, seeds: &[State], max_iter: usize, tol: f64) -> Result<FixedPointSet> {
    let mut set = FixedPointSet::new(tol);
    for seed in seeds {
        let mut x = seed.clone();
        for _ in 0..=max_iter {
            let next = map.step(&x)?;
            if next.distance(&x) <= tol {
                set.insert(x);
                break;
            }
            x = next;
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{ObjectiveSpec, PayoffData};

    fn double_well() -> MapInstance {
        MapInstance::gd(ObjectiveSpec::double_well(1), 0.1).unwrap()
    }

    #[test]
    fn gd_step_and_inverse_on_quadratic() {
        let map = MapInstance::gd(ObjectiveSpec::quadratic(1), 0.1).unwrap();
        let y = step(&map, &State::euclidean(vec![2.0])).unwrap();
        assert!((y.coords()[0] - 1.8).abs() < 1e-15);
        let x = inverse_step(&map, &State::euclidean(vec![1.8]), &InverseConfig::default()).unwrap();
        assert!((x.coords()[0] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn alt_play_step_and_closed_form_inverse() {
        let map = MapInstance::alt_play(PayoffData::scalar(1.0), 0.1, 0.2).unwrap();
        let y = step(&map, &State::bipartite(&[60.0], &[-25.0])).unwrap();
        assert_eq!(y.coords(), &[57.5, -13.5]);
        let x = inverse_step(&map, &y, &InverseConfig::default()).unwrap();
        assert_eq!(x.coords(), &[60.0, -25.0]);
    }

    #[test]
    fn empty_orbit_is_just_the_origin() {
        let seg = orbit(&double_well(), &State::euclidean(vec![0.5]), 0, 0, &OrbitConfig::default()).unwrap();
        assert_eq!(seg.len(), 1);
        assert_eq!(seg.fixed_point_at, None);
    }

    #[test]
    fn double_well_orbit_limits() {
        let seg = orbit(&double_well(), &State::euclidean(vec![0.5]), 200, 200, &OrbitConfig::default()).unwrap();
        assert!((seg.forward_end().coords()[0] - 1.0).abs() < 1e-8);
        assert!(seg.backward_end().coords()[0].abs() < 1e-6);
        assert_eq!(seg.backward.len(), 200);
        // forward iteration settles on the minimizer before 200 steps
        let k = seg.fixed_point_at.unwrap();
        assert!(k > 0 && (k as usize) == seg.forward.len());
    }

    #[test]
    fn orbit_through_fixed_point_is_constant() {
        let seg = orbit(&double_well(), &State::euclidean(vec![1.0]), 5, 5, &OrbitConfig::default()).unwrap();
        assert_eq!(seg.fixed_point_at, Some(0));
        assert!(seg.iter().all(|(_, s)| s.coords() == [1.0]));
    }

    #[test]
    fn fixed_point_detection() {
        let map = double_well();
        assert!(detect_fixed_point(&map, &State::euclidean(vec![1.0]), 1e-10).unwrap());
        assert!(detect_fixed_point(&map, &State::euclidean(vec![0.0]), 1e-10).unwrap());
        assert!(!detect_fixed_point(&map, &State::euclidean(vec![0.5]), 1e-9).unwrap());
        let gap = step(&map, &State::euclidean(vec![0.5])).unwrap().coords()[0] - 0.5;
        assert!((gap - 0.0375).abs() < 1e-15);

        let lin = ObjectiveSpec::linear_on_simplices(vec![0.7, 0.7, 0.7], vec![3]);
        let mwu = MapInstance::mwu_exp(lin, vec![3], vec![0.5]).unwrap();
        let uniform = State::simplex(vec![1.0 / 3.0; 3], vec![3]).unwrap();
        assert!(detect_fixed_point(&mwu, &uniform, 1e-15).unwrap());
    }

    #[test]
    fn backward_orbit_leaving_region_fails_with_index() {
        let map = double_well();
        let err = orbit(&map, &State::euclidean(vec![1.45]), 0, 10, &OrbitConfig::default()).unwrap_err();
        assert_eq!(err.index(), Some(-1));
        assert!(matches!(err.root(), crate::Error::Inversion { .. }));
    }

    #[test]
    fn collects_distinct_fixed_points() {
        let map = double_well();
        let seeds = [0.3, 0.7, -0.4, 1.2, 0.0].map(|v| State::euclidean(vec![v]));
        let set = find_fixed_points(&map, &seeds, 2000, 1e-12).unwrap();
        let mut pts: Vec<f64> = set.points.iter().map(|p| p.coords()[0]).collect();
        pts.sort_by(f64::total_cmp);
        assert_eq!(pts.len(), 3);
        assert!((pts[0] + 1.0).abs() < 1e-10 && pts[1].abs() < 1e-12 && (pts[2] - 1.0).abs() < 1e-10);
    }
}
