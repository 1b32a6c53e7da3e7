//! `simulate`: trajectories with invariant and defect columns.

use std::path::Path;

use cmotion::dynamics::{detect_fixed_point, orbit};
use cmotion::invariants::Invariant;
use cmotion::{MapInstance, MapKind, PreciseAltPlay, State};
use rayon::prelude::*;
use serde::Serialize;

use super::invariant_for;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{indexed_name, write_json, write_trajectory, TrajectoryRow};

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub csv: String,
    pub initial_state: Vec<f64>,
    pub final_state: Vec<f64>,
    pub rows: usize,
    pub max_defect: f64,
    pub fixed_point: bool,
    pub fixed_point_at: Option<i64>,
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub map: String,
    pub invariant: String,
    pub steps: usize,
    pub backward_steps: usize,
    pub max_defect: f64,
    pub runs: Vec<RunSummary>,
}

struct Trajectory {
    rows: Vec<TrajectoryRow>,
    max_defect: f64,
    fixed_point_at: Option<i64>,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let map = cfg.map.build()?;
    let states = cfg.states(&map)?;
    if states.is_empty() {
        return Err(CliError::config("/initial_states", "at least one initial state is required"));
    }
    let phi = invariant_for(cfg, &map)?;
    let mut runs = Vec::with_capacity(states.len());
    for (i, x) in states.iter().enumerate() {
        let traj = trajectory(cfg, &map, phi.as_ref(), x)?;
        let name = indexed_name(&cfg.output.csv, i, states.len());
        write_trajectory(&out.join(&name), map.dimension(), &traj.rows)?;
        let last = traj.rows.last().expect("a trajectory has its origin row");
        runs.push(RunSummary {
            csv: name,
            initial_state: x.coords().to_vec(),
            final_state: last.coords.clone(),
            rows: traj.rows.len(),
            max_defect: traj.max_defect,
            fixed_point: traj.fixed_point_at.is_some(),
            fixed_point_at: traj.fixed_point_at,
        });
    }
    let summary = SimulateSummary {
        map: map.describe(),
        invariant: phi.label(),
        steps: cfg.steps,
        backward_steps: cfg.backward_steps,
        max_defect: runs.iter().map(|r| r.max_defect).fold(0.0, f64::max),
        runs,
    };
    write_json(&out.join(&cfg.output.json), &summary)
}

fn trajectory(cfg: &RunConfig, map: &MapInstance, phi: &dyn Invariant, x: &State) -> Result<Trajectory, CliError> {
    if map.kind() == MapKind::AltPlay {
        return precise_trajectory(cfg, map, x);
    }
    let seg = orbit(map, x, cfg.steps, cfg.backward_steps, &cfg.tolerances.orbit_config())?;
    let states: Vec<(i64, &State)> = seg.iter().collect();
    let values: Vec<f64> = states
        .par_iter()
        .map(|(k, s)| {
            let v = phi.evaluate(map, s).map_err(|e| CliError::from(e.at(*k)))?;
            Ok(v.value.unwrap_or(f64::NAN))
        })
        .collect::<Result<_, CliError>>()?;
    let phi0 = values[states.iter().position(|(k, _)| *k == 0).expect("origin row")];
    let rows: Vec<TrajectoryRow> = states
        .iter()
        .zip(&values)
        .map(|((k, s), v)| TrajectoryRow {
            t: *k,
            coords: s.coords().to_vec(),
            f: map.objective_value(s),
            phi: *v,
            defect: (v - phi0).abs() / (1.0 + phi0.abs()),
        })
        .collect();
    Ok(Trajectory {
        max_defect: rows.iter().map(|r| r.defect).fold(0.0, f64::max),
        rows,
        fixed_point_at: seg.fixed_point_at,
    })
}

fn precise_trajectory(cfg: &RunConfig, map: &MapInstance, x: &State) -> Result<Trajectory, CliError> {
    let engine = PreciseAltPlay::from_map(map).expect("alternating play has a precise engine");
    let fixed = detect_fixed_point(map, x, cfg.tolerances.fixed_point)?;
    let (forward, backward) = if fixed { (0, 0) } else { (cfg.steps, cfg.backward_steps) };
    let orbit = engine.run(x.coords(), forward, backward)?;
    let rows = orbit
        .rows
        .into_iter()
        .map(|r| {
            let f = match State::new(r.coords.clone(), map.chart().clone()) {
                Ok(s) => map.objective_value(&s),
                Err(_) => f64::NAN,
            };
            TrajectoryRow {
                t: r.t,
                coords: r.coords,
                f,
                phi: r.phi,
                defect: r.defect,
            }
        })
        .collect();
    Ok(Trajectory {
        rows,
        max_defect: orbit.max_defect,
        fixed_point_at: fixed.then_some(0),
    })
}
