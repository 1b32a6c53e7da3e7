//! `figures`: trajectories and level curves of `Φ(x, y) = x²/η₁ − y²/η₂ + xy`
//! for the two reference alternating-play examples.

use std::path::Path;

use cmotion::invariants::bipartite_phi;
use cmotion::objectives::PayoffData;
use cmotion::{MapInstance, PreciseAltPlay};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{cell, write_json, write_trajectory, TrajectoryRow};
use crate::Figure;

pub const DEFAULT_STEPS: usize = 30;
const GRID: usize = 401;
const MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureSpec {
    pub name: &'static str,
    pub eta1: f64,
    pub eta2: f64,
    pub initial_states: Vec<[f64; 2]>,
    /// Published level of each trajectory.
    pub levels: Vec<f64>,
}

pub fn spec(which: Figure) -> FigureSpec {
    match which {
        Figure::Fig1 => FigureSpec {
            name: "fig1",
            eta1: 0.1,
            eta2: 0.2,
            initial_states: vec![[60.0, -25.0], [-20.0, 2.0], [10.0, -50.0]],
            levels: vec![31375.0, 3940.0, -12000.0],
        },
        Figure::Fig2 => FigureSpec {
            name: "fig2",
            eta1: 0.05,
            eta2: 0.02,
            initial_states: vec![[-14.0, -5.0], [5.0, -10.0], [5.0, -15.0]],
            levels: vec![2740.0, -4550.0, -10825.0],
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelPoint {
    pub curve: usize,
    pub c: f64,
    pub x: f64,
    pub y: f64,
    pub residual: f64,
}

#[derive(Debug, Serialize)]
pub struct TrajectoryInfo {
    pub csv: String,
    pub initial_state: [f64; 2],
    pub level: f64,
    pub phi0: f64,
    pub max_defect: f64,
}

#[derive(Debug, Serialize)]
pub struct FigureSummary {
    pub figure: &'static str,
    pub eta1: f64,
    pub eta2: f64,
    pub steps: usize,
    pub trajectories: Vec<TrajectoryInfo>,
    pub level_curves: String,
    pub level_points: Vec<usize>,
    /// Grid roots discarded for exceeding the residual bound.
    pub rejected_points: usize,
    pub bounds: [f64; 4],
}

/// Solves `a r² + b r + c = 0` without cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a == 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return if c == 0.0 { vec![0.0] } else { Vec::new() };
    }
    let (r1, r2) = (q / a, c / q);
    if r1 == r2 {
        vec![r1]
    } else {
        vec![r1, r2]
    }
}

/// Points of `{Φ = c}` inside `bounds = [x0, x1, y0, y1]`, found by solving
/// for `y` along a grid in `x` and for `x` along a grid in `y`. Returns the
/// accepted points and the number rejected by the residual bound.
pub fn level_curve(eta1: f64, eta2: f64, c: f64, curve: usize, bounds: [f64; 4]) -> (Vec<LevelPoint>, usize) {
    let payoff = PayoffData::scalar(1.0);
    let phi = |x: f64, y: f64| bipartite_phi(&payoff, eta1, eta2, &[x, y]);
    let bound = 1e-9 * (1.0 + c.abs());
    let [x0, x1, y0, y1] = bounds;
    let inside = |x: f64, y: f64| x0 <= x && x <= x1 && y0 <= y && y <= y1;
    let mut points = Vec::new();
    let mut rejected = 0;
    let mut accept = |x: f64, y: f64| {
        if !inside(x, y) {
            return;
        }
        let residual = phi(x, y) - c;
        if residual.abs() <= bound {
            points.push(LevelPoint { curve, c, x, y, residual });
        } else {
            rejected += 1;
        }
    };
    let grid = |lo: f64, hi: f64| (0..GRID).map(move |i| lo + (hi - lo) * i as f64 / (GRID - 1) as f64);
    for x in grid(x0, x1) {
        // −y²/η₂ + x·y + (x²/η₁ − c) = 0
        for y in quadratic_roots(-1.0 / eta2, x, x * x / eta1 - c) {
            let d = x - 2.0 * y / eta2;
            let y = if d != 0.0 { y - (phi(x, y) - c) / d } else { y };
            accept(x, y);
        }
    }
    for y in grid(y0, y1) {
        // x²/η₁ + y·x + (−y²/η₂ − c) = 0
        for x in quadratic_roots(1.0 / eta1, y, -y * y / eta2 - c) {
            let d = 2.0 * x / eta1 + y;
            let x = if d != 0.0 { x - (phi(x, y) - c) / d } else { x };
            accept(x, y);
        }
    }
    (points, rejected)
}

pub fn run(which: Figure, steps: usize, out: &Path) -> Result<(), CliError> {
    let fig = spec(which);
    let dir = out.join(fig.name);
    std::fs::create_dir_all(&dir)?;
    let map = MapInstance::alt_play(PayoffData::scalar(1.0), fig.eta1, fig.eta2)?;
    let engine = PreciseAltPlay::from_map(&map).expect("alternating play has a precise engine");

    let mut trajectories = Vec::new();
    let mut bounds = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for (i, (z, level)) in fig.initial_states.iter().zip(&fig.levels).enumerate() {
        let orbit = engine.run(z, steps, steps)?;
        let rows: Vec<TrajectoryRow> = orbit
            .rows
            .iter()
            .map(|r| TrajectoryRow {
                t: r.t,
                coords: r.coords.clone(),
                f: r.coords[0] * r.coords[1],
                phi: r.phi,
                defect: r.defect,
            })
            .collect();
        for r in rows.iter().filter(|r| r.coords.iter().all(|c| c.is_finite())) {
            bounds[0] = bounds[0].min(r.coords[0]);
            bounds[1] = bounds[1].max(r.coords[0]);
            bounds[2] = bounds[2].min(r.coords[1]);
            bounds[3] = bounds[3].max(r.coords[1]);
        }
        let name = format!("trajectory_{i}.csv");
        write_trajectory(&dir.join(&name), 2, &rows)?;
        trajectories.push(TrajectoryInfo {
            csv: name,
            initial_state: *z,
            level: *level,
            phi0: orbit.row(0).expect("origin row").phi,
            max_defect: orbit.max_defect,
        });
    }
    let (wx, wy) = (bounds[1] - bounds[0], bounds[3] - bounds[2]);
    bounds = [
        bounds[0] - MARGIN * wx,
        bounds[1] + MARGIN * wx,
        bounds[2] - MARGIN * wy,
        bounds[3] + MARGIN * wy,
    ];

    let mut w = csv::Writer::from_path(dir.join("level_curves.csv"))?;
    w.write_record(["curve", "c", "x", "y", "residual"])?;
    let mut level_points = Vec::new();
    let mut rejected_points = 0;
    for (i, &c) in fig.levels.iter().enumerate() {
        let (points, rejected) = level_curve(fig.eta1, fig.eta2, c, i, bounds);
        for p in &points {
            w.write_record([p.curve.to_string(), cell(p.c), cell(p.x), cell(p.y), cell(p.residual)])?;
        }
        level_points.push(points.len());
        rejected_points += rejected;
    }
    w.flush()?;

    let summary = FigureSummary {
        figure: fig.name,
        eta1: fig.eta1,
        eta2: fig.eta2,
        steps,
        trajectories,
        level_curves: "level_curves.csv".into(),
        level_points,
        rejected_points,
        bounds,
    };
    write_json(&dir.join("summary.json"), &summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_roots_of_a_quadratic() {
        let mut r = quadratic_roots(1.0, -3.0, 2.0);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![1.0, 2.0]);
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_empty());
        let tiny = quadratic_roots(1.0, 1e8, 1.0);
        assert!(tiny.iter().any(|r| (r + 1e-8).abs() < 1e-22));
    }

    #[test]
    fn reference_levels_match_the_initial_conditions() {
        for which in [Figure::Fig1, Figure::Fig2] {
            let f = spec(which);
            for (z, c) in f.initial_states.iter().zip(&f.levels) {
                assert_eq!(bipartite_phi(&PayoffData::scalar(1.0), f.eta1, f.eta2, z), *c);
            }
        }
    }

    #[test]
    fn level_curve_points_satisfy_the_equation() {
        let (pts, rejected) = level_curve(0.1, 0.2, 31375.0, 0, [-200.0, 200.0, -200.0, 200.0]);
        assert!(pts.len() > 100);
        assert_eq!(rejected, 0);
        assert!(pts.iter().all(|p| p.residual.abs() <= 1e-9 * 31376.0));
    }
}
