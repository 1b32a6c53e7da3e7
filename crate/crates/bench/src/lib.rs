//! Shared fixtures for the benchmarks.

use cmotion::objectives::{ObjectiveSpec, PayoffData};
use cmotion::sampling::{random_game, seeded, GameBounds};
use cmotion::{MapInstance, State};

pub fn fig1_map() -> MapInstance {
    MapInstance::alt_play(PayoffData::scalar(1.0), 0.1, 0.2).expect("valid step sizes")
}

pub fn double_well_map() -> MapInstance {
    MapInstance::gd(ObjectiveSpec::double_well(1), 0.1).expect("validated step size")
}

pub fn mwu_map() -> MapInstance {
    let obj = ObjectiveSpec::linear_on_simplices(vec![0.3, -0.2, 0.5, 0.1, -0.4], vec![3, 2]);
    MapInstance::mwu_exp(obj, vec![3, 2], vec![0.1, 0.1]).expect("valid step sizes")
}

pub fn sphere_map() -> MapInstance {
    MapInstance::rgd_sphere(ObjectiveSpec::quadratic(3), 0.1, Some(2.0)).expect("validated step size")
}

pub fn mwu_state() -> State {
    State::simplex(vec![0.2, 0.3, 0.5, 0.6, 0.4], vec![3, 2]).expect("on the simplices")
}

/// A seeded random network game with its initial point.
pub fn random_instance(seed: u64) -> (MapInstance, State) {
    let mut rng = seeded(seed);
    let (payoff, e1, e2) = random_game(&mut rng, &GameBounds::default());
    let (nx, ny) = (payoff.x_dim(), payoff.y_dim());
    let x: Vec<f64> = (0..nx).map(|i| 1.0 + 0.5 * i as f64).collect();
    let y: Vec<f64> = (0..ny).map(|j| -1.0 + 0.25 * j as f64).collect();
    let map = MapInstance::alt_play(payoff, e1, e2).expect("sampled step sizes are positive");
    (map, State::bipartite(&x, &y))
}
