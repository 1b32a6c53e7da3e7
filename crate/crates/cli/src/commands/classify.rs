//! `classify`: same-orbit decisions for (initial state, target) pairs.

use std::path::Path;

use cmotion::chaos::{same_orbit, SameOrbitReport};
use rayon::prelude::*;
use serde::Serialize;

use super::explicit_invariant;
use crate::config::{state_for, RunConfig};
use crate::error::CliError;
use crate::output::write_json;

pub const OUTPUT: &str = "classify.json";

#[derive(Debug, Serialize)]
pub struct Classification {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub report: SameOrbitReport,
}

#[derive(Debug, Serialize)]
pub struct ClassifyOutput {
    pub map: String,
    pub invariant: Option<String>,
    pub max_iter: usize,
    pub tol: f64,
    pub results: Vec<Classification>,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let map = cfg.map.build()?;
    let states = cfg.states(&map)?;
    let spec = cfg
        .classify
        .as_ref()
        .ok_or_else(|| CliError::config("/classify", "classify needs a classify section"))?;
    if spec.targets.len() != states.len() {
        return Err(CliError::config(
            "/classify/targets",
            format!("{} targets for {} initial states", spec.targets.len(), states.len()),
        ));
    }
    let targets = spec
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if t.len() != map.dimension() {
                return Err(CliError::config(&format!("/classify/targets/{i}"), "dimension mismatch"));
            }
            state_for(&map, t.clone()).map_err(|e| CliError::config(&format!("/classify/targets/{i}"), e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let phi = explicit_invariant(cfg, &map)?;
    let inverse = cfg.tolerances.inverse_config();
    let results = states
        .par_iter()
        .zip(&targets)
        .map(|(x, y)| {
            let report = same_orbit(&map, x, y, spec.max_iter, spec.tol, phi.as_deref(), &inverse)?;
            Ok(Classification {
                x: x.coords().to_vec(),
                y: y.coords().to_vec(),
                report,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let output = ClassifyOutput {
        map: map.describe(),
        invariant: phi.as_ref().map(|p| p.label()),
        max_iter: spec.max_iter,
        tol: spec.tol,
        results,
    };
    write_json(&out.join(OUTPUT), &output)
}
