//! `invariant`: closed-form or series reports with their convergence trace.

use std::path::Path;

use cmotion::invariants::{bipartite_report, InvariantReport, SeriesInvariant, WeightFunction};
use cmotion::{MapKind, State};
use rayon::prelude::*;
use serde::Serialize;

use super::DEFAULT_SERIES_DEPTH;
use crate::config::{InvariantConfig, RunConfig};
use crate::error::CliError;
use crate::output::write_json;

pub const OUTPUT: &str = "invariant.json";

#[derive(Debug, Serialize)]
pub struct StateReport {
    pub initial_state: Vec<f64>,
    pub report: InvariantReport,
}

#[derive(Debug, Serialize)]
pub struct InvariantOutput {
    pub map: String,
    pub reports: Vec<StateReport>,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let output = evaluate(cfg)?;
    write_json(&out.join(OUTPUT), &output)
}

pub fn evaluate(cfg: &RunConfig) -> Result<InvariantOutput, CliError> {
    let map = cfg.map.build()?;
    let states = cfg.states(&map)?;
    let spec = cfg.invariant.clone().unwrap_or(if map.kind() == MapKind::AltPlay {
        InvariantConfig::ClosedForm
    } else {
        InvariantConfig::Series {
            weight: WeightFunction::one(),
            n: DEFAULT_SERIES_DEPTH,
        }
    });
    let horizon = cfg.tolerances.defect_horizon;
    let report = |x: &State| -> Result<InvariantReport, CliError> {
        match &spec {
            InvariantConfig::ClosedForm => {
                if map.kind() != MapKind::AltPlay {
                    return Err(CliError::config("/invariant/kind", format!("no closed form for {}", map.describe())));
                }
                Ok(bipartite_report(&map, x, horizon)?)
            }
            InvariantConfig::Series { weight, n } => {
                if map.kind() == MapKind::AltPlay {
                    return Err(CliError::config("/invariant/kind", "alternating play uses the closed form"));
                }
                let mut s = SeriesInvariant::new(weight.clone(), *n);
                s.config = cfg.tolerances.series_config();
                Ok(s.report(&map, x)?)
            }
        }
    };
    let reports = states
        .par_iter()
        .map(|x| {
            Ok(StateReport {
                initial_state: x.coords().to_vec(),
                report: report(x)?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(InvariantOutput {
        map: map.describe(),
        reports,
    })
}
