//! `scan`: seeded scrambled-pair estimates and the confinement check.

use std::path::Path;

use cmotion::chaos::{level_set_confinement, scrambled_pair_estimate, ChaosReport, Confinement, VerdictCounts};
use cmotion::sampling::{random_box_point, seeded};
use cmotion::objectives::Region;
use cmotion::{Chart, MapInstance, MapKind, State};
use rayon::prelude::*;
use serde::Serialize;

use super::explicit_invariant;
use crate::config::{state_for, RunConfig};
use crate::error::CliError;
use crate::output::write_json;

pub const OUTPUT: &str = "scan.json";

const SERIES_CAVEAT: &str = "the series invariant is continuous only on an open dense set; \
     confinement is heuristic near the points where it is not";

#[derive(Debug, Serialize)]
pub struct ConfinementOutcome {
    pub invariant: String,
    pub verified_defect: f64,
    pub structural_defect: Option<f64>,
    /// Scramble candidates on a shared level set.
    pub candidates: Vec<usize>,
    /// Scramble candidates across distinct level sets.
    pub refutations: Vec<usize>,
    pub caveat: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ScanOutput {
    pub map: String,
    pub seed: u64,
    pub pairs: usize,
    pub horizon: usize,
    pub counts: VerdictCounts,
    pub confinement: Option<ConfinementOutcome>,
    /// Present when the invariant does not belong to the map.
    pub confinement_skipped: Option<String>,
    pub reports: Vec<ChaosReport>,
}

/// Draws `n` independent pairs from the map's chart (sphere, simplices) or
/// working region, or from `[-half_width, half_width]^d` when it has none.
pub fn sample_pairs(map: &MapInstance, n: usize, seed: u64, half_width: f64) -> Result<Vec<(State, State)>, CliError> {
    let mut rng = seeded(seed);
    let dim = map.dimension();
    let region = match map.chart() {
        Chart::Sphere => Some(Region::Sphere),
        Chart::SimplexProduct { blocks } => Some(Region::SimplexProduct { blocks: blocks.clone() }),
        _ => map.objective().region.clone(),
    };
    let draw = |rng: &mut _| -> Result<State, CliError> {
        let coords = match &region {
            Some(r) => r.sample(rng, dim),
            None => random_box_point(rng, dim, half_width),
        };
        Ok(state_for(map, coords)?)
    };
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let x = draw(&mut rng)?;
        let y = draw(&mut rng)?;
        if x.coords() != y.coords() {
            pairs.push((x, y));
        }
    }
    Ok(pairs)
}

pub fn scan(cfg: &RunConfig) -> Result<ScanOutput, CliError> {
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::config("/seed", "scan needs a seed (config or --seed)"))?;
    let map = cfg.map.build()?;
    let sc = cfg.scan.clone().unwrap_or_default();
    let chaos = sc.chaos_config();
    let pairs = sample_pairs(&map, sc.pairs, seed, sc.half_width)?;
    let phi = explicit_invariant(cfg, &map)?;
    let (reports, confinement, skipped) = match phi {
        Some(phi) => match level_set_confinement(&map, phi.as_ref(), &pairs, sc.horizon, &chaos)? {
            Confinement::Checked(s) => (
                s.reports,
                Some(ConfinementOutcome {
                    invariant: s.invariant,
                    verified_defect: s.verified_defect,
                    structural_defect: s.structural_defect,
                    candidates: s.candidates,
                    refutations: s.refutations,
                    caveat: (map.kind() != MapKind::AltPlay).then(|| SERIES_CAVEAT.to_string()),
                }),
                None,
            ),
            Confinement::Skipped { reason } => (plain_scan(&map, &pairs, sc.horizon, &chaos)?, None, Some(reason)),
        },
        None => (plain_scan(&map, &pairs, sc.horizon, &chaos)?, None, None),
    };
    Ok(ScanOutput {
        map: map.describe(),
        seed,
        pairs: pairs.len(),
        horizon: sc.horizon,
        counts: VerdictCounts::tally(&reports),
        confinement,
        confinement_skipped: skipped,
        reports,
    })
}

fn plain_scan(
    map: &MapInstance,
    pairs: &[(State, State)],
    horizon: usize,
    chaos: &cmotion::ChaosConfig,
) -> Result<Vec<ChaosReport>, CliError> {
    Ok(pairs
        .par_iter()
        .map(|(a, b)| scrambled_pair_estimate(map, a, b, horizon, chaos, None))
        .collect::<cmotion::Result<_>>()?)
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let output = scan(cfg)?;
    write_json(&out.join(OUTPUT), &output)
}
