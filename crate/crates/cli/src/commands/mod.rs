pub mod classify;
pub mod figures;
pub mod invariant;
pub mod scan;
pub mod simulate;

use cmotion::invariants::{BipartiteInvariant, Invariant, SeriesInvariant, WeightFunction};
use cmotion::{MapInstance, MapKind};

use crate::config::{InvariantConfig, RunConfig};
use crate::error::CliError;

/// Weight and depth of the series invariant when none is configured.
pub const DEFAULT_SERIES_DEPTH: usize = 32;

/// The invariant selected by the configuration, or the map's default:
/// the closed form for alternating play, the series with `p ≡ 1`
/// otherwise.
pub fn invariant_for(cfg: &RunConfig, map: &MapInstance) -> Result<Box<dyn Invariant>, CliError> {
    let spec = cfg.invariant.clone().unwrap_or(match map.kind() {
        MapKind::AltPlay => InvariantConfig::ClosedForm,
        _ => InvariantConfig::Series {
            weight: WeightFunction::one(),
            n: DEFAULT_SERIES_DEPTH,
        },
    });
    match spec {
        InvariantConfig::ClosedForm => BipartiteInvariant::from_map(map)
            .map(|b| Box::new(b) as Box<dyn Invariant>)
            .ok_or_else(|| CliError::config("/invariant/kind", format!("no closed form for {}", map.describe()))),
        InvariantConfig::Series { weight, n } => {
            if map.kind() == MapKind::AltPlay {
                return Err(CliError::config("/invariant/kind", "alternating play uses the closed form"));
            }
            let mut s = SeriesInvariant::new(weight, n);
            s.config = cfg.tolerances.series_config();
            Ok(Box::new(s))
        }
    }
}

/// The configured invariant only; `None` when the configuration is silent
/// and the map has no closed form.
pub fn explicit_invariant(cfg: &RunConfig, map: &MapInstance) -> Result<Option<Box<dyn Invariant>>, CliError> {
    if cfg.invariant.is_none() && map.kind() != MapKind::AltPlay {
        return Ok(None);
    }
    invariant_for(cfg, map).map(Some)
}
