//! Run configuration: a JSON document checked against the shipped schema,
//! then deserialized with unknown fields rejected.

use std::path::{Path, PathBuf};

use cmotion::chaos::ChaosConfig;
use cmotion::dynamics::{InverseConfig, OrbitConfig};
use cmotion::invariants::{SeriesConfig, WeightFunction};
use cmotion::objectives::{ObjectiveSpec, PayoffData, Region};
use cmotion::{Chart, MapInstance, State};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA: &str = include_str!("../schema/run_config.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKindName {
    Gd,
    MwuExp,
    MwuLin,
    AltPlay,
    RgdSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Quadratic,
    DoubleWell,
    Linear,
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub name: ObjectiveName,
    pub dimension: Option<usize>,
    pub weights: Option<Vec<f64>>,
    pub region: Option<Region>,
    pub hessian_entry_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PayoffSource {
    File { file: PathBuf },
    Inline(PayoffData),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub kind: MapKindName,
    pub eta: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub epsilon: Option<Vec<f64>>,
    pub blocks: Option<Vec<usize>>,
    pub objective: Option<ObjectiveConfig>,
    pub payoff: Option<PayoffSource>,
    /// Pullback Lipschitz constant for the sphere; estimated when absent.
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InvariantConfig {
    ClosedForm,
    Series {
        #[serde(default = "WeightFunction::one")]
        weight: WeightFunction,
        #[serde(default = "default_depth")]
        n: usize,
    },
}

fn default_depth() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: String,
    pub json: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            csv: "trajectory.csv".into(),
            json: "summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub fixed_point: f64,
    pub inverse: f64,
    pub inverse_max_iterations: usize,
    pub series_stop: f64,
    pub divergence_window: usize,
    pub defect_horizon: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SeriesConfig::default();
        let i = InverseConfig::default();
        Tolerances {
            fixed_point: s.orbit.fixed_point_tolerance,
            inverse: i.tolerance,
            inverse_max_iterations: i.max_iterations,
            series_stop: s.stop_tolerance,
            divergence_window: s.divergence_window,
            defect_horizon: s.defect_horizon,
        }
    }
}

impl Tolerances {
    pub fn inverse_config(&self) -> InverseConfig {
        InverseConfig {
            tolerance: self.inverse,
            max_iterations: self.inverse_max_iterations,
            ..InverseConfig::default()
        }
    }

    pub fn orbit_config(&self) -> OrbitConfig {
        OrbitConfig {
            inverse: self.inverse_config(),
            fixed_point_tolerance: self.fixed_point,
        }
    }

    pub fn series_config(&self) -> SeriesConfig {
        SeriesConfig {
            orbit: self.orbit_config(),
            stop_tolerance: self.series_stop,
            divergence_window: self.divergence_window,
            defect_horizon: self.defect_horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub pairs: usize,
    pub horizon: usize,
    /// Sampling box half-width for maps without a working region.
    pub half_width: f64,
    pub tail_fraction: f64,
    pub eps_low: f64,
    pub eps_high: f64,
    pub level_tolerance: f64,
    pub max_defect: f64,
    pub defect_samples: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let c = ChaosConfig::default();
        ScanConfig {
            pairs: 1000,
            horizon: 10_000,
            half_width: 50.0,
            tail_fraction: c.tail_fraction,
            eps_low: c.eps_low,
            eps_high: c.eps_high,
            level_tolerance: c.level_tolerance,
            max_defect: c.max_defect,
            defect_samples: c.defect_samples,
        }
    }
}

impl ScanConfig {
    pub fn chaos_config(&self) -> ChaosConfig {
        ChaosConfig {
            tail_fraction: self.tail_fraction,
            eps_low: self.eps_low,
            eps_high: self.eps_high,
            level_tolerance: self.level_tolerance,
            max_defect: self.max_defect,
            defect_samples: self.defect_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    /// One target per initial state.
    pub targets: Vec<Vec<f64>>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_match_tol")]
    pub tol: f64,
}

fn default_max_iter() -> usize {
    1000
}

fn default_match_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub map: MapConfig,
    #[serde(default)]
    pub initial_states: Vec<Vec<f64>>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub backward_steps: usize,
    pub invariant: Option<InvariantConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub scan: Option<ScanConfig>,
    pub classify: Option<ClassifyConfig>,
}

fn default_steps() -> usize {
    100
}

fn config_err(path: &str, msg: impl Into<String>) -> CliError {
    CliError::config(path, msg)
}

/// Validates `doc` against the schema, returning the first violation.
pub fn validate(doc: &Value) -> Result<(), CliError> {
    let schema: Value = serde_json::from_str(SCHEMA).expect("shipped schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    if let Some(e) = validator.iter_errors(doc).next() {
        let path = e.instance_path.to_string();
        return Err(config_err(if path.is_empty() { "/" } else { &path }, e.to_string()));
    }
    Ok(())
}

/// Parses and validates a configuration document. Relative payoff paths
/// resolve against `base`.
pub fn parse(text: &str, base: &Path) -> Result<RunConfig, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| config_err("/", format!("not valid JSON: {e}")))?;
    validate(&doc)?;
    let mut cfg: RunConfig = serde_json::from_value(doc).map_err(|e| config_err("/", e.to_string()))?;
    if let Some(PayoffSource::File { file }) = &cfg.map.payoff {
        let path = base.join(file);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| config_err("/map/payoff/file", format!("{}: {e}", path.display())))?;
        let p: PayoffData = serde_json::from_str(&text).map_err(|e| config_err("/map/payoff/file", e.to_string()))?;
        cfg.map.payoff = Some(PayoffSource::Inline(p));
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err("/", format!("{}: {e}", path.display())))?;
    parse(&text, path.parent().unwrap_or(Path::new(".")))
}

fn need<T: Clone>(v: &Option<T>, path: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| config_err(path, "required for this map kind"))
}

fn objective(cfg: &ObjectiveConfig) -> Result<ObjectiveSpec, CliError> {
    let dim = || need(&cfg.dimension, "/map/objective/dimension");
    let mut obj = match cfg.name {
        ObjectiveName::Quadratic => ObjectiveSpec::quadratic(dim()?),
        ObjectiveName::DoubleWell => ObjectiveSpec::double_well(dim()?),
        ObjectiveName::Bump => ObjectiveSpec::bump(dim()?),
        ObjectiveName::Linear => ObjectiveSpec::linear(need(&cfg.weights, "/map/objective/weights")?),
    };
    if let Some(r) = &cfg.region {
        obj = obj.with_region(r.clone());
    }
    if let Some(l) = cfg.hessian_entry_bound {
        obj.hessian_entry_bound = Some(l);
    }
    Ok(obj)
}

impl MapConfig {
    pub fn build(&self) -> Result<MapInstance, CliError> {
        let bad = |e: cmotion::Error| config_err("/map", e.to_string());
        match self.kind {
            MapKindName::AltPlay => {
                let payoff = match need(&self.payoff, "/map/payoff")? {
                    PayoffSource::Inline(p) => p,
                    PayoffSource::File { .. } => unreachable!("files are resolved while loading"),
                };
                MapInstance::alt_play(payoff, need(&self.eta1, "/map/eta1")?, need(&self.eta2, "/map/eta2")?).map_err(bad)
            }
            MapKindName::Gd => {
                let obj = objective(&need(&self.objective, "/map/objective")?)?;
                MapInstance::gd(obj, need(&self.eta, "/map/eta")?).map_err(bad)
            }
            MapKindName::MwuExp | MapKindName::MwuLin => {
                let blocks = need(&self.blocks, "/map/blocks")?;
                let spec = need(&self.objective, "/map/objective")?;
                let mut obj = objective(&spec)?;
                if spec.region.is_none() {
                    obj = obj.with_region(Region::SimplexProduct { blocks: blocks.clone() });
                }
                let eps = need(&self.epsilon, "/map/epsilon")?;
                if self.kind == MapKindName::MwuExp {
                    MapInstance::mwu_exp(obj, blocks, eps).map_err(bad)
                } else {
                    MapInstance::mwu_lin(obj, blocks, eps).map_err(bad)
                }
            }
            MapKindName::RgdSphere => {
                let obj = objective(&need(&self.objective, "/map/objective")?)?;
                MapInstance::rgd_sphere(obj, need(&self.eta, "/map/eta")?, self.lipschitz).map_err(bad)
            }
        }
    }
}

/// A state on the chart of `map` from raw coordinates.
pub fn state_for(map: &MapInstance, coords: Vec<f64>) -> cmotion::Result<State> {
    match map.chart() {
        Chart::Euclidean => Ok(State::euclidean(coords)),
        Chart::BipartitePair { x_dim, .. } => {
            let x_dim = *x_dim;
            if coords.len() != map.dimension() {
                return Err(cmotion::Error::Domain(format!("expected {} coordinates", map.dimension())));
            }
            Ok(State::bipartite(&coords[..x_dim], &coords[x_dim..]))
        }
        Chart::SimplexProduct { blocks } => State::simplex(coords, blocks.clone()),
        Chart::Sphere => State::sphere(coords),
    }
}

impl RunConfig {
    pub fn states(&self, map: &MapInstance) -> Result<Vec<State>, CliError> {
        self.initial_states
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if c.len() != map.dimension() {
                    return Err(config_err(
                        &format!("/initial_states/{i}"),
                        format!("{} coordinates for a map of dimension {}", c.len(), map.dimension()),
                    ));
                }
                state_for(map, c.clone()).map_err(|e| config_err(&format!("/initial_states/{i}"), e.to_string()))
            })
            .collect()
    }
}
