//! Invertible first-order optimization maps, their constants of motion,
//! and chaos diagnostics.

pub mod chaos;
pub mod dynamics;
pub mod error;
pub mod invariants;
pub mod maps;
mod newton;
pub mod objectives;
pub mod precise;
pub mod sampling;
pub mod state;

pub use chaos::{level_set_confinement, same_orbit, scrambled_pair_estimate, ChaosConfig, ChaosReport, Verdict};
pub use dynamics::{detect_fixed_point, find_fixed_points, inverse_step, orbit, step, InverseConfig, OrbitConfig};
pub use error::{Error, Result};
pub use invariants::{bipartite_invariant, dphi_rank, invariance_defect, series_invariant, Invariant, InvariantReport, WeightFunction};
pub use maps::{InverseStrategy, MapInstance, MapKind};
pub use objectives::{ObjectiveKind, ObjectiveSpec, PayoffData, Region};
pub use precise::PreciseAltPlay;
pub use state::{Chart, FixedPointSet, OrbitSegment, State};
