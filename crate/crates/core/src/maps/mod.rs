//! Concrete update rules and the [`MapInstance`] that wraps them.

mod alt_play;
mod gd;
mod mwu;
mod sphere;

pub use alt_play::{alt_play_inverse, alt_play_step};
pub use gd::gd_step;
pub use mwu::{local_diffeomorphism_spot_check, mwu_exp_step, mwu_lin_step};
pub use sphere::{retract, rgd_sphere_step, riemannian_gradient};

use serde::{Deserialize, Serialize};

use crate::dynamics::InverseConfig;
use crate::error::{Error, Result};
use crate::objectives::{validate_step_size_gd, validate_step_size_manifold, ObjectiveSpec, PayoffData, StepSizeVerdict};
use crate::state::{Chart, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Gd,
    MwuExp,
    MwuLin,
    AltPlay,
    RgdSphere,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::Gd => "gd",
            MapKind::MwuExp => "mwu_exp",
            MapKind::MwuLin => "mwu_lin",
            MapKind::AltPlay => "alt_play",
            MapKind::RgdSphere => "rgd_sphere",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseStrategy {
    ClosedForm,
    Newton,
    Unavailable,
}

/// Outcome of checking the step sizes of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub validated: bool,
    pub detail: String,
    pub verdict: Option<StepSizeVerdict>,
}

/// A step together with the drift removed by renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    /// Largest `|block sum − 1|` (simplex) or `|‖x‖ − 1|` (sphere) before
    /// the final renormalization; zero for unconstrained charts.
    pub renorm_defect: f64,
}

/// One concrete update rule `T` with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapInstance {
    kind: MapKind,
    objective: ObjectiveSpec,
    step_sizes: Vec<f64>,
    payoff: Option<PayoffData>,
    chart: Chart,
    inverse_strategy: InverseStrategy,
    validation: Validation,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl MapInstance {
    /// Gradient descent `x ↦ x − η∇f(x)`.
    pub fn gd(objective: ObjectiveSpec, eta: f64) -> Result<Self> {
        check_positive("eta", eta)?;
        let verdict = validate_step_size_gd(&objective, eta);
        let validation = Validation {
            validated: verdict.accepted(),
            detail: format!("eta < 2/(dL): {:?}", verdict.decision),
            verdict: Some(verdict),
        };
        Ok(MapInstance {
            kind: MapKind::Gd,
            objective,
            step_sizes: vec![eta],
            payoff: None,
            chart: Chart::Euclidean,
            inverse_strategy: InverseStrategy::Newton,
            validation,
        })
    }

    fn mwu(kind: MapKind, objective: ObjectiveSpec, blocks: Vec<usize>, eps: Vec<f64>) -> Result<Self> {
        if eps.len() != blocks.len() {
            return Err(Error::InvalidParameter(format!(
                "{} learning rates for {} agents",
                eps.len(),
                blocks.len()
            )));
        }
        for e in &eps {
            check_positive("epsilon", *e)?;
        }
        let total: usize = blocks.iter().sum();
        if total != objective.dimension || blocks.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "simplex blocks {blocks:?} do not fit objective dimension {}",
                objective.dimension
            )));
        }
        let mut map = MapInstance {
            kind,
            objective,
            step_sizes: eps,
            payoff: None,
            chart: Chart::SimplexProduct { blocks },
            inverse_strategy: InverseStrategy::Newton,
            validation: Validation {
                validated: false,
                detail: String::new(),
                verdict: None,
            },
        };
        map.validation = match local_diffeomorphism_spot_check(&map, 64, 0x3c0ffee) {
            Ok(true) => Validation {
                validated: true,
                detail: "factors positive and Jacobian determinant positive at sampled points".into(),
                verdict: None,
            },
            Ok(false) => Validation {
                validated: false,
                detail: "non-positive Jacobian determinant at a sampled point".into(),
                verdict: None,
            },
            Err(e) => Validation {
                validated: false,
                detail: e.to_string(),
                verdict: None,
            },
        };
        Ok(map)
    }

    /// Exponential multiplicative weights on a product of simplices.
    pub fn mwu_exp(objective: ObjectiveSpec, blocks: Vec<usize>, eps: Vec<f64>) -> Result<Self> {
        Self::mwu(MapKind::MwuExp, objective, blocks, eps)
    }

    /// Linear multiplicative weights on a product of simplices.
    pub fn mwu_lin(objective: ObjectiveSpec, blocks: Vec<usize>, eps: Vec<f64>) -> Result<Self> {
        Self::mwu(MapKind::MwuLin, objective, blocks, eps)
    }

    /// Alternating gradient play on a bipartite coordination game. The
    /// objective is the shared utility `⟨x, 𝐀y⟩`.
    pub fn alt_play(payoff: PayoffData, eta1: f64, eta2: f64) -> Result<Self> {
        check_positive("eta1", eta1)?;
        check_positive("eta2", eta2)?;
        let chart = Chart::BipartitePair {
            x_dim: payoff.x_dim(),
            y_dim: payoff.y_dim(),
        };
        Ok(MapInstance {
            kind: MapKind::AltPlay,
            objective: ObjectiveSpec::bilinear(payoff.clone()),
            step_sizes: vec![eta1, eta2],
            payoff: Some(payoff),
            chart,
            inverse_strategy: InverseStrategy::ClosedForm,
            validation: Validation {
                validated: true,
                detail: "linear map with unit determinant; invertible for all step sizes".into(),
                verdict: None,
            },
        })
    }

    /// Riemannian gradient descent on the unit sphere with the
    /// normalization retraction. `lipschitz_l` is estimated when absent.
    pub fn rgd_sphere(objective: ObjectiveSpec, eta: f64, lipschitz_l: Option<f64>) -> Result<Self> {
        check_positive("eta", eta)?;
        let verdict = validate_step_size_manifold(&objective, eta, lipschitz_l);
        Ok(MapInstance {
            kind: MapKind::RgdSphere,
            objective,
            step_sizes: vec![eta],
            payoff: None,
            chart: Chart::Sphere,
            inverse_strategy: InverseStrategy::Newton,
            validation: Validation {
                validated: verdict.accepted(),
                detail: format!("eta < 1/L: {:?}", verdict.decision),
                verdict: Some(verdict),
            },
        })
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn objective(&self) -> &ObjectiveSpec {
        &self.objective
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.step_sizes
    }

    pub fn payoff(&self) -> Option<&PayoffData> {
        self.payoff.as_ref()
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dimension(&self) -> usize {
        self.objective.dimension
    }

    pub fn inverse_strategy(&self) -> InverseStrategy {
        self.inverse_strategy
    }

    pub fn validation(&self) -> &Validation {
        &self.validation
    }

    /// Whether `T(c·x) = c·T(x)` for all real `c`.
    pub fn is_linear(&self) -> bool {
        match self.kind {
            MapKind::AltPlay => true,
            MapKind::Gd => matches!(
                self.objective.kind,
                crate::objectives::ObjectiveKind::Quadratic | crate::objectives::ObjectiveKind::Bilinear { .. }
            ),
            _ => false,
        }
    }

    pub fn describe(&self) -> String {
        let steps: Vec<String> = self.step_sizes.iter().map(|s| format!("{s}")).collect();
        format!("{}({}; {})", self.kind.name(), self.objective.name(), steps.join(","))
    }

    /// Objective value, the quantity the dynamics descend (or, for
    /// alternating play, the shared utility).
    pub fn objective_value(&self, x: &State) -> f64 {
        self.objective.eval(x.coords())
    }

    pub(crate) fn check_domain(&self, x: &State) -> Result<()> {
        if x.dim() != self.dimension() {
            return Err(Error::Domain(format!(
                "{} expects dimension {}, state has {}",
                self.describe(),
                self.dimension(),
                x.dim()
            )));
        }
        let ok = match (&self.chart, x.chart()) {
            (Chart::Euclidean, Chart::Euclidean | Chart::BipartitePair { .. }) => true,
            (a, b) => a == b,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{} expects chart {}, state is on {}",
                self.describe(),
                self.chart.name(),
                x.chart().name()
            )))
        }
    }

    /// `T(x)`.
    pub fn step(&self, x: &State) -> Result<State> {
        self.step_with_diagnostics(x).map(|o| o.state)
    }

    /// `T(x)` with the renormalization defect of that step.
    pub fn step_with_diagnostics(&self, x: &State) -> Result<StepOutcome> {
        self.check_domain(x)?;
        match self.kind {
            MapKind::Gd => gd::step(&self.objective, self.step_sizes[0], x),
            MapKind::MwuExp => mwu::step_exp(&self.objective, &self.step_sizes, x),
            MapKind::MwuLin => mwu::step_lin(&self.objective, &self.step_sizes, x),
            MapKind::AltPlay => {
                let payoff = self.payoff.as_ref().expect("alt_play carries a payoff");
                Ok(StepOutcome {
                    state: alt_play_step(payoff, self.step_sizes[0], self.step_sizes[1], x)?,
                    renorm_defect: 0.0,
                })
            }
            MapKind::RgdSphere => sphere::step(&self.objective, self.step_sizes[0], x),
        }
    }

    /// `T⁻¹(x)`: closed form for alternating play, damped Newton otherwise.
    pub fn inverse(&self, x: &State, cfg: &InverseConfig) -> Result<State> {
        self.check_domain(x)?;
        match self.kind {
            MapKind::Gd => gd::inverse(self, x, cfg),
            MapKind::MwuExp | MapKind::MwuLin => mwu::inverse(self, x, cfg),
            MapKind::AltPlay => {
                let payoff = self.payoff.as_ref().expect("alt_play carries a payoff");
                alt_play_inverse(payoff, self.step_sizes[0], self.step_sizes[1], x)
            }
            MapKind::RgdSphere => sphere::inverse(self, x, cfg),
        }
    }
}
