//! Constants of motion: the bipartite closed form, the truncated two-sided
//! series, defect metrics, and the rank of the invariant's differential.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{detect_fixed_point, OrbitConfig};
use crate::error::{Error, Result};
use crate::maps::{MapInstance, MapKind};
use crate::objectives::{ObjectiveSpec, PayoffData};
use crate::precise::PreciseAltPlay;
use crate::state::{dot, State};

/// Bounded continuous weight `p` of the series invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightFunction {
    Constant { value: f64 },
    Coordinate { index: usize },
    GaussianBump { center: Vec<f64>, width: f64 },
}

impl WeightFunction {
    pub fn one() -> Self {
        WeightFunction::Constant { value: 1.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            WeightFunction::Constant { value } => *value,
            WeightFunction::Coordinate { index } => x.get(*index).copied().unwrap_or(0.0),
            WeightFunction::GaussianBump { center, width } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (-r2 / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightFunction::Constant { value } => format!("constant({value})"),
            WeightFunction::Coordinate { index } => format!("coordinate({index})"),
            WeightFunction::GaussianBump { center, width } => format!("gaussian_bump({center:?}, {width})"),
        }
    }
}

/// `(1/η₁)‖x‖² − (1/η₂)‖y‖² + ⟨x, 𝐀y⟩` on raw coordinates `(x, y)`.
pub fn bipartite_phi(payoff: &PayoffData, eta1: f64, eta2: f64, xy: &[f64]) -> f64 {
    let (x, y) = xy.split_at(payoff.x_dim());
    dot(x, x) / eta1 - dot(y, y) / eta2 + payoff.bilinear(x, y)
}

/// The closed-form invariant of alternating play.
pub fn bipartite_invariant(payoff: &PayoffData, eta1: f64, eta2: f64, xy: &State) -> Result<f64> {
    let (x, y) = xy
        .split_pair()
        .ok_or_else(|| Error::Domain(format!("bipartite invariant needs a bipartite pair, got {}", xy.chart().name())))?;
    if x.len() != payoff.x_dim() || y.len() != payoff.y_dim() {
        return Err(Error::Domain("state blocks do not match the payoff".into()));
    }
    Ok(bipartite_phi(payoff, eta1, eta2, xy.coords()))
}

/// `H = [[2/η₁·I, 𝐀], [𝐀ᵀ, −2/η₂·I]]` and its numerical rank (singular
/// values above `1e-10·σ_max`).
pub fn dphi_rank(payoff: &PayoffData, eta1: f64, eta2: f64) -> (DMatrix<f64>, usize) {
    let h = dphi_matrix(payoff, eta1, eta2);
    let sv = h.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|s| **s > 1e-10 * smax).count();
    (h, rank)
}

fn dphi_matrix(payoff: &PayoffData, eta1: f64, eta2: f64) -> DMatrix<f64> {
    let (n, m) = (payoff.x_dim(), payoff.y_dim());
    let a = payoff.assembled();
    let mut h = DMatrix::zeros(n + m, n + m);
    for i in 0..n {
        h[(i, i)] = 2.0 / eta1;
    }
    for j in 0..m {
        h[(n + j, n + j)] = -2.0 / eta2;
    }
    h.view_mut((0, n), (n, m)).copy_from(a);
    h.view_mut((n, 0), (m, n)).copy_from(&a.transpose());
    h
}

/// Matrix of the linear alternating-play map on stacked `(x, y)`.
pub fn alt_play_matrix(payoff: &PayoffData, eta1: f64, eta2: f64) -> DMatrix<f64> {
    let (n, m) = (payoff.x_dim(), payoff.y_dim());
    let a = payoff.assembled();
    let mut t = DMatrix::identity(n + m, n + m);
    t.view_mut((0, n), (n, m)).copy_from(&(a * eta1));
    t.view_mut((n, 0), (m, n)).copy_from(&(a.transpose() * eta2));
    let corner = DMatrix::identity(m, m) + a.transpose() * a * (eta1 * eta2);
    t.view_mut((n, n), (m, m)).copy_from(&corner);
    t
}

/// An invariant evaluation with its numerical uncertainty. `value` is
/// `None` when the series diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantValue {
    pub value: Option<f64>,
    pub uncertainty: f64,
}

/// A candidate constant of motion `Φ`.
pub trait Invariant: Send + Sync {
    fn label(&self) -> String;

    /// Whether `Φ` is meant to be conserved by `map`.
    fn applies_to(&self, map: &MapInstance) -> bool;

    fn evaluate(&self, map: &MapInstance, x: &State) -> Result<InvariantValue>;

    /// `|Φ(Tᵏx) − Φ(x)| / (1 + |Φ(x)|)` for `k = 1..=horizon`.
    fn defect_trace(&self, map: &MapInstance, x: &State, horizon: usize) -> Result<Vec<f64>> {
        let phi0 = finite_value(self.evaluate(map, x)?, &self.label())?;
        let mut out = Vec::with_capacity(horizon);
        let mut z = x.clone();
        for k in 1..=horizon {
            z = map.step(&z).map_err(|e| e.at(k as i64 - 1))?;
            let v = finite_value(self.evaluate(map, &z)?, &self.label()).map_err(|e| e.at(k as i64))?;
            out.push((v - phi0).abs() / (1.0 + phi0.abs()));
        }
        Ok(out)
    }

    /// Defect over all of state space at once, when `Φ` and `T` are
    /// simple enough to compare symbolically.
    fn structural_defect(&self, _map: &MapInstance) -> Option<f64> {
        None
    }
}

fn finite_value(v: InvariantValue, label: &str) -> Result<f64> {
    match v.value {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(Error::Precondition(format!("{label} has no finite value here"))),
    }
}

/// `max_k |Φ(Tᵏx) − Φ(x)| / (1 + |Φ(x)|)` over `k ∈ [1, horizon]`.
pub fn invariance_defect(phi: &dyn Invariant, map: &MapInstance, x: &State, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("defect horizon must be at least 1".into()));
    }
    Ok(phi.defect_trace(map, x, horizon)?.into_iter().fold(0.0, f64::max))
}

/// The alternating-play closed form for fixed payoff and step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteInvariant {
    pub payoff: PayoffData,
    pub eta1: f64,
    pub eta2: f64,
}

impl BipartiteInvariant {
    pub fn new(payoff: PayoffData, eta1: f64, eta2: f64) -> Self {
        BipartiteInvariant { payoff, eta1, eta2 }
    }

    pub fn from_map(map: &MapInstance) -> Option<Self> {
        match (map.kind(), map.payoff()) {
            (MapKind::AltPlay, Some(p)) => Some(Self::new(p.clone(), map.step_sizes()[0], map.step_sizes()[1])),
            _ => None,
        }
    }

    pub fn value(&self, xy: &State) -> Result<f64> {
        bipartite_invariant(&self.payoff, self.eta1, self.eta2, xy)
    }
}

impl Invariant for BipartiteInvariant {
    fn label(&self) -> String {
        "bipartite".into()
    }

    fn applies_to(&self, map: &MapInstance) -> bool {
        map.kind() == MapKind::AltPlay && map.payoff() == Some(&self.payoff) && map.step_sizes() == [self.eta1, self.eta2]
    }

    fn evaluate(&self, _map: &MapInstance, x: &State) -> Result<InvariantValue> {
        let v = self.value(x)?;
        let (a, b) = x.split_pair().expect("checked by value");
        let scale = dot(a, a) / self.eta1 + dot(b, b) / self.eta2 + self.payoff.bilinear(a, b).abs();
        Ok(InvariantValue {
            value: Some(v),
            uncertainty: 8.0 * f64::EPSILON * scale,
        })
    }

    /// Uses the extended-precision orbit when `map` is the instance this
    /// invariant belongs to; double-precision orbits of alternating play
    /// grow geometrically and lose the invariant to cancellation.
    fn defect_trace(&self, map: &MapInstance, x: &State, horizon: usize) -> Result<Vec<f64>> {
        if !self.applies_to(map) {
            let phi0 = self.value(x)?;
            let mut out = Vec::with_capacity(horizon);
            let mut z = x.clone();
            for k in 1..=horizon {
                z = map.step(&z).map_err(|e| e.at(k as i64 - 1))?;
                out.push((self.value(&z)? - phi0).abs() / (1.0 + phi0.abs()));
            }
            return Ok(out);
        }
        self.value(x)?;
        let orbit = PreciseAltPlay::new(&self.payoff, self.eta1, self.eta2).run(x.coords(), horizon, 0)?;
        Ok(orbit.rows[1..].iter().map(|r| r.defect).collect())
    }

    /// `max|TᵀHT − H| / max|H|` with `T` the map matrix and `H` the Hessian
    /// of `Φ`; zero up to rounding exactly when `Φ∘T = Φ`.
    fn structural_defect(&self, map: &MapInstance) -> Option<f64> {
        if !self.applies_to(map) {
            return None;
        }
        let h = dphi_matrix(&self.payoff, self.eta1, self.eta2);
        let t = alt_play_matrix(&self.payoff, self.eta1, self.eta2);
        let diff = t.transpose() * &h * &t - &h;
        Some(diff.amax() / h.amax())
    }
}

/// `Φ ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantInvariant(pub f64);

impl Invariant for ConstantInvariant {
    fn label(&self) -> String {
        format!("constant({})", self.0)
    }

    fn applies_to(&self, _map: &MapInstance) -> bool {
        true
    }

    fn evaluate(&self, _map: &MapInstance, _x: &State) -> Result<InvariantValue> {
        Ok(InvariantValue {
            value: Some(self.0),
            uncertainty: 0.0,
        })
    }

    fn structural_defect(&self, _map: &MapInstance) -> Option<f64> {
        Some(0.0)
    }
}

/// Truncation and stopping rules of the series invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    pub orbit: OrbitConfig,
    /// Stop early once both half-orbit increments fall below this.
    pub stop_tolerance: f64,
    /// Consecutive non-decaying depths that flag divergence.
    pub divergence_window: usize,
    /// Orbit length over which `per_step_defect` is reported.
    pub defect_horizon: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            orbit: OrbitConfig::default(),
            stop_tolerance: 1e-14,
            divergence_window: 32,
            defect_horizon: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesStatus {
    ClosedForm,
    /// Both half-orbit increments fell below the stop tolerance.
    Converged,
    /// The requested depth was reached first.
    Truncated,
    /// Increments stopped decaying; the invariant is reported as trivial.
    Diverged,
    FixedPoint,
}

/// Backward iteration failed; the sum lacks the terms beyond `failed_at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneSided {
    pub failed_at: i64,
    pub reason: String,
    /// The bias equals this quantity, which is not evaluated.
    pub bias: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub label: String,
    pub value: Option<f64>,
    pub status: SeriesStatus,
    pub truncation_n: usize,
    /// `|Φ(Tᵏx) − Φ(x)|` for `k = 1, 2, …`.
    pub per_step_defect: Vec<f64>,
    /// Running sums after the terms `0, +1, −1, +2, −2, …`; absent
    /// backward terms of a one-sided sum repeat the previous entry.
    pub partial_sums: Vec<f64>,
    /// Magnitude of the last increment actually evaluated.
    pub tail_estimate: f64,
    pub one_sided: Option<OneSided>,
}

struct SeriesCore {
    value: Option<f64>,
    status: SeriesStatus,
    depth: usize,
    partial_sums: Vec<f64>,
    tail: f64,
    one_sided: Option<OneSided>,
}

fn series_core(map: &MapInstance, obj: &ObjectiveSpec, p: &WeightFunction, x: &State, n: usize, cfg: &SeriesConfig) -> Result<SeriesCore> {
    let fp_tol = cfg.orbit.fixed_point_tolerance;
    if detect_fixed_point(map, x, fp_tol).map_err(|e| e.at(0))? {
        return Ok(SeriesCore {
            value: Some(0.0),
            status: SeriesStatus::FixedPoint,
            depth: 0,
            partial_sums: Vec::new(),
            tail: 0.0,
            one_sided: None,
        });
    }
    let f = |s: &State| obj.eval(s.coords());
    let mut sums = Vec::with_capacity(2 * n + 1);
    let mut total = 0.0;
    let mut tail = 0.0;
    let mut one_sided = None;

    // backward state T^{-k}x and its value; None once inversion failed
    let mut back: Option<(State, f64)> = Some((x.clone(), f(x)));
    let mut back_stalled = false;
    let mut back_term = |k: usize, back: &mut Option<(State, f64)>, one_sided: &mut Option<OneSided>| -> Option<f64> {
        let (cur, fc) = back.as_ref()?;
        if back_stalled {
            return Some(0.0);
        }
        match map.inverse(cur, &cfg.orbit.inverse) {
            Ok(prev) => {
                let fp = f(&prev);
                let term = p.eval(cur.coords()) * (fp - fc);
                back_stalled = prev.distance(cur) <= fp_tol;
                *back = Some((prev, fp));
                Some(term)
            }
            Err(e) => {
                let j = -(k as i64) - 1;
                *one_sided = Some(OneSided {
                    failed_at: j,
                    reason: e.to_string(),
                    bias: format!("|f(T^{}x) - f(L_x)|, unevaluated", j + 1),
                });
                *back = None;
                None
            }
        }
    };

    if let Some(t0) = back_term(0, &mut back, &mut one_sided) {
        total += t0;
        tail = t0.abs();
    }
    sums.push(total);

    let mut fwd = x.clone();
    let mut f_fwd = f(x);
    let mut fwd_stalled = false;
    let mut anchor = f64::INFINITY;
    let mut stalled_for = 0usize;
    let mut status = SeriesStatus::Truncated;
    let mut depth = 0;
    for k in 1..=n {
        depth = k;
        let tf = if fwd_stalled {
            0.0
        } else {
            let next = map.step(&fwd).map_err(|e| e.at(k as i64 - 1))?;
            let fnext = f(&next);
            let t = p.eval(next.coords()) * (f_fwd - fnext);
            fwd_stalled = next.distance(&fwd) <= fp_tol;
            fwd = next;
            f_fwd = fnext;
            t
        };
        total += tf;
        tail = tf.abs();
        sums.push(total);

        let tb = back_term(k, &mut back, &mut one_sided);
        if let Some(t) = tb {
            total += t;
            tail = t.abs();
        }
        sums.push(total);

        let mag = tf.abs() + tb.map_or(0.0, f64::abs);
        if !mag.is_finite() {
            status = SeriesStatus::Diverged;
            break;
        }
        if tf.abs() < cfg.stop_tolerance && tb.map_or(true, |t| t.abs() < cfg.stop_tolerance) {
            status = SeriesStatus::Converged;
            break;
        }
        // decay is measured against the size at the start of the run of
        // non-decreasing depths, so rounding noise cannot reset it
        if mag < anchor * (1.0 - 1e-9) {
            anchor = mag;
            stalled_for = 0;
        } else {
            stalled_for += 1;
            if stalled_for >= cfg.divergence_window {
                status = SeriesStatus::Diverged;
                break;
            }
        }
    }
    Ok(SeriesCore {
        value: (status != SeriesStatus::Diverged).then_some(total),
        status,
        depth,
        partial_sums: sums,
        tail,
        one_sided,
    })
}

/// `Σ_{k=−n}^{n} p(Tᵏx)(f(Tᵏ⁻¹x) − f(Tᵏx))`, stopping early when both
/// tails are negligible. A fixed point evaluates to zero with an empty
/// trace.
pub fn series_invariant(map: &MapInstance, obj: &ObjectiveSpec, p: &WeightFunction, x: &State, n: usize, cfg: &SeriesConfig) -> Result<InvariantReport> {
    let core = series_core(map, obj, p, x, n, cfg)?;
    let mut per_step_defect = Vec::new();
    if let (Some(v0), SeriesStatus::Converged | SeriesStatus::Truncated) = (core.value, core.status) {
        let mut z = x.clone();
        for k in 1..=cfg.defect_horizon {
            z = map.step(&z).map_err(|e| e.at(k as i64 - 1))?;
            match series_core(map, obj, p, &z, n, cfg)?.value {
                Some(v) => per_step_defect.push((v - v0).abs()),
                None => break,
            }
        }
    }
    Ok(InvariantReport {
        label: format!("series[{}; n={n}]", p.label()),
        value: core.value,
        status: core.status,
        truncation_n: core.depth,
        per_step_defect,
        partial_sums: core.partial_sums,
        tail_estimate: core.tail,
        one_sided: core.one_sided,
    })
}

/// Closed-form report, in the same shape as the series report.
pub fn bipartite_report(map: &MapInstance, x: &State, defect_horizon: usize) -> Result<InvariantReport> {
    let inv = BipartiteInvariant::from_map(map)
        .ok_or_else(|| Error::Precondition(format!("{} has no closed-form invariant", map.describe())))?;
    let v = inv.value(x)?;
    let trace = inv.defect_trace(map, x, defect_horizon)?;
    Ok(InvariantReport {
        label: inv.label(),
        value: Some(v),
        status: SeriesStatus::ClosedForm,
        truncation_n: 0,
        per_step_defect: trace.into_iter().map(|d| d * (1.0 + v.abs())).collect(),
        partial_sums: vec![v],
        tail_estimate: 0.0,
        one_sided: None,
    })
}

/// The series invariant as an [`Invariant`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesInvariant {
    /// Objective in the increments; the map's own when `None`.
    pub objective: Option<ObjectiveSpec>,
    pub weight: WeightFunction,
    pub depth: usize,
    pub config: SeriesConfig,
}

impl SeriesInvariant {
    pub fn new(weight: WeightFunction, depth: usize) -> Self {
        SeriesInvariant {
            objective: None,
            weight,
            depth,
            config: SeriesConfig::default(),
        }
    }

    pub fn report(&self, map: &MapInstance, x: &State) -> Result<InvariantReport> {
        let obj = self.objective.as_ref().unwrap_or(map.objective());
        series_invariant(map, obj, &self.weight, x, self.depth, &self.config)
    }
}

impl Invariant for SeriesInvariant {
    fn label(&self) -> String {
        format!("series[{}; n={}]", self.weight.label(), self.depth)
    }

    fn applies_to(&self, map: &MapInstance) -> bool {
        matches!(map.kind(), MapKind::Gd | MapKind::MwuExp | MapKind::MwuLin | MapKind::RgdSphere)
    }

    fn evaluate(&self, map: &MapInstance, x: &State) -> Result<InvariantValue> {
        let obj = self.objective.as_ref().unwrap_or(map.objective());
        let core = series_core(map, obj, &self.weight, x, self.depth, &self.config)?;
        let uncertainty = if core.one_sided.is_some() { f64::INFINITY } else { core.tail };
        Ok(InvariantValue {
            value: core.value,
            uncertainty,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapInstance;

    fn double_well() -> MapInstance {
        MapInstance::gd(ObjectiveSpec::double_well(1), 0.1).unwrap()
    }

    fn one_sided_series(n: usize) -> InvariantReport {
        let map = double_well();
        series_invariant(&map, map.objective(), &WeightFunction::one(), &State::euclidean(vec![0.5]), n, &SeriesConfig::default()).unwrap()
    }

    #[test]
    fn closed_form_reference_values() {
        let p = PayoffData::scalar(1.0);
        let cases = [
            ((0.1, 0.2), [60.0, -25.0], 31375.0),
            ((0.1, 0.2), [-20.0, 2.0], 3940.0),
            ((0.1, 0.2), [10.0, -50.0], -12000.0),
            ((0.05, 0.02), [-14.0, -5.0], 2740.0),
            ((0.05, 0.02), [5.0, -10.0], -4550.0),
            ((0.05, 0.02), [5.0, -15.0], -10825.0),
        ];
        for ((e1, e2), xy, want) in cases {
            let s = State::bipartite(&xy[..1], &xy[1..]);
            assert_eq!(bipartite_invariant(&p, e1, e2, &s).unwrap(), want);
        }
        assert_eq!(bipartite_invariant(&p, 0.1, 0.2, &State::bipartite(&[0.0], &[0.0])).unwrap(), 0.0);
        assert!(bipartite_invariant(&p, 0.1, 0.2, &State::euclidean(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn rank_examples() {
        let (h, r) = dphi_rank(&PayoffData::scalar(1.0), 0.1, 0.2);
        assert_eq!(r, 2);
        assert_eq!(h[(0, 0)], 20.0);
        assert_eq!(h[(1, 1)], -10.0);
        let zero = PayoffData::two_agent(DMatrix::zeros(2, 3)).unwrap();
        assert_eq!(dphi_rank(&zero, 0.3, 0.4).1, 5);
        let a = DMatrix::from_row_slice(3, 2, &[0.3, -0.7, 0.1, 0.9, -0.4, 0.2]);
        assert!(dphi_rank(&PayoffData::two_agent(a).unwrap(), 0.2, 0.1).1 >= 2);
    }

    #[test]
    fn series_telescopes_with_unit_weight() {
        let map = double_well();
        let x = State::euclidean(vec![0.5]);
        for n in [0, 1, 4, 16] {
            let r = one_sided_series(n);
            let seg = crate::dynamics::orbit(&map, &x, n, n + 1, &OrbitConfig::default()).unwrap();
            let f = |k: i64| map.objective_value(seg.get(k).unwrap());
            let tele = f(-(n as i64) - 1) - f(n as i64);
            assert!((r.value.unwrap() - tele).abs() < 1e-12, "n={n}");
            assert_eq!(r.partial_sums.len(), 2 * n + 1);
            assert_eq!(r.truncation_n, n);
        }
    }

    #[test]
    fn series_matches_oracle() {
        let cases = [
            (4, 0.11487057612497539),
            (8, 0.18870840695300283),
            (16, 0.24152722845430788),
            (32, 0.24970076657598901),
            (64, 0.24999933338471076),
        ];
        for (n, want) in cases {
            let v = one_sided_series(n).value.unwrap();
            assert!((v - want).abs() < 1e-12, "n={n}: {v}");
        }
        let r = one_sided_series(200);
        assert!((r.value.unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(r.status, SeriesStatus::Converged);
        assert!(r.truncation_n < 200);
        assert!(r.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn fixed_point_series_is_zero() {
        let map = double_well();
        let r = series_invariant(&map, map.objective(), &WeightFunction::one(), &State::euclidean(vec![1.0]), 10, &SeriesConfig::default()).unwrap();
        assert_eq!(r.value, Some(0.0));
        assert_eq!(r.status, SeriesStatus::FixedPoint);
        assert!(r.partial_sums.is_empty() && r.per_step_defect.is_empty());
    }

    #[test]
    fn zero_depth_truncation_is_not_invariant() {
        let map = double_well();
        let phi = SeriesInvariant::new(WeightFunction::one(), 0);
        assert!(invariance_defect(&phi, &map, &State::euclidean(vec![0.5]), 1).unwrap() > 1e-4);
        let c = ConstantInvariant(4.0);
        assert_eq!(invariance_defect(&c, &map, &State::euclidean(vec![0.5]), 5).unwrap(), 0.0);
        assert!(invariance_defect(&c, &map, &State::euclidean(vec![0.5]), 0).is_err());
    }

    #[test]
    fn series_defect_decays_with_depth() {
        let map = double_well();
        let x = State::euclidean(vec![0.5]);
        let want = [
            (4, 0.0064921333953),
            (8, 0.00331319658378),
            (16, 0.00240814619035),
            (32, 0.000181702286382),
            (64, 4.11464621073e-7),
        ];
        for (n, d) in want {
            let got = invariance_defect(&SeriesInvariant::new(WeightFunction::one(), n), &map, &x, 3).unwrap();
            assert!((got - d).abs() <= 1e-9 * d.max(1e-6), "n={n}: {got} vs {d}");
        }
    }

    #[test]
    fn constant_increments_are_divergent() {
        // GD on a linear objective moves by a fixed amount each step, so
        // every increment equals η‖w‖²
        let obj = ObjectiveSpec::linear(vec![1.0]);
        let map = MapInstance::gd(obj.clone(), 0.1).unwrap();
        let r = series_invariant(&map, &obj, &WeightFunction::one(), &State::euclidean(vec![0.0]), 100, &SeriesConfig::default()).unwrap();
        assert_eq!(r.status, SeriesStatus::Diverged);
        assert_eq!(r.value, None);
        assert!(r.truncation_n <= 33);
    }

    #[test]
    fn failed_inversion_gives_one_sided_sum() {
        let obj = ObjectiveSpec::quadratic(1);
        let map = MapInstance::gd(obj.clone(), 0.5).unwrap();
        let r = series_invariant(&map, &obj, &WeightFunction::one(), &State::euclidean(vec![3.0]), 50, &SeriesConfig::default()).unwrap();
        let side = r.one_sided.expect("backward orbit leaves the region");
        assert_eq!(side.failed_at, -2);
        assert_eq!(r.partial_sums.len(), 2 * r.truncation_n + 1);
        assert!(r.value.is_some());
    }

    #[test]
    fn closed_form_defect_uses_precise_orbits() {
        let map = MapInstance::alt_play(PayoffData::scalar(1.0), 0.1, 0.2).unwrap();
        let inv = BipartiteInvariant::from_map(&map).unwrap();
        let x = State::bipartite(&[60.0], &[-25.0]);
        assert!(invariance_defect(&inv, &map, &x, 2000).unwrap() < 1e-12);
        assert!(inv.structural_defect(&map).unwrap() < 1e-14);
        let other = MapInstance::alt_play(PayoffData::scalar(1.0), 0.1, 0.3).unwrap();
        assert!(inv.structural_defect(&other).is_none());
        let rep = bipartite_report(&map, &x, 5).unwrap();
        assert_eq!(rep.value, Some(31375.0));
        assert_eq!(rep.per_step_defect.len(), 5);
    }

    #[test]
    fn weights() {
        let x = [0.3, -0.2];
        assert_eq!(WeightFunction::one().eval(&x), 1.0);
        assert_eq!(WeightFunction::Coordinate { index: 1 }.eval(&x), -0.2);
        let g = WeightFunction::GaussianBump {
            center: vec![0.3, -0.2],
            width: 0.5,
        };
        assert_eq!(g.eval(&x), 1.0);
    }
}
