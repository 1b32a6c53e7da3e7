//! Finite-horizon evidence for and against Li-Yorke scrambled pairs, the
//! level-set confinement check, and the same-orbit classifier.
//!
//! Every test here is a proxy for an asymptotic statement. A pair can be a
//! "scramble candidate", never certified scrambled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::InverseConfig;
use crate::error::{Error, Result};
use crate::invariants::Invariant;
use crate::maps::MapInstance;
use crate::state::State;

/// Thresholds of the pair classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaosConfig {
    /// Fraction of the horizon, taken from the end, that forms the tail
    /// window.
    pub tail_fraction: f64,
    pub eps_low: f64,
    pub eps_high: f64,
    /// Relative gap `|Φ(x) − Φ(y)| / (1 + max|Φ|)` treated as "same level".
    pub level_tolerance: f64,
    /// Largest invariance defect accepted before a confinement check.
    pub max_defect: f64,
    /// Orbits whose defect is checked before a confinement scan.
    pub defect_samples: usize,
}

impl Default for ChaosConfig {
    fn default() -> Self {
        ChaosConfig {
            tail_fraction: 0.2,
            eps_low: 1e-6,
            eps_high: 1e-3,
            level_tolerance: 1e-9,
            max_defect: 1e-9,
            defect_samples: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `liminf ≤ ε_low` and `limsup ≥ ε_high` on the tail window.
    ScrambleCandidate,
    /// The tail distance stays above `ε_low`.
    Separated,
    /// The tail distance stays at or below `ε_low`.
    ConvergingPair,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosReport {
    pub pair: (State, State),
    /// Smallest tail distance; `null` in JSON when beyond double range.
    pub liminf_estimate: f64,
    pub limsup_estimate: f64,
    /// Base-10 logarithms of the two estimates, finite even when the
    /// distances are not representable.
    pub log10_liminf: f64,
    pub log10_limsup: f64,
    pub horizon: usize,
    /// First and last step of the tail window.
    pub window: (usize, usize),
    pub invariant_gap: Option<f64>,
    pub verdict: Verdict,
    /// Step at which iteration failed; the window then ends early.
    pub stopped_at: Option<usize>,
}

const RESCALE_BITS: i32 = 512;

/// Iterates `x` and `y` for `horizon` steps and classifies the distance
/// profile over the tail window.
///
/// Linear maps are iterated with both states rescaled by a shared power of
/// two whenever they approach the edge of the double range; the reported
/// logarithms carry the true scale.
pub fn scrambled_pair_estimate(
    map: &MapInstance,
    x: &State,
    y: &State,
    horizon: usize,
    cfg: &ChaosConfig,
    phi: Option<&dyn Invariant>,
) -> Result<ChaosReport> {
    if x.chart() != y.chart() || x.dim() != y.dim() {
        return Err(Error::Precondition("pair states live on different charts".into()));
    }
    if x.coords() == y.coords() {
        return Err(Error::Precondition("x = y: the distance is identically zero".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if !(cfg.tail_fraction > 0.0 && cfg.tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("tail fraction {} outside (0, 1]", cfg.tail_fraction)));
    }
    let invariant_gap = match phi {
        Some(p) => match (p.evaluate(map, x)?.value, p.evaluate(map, y)?.value) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        },
        None => None,
    };

    let width = ((horizon as f64 * cfg.tail_fraction).ceil() as usize).clamp(1, horizon);
    let start = horizon - width + 1;
    let linear = map.is_linear();
    let mut a = x.clone();
    let mut b = y.clone();
    let mut log2_scale: i64 = 0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut stopped_at = None;
    for k in 1..=horizon {
        let (na, nb) = match (map.step(&a), map.step(&b)) {
            (Ok(na), Ok(nb)) => (na, nb),
            _ => {
                stopped_at = Some(k);
                break;
            }
        };
        a = na;
        b = nb;
        if linear {
            rescale(&mut a, &mut b, &mut log2_scale)?;
        }
        if k >= start {
            let d = a.distance(&b);
            let l2 = if d > 0.0 { d.log2() + log2_scale as f64 } else { f64::NEG_INFINITY };
            lo = lo.min(l2);
            hi = hi.max(l2);
        }
    }
    let to_value = |l2: f64| if l2.is_finite() { 2f64.powf(l2) } else if l2 > 0.0 { f64::INFINITY } else { 0.0 };
    let (lo, hi) = if lo > hi { (f64::NAN, f64::NAN) } else { (lo, hi) };
    let liminf = to_value(lo);
    let limsup = to_value(hi);
    let verdict = if lo.is_nan() {
        Verdict::Inconclusive
    } else if liminf <= cfg.eps_low && limsup >= cfg.eps_high {
        Verdict::ScrambleCandidate
    } else if limsup <= cfg.eps_low {
        Verdict::ConvergingPair
    } else if liminf > cfg.eps_low {
        Verdict::Separated
    } else {
        Verdict::Inconclusive
    };
    let log10_2 = std::f64::consts::LOG10_2;
    Ok(ChaosReport {
        pair: (x.clone(), y.clone()),
        liminf_estimate: liminf,
        limsup_estimate: limsup,
        log10_liminf: lo * log10_2,
        log10_limsup: hi * log10_2,
        horizon,
        window: (start, horizon),
        invariant_gap,
        verdict,
        stopped_at,
    })
}

/// Multiplies both states by `2^{∓512}` when their largest coordinate
/// leaves `[2^-512, 2^512]`; exact in binary floating point.
fn rescale(a: &mut State, b: &mut State, log2_scale: &mut i64) -> Result<()> {
    let m = a.coords().iter().chain(b.coords()).fold(0.0_f64, |m, v| m.max(v.abs()));
    let shift = if m > 2f64.powi(RESCALE_BITS) {
        -RESCALE_BITS
    } else if m > 0.0 && m < 2f64.powi(-RESCALE_BITS) {
        RESCALE_BITS
    } else {
        return Ok(());
    };
    let f = 2f64.powi(shift);
    *a = a.with_coords(a.coords().iter().map(|v| v * f).collect())?;
    *b = b.with_coords(b.coords().iter().map(|v| v * f).collect())?;
    *log2_scale -= shift as i64;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Confinement {
    /// The invariant does not belong to this map.
    Skipped { reason: String },
    Checked(ConfinementSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub scramble_candidate: usize,
    pub separated: usize,
    pub converging_pair: usize,
    pub inconclusive: usize,
}

impl VerdictCounts {
    pub fn tally<'a>(reports: impl IntoIterator<Item = &'a ChaosReport>) -> Self {
        let mut c = VerdictCounts {
            scramble_candidate: 0,
            separated: 0,
            converging_pair: 0,
            inconclusive: 0,
        };
        for r in reports {
            match r.verdict {
                Verdict::ScrambleCandidate => c.scramble_candidate += 1,
                Verdict::Separated => c.separated += 1,
                Verdict::ConvergingPair => c.converging_pair += 1,
                Verdict::Inconclusive => c.inconclusive += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementSummary {
    pub invariant: String,
    /// Largest defect found while verifying the invariant.
    pub verified_defect: f64,
    /// Defect of `Φ∘T − Φ` over all of state space, when available.
    pub structural_defect: Option<f64>,
    pub counts: VerdictCounts,
    /// Indices of scramble candidates whose endpoints share a level set.
    pub candidates: Vec<usize>,
    /// Indices of scramble candidates across distinct level sets; any
    /// entry contradicts conservation and indicates a bug.
    pub refutations: Vec<usize>,
    pub reports: Vec<ChaosReport>,
}

/// Runs [`scrambled_pair_estimate`] over `pairs` and checks that every
/// scramble candidate joins two points of the same level set of `phi`.
///
/// `phi` is first verified on the map: its defect over `horizon` steps
/// must stay below `cfg.max_defect` on the first `cfg.defect_samples`
/// orbits, and its structural defect when it has one.
pub fn level_set_confinement(
    map: &MapInstance,
    phi: &dyn Invariant,
    pairs: &[(State, State)],
    horizon: usize,
    cfg: &ChaosConfig,
) -> Result<Confinement> {
    if !phi.applies_to(map) {
        return Ok(Confinement::Skipped {
            reason: format!("{} is not an invariant of {}", phi.label(), map.describe()),
        });
    }
    let structural = phi.structural_defect(map);
    if let Some(s) = structural {
        if !(s <= cfg.max_defect) {
            return Err(Error::Precondition(format!("{} has structural defect {s:e}", phi.label())));
        }
    }
    let samples: Vec<&State> = pairs.iter().flat_map(|(a, b)| [a, b]).take(cfg.defect_samples).collect();
    let defects: Vec<f64> = samples
        .par_iter()
        .map(|s| crate::invariants::invariance_defect(phi, map, s, horizon))
        .collect::<Result<_>>()?;
    let verified = defects.into_iter().fold(0.0, f64::max);
    if !(verified <= cfg.max_defect) {
        return Err(Error::Precondition(format!(
            "{} drifts by {verified:e} along tested orbits, above {:e}",
            phi.label(),
            cfg.max_defect
        )));
    }

    let reports: Vec<ChaosReport> = pairs
        .par_iter()
        .map(|(a, b)| scrambled_pair_estimate(map, a, b, horizon, cfg, Some(phi)))
        .collect::<Result<_>>()?;
    let mut candidates = Vec::new();
    let mut refutations = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        if r.verdict != Verdict::ScrambleCandidate {
            continue;
        }
        let scale = [&r.pair.0, &r.pair.1]
            .iter()
            .filter_map(|s| phi.evaluate(map, s).ok().and_then(|v| v.value))
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        match r.invariant_gap {
            Some(g) if g <= cfg.level_tolerance * (1.0 + scale) => candidates.push(i),
            _ => refutations.push(i),
        }
    }
    Ok(Confinement::Checked(ConfinementSummary {
        invariant: phi.label(),
        verified_defect: verified,
        structural_defect: structural,
        counts: VerdictCounts::tally(&reports),
        candidates,
        refutations,
        reports,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum NoReason {
    /// The invariant separates the two points.
    InvariantGap { gap: f64, threshold: f64 },
    /// `x` is a fixed point, so its orbit is `{x}`, and `y ≠ x`.
    FixedOrbit { distance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "snake_case")]
pub enum OrbitVerdict {
    /// `‖Tᵏx − y‖ ≤ tol` at `index = k`.
    Yes { index: i64, distance: f64 },
    No(NoReason),
    /// Neither test decided; the closest iterate found is recorded.
    Inconclusive { closest_index: i64, closest_distance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SameOrbitReport {
    pub verdict: OrbitVerdict,
    pub phi_x: Option<f64>,
    pub phi_y: Option<f64>,
    /// Why the search lost a direction, if it did.
    pub degraded: Option<String>,
    pub steps_forward: usize,
    pub steps_backward: usize,
}

/// Semi-decision for `y ∈ {Tᵏx : k ∈ ℤ}`.
///
/// A differing invariant value answers NO without iterating. Otherwise the
/// orbit of `x` is searched in order of increasing `|k|` for an iterate
/// within `tol` of `y`.
pub fn same_orbit(
    map: &MapInstance,
    x: &State,
    y: &State,
    max_iter: usize,
    tol: f64,
    phi: Option<&dyn Invariant>,
    inverse: &InverseConfig,
) -> Result<SameOrbitReport> {
    if x.chart() != y.chart() || x.dim() != y.dim() {
        return Err(Error::Precondition("states live on different charts".into()));
    }
    map.check_domain(x)?;
    let (mut phi_x, mut phi_y) = (None, None);
    if let Some(p) = phi {
        let (vx, vy) = (p.evaluate(map, x)?, p.evaluate(map, y)?);
        phi_x = vx.value;
        phi_y = vy.value;
        if let (Some(a), Some(b)) = (vx.value, vy.value) {
            let threshold = tol * (1.0 + a.abs().max(b.abs())) + vx.uncertainty + vy.uncertainty;
            let gap = (a - b).abs();
            if gap > threshold {
                return Ok(SameOrbitReport {
                    verdict: OrbitVerdict::No(NoReason::InvariantGap { gap, threshold }),
                    phi_x,
                    phi_y,
                    degraded: None,
                    steps_forward: 0,
                    steps_backward: 0,
                });
            }
        }
    }
    let report = |verdict, degraded, f, b| SameOrbitReport {
        verdict,
        phi_x,
        phi_y,
        degraded,
        steps_forward: f,
        steps_backward: b,
    };

    let d0 = x.distance(y);
    if d0 <= tol {
        return Ok(report(OrbitVerdict::Yes { index: 0, distance: d0 }, None, 0, 0));
    }
    let tx = map.step(x)?;
    if tx.distance(x) <= crate::dynamics::DEFAULT_FIXED_POINT_TOLERANCE.min(tol) {
        return Ok(report(OrbitVerdict::No(NoReason::FixedOrbit { distance: d0 }), None, 1, 0));
    }

    let mut best = (0_i64, d0);
    let mut fwd = Some(x.clone());
    let mut back = Some(x.clone());
    let mut degraded = None;
    let (mut nf, mut nb) = (0, 0);
    for k in 1..=max_iter {
        if let Some(cur) = fwd.take() {
            match map.step(&cur) {
                Ok(next) => {
                    nf = k;
                    let d = next.distance(y);
                    if d <= tol {
                        return Ok(report(OrbitVerdict::Yes { index: k as i64, distance: d }, degraded, nf, nb));
                    }
                    if d < best.1 {
                        best = (k as i64, d);
                    }
                    fwd = Some(next);
                }
                Err(e) => degraded = Some(format!("forward search stopped at step {k}: {e}")),
            }
        }
        if let Some(cur) = back.take() {
            match map.inverse(&cur, inverse) {
                Ok(prev) => {
                    nb = k;
                    let d = prev.distance(y);
                    if d <= tol {
                        return Ok(report(OrbitVerdict::Yes { index: -(k as i64), distance: d }, degraded, nf, nb));
                    }
                    if d < best.1 {
                        best = (-(k as i64), d);
                    }
                    back = Some(prev);
                }
                Err(e) => {
                    let msg = format!("backward search stopped at step -{k}: {e}");
                    degraded = Some(match degraded {
                        Some(d) => format!("{d}; {msg}"),
                        None => msg,
                    });
                }
            }
        }
        if fwd.is_none() && back.is_none() {
            break;
        }
    }
    Ok(report(
        OrbitVerdict::Inconclusive {
            closest_index: best.0,
            closest_distance: best.1,
        },
        degraded,
        nf,
        nb,
    ))
}

/// Invariant values that label the orbit of `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSignature {
    pub invariant_values: Vec<(String, f64)>,
    pub source: State,
}

pub fn orbit_signature(map: &MapInstance, x: &State, invariants: &[&dyn Invariant]) -> Result<OrbitSignature> {
    let mut values = Vec::with_capacity(invariants.len());
    for inv in invariants {
        let v = inv
            .evaluate(map, x)?
            .value
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Precondition(format!("{} has no finite value at this state", inv.label())))?;
        values.push((inv.label(), v));
    }
    Ok(OrbitSignature {
        invariant_values: values,
        source: x.clone(),
    })
}
