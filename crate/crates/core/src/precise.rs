//! Alternating play in extended precision.
//!
//! Alternating play is linear with eigenvalues `λ, 1/λ` per singular value
//! of the payoff, so orbits grow like `λᵏ` while the invariant stays put.
//! In double precision the invariant is lost to cancellation after a few
//! hundred steps. Here states are carried with a mantissa that widens as
//! the orbit grows, which keeps the computed invariant exact to roughly
//! `2^-GUARD_BITS` relative over the whole run.

use astro_float::{BigFloat, RoundingMode, Sign};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{MapInstance, MapKind};
use crate::objectives::PayoffData;

const RM: RoundingMode = RoundingMode::ToEven;
/// Bits kept beyond the cancellation the invariant suffers.
pub const GUARD_BITS: usize = 24;
const BASE_BITS: usize = 64;

/// Nearest `f64` to `v`; saturates to `±∞` and flushes to zero outside
/// the double range.
pub fn big_to_f64(v: &BigFloat) -> f64 {
    if v.is_nan() {
        return f64::NAN;
    }
    if v.is_inf_pos() {
        return f64::INFINITY;
    }
    if v.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if v.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, e, _)) = v.as_raw_parts() else {
        return f64::NAN;
    };
    let top = words[words.len() - 1] as f64;
    let next = if words.len() > 1 { words[words.len() - 2] as f64 } else { 0.0 };
    // value = 0.m × 2^e with the most significant word last
    let mant = top + next * 2f64.powi(-64);
    let mag = ldexp(mant, e as i64 - 64);
    if sign == Sign::Neg {
        -mag
    } else {
        mag
    }
}

/// `log2|v|`; `-∞` for zero.
pub fn big_log2_abs(v: &BigFloat) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    match v.as_raw_parts() {
        Some((words, _, _, e, _)) => e as f64 + (words[words.len() - 1] as f64).log2() - 64.0,
        None => f64::NAN,
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

fn exact(v: f64) -> BigFloat {
    BigFloat::from_f64(v, BASE_BITS)
}

/// Largest eigenvalue modulus of the alternating-play map: the larger root
/// of `λ² − (2 + η₁η₂σ²)λ + 1 = 0` for the top singular value `σ` of `𝐀`.
pub fn alt_play_spectral_radius(payoff: &PayoffData, eta1: f64, eta2: f64) -> f64 {
    let a = payoff.assembled();
    let sigma = if a.is_empty() {
        0.0
    } else {
        a.clone().svd(false, false).singular_values.max()
    };
    let b = 2.0 + eta1 * eta2 * sigma * sigma;
    (b + (b * b - 4.0).max(0.0).sqrt()) / 2.0
}

/// One row of a precise orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreciseRow {
    pub t: i64,
    /// Coordinates rounded to `f64`; infinite once the orbit leaves the
    /// double range.
    pub coords: Vec<f64>,
    /// `log2 ‖T^t z‖_∞`, finite beyond the double range.
    pub log2_norm: f64,
    pub phi: f64,
    /// `|Φ(T^t z) − Φ(z)| / (1 + |Φ(z)|)`.
    pub defect: f64,
    /// `|Φ(T^t z) − Φ(T^{t∓1} z)| / (1 + |Φ(z)|)`, zero at `t = 0`.
    pub step_defect: f64,
}

/// Orbit segment computed by [`PreciseAltPlay::run`], rows ordered by `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreciseOrbit {
    pub rows: Vec<PreciseRow>,
    pub max_defect: f64,
    pub max_step_defect: f64,
    pub max_precision_bits: usize,
    pub spectral_radius: f64,
}

impl PreciseOrbit {
    pub fn row(&self, t: i64) -> Option<&PreciseRow> {
        let first = self.rows.first()?.t;
        usize::try_from(t - first).ok().and_then(|i| self.rows.get(i))
    }
}

/// Extended-precision evaluator for one alternating-play instance.
#[derive(Debug, Clone)]
pub struct PreciseAltPlay {
    rows: Vec<Vec<(usize, BigFloat)>>,
    cols: Vec<Vec<(usize, BigFloat)>>,
    x_dim: usize,
    y_dim: usize,
    eta1: BigFloat,
    eta2: BigFloat,
    eta12: BigFloat,
    eta1_f: f64,
    eta2_f: f64,
    payoff: PayoffData,
    spectral_radius: f64,
}

#[derive(Clone)]
struct Point {
    x: Vec<BigFloat>,
    y: Vec<BigFloat>,
    /// `𝐀y` for the current `y`.
    ay: Vec<BigFloat>,
}

impl PreciseAltPlay {
    pub fn new(payoff: &PayoffData, eta1: f64, eta2: f64) -> Self {
        let a: &DMatrix<f64> = payoff.assembled();
        let (xd, yd) = (payoff.x_dim(), payoff.y_dim());
        let mut rows = vec![Vec::new(); xd];
        let mut cols = vec![Vec::new(); yd];
        for i in 0..xd {
            for j in 0..yd {
                let v = a[(i, j)];
                if v != 0.0 {
                    rows[i].push((j, exact(v)));
                    cols[j].push((i, exact(v)));
                }
            }
        }
        let e1 = exact(eta1);
        let e2 = exact(eta2);
        // product of two doubles is exact in 128 bits
        let e12 = e1.mul(&e2, 128, RM);
        PreciseAltPlay {
            rows,
            cols,
            x_dim: xd,
            y_dim: yd,
            eta1: e1,
            eta2: e2,
            eta12: e12,
            eta1_f: eta1,
            eta2_f: eta2,
            payoff: payoff.clone(),
            spectral_radius: alt_play_spectral_radius(payoff, eta1, eta2),
        }
    }

    /// Engine for `map` when it is alternating play.
    pub fn from_map(map: &MapInstance) -> Option<Self> {
        match (map.kind(), map.payoff()) {
            (MapKind::AltPlay, Some(p)) => Some(Self::new(p, map.step_sizes()[0], map.step_sizes()[1])),
            _ => None,
        }
    }

    /// Whether this engine evaluates the same instance as `map`.
    pub fn matches(&self, map: &MapInstance) -> bool {
        map.kind() == MapKind::AltPlay
            && map.payoff() == Some(&self.payoff)
            && map.step_sizes() == [self.eta1_f, self.eta2_f]
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    fn apply(&self, y: &[BigFloat], p: usize) -> Vec<BigFloat> {
        self.rows.iter().map(|row| dot_sparse(row, y, p)).collect()
    }

    fn apply_transpose(&self, x: &[BigFloat], p: usize) -> Vec<BigFloat> {
        self.cols.iter().map(|col| dot_sparse(col, x, p)).collect()
    }

    fn forward(&self, z: &mut Point, p: usize) {
        for (xi, v) in z.x.iter_mut().zip(&z.ay) {
            *xi = xi.add(&self.eta1.mul(v, p, RM), p, RM);
        }
        let atx = self.apply_transpose(&z.x, p);
        for (yj, v) in z.y.iter_mut().zip(&atx) {
            *yj = yj.add(&self.eta2.mul(v, p, RM), p, RM);
        }
        z.ay = self.apply(&z.y, p);
    }

    fn backward(&self, z: &mut Point, p: usize) {
        let atx = self.apply_transpose(&z.x, p);
        for (yj, v) in z.y.iter_mut().zip(&atx) {
            *yj = yj.sub(&self.eta2.mul(v, p, RM), p, RM);
        }
        z.ay = self.apply(&z.y, p);
        for (xi, v) in z.x.iter_mut().zip(&z.ay) {
            *xi = xi.sub(&self.eta1.mul(v, p, RM), p, RM);
        }
    }

    /// `η₁η₂Φ = Σᵢ xᵢ(η₂xᵢ + η₁η₂(𝐀y)ᵢ) − η₁‖y‖²`, free of divisions and
    /// with one full-width product per coordinate.
    fn scaled_phi(&self, z: &Point, p: usize) -> BigFloat {
        let mut acc = BigFloat::from_word(0, BASE_BITS);
        for (xi, ai) in z.x.iter().zip(&z.ay) {
            let w = self.eta2.mul(xi, p, RM).add(&self.eta12.mul(ai, p, RM), p, RM);
            acc = acc.add(&xi.mul(&w, p, RM), p, RM);
        }
        let yy = dot(&z.y, &z.y, p);
        acc.sub(&self.eta1.mul(&yy, p, RM), p, RM)
    }

    fn log2_norm(z: &Point) -> f64 {
        z.x.iter().chain(&z.y).map(big_log2_abs).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Working precision for a state of sup-norm `2^l2`: the invariant
    /// cancels terms of size `~ dim·‖𝐀‖·2^{2·l2}` down to `η₁η₂Φ`.
    fn precision(&self, l2: f64, log2_scale: f64, log2_steps: f64) -> usize {
        let dim = (self.x_dim + self.y_dim) as f64;
        let loss = (2.0 * l2 + dim.log2() + 4.0 - log2_scale).max(0.0);
        let bits = BASE_BITS as f64 + GUARD_BITS as f64 + loss + log2_steps;
        bits.ceil() as usize
    }

    fn point(&self, xy: &[f64]) -> Result<Point> {
        if xy.len() != self.x_dim + self.y_dim {
            return Err(Error::Domain(format!(
                "state has {} coordinates, payoff needs {}+{}",
                xy.len(),
                self.x_dim,
                self.y_dim
            )));
        }
        if xy.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("state is not finite".into()));
        }
        let y: Vec<BigFloat> = xy[self.x_dim..].iter().map(|&v| exact(v)).collect();
        Ok(Point {
            x: xy[..self.x_dim].iter().map(|&v| exact(v)).collect(),
            ay: self.apply(&y, 4 * BASE_BITS),
            y,
        })
    }

    /// The invariant at an `f64` state, evaluated without rounding error
    /// beyond the final conversion.
    pub fn phi(&self, xy: &[f64]) -> Result<f64> {
        let z = self.point(xy)?;
        let p = 4 * BASE_BITS + 64;
        let g = self.scaled_phi(&z, p);
        Ok(big_to_f64(&g.div(&self.eta12, p, RM)))
    }

    /// Iterates `forward` steps ahead and `backward` steps back from `xy`.
    /// `phi` is the closed form at `xy` plus the drift accumulated by the
    /// extended-precision orbit, so row 0 matches the closed form exactly.
    pub fn run(&self, xy: &[f64], forward: usize, backward: usize) -> Result<PreciseOrbit> {
        let z0 = self.point(xy)?;
        let phi0 = crate::invariants::bipartite_phi(&self.payoff, self.eta1_f, self.eta2_f, xy);
        let g0_prec = 4 * BASE_BITS + 64;
        let g0 = self.scaled_phi(&z0, g0_prec);
        let log2_scale = (big_to_f64(&self.eta12).abs() * (1.0 + phi0.abs())).log2();
        let log2_steps = ((forward.max(backward) + 1) as f64).log2();
        let denom = 1.0 + phi0.abs();

        let origin = PreciseRow {
            t: 0,
            coords: xy.to_vec(),
            log2_norm: Self::log2_norm(&z0),
            phi: phi0,
            defect: 0.0,
            step_defect: 0.0,
        };
        let mut max_bits = g0_prec;
        let mut branch = |dir: i64, n: usize| -> Vec<PreciseRow> {
            let mut z = z0.clone();
            let mut prev_drift = 0.0;
            let mut out = Vec::with_capacity(n);
            for k in 1..=n {
                let p = self.precision(Self::log2_norm(&z) + self.spectral_radius.log2(), log2_scale, log2_steps);
                max_bits = max_bits.max(p);
                if dir > 0 {
                    self.forward(&mut z, p);
                } else {
                    self.backward(&mut z, p);
                }
                let g = self.scaled_phi(&z, p);
                let dg = g.sub(&g0, p, RM).div(&self.eta12, 128, RM);
                let drift = big_to_f64(&dg);
                out.push(PreciseRow {
                    t: dir * k as i64,
                    coords: z.x.iter().chain(&z.y).map(big_to_f64).collect(),
                    log2_norm: Self::log2_norm(&z),
                    phi: phi0 + drift,
                    defect: drift.abs() / denom,
                    step_defect: (drift - prev_drift).abs() / denom,
                });
                prev_drift = drift;
            }
            out
        };
        let back = branch(-1, backward);
        let fwd = branch(1, forward);
        let mut rows: Vec<PreciseRow> = back.into_iter().rev().collect();
        rows.push(origin);
        rows.extend(fwd);
        let max_defect = rows.iter().map(|r| r.defect).fold(0.0, f64::max);
        let max_step_defect = rows.iter().map(|r| r.step_defect).fold(0.0, f64::max);
        Ok(PreciseOrbit {
            rows,
            max_defect,
            max_step_defect,
            max_precision_bits: max_bits,
            spectral_radius: self.spectral_radius,
        })
    }
}

fn dot_sparse(entries: &[(usize, BigFloat)], v: &[BigFloat], p: usize) -> BigFloat {
    let mut acc = BigFloat::from_word(0, BASE_BITS);
    for (j, a) in entries {
        acc = acc.add(&a.mul(&v[*j], p, RM), p, RM);
    }
    acc
}

fn dot(a: &[BigFloat], b: &[BigFloat], p: usize) -> BigFloat {
    let mut acc = BigFloat::from_word(0, BASE_BITS);
    for (u, v) in a.iter().zip(b) {
        acc = acc.add(&u.mul(v, p, RM), p, RM);
    }
    acc
}
