//! Objective catalog, payoff data, and step-size admissibility checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MapInstance;
use crate::sampling::seeded;
use crate::state::{dot, norm, State};

/// Safety factor applied to sampled smoothness constants.
pub const ESTIMATE_SAFETY_FACTOR: f64 = 1.25;
/// Samples used when a smoothness constant has to be estimated.
pub const ESTIMATE_SAMPLES: usize = 1000;
/// Radius of the tangent ball sampled for the pullback Lipschitz constant.
pub const PULLBACK_RADIUS: f64 = 0.5;
const ESTIMATE_SEED: u64 = 0x5eed_0b1e;

/// Compact working region of an objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `[lower, upper]` in every coordinate.
    Box { lower: f64, upper: f64 },
    Ball { radius: f64 },
    SimplexProduct { blocks: Vec<usize> },
    Sphere,
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Box { lower, upper } => x.iter().all(|c| *lower <= *c && *c <= *upper),
            Region::Ball { radius } => norm(x) <= *radius,
            Region::SimplexProduct { blocks } => {
                let mut start = 0;
                blocks.iter().all(|&n| {
                    let b = &x[start..start + n];
                    start += n;
                    b.iter().all(|c| *c >= 0.0) && (b.iter().sum::<f64>() - 1.0).abs() <= 1e-9
                })
            }
            Region::Sphere => (norm(x) - 1.0).abs() <= 1e-9,
        }
    }

    /// Uniform sample (Dirichlet(1) per block on simplices).
    pub fn sample<R: Rng>(&self, rng: &mut R, dim: usize) -> Vec<f64> {
        match self {
            Region::Box { lower, upper } => (0..dim).map(|_| rng.gen_range(*lower..=*upper)).collect(),
            Region::Ball { radius } => {
                let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                let n = norm(&dir).max(f64::MIN_POSITIVE);
                let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
                dir.into_iter().map(|c| c / n * r).collect()
            }
            Region::SimplexProduct { blocks } => {
                let mut out = Vec::with_capacity(dim);
                for &n in blocks {
                    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                    let s: f64 = e.iter().sum();
                    out.extend(e.into_iter().map(|v| v / s));
                }
                out
            }
            Region::Sphere => loop {
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                let n = norm(&v);
                if n > 1e-8 {
                    break v.into_iter().map(|c| c / n).collect();
                }
            },
        }
    }
}

/// Payoff blocks `A^{ij}` (each `k1 × k2`) between `n` row players and
/// `m` column players, kept in assembled form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPayoff", into = "RawPayoff")]
pub struct PayoffData {
    n: usize,
    m: usize,
    k1: usize,
    k2: usize,
    assembled: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPayoff {
    /// `blocks[i][j]` is the row-major matrix `A^{ij}`.
    blocks: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<RawPayoff> for PayoffData {
    type Error = Error;

    fn try_from(raw: RawPayoff) -> Result<Self> {
        let mut blocks = Vec::with_capacity(raw.blocks.len());
        for row in raw.blocks {
            let mut out = Vec::with_capacity(row.len());
            for rows in row {
                let r = rows.len();
                let c = rows.first().map_or(0, |v| v.len());
                if rows.iter().any(|v| v.len() != c) {
                    return Err(Error::InvalidParameter("ragged payoff block".into()));
                }
                out.push(DMatrix::from_row_iterator(r, c, rows.into_iter().flatten()));
            }
            blocks.push(out);
        }
        PayoffData::from_blocks(&blocks)
    }
}

impl From<PayoffData> for RawPayoff {
    fn from(p: PayoffData) -> Self {
        let blocks = (0..p.n)
            .map(|i| {
                (0..p.m)
                    .map(|j| {
                        let b = p.block(i, j);
                        (0..b.nrows())
                            .map(|r| b.row(r).iter().copied().collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        RawPayoff { blocks }
    }
}

impl PayoffData {
    pub fn from_blocks(blocks: &[Vec<DMatrix<f64>>]) -> Result<Self> {
        let n = blocks.len();
        let m = blocks.first().map_or(0, |r| r.len());
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter("payoff needs at least one block".into()));
        }
        let (k1, k2) = blocks[0][0].shape();
        if k1 == 0 || k2 == 0 {
            return Err(Error::InvalidParameter("empty payoff block".into()));
        }
        let mut assembled = DMatrix::zeros(n * k1, m * k2);
        for (i, row) in blocks.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidParameter(format!(
                    "payoff row {i} has {} blocks, expected {m}",
                    row.len()
                )));
            }
            for (j, b) in row.iter().enumerate() {
                if b.shape() != (k1, k2) {
                    return Err(Error::InvalidParameter(format!(
                        "block ({i},{j}) is {:?}, expected {:?}",
                        b.shape(),
                        (k1, k2)
                    )));
                }
                if b.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(format!("block ({i},{j}) is not finite")));
                }
                assembled.view_mut((i * k1, j * k2), (k1, k2)).copy_from(b);
            }
        }
        Ok(PayoffData { n, m, k1, k2, assembled })
    }

    /// Two-agent game with payoff matrix `a`.
    pub fn two_agent(a: DMatrix<f64>) -> Result<Self> {
        PayoffData::from_blocks(&[vec![a]])
    }

    /// Scalar coordination game `f(x, y) = a·x·y`.
    pub fn scalar(a: f64) -> Self {
        PayoffData::two_agent(DMatrix::from_element(1, 1, a)).expect("finite scalar payoff")
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.assembled
            .view((i * self.k1, j * self.k2), (self.k1, self.k2))
            .into_owned()
    }

    /// The block matrix 𝐀.
    pub fn assembled(&self) -> &DMatrix<f64> {
        &self.assembled
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n, self.m, self.k1, self.k2)
    }

    pub fn x_dim(&self) -> usize {
        self.n * self.k1
    }

    pub fn y_dim(&self) -> usize {
        self.m * self.k2
    }

    /// `𝐀y`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let a = &self.assembled;
        (0..a.nrows())
            .map(|r| (0..a.ncols()).map(|c| a[(r, c)] * y[c]).sum())
            .collect()
    }

    /// `𝐀ᵀx`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let a = &self.assembled;
        (0..a.ncols())
            .map(|c| (0..a.nrows()).map(|r| a[(r, c)] * x[r]).sum())
            .collect()
    }

    /// `Σᵢⱼ ⟨xᵢ, A^{ij} yⱼ⟩`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.apply(y))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.assembled.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The shipped objective functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// `½‖x‖²`
    Quadratic,
    /// `⟨x, 𝐀y⟩` on the stacked state `(x, y)`.
    Bilinear { payoff: PayoffData },
    /// `Σ xᵢ⁴/4 − xᵢ²/2`
    DoubleWell,
    /// `⟨c, x⟩`
    Linear { weights: Vec<f64> },
    /// `−1/(1+‖x‖²)`
    Bump,
}

/// A smooth objective with its analytic derivatives and smoothness data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub dimension: usize,
    /// Uniform bound `L` on `|∂²f/∂xᵢ∂xⱼ|` over the working region.
    pub hessian_entry_bound: Option<f64>,
    pub region: Option<Region>,
    /// When false the analytic Hessian is withheld and callers fall back to
    /// finite differences of the gradient.
    pub analytic_hessian: bool,
}

impl ObjectiveSpec {
    fn new(kind: ObjectiveKind, dimension: usize, bound: Option<f64>, region: Option<Region>) -> Self {
        ObjectiveSpec {
            kind,
            dimension,
            hessian_entry_bound: bound,
            region,
            analytic_hessian: true,
        }
    }

    pub fn quadratic(dim: usize) -> Self {
        Self::new(
            ObjectiveKind::Quadratic,
            dim,
            Some(1.0),
            Some(Region::Box { lower: -10.0, upper: 10.0 }),
        )
    }

    /// Double well restricted to `[-1.5, 1.5]^d`.
    pub fn double_well(dim: usize) -> Self {
        Self::new(ObjectiveKind::DoubleWell, dim, None, None)
            .with_region(Region::Box { lower: -1.5, upper: 1.5 })
    }

    pub fn bilinear(payoff: PayoffData) -> Self {
        let dim = payoff.x_dim() + payoff.y_dim();
        let l = payoff.max_abs_entry();
        Self::new(
            ObjectiveKind::Bilinear { payoff },
            dim,
            Some(l),
            Some(Region::Box { lower: -10.0, upper: 10.0 }),
        )
    }

    /// Linear function on a product of simplices.
    pub fn linear_on_simplices(weights: Vec<f64>, blocks: Vec<usize>) -> Self {
        let dim = weights.len();
        Self::new(
            ObjectiveKind::Linear { weights },
            dim,
            Some(0.0),
            Some(Region::SimplexProduct { blocks }),
        )
    }

    pub fn linear(weights: Vec<f64>) -> Self {
        let dim = weights.len();
        Self::new(ObjectiveKind::Linear { weights }, dim, Some(0.0), None)
    }

    pub fn bump(dim: usize) -> Self {
        Self::new(
            ObjectiveKind::Bump,
            dim,
            Some(2.0),
            Some(Region::Box { lower: -5.0, upper: 5.0 }),
        )
    }

    /// Replaces the working region; for the double well the entry bound is
    /// recomputed from the new box.
    pub fn with_region(mut self, region: Region) -> Self {
        if let ObjectiveKind::DoubleWell = self.kind {
            self.hessian_entry_bound = match &region {
                Region::Box { lower, upper } => {
                    let r2 = lower.abs().max(upper.abs()).powi(2);
                    Some((3.0 * r2 - 1.0).abs().max(1.0))
                }
                Region::Ball { radius } => Some((3.0 * radius * radius - 1.0).abs().max(1.0)),
                _ => None,
            };
        }
        self.region = Some(region);
        self
    }

    pub fn without_hessian(mut self) -> Self {
        self.analytic_hessian = false;
        self
    }

    pub fn without_hessian_bound(mut self) -> Self {
        self.hessian_entry_bound = None;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ObjectiveKind::Quadratic => "quadratic",
            ObjectiveKind::Bilinear { .. } => "bilinear",
            ObjectiveKind::DoubleWell => "double_well",
            ObjectiveKind::Linear { .. } => "linear",
            ObjectiveKind::Bump => "bump",
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ObjectiveKind::Quadratic => 0.5 * dot(x, x),
            ObjectiveKind::Bilinear { payoff } => {
                let (a, b) = x.split_at(payoff.x_dim());
                payoff.bilinear(a, b)
            }
            ObjectiveKind::DoubleWell => x.iter().map(|v| v.powi(4) / 4.0 - v * v / 2.0).sum(),
            ObjectiveKind::Linear { weights } => dot(weights, x),
            ObjectiveKind::Bump => -1.0 / (1.0 + dot(x, x)),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            ObjectiveKind::Quadratic => x.to_vec(),
            ObjectiveKind::Bilinear { payoff } => {
                let (a, b) = x.split_at(payoff.x_dim());
                let mut g = payoff.apply(b);
                g.extend(payoff.apply_transpose(a));
                g
            }
            ObjectiveKind::DoubleWell => x.iter().map(|v| v * v * v - v).collect(),
            ObjectiveKind::Linear { weights } => weights.clone(),
            ObjectiveKind::Bump => {
                let s = (1.0 + dot(x, x)).powi(2);
                x.iter().map(|v| 2.0 * v / s).collect()
            }
        }
    }

    /// Analytic Hessian, or `None` when withheld.
    pub fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        if !self.analytic_hessian {
            return None;
        }
        let d = x.len();
        Some(match &self.kind {
            ObjectiveKind::Quadratic => DMatrix::identity(d, d),
            ObjectiveKind::Bilinear { payoff } => {
                let (p, q) = (payoff.x_dim(), payoff.y_dim());
                let mut h = DMatrix::zeros(p + q, p + q);
                h.view_mut((0, p), (p, q)).copy_from(payoff.assembled());
                h.view_mut((p, 0), (q, p)).copy_from(&payoff.assembled().transpose());
                h
            }
            ObjectiveKind::DoubleWell => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, x.iter().map(|v| 3.0 * v * v - 1.0)))
            }
            ObjectiveKind::Linear { .. } => DMatrix::zeros(d, d),
            ObjectiveKind::Bump => {
                let s = 1.0 + dot(x, x);
                DMatrix::from_fn(d, d, |i, j| {
                    let diag = if i == j { 2.0 / (s * s) } else { 0.0 };
                    diag - 8.0 * x[i] * x[j] / (s * s * s)
                })
            }
        })
    }

    /// Analytic Hessian if available, central differences of the gradient
    /// otherwise.
    pub fn hessian_or_fd(&self, x: &[f64]) -> DMatrix<f64> {
        self.hessian(x).unwrap_or_else(|| fd_hessian(self, x))
    }

    /// A sample from the working region, or from `[-1, 1]^d` without one.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match &self.region {
            Some(r) => r.sample(rng, self.dimension),
            None => Region::Box { lower: -1.0, upper: 1.0 }.sample(rng, self.dimension),
        }
    }

    pub fn in_region(&self, x: &[f64]) -> bool {
        self.region.as_ref().map_or(true, |r| r.contains(x))
    }
}

fn fd_step(v: f64) -> f64 {
    1e-5 * (1.0 + v.abs())
}

/// Central-difference gradient of `obj.eval`.
pub fn fd_gradient(obj: &ObjectiveSpec, x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i]);
            p[i] = x[i] + h;
            let up = obj.eval(&p);
            p[i] = x[i] - h;
            let down = obj.eval(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Jacobian of `obj.gradient`, symmetrized.
pub fn fd_hessian(obj: &ObjectiveSpec, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let mut p = x.to_vec();
    for i in 0..d {
        let step = fd_step(x[i]);
        p[i] = x[i] + step;
        let up = obj.gradient(&p);
        p[i] = x[i] - step;
        let down = obj.gradient(&p);
        p[i] = x[i];
        for j in 0..d {
            h[(j, i)] = (up[j] - down[j]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

/// Largest `‖∇f − ∇_fd f‖∞ / (1 + ‖∇f‖∞)` over `samples` region points.
pub fn gradient_fd_error(obj: &ObjectiveSpec, samples: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    (0..samples)
        .map(|_| {
            let x = obj.sample_point(&mut rng);
            let g = obj.gradient(&x);
            let fd = fd_gradient(obj, &x);
            let scale = 1.0 + g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            g.iter().zip(&fd).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / scale
        })
        .fold(0.0, f64::max)
}

/// Largest `‖H − H_fd‖∞ / (1 + ‖H‖∞)` over `samples` region points, or
/// `None` when the analytic Hessian is withheld.
pub fn hessian_fd_error(obj: &ObjectiveSpec, samples: usize, seed: u64) -> Option<f64> {
    let mut rng = seeded(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x = obj.sample_point(&mut rng);
        let h = obj.hessian(&x)?;
        let fd = fd_hessian(obj, &x);
        let scale = 1.0 + h.amax();
        worst = worst.max((h - fd).amax() / scale);
    }
    Some(worst)
}

/// Largest `|∂²f/∂xᵢ∂xⱼ|` over `samples` region points, using the analytic
/// Hessian when present. No safety factor applied.
pub fn sampled_hessian_entry_max(obj: &ObjectiveSpec, samples: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    (0..samples)
        .map(|_| obj.hessian_or_fd(&obj.sample_point(&mut rng)).amax())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
    /// No smoothness constant is available to check against.
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSizeVerdict {
    pub decision: Decision,
    pub eta: f64,
    /// Upper bound the step size was compared against (exclusive).
    pub bound: Option<f64>,
    /// `bound − eta`.
    pub margin: Option<f64>,
    /// Smoothness constant used to derive `bound`.
    pub smoothness: Option<f64>,
    /// Whether `smoothness` was estimated by sampling.
    pub estimated: bool,
}

impl StepSizeVerdict {
    fn compare(eta: f64, bound: f64, smoothness: f64, estimated: bool) -> Self {
        let decision = if eta > 0.0 && eta < bound {
            Decision::Accept
        } else {
            Decision::Reject
        };
        StepSizeVerdict {
            decision,
            eta,
            bound: Some(bound),
            margin: Some(bound - eta),
            smoothness: Some(smoothness),
            estimated,
        }
    }

    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

/// Accepts iff `η < 2/(d·L)`, `d` the ambient dimension.
///
/// Without a declared `L` the bound is estimated over the working region
/// (marked `estimated`); with neither the verdict is `Unverifiable`.
pub fn validate_step_size_gd(obj: &ObjectiveSpec, eta: f64) -> StepSizeVerdict {
    let d = obj.dimension as f64;
    let (l, estimated) = match (obj.hessian_entry_bound, &obj.region) {
        (Some(l), _) => (l, false),
        (None, Some(_)) => (
            ESTIMATE_SAFETY_FACTOR * sampled_hessian_entry_max(obj, ESTIMATE_SAMPLES, ESTIMATE_SEED),
            true,
        ),
        (None, None) => {
            return StepSizeVerdict {
                decision: Decision::Unverifiable,
                eta,
                bound: None,
                margin: None,
                smoothness: None,
                estimated: false,
            }
        }
    };
    let bound = if l > 0.0 { 2.0 / (d * l) } else { f64::INFINITY };
    StepSizeVerdict::compare(eta, bound, l, estimated)
}

/// Accepts iff `η < 1/L` for the pullback Lipschitz constant `L`; `L` is
/// estimated over random tangent vectors when not supplied.
pub fn validate_step_size_manifold(
    obj: &ObjectiveSpec,
    eta: f64,
    lipschitz_l: Option<f64>,
) -> StepSizeVerdict {
    let (l, estimated) = match lipschitz_l {
        Some(l) => (l, false),
        None => (
            ESTIMATE_SAFETY_FACTOR * estimate_pullback_lipschitz(obj, ESTIMATE_SAMPLES, ESTIMATE_SEED),
            true,
        ),
    };
    let bound = if l > 0.0 { 1.0 / l } else { f64::INFINITY };
    StepSizeVerdict::compare(eta, bound, l, estimated)
}

/// Gradient of the pullback `s ↦ f(Retr_x(s))` on the tangent space at `x`.
pub fn pullback_gradient(obj: &ObjectiveSpec, x: &[f64], s: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + b).collect();
    let r = norm(&v);
    let u: Vec<f64> = v.iter().map(|c| c / r).collect();
    let g = obj.gradient(&u);
    let gu = dot(&g, &u);
    // D Retr_x(s) = (I − uuᵀ)/‖x+s‖, symmetric
    let w: Vec<f64> = g.iter().zip(&u).map(|(gi, ui)| (gi - gu * ui) / r).collect();
    let wx = dot(&w, x);
    w.iter().zip(x).map(|(wi, xi)| wi - wx * xi).collect()
}

/// Largest sampled `‖∇f̂ₓ(s) − ∇f̂ₓ(0)‖ / ‖s‖` with `‖s‖ < PULLBACK_RADIUS`.
pub fn estimate_pullback_lipschitz(obj: &ObjectiveSpec, samples: usize, seed: u64) -> f64 {
    let mut rng: ChaCha8Rng = seeded(seed);
    let d = obj.dimension;
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x = Region::Sphere.sample(&mut rng, d);
        let raw: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let rx = dot(&raw, &x);
        let t: Vec<f64> = raw.iter().zip(&x).map(|(r, xi)| r - rx * xi).collect();
        let tn = norm(&t);
        if tn < 1e-12 {
            continue;
        }
        let len = PULLBACK_RADIUS * rng.gen_range(1e-3..1.0);
        let s: Vec<f64> = t.iter().map(|c| c / tn * len).collect();
        let g0 = pullback_gradient(obj, &x, &vec![0.0; d]);
        let gs = pullback_gradient(obj, &x, &s);
        let diff: Vec<f64> = gs.iter().zip(&g0).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff) / len);
    }
    worst
}

/// `f(x) − f(T(x))`; positive whenever the step is a strict descent.
pub fn descent_check(obj: &ObjectiveSpec, map: &MapInstance, x: &State) -> Result<f64> {
    let next = map.step(x)?;
    Ok(obj.eval(x.coords()) - obj.eval(next.coords()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapInstance;

    #[test]
    fn gd_validator_examples() {
        let q = ObjectiveSpec::quadratic(2);
        let v = validate_step_size_gd(&q, 0.9);
        assert!(v.accepted());
        assert_eq!(v.bound, Some(1.0));
        assert!((v.margin.unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(validate_step_size_gd(&q, 1.0).decision, Decision::Reject);

        let dw = ObjectiveSpec::double_well(1);
        assert_eq!(dw.hessian_entry_bound, Some(5.75));
        let v = validate_step_size_gd(&dw, 0.1);
        assert!(v.accepted());
        assert!((v.bound.unwrap() - 2.0 / 5.75).abs() < 1e-15);
        assert!(!v.estimated);
    }

    #[test]
    fn gd_validator_fallbacks() {
        let est = ObjectiveSpec::double_well(1).without_hessian_bound().without_hessian();
        let v = validate_step_size_gd(&est, 0.1);
        assert!(v.estimated);
        // sampled max of |3x²−1| on [−1.5,1.5] approaches 5.75 from below
        let l = v.smoothness.unwrap();
        assert!(l > 5.0 * ESTIMATE_SAFETY_FACTOR && l <= 5.75 * ESTIMATE_SAFETY_FACTOR + 1e-3, "{l}");
        assert!(v.accepted());

        let mut bare = ObjectiveSpec::bump(2).without_hessian_bound();
        bare.region = None;
        let v = validate_step_size_gd(&bare, 0.1);
        assert_eq!(v.decision, Decision::Unverifiable);
        assert!(v.bound.is_none());
    }

    #[test]
    fn gd_validator_rejects_nonpositive_and_handles_flat() {
        let lin = ObjectiveSpec::linear_on_simplices(vec![1.0, 0.0], vec![2]);
        let v = validate_step_size_gd(&lin, 10.0);
        assert!(v.accepted());
        assert_eq!(v.bound, Some(f64::INFINITY));
        assert_eq!(validate_step_size_gd(&lin, 0.0).decision, Decision::Reject);
    }

    #[test]
    fn manifold_validator_examples() {
        let obj = ObjectiveSpec::linear(vec![1.0, 0.0]);
        assert!(validate_step_size_manifold(&obj, 0.4, Some(2.0)).accepted());
        assert!(!validate_step_size_manifold(&obj, 0.5, Some(2.0)).accepted());
        let v = validate_step_size_manifold(&obj, 0.1, None);
        assert!(v.estimated);
        let l = v.smoothness.unwrap();
        assert!(l > 0.5 && l < 10.0, "{l}");
    }

    #[test]
    fn pullback_gradient_matches_finite_differences() {
        let obj = ObjectiveSpec::linear(vec![0.3, -1.0, 2.0]);
        let x = [0.0, 0.6, 0.8];
        let s = [0.2, 0.24, -0.18]; // tangent: 0.144 − 0.144 = 0
        let g = pullback_gradient(&obj, &x, &s);
        let fhat = |s: &[f64]| {
            let v: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + b).collect();
            let n = norm(&v);
            obj.eval(&v.iter().map(|c| c / n).collect::<Vec<_>>())
        };
        // directional derivatives along tangent directions
        for dir in [[1.0, 0.0, 0.0], [0.0, 0.8, -0.6]] {
            let h = 1e-6;
            let p: Vec<f64> = s.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
            let m: Vec<f64> = s.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
            let fd = (fhat(&p) - fhat(&m)) / (2.0 * h);
            assert!((fd - dot(&g, &dir)).abs() < 1e-8, "{fd} vs {}", dot(&g, &dir));
        }
    }

    #[test]
    fn descent_check_examples() {
        let q = ObjectiveSpec::quadratic(1);
        let map = MapInstance::gd(q.clone(), 0.1).unwrap();
        let d = descent_check(&q, &map, &State::euclidean(vec![2.0])).unwrap();
        assert!((d - 0.38).abs() < 1e-14);
        assert_eq!(descent_check(&q, &map, &State::euclidean(vec![0.0])).unwrap(), 0.0);

        let dw = ObjectiveSpec::double_well(1);
        let map = MapInstance::gd(dw.clone(), 0.1).unwrap();
        let d = descent_check(&dw, &map, &State::euclidean(vec![0.5])).unwrap();
        let expected = (0.5f64.powi(4) / 4.0 - 0.125) - (0.5375f64.powi(4) / 4.0 - 0.5375f64.powi(2) / 2.0);
        assert!(d > 0.0 && (d - expected).abs() < 1e-15);
    }

    #[test]
    fn catalog_derivatives_match_finite_differences() {
        let payoff = PayoffData::two_agent(DMatrix::from_row_slice(2, 3, &[1.0, -0.5, 0.2, 0.3, 0.9, -1.0])).unwrap();
        let catalog = [
            ObjectiveSpec::quadratic(3),
            ObjectiveSpec::bilinear(payoff),
            ObjectiveSpec::double_well(2),
            ObjectiveSpec::linear_on_simplices(vec![0.2, -1.0, 0.5, 0.1], vec![2, 2]),
            ObjectiveSpec::bump(3),
        ];
        for obj in &catalog {
            assert!(gradient_fd_error(obj, 100, 7) < 1e-6, "{}", obj.name());
            assert!(hessian_fd_error(obj, 100, 8).unwrap() < 1e-5, "{}", obj.name());
            let sampled = sampled_hessian_entry_max(obj, 1000, 9);
            assert!(obj.hessian_entry_bound.unwrap() >= sampled, "{}", obj.name());
        }
    }

    #[test]
    fn payoff_block_products() {
        let b = |v: [f64; 2]| DMatrix::from_row_slice(1, 2, &v);
        let p = PayoffData::from_blocks(&[vec![b([1.0, 2.0]), b([3.0, 4.0])]]).unwrap();
        assert_eq!(p.shape(), (1, 2, 1, 2));
        assert_eq!(p.apply(&[1.0, 0.0, 0.0, 1.0]), vec![5.0]);
        assert_eq!(p.apply_transpose(&[2.0]), vec![2.0, 4.0, 6.0, 8.0]);
        assert_eq!(p.block(0, 1), b([3.0, 4.0]));
    }

    #[test]
    fn payoff_rejects_inconsistent_blocks() {
        let a = DMatrix::zeros(2, 2);
        let b = DMatrix::zeros(2, 3);
        assert!(PayoffData::from_blocks(&[vec![a, b]]).is_err());
        assert!(PayoffData::from_blocks(&[]).is_err());
    }
}
