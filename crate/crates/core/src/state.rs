//! Points of the phase space and finite pieces of orbits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the simplex block sums and the sphere norm.
pub const CHART_TOLERANCE: f64 = 1e-12;

/// Domain a state lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chart {
    Euclidean,
    /// Product of probability simplices; `blocks[i]` is the number of
    /// strategies of agent `i`.
    SimplexProduct { blocks: Vec<usize> },
    /// Unit sphere in the ambient space.
    Sphere,
    /// Stacked strategies `(X, Y)` of a bipartite game, `X` first.
    BipartitePair { x_dim: usize, y_dim: usize },
}

impl Chart {
    /// Coordinate ranges of the simplex blocks, or one range spanning `dim`.
    pub fn block_ranges(&self, dim: usize) -> Vec<std::ops::Range<usize>> {
        match self {
            Chart::SimplexProduct { blocks } => {
                let mut start = 0;
                blocks
                    .iter()
                    .map(|&n| {
                        let r = start..start + n;
                        start += n;
                        r
                    })
                    .collect()
            }
            _ => vec![0..dim],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Chart::Euclidean => "euclidean",
            Chart::SimplexProduct { .. } => "simplex_product",
            Chart::Sphere => "sphere",
            Chart::BipartitePair { .. } => "bipartite_pair",
        }
    }
}

/// A point of the phase space together with its chart.
///
/// Construction validates the chart invariants, so every `State` in
/// circulation satisfies them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    coords: Vec<f64>,
    chart: Chart,
}

impl State {
    pub fn new(coords: Vec<f64>, chart: Chart) -> Result<Self> {
        let mut coords = coords;
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Chart(format!("coordinate {i} is not finite")));
        }
        match &chart {
            Chart::Euclidean => {}
            Chart::SimplexProduct { blocks } => {
                let total: usize = blocks.iter().sum();
                if total != coords.len() {
                    return Err(Error::Chart(format!(
                        "simplex blocks cover {total} coordinates, state has {}",
                        coords.len()
                    )));
                }
                if blocks.contains(&0) {
                    return Err(Error::Chart("empty simplex block".into()));
                }
                for (b, range) in chart.block_ranges(coords.len()).into_iter().enumerate() {
                    let block = &mut coords[range];
                    if let Some(j) = block.iter().position(|&c| c < -CHART_TOLERANCE) {
                        return Err(Error::Chart(format!(
                            "block {b} coordinate {j} is negative ({})",
                            block[j]
                        )));
                    }
                    for c in block.iter_mut() {
                        if *c < 0.0 {
                            *c = 0.0;
                        }
                    }
                    let sum: f64 = block.iter().sum();
                    if (sum - 1.0).abs() > CHART_TOLERANCE {
                        return Err(Error::Chart(format!("block {b} sums to {sum}, not 1")));
                    }
                }
            }
            Chart::Sphere => {
                let n = norm(&coords);
                if (n - 1.0).abs() > CHART_TOLERANCE {
                    return Err(Error::Chart(format!("sphere state has norm {n}")));
                }
            }
            Chart::BipartitePair { x_dim, y_dim } => {
                if x_dim + y_dim != coords.len() {
                    return Err(Error::Chart(format!(
                        "bipartite blocks {x_dim}+{y_dim} do not match dimension {}",
                        coords.len()
                    )));
                }
            }
        }
        Ok(State { coords, chart })
    }

    pub fn euclidean(coords: Vec<f64>) -> Self {
        assert!(coords.iter().all(|c| c.is_finite()), "non-finite coordinate");
        State {
            coords,
            chart: Chart::Euclidean,
        }
    }

    pub fn bipartite(x: &[f64], y: &[f64]) -> Self {
        let mut coords = x.to_vec();
        coords.extend_from_slice(y);
        State::new(
            coords,
            Chart::BipartitePair {
                x_dim: x.len(),
                y_dim: y.len(),
            },
        )
        .expect("non-finite bipartite coordinate")
    }

    pub fn simplex(coords: Vec<f64>, blocks: Vec<usize>) -> Result<Self> {
        State::new(coords, Chart::SimplexProduct { blocks })
    }

    /// Scales each block to sum to one before validating.
    pub fn simplex_normalized(mut coords: Vec<f64>, blocks: Vec<usize>) -> Result<Self> {
        let chart = Chart::SimplexProduct { blocks };
        for range in chart.block_ranges(coords.len()) {
            let s: f64 = coords[range.clone()].iter().sum();
            if s > 0.0 {
                coords[range].iter_mut().for_each(|c| *c /= s);
            }
        }
        State::new(coords, chart)
    }

    pub fn sphere(coords: Vec<f64>) -> Result<Self> {
        State::new(coords, Chart::Sphere)
    }

    /// Projects onto the unit sphere before validating.
    pub fn sphere_normalized(coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if n == 0.0 {
            return Err(Error::Chart("cannot normalize the zero vector".into()));
        }
        State::new(coords.into_iter().map(|c| c / n).collect(), Chart::Sphere)
    }

    /// Same chart, new coordinates; validates.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        State::new(coords, self.chart.clone())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// `(X, Y)` halves of a bipartite state.
    pub fn split_pair(&self) -> Option<(&[f64], &[f64])> {
        match self.chart {
            Chart::BipartitePair { x_dim, .. } => Some(self.coords.split_at(x_dim)),
            _ => None,
        }
    }

    pub fn distance(&self, other: &State) -> f64 {
        distance(&self.coords, &other.coords)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A finite piece `T^{-N₋}x, …, x, …, T^{N₊}x` of an orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub origin: State,
    /// `forward[k-1] = T^k(origin)`.
    pub forward: Vec<State>,
    /// `backward[k-1] = T^{-k}(origin)`.
    pub backward: Vec<State>,
    pub map_id: String,
    /// Index at which the orbit was found to sit on a fixed point; the
    /// segment is truncated in that direction.
    pub fixed_point_at: Option<i64>,
}

impl OrbitSegment {
    /// The state with signed index `k`, if the segment contains it.
    pub fn get(&self, k: i64) -> Option<&State> {
        match k {
            0 => Some(&self.origin),
            k if k > 0 => self.forward.get(k as usize - 1),
            k => self.backward.get((-k) as usize - 1),
        }
    }

    pub fn first_index(&self) -> i64 {
        -(self.backward.len() as i64)
    }

    pub fn last_index(&self) -> i64 {
        self.forward.len() as i64
    }

    pub fn len(&self) -> usize {
        1 + self.forward.len() + self.backward.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// States in increasing index order, paired with their index.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &State)> + '_ {
        let back = self
            .backward
            .iter()
            .enumerate()
            .rev()
            .map(|(i, s)| (-(i as i64) - 1, s));
        let fwd = self
            .forward
            .iter()
            .enumerate()
            .map(|(i, s)| (i as i64 + 1, s));
        back.chain(std::iter::once((0, &self.origin))).chain(fwd)
    }

    pub fn forward_end(&self) -> &State {
        self.forward.last().unwrap_or(&self.origin)
    }

    pub fn backward_end(&self) -> &State {
        self.backward.last().unwrap_or(&self.origin)
    }
}

/// Fixed points found so far, each within `detection_tolerance` of its image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSet {
    pub points: Vec<State>,
    pub detection_tolerance: f64,
}

impl FixedPointSet {
    pub fn new(detection_tolerance: f64) -> Self {
        FixedPointSet {
            points: Vec::new(),
            detection_tolerance,
        }
    }

    /// Adds `p` unless it duplicates a known point. The caller is
    /// responsible for having checked `p` against the map.
    pub(crate) fn insert(&mut self, p: State) -> bool {
        let tol = self.detection_tolerance.sqrt().max(self.detection_tolerance);
        if self.points.iter().any(|q| q.distance(&p) <= tol) {
            return false;
        }
        self.points.push(p);
        true
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_clamps_tiny_negatives() {
        let s = State::simplex(vec![-1e-13, 0.5, 0.5 + 1e-13], vec![3]).unwrap();
        assert_eq!(s.coords()[0], 0.0);
        assert!(State::simplex(vec![-1e-9, 0.5, 0.5 + 1e-9], vec![3]).is_err());
    }

    #[test]
    fn simplex_rejects_bad_sums_and_zero_blocks() {
        assert!(State::simplex(vec![0.5, 0.6], vec![2]).is_err());
        assert!(State::simplex(vec![0.0, 0.0, 1.0], vec![2, 1]).is_err());
        assert!(State::simplex(vec![0.5, 0.5, 1.0], vec![2, 1]).is_ok());
    }

    #[test]
    fn sphere_norm_checked() {
        assert!(State::sphere(vec![0.6, 0.8]).is_ok());
        assert!(State::sphere(vec![0.6, 0.81]).is_err());
        let s = State::sphere_normalized(vec![3.0, 4.0]).unwrap();
        assert!((norm(s.coords()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bipartite_split() {
        let s = State::bipartite(&[1.0, 2.0], &[3.0]);
        let (x, y) = s.split_pair().unwrap();
        assert_eq!(x, &[1.0, 2.0]);
        assert_eq!(y, &[3.0]);
        assert!(State::new(vec![1.0], Chart::BipartitePair { x_dim: 1, y_dim: 1 }).is_err());
    }

    #[test]
    fn segment_iterates_in_index_order() {
        let seg = OrbitSegment {
            origin: State::euclidean(vec![0.0]),
            forward: vec![State::euclidean(vec![1.0]), State::euclidean(vec![2.0])],
            backward: vec![State::euclidean(vec![-1.0])],
            map_id: "test".into(),
            fixed_point_at: None,
        };
        let idx: Vec<i64> = seg.iter().map(|(k, _)| k).collect();
        assert_eq!(idx, vec![-1, 0, 1, 2]);
        for (k, s) in seg.iter() {
            assert_eq!(s.coords()[0], k as f64);
            assert_eq!(seg.get(k), Some(s));
        }
        assert_eq!(seg.len(), 4);
        assert!(seg.get(3).is_none());
    }
}
