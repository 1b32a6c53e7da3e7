//! Seeded random instances. ChaCha8 keeps streams stable across platforms.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::objectives::PayoffData;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Bounds for randomly drawn bipartite games.
#[derive(Debug, Clone, Copy)]
pub struct GameBounds {
    pub max_players: usize,
    pub max_block: usize,
    pub entry: f64,
    pub eta: (f64, f64),
}

impl Default for GameBounds {
    fn default() -> Self {
        GameBounds {
            max_players: 3,
            max_block: 4,
            entry: 1.0,
            eta: (0.01, 0.5),
        }
    }
}

/// A random game: payoff with `n, m ≤ max_players`, blocks up to
/// `max_block`, entries uniform in `[-entry, entry]`, and two step sizes.
pub fn random_game<R: Rng>(rng: &mut R, bounds: &GameBounds) -> (PayoffData, f64, f64) {
    let n = rng.gen_range(1..=bounds.max_players);
    let m = rng.gen_range(1..=bounds.max_players);
    let k1 = rng.gen_range(1..=bounds.max_block);
    let k2 = rng.gen_range(1..=bounds.max_block);
    let blocks: Vec<Vec<DMatrix<f64>>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| DMatrix::from_fn(k1, k2, |_, _| rng.gen_range(-bounds.entry..=bounds.entry)))
                .collect()
        })
        .collect();
    let payoff = PayoffData::from_blocks(&blocks).expect("consistent random blocks");
    let eta1 = rng.gen_range(bounds.eta.0..=bounds.eta.1);
    let eta2 = rng.gen_range(bounds.eta.0..=bounds.eta.1);
    (payoff, eta1, eta2)
}

/// Uniform point of `[-half_width, half_width]^dim`.
pub fn random_box_point<R: Rng>(rng: &mut R, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half_width..=half_width)).collect()
}
