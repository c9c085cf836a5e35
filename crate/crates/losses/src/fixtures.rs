//! Seeded tensors for tests and the gradient checker, plus a synthetic
//! teacher that writes object positions into feature channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::align::{gram, TokenSequence};
use crate::tensor::FeatureGrid;
use crate::Tensor5;

pub fn random_tensor(shape: [usize; 5], seed: u64, lo: f64, hi: f64) -> Tensor5 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor5::from_fn(shape, |_| rng.random_range(lo..hi))
}

/// Independent uniform(−1, 1) student and teacher grids.
pub fn random_feature_pair(shape: [usize; 5], seed: u64) -> (FeatureGrid, FeatureGrid) {
    (
        random_tensor(shape, seed.wrapping_mul(2), -1.0, 1.0),
        random_tensor(shape, seed.wrapping_mul(2).wrapping_add(1), -1.0, 1.0),
    )
}

pub fn random_tokens(batch: usize, grid: [usize; 3], channels: usize, seed: u64) -> TokenSequence {
    let t = random_tensor([batch, grid[0], grid[1], grid[2], channels], seed, -1.0, 1.0);
    TokenSequence::from_grid(&t)
}

/// (pred latent, target latent, pred depth, target depth) for a latent of
/// `shape` = (B, C, T, H, W); depth maps are (B, 1, T, H, W) in [1, 5) m.
pub fn random_depth_pair(shape: [usize; 5], seed: u64) -> (Tensor5, Tensor5, Tensor5, Tensor5) {
    let s = seed.wrapping_mul(4);
    let [b, _, t, h, w] = shape;
    let d = [b, 1, t, h, w];
    (
        random_tensor(shape, s, -1.0, 1.0),
        random_tensor(shape, s + 1, -1.0, 1.0),
        random_tensor(d, s + 2, 1.0, 5.0),
        random_tensor(d, s + 3, 1.0, 5.0),
    )
}

/// One object moving on the teacher grid, in cell units per frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectPath {
    /// (row, column) at t = 0
    pub start: [f64; 2],
    pub velocity: [f64; 2],
    /// blob radius in cells
    pub sigma: f64,
}

impl ObjectPath {
    pub fn at(&self, t: usize) -> [f64; 2] {
        [
            self.start[0] + self.velocity[0] * t as f64,
            self.start[1] + self.velocity[1] * t as f64,
        ]
    }
}

/// Teacher features (B, t, h, w, D): object k adds a Gaussian blob centred
/// on its path to channel k mod D; every channel carries a small seeded
/// background so no token is zero.
pub fn synthetic_teacher(batch: usize, grid: [usize; 3], channels: usize, objects: &[ObjectPath], seed: u64) -> FeatureGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [t, h, w] = grid;
    Tensor5::from_fn([batch, t, h, w, channels], |[_, ti, y, x, c]| {
        let blob: f64 = objects
            .iter()
            .enumerate()
            .filter(|(k, _)| k % channels == c)
            .map(|(_, o)| {
                let [py, px] = o.at(ti);
                let d2 = (y as f64 - py).powi(2) + (x as f64 - px).powi(2);
                (-d2 / (2.0 * o.sigma * o.sigma)).exp()
            })
            .sum();
        blob + 0.05 + 0.05 * rng.random::<f64>()
    })
}

/// Smallest | |ΔG| − m | over all Gram entries.
pub fn phys_kink_distance(student: &FeatureGrid, teacher: &FeatureGrid, margin: f64) -> f64 {
    let (gs, gt) = (gram(student), gram(teacher));
    gs.matrices
        .iter()
        .zip(&gt.matrices)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| ((x - y).abs() - margin).abs()))
        .fold(f64::INFINITY, f64::min)
}

/// A margin near `preferred` that keeps every Gram entry at least `gap`
/// away from the hinge kink.
pub fn kink_free_margin(student: &FeatureGrid, teacher: &FeatureGrid, preferred: f64, gap: f64) -> Option<f64> {
    (0..400)
        .map(|k| {
            let step = (k as f64 / 2.0).ceil() * 2.5e-4;
            if k % 2 == 0 {
                preferred + step
            } else {
                preferred - step
            }
        })
        .filter(|m| *m >= 0.0)
        .find(|&m| phys_kink_distance(student, teacher, m) >= gap)
}

/// Smallest absolute residual among the structure and temporal L1 terms.
pub fn l1_kink_distance(pred: &Tensor5, target: &Tensor5) -> f64 {
    let [b, _, t, h, w] = pred.shape();
    let r = |i: [usize; 5], j: [usize; 5]| ((pred.get(j) - pred.get(i)) - (target.get(j) - target.get(i))).abs();
    let mut m = f64::INFINITY;
    for bi in 0..b {
        for ti in 0..t {
            for y in 0..h {
                for x in 0..w {
                    let i = [bi, 0, ti, y, x];
                    if x + 1 < w {
                        m = m.min(r(i, [bi, 0, ti, y, x + 1]));
                    }
                    if y + 1 < h {
                        m = m.min(r(i, [bi, 0, ti, y + 1, x]));
                    }
                    if ti + 1 < t {
                        m = m.min(r(i, [bi, 0, ti + 1, y, x]));
                    }
                }
            }
        }
    }
    m
}

/// Fixed-seed stand-in for a depth head: an affine copy of the target plus
/// a smooth seeded perturbation of relative size `noise`.
pub fn synthetic_depth_prediction(target: &Tensor5, noise: f64, seed: u64) -> Tensor5 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0));
    Tensor5::from_fn(target.shape(), |i| {
        let wave = (0.7 * i[3] as f64 + phase[0]).sin() * (0.9 * i[4] as f64 + phase[1]).cos()
            + (0.5 * i[2] as f64 + phase[2]).sin();
        a * target.get(i) + b + noise * wave
    })
}
