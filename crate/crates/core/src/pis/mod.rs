//! Physical Invariance Score over mask-derived object tracks.
//!
//! PIS = 1 / (1 + σ / (|μ| + ε)) for a per-frame determinant sequence with
//! mean μ and population standard deviation σ.

mod report;
mod track;
mod window;

use serde::{Deserialize, Serialize};

pub use report::{
    evaluate_masks, evaluate_tracks, evaluate_tracks_with_windows, DeterminantEntry, ObjectReport, ObjectWindows,
    PisOptions, PisReport, Scores,
};
pub use track::{extract_track, extract_tracks, kinematics, kinematics_in, CentroidTrack, Kinematics, MaskSequence};
pub use window::{free_flight_windows, jump_free_windows, longest, sign_windows};

use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;
/// px, frames whose mask is smaller are invalid
pub const MIN_AREA: usize = 9;
/// px/frame, objects slower than this on average are flagged static
pub const STATIC_SPEED: f64 = 0.5;
pub const MIN_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Determinant {
    #[serde(rename = "a_x")]
    Ax,
    #[serde(rename = "a_y")]
    Ay,
    #[serde(rename = "v_x")]
    Vx,
    #[serde(rename = "v_y")]
    Vy,
    #[serde(rename = "delta_l")]
    DeltaL,
}

impl Determinant {
    pub const ALL: [Determinant; 5] = [
        Determinant::Ax,
        Determinant::Ay,
        Determinant::Vx,
        Determinant::Vy,
        Determinant::DeltaL,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Determinant::Ax => "a_x",
            Determinant::Ay => "a_y",
            Determinant::Vx => "v_x",
            Determinant::Vy => "v_y",
            Determinant::DeltaL => "delta_l",
        }
    }
}

pub fn pis(mean: f64, std: f64, epsilon: f64) -> f64 {
    1.0 / (1.0 + std / (mean.abs() + epsilon))
}

/// Fixed-order pairwise sum.
pub(crate) fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        n if n <= 8 => x.iter().fold(0.0, |a, b| a + b),
        n => pairwise_sum(&x[..n / 2]) + pairwise_sum(&x[n / 2..]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// population standard deviation
    pub std: f64,
    pub score: f64,
    pub samples: usize,
}

pub fn determinant_stats(values: &[f64], epsilon: f64) -> Result<Stats> {
    if values.len() < MIN_WINDOW {
        return Err(Error::EmptyWindow { needed: MIN_WINDOW });
    }
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let std = (pairwise_sum(&dev) / n).sqrt();
    Ok(Stats {
        mean,
        std,
        score: pis(mean, std, epsilon),
        samples: values.len(),
    })
}

#[cfg(test)]
mod tests;
