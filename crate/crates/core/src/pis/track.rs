use std::ops::Range;

use super::{MIN_AREA, MIN_WINDOW};
use crate::{Error, Result};

/// Instance-id frames, row-major, 0 = background.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSequence {
    pub width: usize,
    pub height: usize,
    pub frames: Vec<Vec<u8>>,
}

/// Per-frame centroid (px) and apparent size l = √area (px) of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidTrack {
    pub id: u8,
    pub fps: f64,
    pub centroid: Vec<[f64; 2]>,
    pub size: Vec<f64>,
    pub valid: Vec<bool>,
}

impl CentroidTrack {
    /// A fully visible track from known image positions.
    pub fn from_points(id: u8, fps: f64, centroid: Vec<[f64; 2]>, size: Vec<f64>) -> Self {
        assert_eq!(centroid.len(), size.len());
        let valid = vec![true; centroid.len()];
        CentroidTrack {
            id,
            fps,
            centroid,
            size,
            valid,
        }
    }

    pub fn len(&self) -> usize {
        self.centroid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroid.is_empty()
    }

    /// Maximal runs of consecutive valid frames.
    pub fn valid_runs(&self) -> Vec<Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &v) in self.valid.iter().chain(std::iter::once(&false)).enumerate() {
            match (v, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        runs
    }

    pub fn reversed(&self) -> Self {
        CentroidTrack {
            id: self.id,
            fps: self.fps,
            centroid: self.centroid.iter().rev().copied().collect(),
            size: self.size.iter().rev().copied().collect(),
            valid: self.valid.iter().rev().copied().collect(),
        }
    }
}

struct Accum {
    count: usize,
    sum: [f64; 2],
    border: bool,
}

fn frame_accumulators(frame: &[u8], width: usize, height: usize) -> Vec<Accum> {
    let mut acc: Vec<Accum> = (0..256)
        .map(|_| Accum {
            count: 0,
            sum: [0.0; 2],
            border: false,
        })
        .collect();
    for y in 0..height {
        let row = &frame[y * width..(y + 1) * width];
        let edge_row = y == 0 || y + 1 == height;
        for (x, &id) in row.iter().enumerate() {
            if id == 0 {
                continue;
            }
            let a = &mut acc[id as usize];
            a.count += 1;
            a.sum[0] += x as f64;
            a.sum[1] += y as f64;
            a.border |= edge_row || x == 0 || x + 1 == width;
        }
    }
    acc
}

fn check(masks: &MaskSequence) {
    let n = masks.width * masks.height;
    assert!(masks.frames.iter().all(|f| f.len() == n), "mask frames must be {n} pixels");
}

/// Tracks for every id that appears in at least one frame, ascending by id.
///
/// A frame is valid when the object covers at least `MIN_AREA` pixels and
/// does not touch the image border (a clipped mask biases the centroid).
pub fn extract_tracks(masks: &MaskSequence, fps: f64) -> Vec<CentroidTrack> {
    check(masks);
    let frames: Vec<Vec<Accum>> = masks
        .frames
        .iter()
        .map(|f| frame_accumulators(f, masks.width, masks.height))
        .collect();
    (1..=255u8)
        .filter(|&id| frames.iter().any(|f| f[id as usize].count > 0))
        .map(|id| {
            let mut t = CentroidTrack {
                id,
                fps,
                centroid: Vec::with_capacity(frames.len()),
                size: Vec::with_capacity(frames.len()),
                valid: Vec::with_capacity(frames.len()),
            };
            for f in &frames {
                let a = &f[id as usize];
                let n = a.count as f64;
                if a.count == 0 {
                    t.centroid.push([f64::NAN; 2]);
                } else {
                    t.centroid.push([a.sum[0] / n, a.sum[1] / n]);
                }
                t.size.push(n.sqrt());
                t.valid.push(a.count >= MIN_AREA && !a.border);
            }
            t
        })
        .collect()
}

pub fn extract_track(masks: &MaskSequence, id: u8, fps: f64) -> Result<CentroidTrack> {
    extract_tracks(masks, fps)
        .into_iter()
        .find(|t| t.id == id)
        .ok_or(Error::EmptyTrack(id))
}

/// Finite-difference kinematics over a run of valid frames, in px/s, px/s²,
/// and 1/s. Interior frames use central differences; the first and last
/// frames use second-order one-sided differences, so all three are exact on
/// quadratic motion.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub frames: Range<usize>,
    pub velocity: Vec<[f64; 2]>,
    pub acceleration: Vec<[f64; 2]>,
    /// (dl/dt) / l
    pub size_rate: Vec<f64>,
}

fn derivatives(p: &[f64], fps: f64) -> (Vec<f64>, Vec<f64>) {
    let n = p.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        d1[i] = if i == 0 {
            (-3.0 * p[0] + 4.0 * p[1] - p[2]) * 0.5 * fps
        } else if i == n - 1 {
            (3.0 * p[n - 1] - 4.0 * p[n - 2] + p[n - 3]) * 0.5 * fps
        } else {
            (p[i + 1] - p[i - 1]) * 0.5 * fps
        };
        let c = i.clamp(1, n - 2);
        d2[i] = (p[c + 1] - 2.0 * p[c] + p[c - 1]) * fps * fps;
    }
    (d1, d2)
}

pub fn kinematics_in(track: &CentroidTrack, frames: Range<usize>) -> Result<Kinematics> {
    let have = frames.len();
    if have < MIN_WINDOW || frames.end > track.len() {
        return Err(Error::InsufficientFrames {
            needed: MIN_WINDOW,
            have,
        });
    }
    if let Some(bad) = frames.clone().find(|&i| !track.valid[i]) {
        return Err(Error::InsufficientFrames {
            needed: MIN_WINDOW,
            have: bad - frames.start,
        });
    }
    let axis = |k: usize| track.centroid[frames.clone()].iter().map(|c| c[k]).collect::<Vec<_>>();
    let (vu, au) = derivatives(&axis(0), track.fps);
    let (vv, av) = derivatives(&axis(1), track.fps);
    let sizes = &track.size[frames.clone()];
    let (dl, _) = derivatives(sizes, track.fps);
    Ok(Kinematics {
        velocity: vu.iter().zip(&vv).map(|(&a, &b)| [a, b]).collect(),
        acceleration: au.iter().zip(&av).map(|(&a, &b)| [a, b]).collect(),
        size_rate: dl.iter().zip(sizes).map(|(d, l)| d / l).collect(),
        frames,
    })
}

/// Kinematics of every valid run with at least three frames.
pub fn kinematics(track: &CentroidTrack) -> Result<Vec<Kinematics>> {
    let runs: Vec<_> = track.valid_runs().into_iter().filter(|r| r.len() >= MIN_WINDOW).collect();
    if runs.is_empty() {
        let have = track.valid_runs().iter().map(|r| r.len()).max().unwrap_or(0);
        return Err(Error::InsufficientFrames {
            needed: MIN_WINDOW,
            have,
        });
    }
    runs.into_iter().map(|r| kinematics_in(track, r)).collect()
}
