use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::track::{extract_tracks, kinematics, kinematics_in, CentroidTrack, MaskSequence};
use super::window::{free_flight_windows, jump_free_windows, longest, sign_windows};
use super::{determinant_stats, Determinant, DEFAULT_EPSILON, MIN_WINDOW, STATIC_SPEED};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PisOptions {
    pub epsilon: f64,
    /// Keep the per-frame determinant values in the report.
    pub include_series: bool,
}

impl Default for PisOptions {
    fn default() -> Self {
        PisOptions {
            epsilon: DEFAULT_EPSILON,
            include_series: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantEntry {
    pub mean: f64,
    pub std: f64,
    pub score: f64,
    /// first frame, one past the last frame
    pub frames: [usize; 2],
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<f64>>,
}

/// Frame windows used for one object: free flight (a_x, a_y, v_x), the
/// sign-constant part of free flight (v_y), and full visibility (Δl).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectWindows {
    pub flight: Option<Range<usize>>,
    pub v_y: Option<Range<usize>>,
    pub size: Option<Range<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub a_x: Option<f64>,
    pub a_y: Option<f64>,
    pub v_x: Option<f64>,
    pub v_y: Option<f64>,
    pub delta_l: Option<f64>,
}

impl Scores {
    pub fn get(&self, d: Determinant) -> Option<f64> {
        match d {
            Determinant::Ax => self.a_x,
            Determinant::Ay => self.a_y,
            Determinant::Vx => self.v_x,
            Determinant::Vy => self.v_y,
            Determinant::DeltaL => self.delta_l,
        }
    }

    fn slot(&mut self, d: Determinant) -> &mut Option<f64> {
        match d {
            Determinant::Ax => &mut self.a_x,
            Determinant::Ay => &mut self.a_y,
            Determinant::Vx => &mut self.v_x,
            Determinant::Vy => &mut self.v_y,
            Determinant::DeltaL => &mut self.delta_l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectReport {
    pub id: u8,
    #[serde(rename = "static")]
    pub is_static: bool,
    /// px/frame over all valid frames
    pub mean_speed: f64,
    pub valid_frames: usize,
    pub windows: ObjectWindows,
    pub a_x: Option<DeterminantEntry>,
    pub a_y: Option<DeterminantEntry>,
    pub v_x: Option<DeterminantEntry>,
    pub v_y: Option<DeterminantEntry>,
    pub delta_l: Option<DeterminantEntry>,
}

impl ObjectReport {
    pub fn entry(&self, d: Determinant) -> Option<&DeterminantEntry> {
        match d {
            Determinant::Ax => self.a_x.as_ref(),
            Determinant::Ay => self.a_y.as_ref(),
            Determinant::Vx => self.v_x.as_ref(),
            Determinant::Vy => self.v_y.as_ref(),
            Determinant::DeltaL => self.delta_l.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PisReport {
    pub fps: f64,
    pub epsilon: f64,
    /// "contacts", "jump_free", or "fixed"
    pub window_source: String,
    pub objects: Vec<ObjectReport>,
    /// Mean over non-static objects that have the determinant.
    pub mean: Scores,
    /// Number of objects contributing to each mean.
    pub scored_objects: BTreeMap<Determinant, usize>,
}

fn entry(values: Vec<f64>, frames: &Range<usize>, options: &PisOptions) -> Option<DeterminantEntry> {
    let s = determinant_stats(&values, options.epsilon).ok()?;
    Some(DeterminantEntry {
        mean: s.mean,
        std: s.std,
        score: s.score,
        frames: [frames.start, frames.end],
        samples: s.samples,
        series: options.include_series.then_some(values),
    })
}

fn mean_speed(track: &CentroidTrack) -> f64 {
    let Ok(runs) = kinematics(track) else {
        return 0.0;
    };
    let speeds: Vec<f64> = runs
        .iter()
        .flat_map(|k| k.velocity.iter().map(|v| v[0].hypot(v[1]) / track.fps))
        .collect();
    super::pairwise_sum(&speeds) / speeds.len() as f64
}

fn object_report(track: &CentroidTrack, windows: ObjectWindows, options: &PisOptions) -> ObjectReport {
    let speed = mean_speed(track);
    let mut r = ObjectReport {
        id: track.id,
        is_static: speed < STATIC_SPEED,
        mean_speed: speed,
        valid_frames: track.valid.iter().filter(|&&v| v).count(),
        windows: windows.clone(),
        a_x: None,
        a_y: None,
        v_x: None,
        v_y: None,
        delta_l: None,
    };
    if let Some(w) = &windows.flight {
        if let Ok(k) = kinematics_in(track, w.clone()) {
            r.a_x = entry(k.acceleration.iter().map(|a| a[0]).collect(), w, options);
            r.a_y = entry(k.acceleration.iter().map(|a| a[1]).collect(), w, options);
            r.v_x = entry(k.velocity.iter().map(|v| v[0]).collect(), w, options);
        }
    }
    if let Some(w) = &windows.v_y {
        if let Ok(k) = kinematics_in(track, w.clone()) {
            r.v_y = entry(k.velocity.iter().map(|v| v[1]).collect(), w, options);
        }
    }
    if let Some(w) = &windows.size {
        if let Ok(k) = kinematics_in(track, w.clone()) {
            r.delta_l = entry(k.size_rate, w, options);
        }
    }
    r
}

fn choose_windows(track: &CentroidTrack, contact_frames: Option<&[usize]>) -> ObjectWindows {
    let flight_all = match contact_frames {
        Some(c) => free_flight_windows(track, c),
        None => jump_free_windows(track),
    };
    let v_y_all: Vec<Range<usize>> = flight_all
        .iter()
        .filter_map(|w| {
            let k = kinematics_in(track, w.clone()).ok()?;
            let vy: Vec<f64> = k.velocity.iter().map(|v| v[1]).collect();
            Some(sign_windows(w.clone(), &vy))
        })
        .flatten()
        .collect();
    let runs: Vec<_> = track.valid_runs().into_iter().filter(|r| r.len() >= MIN_WINDOW).collect();
    ObjectWindows {
        flight: longest(&flight_all),
        v_y: longest(&v_y_all),
        size: longest(&runs),
    }
}

fn aggregate(objects: Vec<ObjectReport>, fps: f64, options: &PisOptions, source: &str) -> Result<PisReport> {
    if objects.iter().all(|o| Determinant::ALL.iter().all(|&d| o.entry(d).is_none())) {
        return Err(Error::NoTrackableObjects);
    }
    let mut mean = Scores::default();
    let mut counts = BTreeMap::new();
    for d in Determinant::ALL {
        let s: Vec<f64> = objects
            .iter()
            .filter(|o| !o.is_static)
            .filter_map(|o| o.entry(d).map(|e| e.score))
            .collect();
        counts.insert(d, s.len());
        if !s.is_empty() {
            *mean.slot(d) = Some(super::pairwise_sum(&s) / s.len() as f64);
        }
    }
    Ok(PisReport {
        fps,
        epsilon: options.epsilon,
        window_source: source.into(),
        objects,
        mean,
        scored_objects: counts,
    })
}

fn report_fps(tracks: &[CentroidTrack]) -> f64 {
    tracks.first().map_or(0.0, |t| t.fps)
}

/// Scores every track. With `contacts` (object id → contact frames), windows
/// come from the simulator; without, from jump detection.
pub fn evaluate_tracks(
    tracks: &[CentroidTrack],
    contacts: Option<&BTreeMap<u8, Vec<usize>>>,
    options: &PisOptions,
) -> Result<PisReport> {
    let objects: Vec<ObjectReport> = tracks
        .iter()
        .map(|t| {
            let c = contacts.map(|m| m.get(&t.id).map_or(&[][..], |v| v.as_slice()));
            object_report(t, choose_windows(t, c), options)
        })
        .collect();
    let source = if contacts.is_some() { "contacts" } else { "jump_free" };
    aggregate(objects, report_fps(tracks), options, source)
}

/// Scores tracks on caller-supplied windows (for paired comparisons).
/// Tracks without an entry in `windows` are skipped.
pub fn evaluate_tracks_with_windows(
    tracks: &[CentroidTrack],
    windows: &BTreeMap<u8, ObjectWindows>,
    options: &PisOptions,
) -> Result<PisReport> {
    let objects: Vec<ObjectReport> = tracks
        .iter()
        .filter_map(|t| windows.get(&t.id).map(|w| object_report(t, w.clone(), options)))
        .collect();
    aggregate(objects, report_fps(tracks), options, "fixed")
}

pub fn evaluate_masks(
    masks: &MaskSequence,
    fps: f64,
    contacts: Option<&BTreeMap<u8, Vec<usize>>>,
    options: &PisOptions,
) -> Result<PisReport> {
    evaluate_tracks(&extract_tracks(masks, fps), contacts, options)
}
