use std::ops::Range;

use super::track::CentroidTrack;
use super::MIN_WINDOW;

/// Splits `runs` so that no window spans a contact. A contact reported at
/// frame k happened between frames k − 1 and k.
fn split_at(runs: Vec<Range<usize>>, cuts: &[usize]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    for r in runs {
        let mut start = r.start;
        for &c in cuts.iter().filter(|&&c| c > r.start && c < r.end) {
            out.push(start..c);
            start = c;
        }
        out.push(start..r.end);
    }
    out.retain(|w| w.len() >= MIN_WINDOW);
    out
}

/// Windows between contact events within valid runs.
pub fn free_flight_windows(track: &CentroidTrack, contact_frames: &[usize]) -> Vec<Range<usize>> {
    let mut cuts = contact_frames.to_vec();
    cuts.sort_unstable();
    split_at(track.valid_runs(), &cuts)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Windows free of impulsive jumps, for tracks without contact metadata.
///
/// A frame is a jump when its second difference deviates from the run's
/// median by more than six robust standard deviations (1.4826 · MAD). The
/// windows on either side share the jump frame.
pub fn jump_free_windows(track: &CentroidTrack) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    for run in track.valid_runs() {
        if run.len() < MIN_WINDOW + 2 {
            if run.len() >= MIN_WINDOW {
                out.push(run);
            }
            continue;
        }
        let c = &track.centroid;
        let second: Vec<[f64; 2]> = (run.start + 1..run.end - 1)
            .map(|i| std::array::from_fn(|k| c[i + 1][k] - 2.0 * c[i][k] + c[i - 1][k]))
            .collect();
        let mut jump = vec![false; second.len()];
        for k in 0..2 {
            let s: Vec<f64> = second.iter().map(|d| d[k]).collect();
            let m = median(s.clone());
            let mad = median(s.iter().map(|x| (x - m).abs()).collect());
            let peak = s.iter().map(|x| (x - m).abs()).fold(0.0, f64::max);
            let threshold = (6.0 * 1.4826 * mad).max(1e-6 * peak).max(1e-9);
            for (j, x) in s.iter().enumerate() {
                jump[j] |= (x - m).abs() > threshold;
            }
        }
        let mut start = run.start;
        for (j, &is_jump) in jump.iter().enumerate() {
            if is_jump {
                let frame = run.start + 1 + j;
                if frame + 1 - start >= MIN_WINDOW {
                    out.push(start..frame + 1);
                }
                start = frame;
            }
        }
        if run.end - start >= MIN_WINDOW {
            out.push(start..run.end);
        }
    }
    out
}

/// Splits `window` wherever consecutive `values` (one per frame of the
/// window) change strict sign.
pub fn sign_windows(window: Range<usize>, values: &[f64]) -> Vec<Range<usize>> {
    assert_eq!(values.len(), window.len());
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i - 1] * values[i] < 0.0 {
            out.push(window.start + start..window.start + i);
            start = i;
        }
    }
    out.push(window.start + start..window.end);
    out.retain(|w| w.len() >= MIN_WINDOW);
    out
}

/// Longest window, earliest on ties.
pub fn longest(windows: &[Range<usize>]) -> Option<Range<usize>> {
    windows.iter().fold(None, |best: Option<Range<usize>>, w| match best {
        Some(b) if b.len() >= w.len() => Some(b),
        _ => Some(w.clone()),
    })
}
