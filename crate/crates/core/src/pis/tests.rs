use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::projection::{project_position, projectile_state, Kinematics3D};
use crate::render::{project_point, render_frame, RenderOptions};
use crate::testutil::{ball, scene, G};

const FPS: f64 = 24.0;

fn square_masks(w: usize, h: usize, squares: &[Option<(usize, usize, usize)>]) -> MaskSequence {
    let frames = squares
        .iter()
        .map(|sq| {
            let mut f = vec![0u8; w * h];
            if let Some((x0, y0, side)) = *sq {
                for y in y0..(y0 + side).min(h) {
                    for x in x0..(x0 + side).min(w) {
                        f[y * w + x] = 1;
                    }
                }
            }
            f
        })
        .collect();
    MaskSequence { width: w, height: h, frames }
}

fn track_of(points: &[[f64; 2]]) -> CentroidTrack {
    CentroidTrack::from_points(1, FPS, points.to_vec(), vec![10.0; points.len()])
}

#[test]
fn square_centroid_and_size() {
    let m = square_masks(40, 30, &[Some((5, 7, 10))]);
    let t = extract_track(&m, 1, FPS).unwrap();
    assert_eq!(t.centroid[0], [9.5, 11.5]);
    assert_eq!(t.size[0], 10.0);
    assert!(t.valid[0]);
}

#[test]
fn leaving_the_frame_invalidates_trailing_frames() {
    let squares: Vec<_> = (0..8).map(|k| Some((4 + 5 * k, 10, 6))).collect();
    let t = extract_track(&square_masks(40, 30, &squares), 1, FPS).unwrap();
    assert_eq!(t.valid, vec![true, true, true, true, true, true, false, false]);
    assert_eq!(t.valid_runs(), vec![0..6]);
}

#[test]
fn tiny_and_absent_objects() {
    let m = square_masks(20, 20, &[Some((5, 5, 2)), None, Some((5, 5, 3))]);
    let t = extract_track(&m, 1, FPS).unwrap();
    assert_eq!(t.valid, vec![false, false, true]);
    assert!(matches!(extract_track(&m, 2, FPS), Err(crate::Error::EmptyTrack(2))));
    let empty = square_masks(20, 20, &[None, None, None]);
    assert!(matches!(
        evaluate_masks(&empty, FPS, None, &PisOptions::default()),
        Err(crate::Error::NoTrackableObjects)
    ));
}

#[test]
fn rendered_sphere_centroid_tracks_projection() {
    let c = scene(vec![ball(2.0, 0.5, 0.3)], 30);
    let t = crate::sim::simulate(&c).unwrap();
    for k in 0..t.len() {
        let f = render_frame(&c, &t, k, RenderOptions::default()).unwrap();
        let masks = MaskSequence {
            width: f.width,
            height: f.height,
            frames: vec![f.mask],
        };
        let track = extract_track(&masks, 1, FPS).unwrap();
        let p = t.frames[k][0].position;
        let [u, v] = project_point([p.x, p.y, p.z], &c.camera).unwrap();
        let [cu, cv] = track.centroid[0];
        assert!((cu - u).hypot(cv - v) <= 1.5, "frame {k}: ({cu}, {cv}) vs ({u}, {v})");
    }
}

#[test]
fn linear_motion_has_constant_velocity() {
    let pts: Vec<[f64; 2]> = (0..10).map(|i| [3.0 + 2.5 * i as f64, 7.0]).collect();
    let k = kinematics(&track_of(&pts)).unwrap().remove(0);
    for (v, a) in k.velocity.iter().zip(&k.acceleration) {
        assert!((v[0] - 2.5 * FPS).abs() < 1e-9);
        assert!(a[0].abs() < 1e-9 && a[1].abs() < 1e-9);
    }
}

#[test]
fn quadratic_motion_has_constant_acceleration() {
    let g = 0.8;
    let pts: Vec<[f64; 2]> = (0..12).map(|i| [0.0, 0.5 * g * (i * i) as f64]).collect();
    let k = kinematics(&track_of(&pts)).unwrap().remove(0);
    for (i, a) in k.acceleration.iter().enumerate() {
        assert!((a[1] - g * FPS * FPS).abs() < 1e-6, "frame {i}");
    }
    for (i, v) in k.velocity.iter().enumerate() {
        assert!((v[1] - g * i as f64 * FPS).abs() < 1e-6, "frame {i}");
    }
}

#[test]
fn kinematics_needs_three_frames() {
    let t = track_of(&[[0.0, 0.0], [1.0, 1.0]]);
    assert!(matches!(kinematics(&t), Err(crate::Error::InsufficientFrames { needed: 3, have: 2 })));
    assert!(matches!(determinant_stats(&[1.0, 2.0], 1e-6), Err(crate::Error::EmptyWindow { needed: 3 })));
}

/// A sphere dropped in front of a level camera: the pixel acceleration
/// should be f·g/z.
#[test]
fn simulated_drop_matches_projected_gravity() {
    let mut c = scene(vec![ball(3.0, 0.5, 0.3)], 40);
    c.objects[0].characteristic_size = 0.6;
    c.camera.position = [0.0, 1.5, 4.0];
    c.camera.look_at = [0.0, 1.5, 0.0];
    let t = crate::sim::simulate(&c).unwrap();
    let masks = MaskSequence {
        width: 512,
        height: 512,
        frames: (0..t.len())
            .map(|k| render_frame(&c, &t, k, RenderOptions::default()).unwrap().mask)
            .collect(),
    };
    let contacts = BTreeMap::from([(1u8, t.contact_frames(0))]);
    let r = evaluate_masks(&masks, FPS, Some(&contacts), &PisOptions::default()).unwrap();
    let ay = r.objects[0].a_y.as_ref().unwrap();
    let expected = c.camera.focal_length * G / 4.0;
    assert!((ay.mean - expected).abs() <= 0.1 * expected, "{} vs {expected}", ay.mean);
    assert!(ay.frames[1] - ay.frames[0] >= 10);
}

#[test]
fn noise_free_free_flight_scores_high() {
    let c = scene(vec![ball(3.0, 0.5, 0.3)], 48);
    let t = crate::sim::simulate(&c).unwrap();
    let pts: Vec<[f64; 2]> = t
        .frames
        .iter()
        .map(|f| {
            let p = f[0].position;
            project_point([p.x, p.y, p.z], &c.camera).unwrap()
        })
        .collect();
    let track = CentroidTrack::from_points(1, FPS, pts, vec![20.0; t.len()]);
    let contacts = BTreeMap::from([(1u8, t.contact_frames(0))]);
    let r = evaluate_tracks(&[track], Some(&contacts), &PisOptions::default()).unwrap();
    assert!(r.objects[0].a_y.as_ref().unwrap().score >= 0.95);
}

#[test]
fn constant_determinant_scores_one() {
    let s = determinant_stats(&[4.0; 7], DEFAULT_EPSILON).unwrap();
    assert_eq!((s.std, s.score), (0.0, 1.0));
}

#[test]
fn zero_mean_approaches_the_floor() {
    let values = [-1.0, 1.0, -1.0, 1.0];
    let mut last = 1.0;
    for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
        let s = determinant_stats(&values, eps).unwrap();
        assert_eq!(s.mean, 0.0);
        assert!((s.score - eps / (1.0 + eps)).abs() < 1e-15);
        assert!(s.score < last);
        last = s.score;
    }
}

/// Projected 3-D projectile with depth motion: image centroid and
/// apparent size of a sphere of radius 0.2 m, with an optional velocity
/// jump applied after frame `jump_at`.
fn projected_flight(n: usize, jump: Option<(usize, [f64; 3])>) -> CentroidTrack {
    let f = 500.0;
    let mut pts = Vec::new();
    let mut sizes = Vec::new();
    for i in 0..n {
        let t = i as f64 / FPS;
        let s = projectile_state(6.0, 0.9, G, t);
        let mut k = Kinematics3D {
            position: [s.position[0] - 2.0, -s.position[1] + 1.0, 6.0 - 1.5 * t],
            ..s
        };
        if let Some((at, dv)) = jump {
            if i > at {
                let dt = (i - at) as f64 / FPS;
                for a in 0..3 {
                    k.position[a] += dv[a] * dt;
                }
            }
        }
        pts.push(project_position(&k, f).unwrap());
        sizes.push(f * 0.2 / k.position[2]);
    }
    CentroidTrack::from_points(1, FPS, pts, sizes)
}

#[test]
fn velocity_jump_lowers_every_determinant() {
    let clean = projected_flight(30, None);
    let jumped = projected_flight(30, Some((15, [0.8, -0.6, 0.7])));
    let base = evaluate_tracks(&[clean], Some(&BTreeMap::new()), &PisOptions::default()).unwrap();
    let windows = BTreeMap::from([(1u8, base.objects[0].windows.clone())]);
    let hit = evaluate_tracks_with_windows(&[jumped], &windows, &PisOptions::default()).unwrap();
    for d in Determinant::ALL {
        let (a, b) = (base.objects[0].entry(d).unwrap(), hit.objects[0].entry(d).unwrap());
        assert!(b.score < a.score, "{d:?}: {} vs {}", b.score, a.score);
    }
}

#[test]
fn jump_detection_splits_at_the_kink() {
    let jumped = projected_flight(30, Some((15, [1.5, 0.0, 0.0])));
    let w = jump_free_windows(&jumped);
    assert_eq!(w, vec![0..16, 15..30]);
    assert_eq!(jump_free_windows(&projected_flight(30, None)), vec![0..30]);
}

#[test]
fn contact_frames_split_windows() {
    let t = track_of(&[[0.0, 0.0]; 20]);
    assert_eq!(free_flight_windows(&t, &[5, 6, 14]), vec![0..5, 6..14, 14..20]);
    assert_eq!(sign_windows(2..8, &[1.0, 2.0, 0.5, -0.1, -2.0, -3.0]), vec![2..5, 5..8]);
    assert_eq!(longest(&[0..3, 4..9, 10..15]), Some(4..9));
}

#[test]
fn static_object_is_flagged_and_excluded() {
    let still = CentroidTrack::from_points(2, FPS, vec![[20.0, 20.0]; 30], vec![8.0; 30]);
    let moving = projected_flight(30, None);
    let r = evaluate_tracks(&[moving, still], None, &PisOptions::default()).unwrap();
    let s = &r.objects[1];
    assert!(s.is_static);
    let vx = s.v_x.as_ref().unwrap();
    assert_eq!(vx.mean, 0.0);
    assert_eq!(r.scored_objects[&Determinant::Ax], 1);
    assert_eq!(r.mean.a_y, Some(r.objects[0].a_y.as_ref().unwrap().score));
}

#[test]
fn report_serializes_with_determinant_names() {
    let r = evaluate_tracks(&[projected_flight(20, None)], None, &PisOptions::default()).unwrap();
    let json = serde_json::to_value(&r).unwrap();
    assert!(json["mean"]["delta_l"].is_number());
    assert!(json["objects"][0]["static"].is_boolean());
    assert_eq!(json["scored_objects"]["a_x"], 1);
    let back: PisReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, r);
}

fn noisy(track: &CentroidTrack, amplitude: f64, rng: &mut ChaCha8Rng) -> CentroidTrack {
    let mut t = track.clone();
    for c in &mut t.centroid {
        c[0] += amplitude * (rng.random::<f64>() - 0.5);
        c[1] += amplitude * (rng.random::<f64>() - 0.5);
    }
    t
}

#[test]
fn more_noise_lowers_mean_acceleration_scores() {
    let clean = projected_flight(40, None);
    let windows = BTreeMap::from([(1u8, ObjectWindows {
        flight: Some(0..40),
        v_y: None,
        size: None,
    })]);
    let mut prev = f64::INFINITY;
    for amplitude in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
        let mut total = 0.0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = noisy(&clean, amplitude, &mut rng);
            let r = evaluate_tracks_with_windows(&[t], &windows, &PisOptions::default()).unwrap();
            let o = &r.objects[0];
            total += o.a_x.as_ref().unwrap().score + o.a_y.as_ref().unwrap().score;
        }
        assert!(total <= prev, "amplitude {amplitude}: {total} > {prev}");
        prev = total;
    }
}

proptest! {
    #[test]
    fn score_is_monotone(mean in -50.0f64..50.0, std in 0.001f64..50.0, bump in 0.001f64..10.0) {
        let s = pis(mean, std, DEFAULT_EPSILON);
        prop_assert!(s > 0.0 && s < 1.0);
        prop_assert!(pis(mean, std + bump, DEFAULT_EPSILON) < s);
        prop_assert!(pis(mean.abs() + bump, std, DEFAULT_EPSILON) > s);
        prop_assert_eq!(pis(mean, 0.0, DEFAULT_EPSILON), 1.0);
    }

    #[test]
    fn stored_stats_reproduce_the_score(values in prop::collection::vec(-100.0f64..100.0, 3..40)) {
        let s = determinant_stats(&values, DEFAULT_EPSILON).unwrap();
        prop_assert_eq!(s.score, 1.0 / (1.0 + s.std / (s.mean.abs() + DEFAULT_EPSILON)));
        prop_assert!(s.score > 0.0 && s.score <= 1.0);
    }

    #[test]
    fn time_reversal_keeps_acceleration_scores(
        a in prop::array::uniform2(-5.0f64..5.0),
        v in prop::array::uniform2(-20.0f64..20.0),
        noise in prop::collection::vec(prop::array::uniform2(-0.5f64..0.5), 25),
    ) {
        let pts: Vec<[f64; 2]> = (0..25)
            .map(|i| {
                let t = i as f64;
                [v[0] * t + 0.5 * a[0] * t * t + noise[i][0], v[1] * t + 0.5 * a[1] * t * t + noise[i][1]]
            })
            .collect();
        let fwd = track_of(&pts);
        let back = fwd.reversed();
        let o = PisOptions::default();
        let rf = evaluate_tracks(&[fwd], Some(&BTreeMap::new()), &o).unwrap();
        let rb = evaluate_tracks(&[back], Some(&BTreeMap::new()), &o).unwrap();
        for d in [Determinant::Ax, Determinant::Ay, Determinant::Vx] {
            let (x, y) = (rf.objects[0].entry(d).unwrap().score, rb.objects[0].entry(d).unwrap().score);
            prop_assert!((x - y).abs() <= 1e-9, "{:?}: {} vs {}", d, x, y);
        }
    }

    #[test]
    fn translation_leaves_scores_unchanged(shift in prop::array::uniform2(-100.0f64..100.0)) {
        let base = projected_flight(30, Some((12, [0.3, 0.2, 0.0])));
        let mut moved = base.clone();
        for c in &mut moved.centroid {
            c[0] += shift[0];
            c[1] += shift[1];
        }
        let o = PisOptions::default();
        let a = evaluate_tracks(&[base], None, &o).unwrap();
        let b = evaluate_tracks(&[moved], None, &o).unwrap();
        for d in Determinant::ALL {
            let (x, y) = (a.mean.get(d).unwrap(), b.mean.get(d).unwrap());
            prop_assert!((x - y).abs() <= 1e-6, "{:?}: {} vs {}", d, x, y);
        }
    }
}
