use super::*;
use crate::scene::InitialForce;

use crate::testutil::{ball, scene, G};

#[test]
fn free_fall_matches_closed_form_until_contact() {
    let h = 2.1;
    let t = simulate(&scene(vec![ball(h, 0.5, 0.0)], 48)).unwrap();
    let first_contact = t.contact_frames(0)[0];
    assert!(first_contact > 10);
    for (i, frame) in t.frames.iter().enumerate().take(first_contact) {
        let time = i as f64 * t.dt;
        let expected = h - 0.5 * G * time * time;
        assert!(
            (frame[0].position.y - expected).abs() < 1e-3,
            "frame {i}: {} vs {expected}",
            frame[0].position.y
        );
    }
}

#[test]
fn bounce_scales_normal_speed_by_restitution() {
    for e in [0.3, 0.6, 0.9] {
        let t = simulate(&scene(vec![ball(2.1, e, 0.0)], 40)).unwrap();
        let ev = t.contact_events.iter().find(|ev| ev.b.is_none()).unwrap();
        // impact speed close to sqrt(2 g h) for the drop of 2 m
        assert!((ev.approach_speed - (2.0 * G * 2.0f64).sqrt()).abs() < 0.1);
        assert!(
            (ev.separation_speed - e * ev.approach_speed).abs() < 1e-3,
            "e={e}: {} vs {}",
            ev.separation_speed,
            e * ev.approach_speed
        );
    }
}

#[test]
fn equal_spheres_exchange_velocities_in_elastic_head_on_collision() {
    let mut w = World::new(Vector3::zeros());
    w.ground = false;
    let v = 3.0;
    w.add(Body::sphere(Vector3::new(-1.0, 0.0, 0.0), 0.25, 1.0, 1.0, 0.0).with_velocity(Vector3::new(v, 0.0, 0.0)));
    w.add(Body::sphere(Vector3::new(1.0, 0.0, 0.0), 0.25, 1.0, 1.0, 0.0).with_velocity(Vector3::new(-v, 0.0, 0.0)));
    let dt = 1.0 / 192.0;
    for _ in 0..200 {
        w.step(dt);
    }
    // 1-D elastic closed form for equal masses: velocities swap.
    let (m1, m2, u1, u2) = (1.0, 1.0, v, -v);
    let v1 = ((m1 - m2) * u1 + 2.0 * m2 * u2) / (m1 + m2);
    let v2 = ((m2 - m1) * u2 + 2.0 * m1 * u1) / (m1 + m2);
    assert!((w.bodies[0].state.linear_velocity.x - v1).abs() < 1e-3);
    assert!((w.bodies[1].state.linear_velocity.x - v2).abs() < 1e-3);
}

#[test]
fn zero_gravity_step_is_ballistic() {
    let mut w = World::new(Vector3::zeros());
    w.ground = false;
    let v = Vector3::new(0.3, -0.2, 1.5);
    w.add(Body::sphere(Vector3::new(1.0, 2.0, 3.0), 0.1, 2.0, 0.5, 0.5).with_velocity(v));
    let before = w.bodies[0].state.clone();
    let dt = 0.01;
    w.step(dt);
    let after = &w.bodies[0].state;
    assert!((after.position - (before.position + v * dt)).norm() < 1e-15);
    assert_eq!(after.linear_velocity, before.linear_velocity);
    assert_eq!(after.angular_velocity, before.angular_velocity);
}

#[test]
fn static_body_is_a_fixpoint() {
    let mut w = World::new(Vector3::new(0.0, -G, 0.0));
    let k = w.add(Body::cube(Vector3::new(0.0, 0.5, 0.0), 1.0, 1.0, 0.5, 0.5).make_static());
    w.add(Body::sphere(Vector3::new(0.0, 1.2, 0.0), 0.1, 1.0, 0.5, 0.5));
    let before = w.bodies[k].state.clone();
    for _ in 0..100 {
        w.step(1.0 / 192.0);
    }
    assert_eq!(w.bodies[k].state, before);
}

#[test]
fn one_substep_and_two_half_substeps_agree_on_free_fall() {
    let make = || {
        let mut w = World::new(Vector3::new(0.0, -G, 0.0));
        w.ground = false;
        w.add(Body::sphere(Vector3::new(0.0, 10.0, 0.0), 0.1, 1.0, 0.5, 0.5).with_velocity(Vector3::new(1.0, 2.0, 0.0)));
        w
    };
    let dt = 1.0 / 24.0;
    let (mut one, mut two) = (make(), make());
    one.step(dt);
    two.step(dt / 2.0);
    two.step(dt / 2.0);
    let y_exact = 10.0 + 2.0 * dt - 0.5 * G * dt * dt;
    let a = one.bodies[0].state.position;
    let b = two.bodies[0].state.position;
    assert!((a - b).norm() <= G * dt * dt, "{}", (a - b).norm());
    assert!((a.y - y_exact).abs() <= G * dt * dt);
    assert!((b.y - y_exact).abs() <= G * dt * dt);
}

#[test]
fn resting_sphere_stays_put() {
    let spec = ball(0.1, 0.7, 0.5);
    let t = simulate(&scene(vec![spec], 90)).unwrap();
    for frame in &t.frames {
        assert!(frame[0].linear_velocity.norm() < 1e-4);
        assert!((frame[0].position.y - 0.1).abs() < 1e-4);
    }
}

#[test]
fn two_body_collisions_conserve_momentum() {
    let mut w = World::new(Vector3::zeros());
    w.ground = false;
    w.collect_diagnostics = true;
    w.add(Body::sphere(Vector3::new(-1.0, 0.05, 0.0), 0.2, 1.3, 0.7, 0.4).with_velocity(Vector3::new(4.0, 0.0, 0.3)));
    w.add(Body::cube(Vector3::new(1.0, 0.0, 0.0), 0.5, 2.1, 0.6, 0.5).with_velocity(Vector3::new(-2.0, 0.1, 0.0)));
    let p0 = w.bodies.iter().map(|b| b.state.momentum()).sum::<Vector3<f64>>();
    let mut worst: f64 = 0.0;
    for _ in 0..192 {
        worst = worst.max(w.step(1.0 / 192.0).diagnostics.momentum_error);
    }
    let p1 = w.bodies.iter().map(|b| b.state.momentum()).sum::<Vector3<f64>>();
    assert!(worst <= 1e-6, "{worst}");
    assert!((p1 - p0).norm() <= 1e-6);
}

#[test]
fn cube_settles_on_ground_without_sinking() {
    let mut spec = ball(1.0, 0.4, 0.6);
    spec.shape_kind = ShapeKind::Box;
    spec.characteristic_size = 0.3;
    spec.initial_force = InitialForce {
        magnitude: 10.0,
        direction_deg: 30.0,
    };
    let (t, d) = simulate_with_diagnostics(&scene(vec![spec], 90)).unwrap();
    assert!(d.max_penetration_ratio <= 1e-3, "{d:?}");
    assert!(d.max_energy_increase <= 1e-6, "{d:?}");
    let last = &t.frames.last().unwrap()[0];
    assert!(last.linear_velocity.norm() < 1e-3, "{}", last.linear_velocity.norm());
    assert!(last.position.y > 0.14 && last.position.y < 0.3);
}

#[test]
fn quaternions_stay_normalized() {
    let preset = crate::scene::SamplingPreset::default();
    let c = crate::scene::sample_scene(5, &preset).unwrap();
    let t = simulate(&c).unwrap();
    for frame in &t.frames {
        for s in frame {
            assert!((s.orientation.quaternion().norm() - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn simulation_is_bitwise_deterministic() {
    let preset = crate::scene::SamplingPreset::default();
    let c = crate::scene::sample_scene(11, &preset).unwrap();
    let a = simulate(&c).unwrap();
    let b = simulate(&c).unwrap();
    assert_eq!(io::trajectory_to_bytes(&a), io::trajectory_to_bytes(&b));
    assert_eq!(a.contact_events, b.contact_events);
}

#[test]
fn divergence_names_the_frame() {
    let mut spec = ball(1.0, 0.5, 0.5);
    spec.mass = 1e-300;
    spec.initial_force = InitialForce {
        magnitude: 1e10,
        direction_deg: 0.0,
    };
    let c = scene(vec![spec], 10);
    match simulate(&c) {
        Err(Error::Diverged { frame, body }) => {
            assert!(frame >= 1);
            assert_eq!(body, 0);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn trajectory_binary_round_trips() {
    let preset = crate::scene::SamplingPreset::default();
    let c = crate::scene::sample_scene(3, &preset).unwrap();
    let t = simulate(&c).unwrap();
    let bytes = io::trajectory_to_bytes(&t);
    let back = io::trajectory_from_bytes(&bytes, std::path::Path::new("mem")).unwrap();
    assert_eq!(back.frames, t.frames);
    assert_eq!(back.dt, t.dt);
    assert!(io::trajectory_from_bytes(&bytes[..bytes.len() - 1], std::path::Path::new("mem")).is_err());
}

#[test]
fn sampled_scenes_respect_invariants() {
    let preset = crate::scene::SamplingPreset::default();
    for seed in 0..12 {
        let c = crate::scene::sample_scene(seed, &preset).unwrap();
        let (_, d) = simulate_with_diagnostics(&c).unwrap();
        assert!(d.max_energy_increase <= 1e-6, "seed {seed}: {d:?}");
        assert!(d.max_penetration_ratio <= 1e-3, "seed {seed}: {d:?}");
        assert!(d.max_momentum_error <= 1e-6, "seed {seed}: {d:?}");
    }
}
