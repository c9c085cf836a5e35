//! Deterministic fixed-step rigid-body simulation.
//!
//! Semi-implicit Euler at `SUBSTEPS` substeps per frame: gravity updates
//! velocities, contact impulses are solved, then positions advance.

pub mod collide;
pub(crate) mod io;
mod world;

pub use io::{read_contacts_json, read_trajectory, write_contacts_json, write_trajectory};
pub use world::{Body, BodyState, PairImpulse, PairKey, SolverParams, StepDiagnostics, StepReport, World};

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::scene::{ObjectSpec, SceneConfig, ShapeKind};
use crate::{Error, Result};
use collide::Collider;

pub const SUBSTEPS: usize = 8;

/// Contact activity of one object pair aggregated over one frame interval.
///
/// `frame` is the first stored frame after the contact, so the positions of
/// frames `frame..` are post-contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub frame: usize,
    pub a: usize,
    /// `None` for the ground plane.
    pub b: Option<usize>,
    /// N·s, total normal impulse over the frame interval
    pub impulse: f64,
    /// m/s, largest pre-solve approach speed within the interval
    pub approach_speed: f64,
    /// m/s, separation speed right after that impact
    pub separation_speed: f64,
}

impl ContactEvent {
    pub fn involves(&self, object: usize) -> bool {
        self.a == object || self.b == Some(object)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// s, time between stored frames
    pub dt: f64,
    pub substeps: usize,
    /// `frames[i][k]` is body k at t = i·dt.
    pub frames: Vec<Vec<BodyState>>,
    pub contact_events: Vec<ContactEvent>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn body_count(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    /// Frames at which `object` had a contact event, ascending.
    pub fn contact_frames(&self, object: usize) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .contact_events
            .iter()
            .filter(|e| e.involves(object))
            .map(|e| e.frame)
            .collect();
        f.dedup();
        f
    }

    /// Whether any two objects (not the ground) touched.
    pub fn has_object_collision(&self) -> bool {
        self.contact_events.iter().any(|e| e.b.is_some())
    }
}

/// Aggregated invariant measurements over a whole simulation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimDiagnostics {
    pub max_energy_increase: f64,
    pub max_momentum_error: f64,
    pub max_penetration_ratio: f64,
    pub contact_substeps: usize,
}

pub fn collider_for(spec: &ObjectSpec) -> Collider {
    match spec.shape_kind {
        ShapeKind::Box => Collider::Cube {
            half: 0.5 * spec.characteristic_size,
        },
        _ => Collider::Sphere {
            radius: spec.collision_radius(),
        },
    }
}

/// Builds the initial world for a scene, including the t = 0 push.
pub fn world_from_config(config: &SceneConfig) -> Result<World> {
    config.validate()?;
    let mut world = World::new(Vector3::new(0.0, -config.gravity, 0.0));
    for spec in &config.objects {
        let center = Vector3::from(spec.initial_position);
        let v = Vector3::from(spec.push_velocity(config.fps));
        let mut body = match collider_for(spec) {
            Collider::Cube { half } => {
                Body::cube(center, 2.0 * half, spec.mass, spec.restitution, spec.friction)
            }
            Collider::Sphere { radius } => {
                Body::sphere(center, radius, spec.mass, spec.restitution, spec.friction)
            }
        }
        .with_velocity(v);
        body.characteristic_size = spec.characteristic_size;
        world.add(body);
    }
    Ok(world)
}

fn run(config: &SceneConfig, diagnostics: bool) -> Result<(Trajectory, SimDiagnostics)> {
    let mut world = world_from_config(config)?;
    world.collect_diagnostics = diagnostics;
    let frame_dt = 1.0 / config.fps;
    let dt = frame_dt / SUBSTEPS as f64;
    let mut frames = Vec::with_capacity(config.frame_count);
    frames.push(world.states());
    let mut events = Vec::new();
    let mut stats = SimDiagnostics::default();
    for frame in 1..config.frame_count {
        let mut pairs: BTreeMap<PairKey, PairImpulse> = BTreeMap::new();
        for _ in 0..SUBSTEPS {
            let report = world.step(dt);
            if diagnostics {
                let d = report.diagnostics;
                stats.max_energy_increase = stats.max_energy_increase.max(d.energy_change);
                stats.max_momentum_error = stats.max_momentum_error.max(d.momentum_error);
                stats.max_penetration_ratio = stats.max_penetration_ratio.max(d.penetration_ratio);
                stats.contact_substeps += usize::from(d.contact_points > 0);
            }
            for (key, p) in report.pairs {
                let e = pairs.entry(key).or_insert(PairImpulse {
                    impulse: 0.0,
                    approach_speed: -1.0,
                    separation_speed: 0.0,
                });
                e.impulse += p.impulse;
                if p.approach_speed > e.approach_speed {
                    e.approach_speed = p.approach_speed;
                    e.separation_speed = p.separation_speed;
                }
            }
        }
        let states = world.states();
        if let Some(body) = states.iter().position(|s| !s.is_finite()) {
            return Err(Error::Diverged { frame, body });
        }
        events.extend(pairs.into_iter().map(|((a, b), p)| ContactEvent {
            frame,
            a,
            b,
            impulse: p.impulse,
            approach_speed: p.approach_speed.max(0.0),
            separation_speed: p.separation_speed,
        }));
        frames.push(states);
    }
    Ok((
        Trajectory {
            dt: frame_dt,
            substeps: SUBSTEPS,
            frames,
            contact_events: events,
        },
        stats,
    ))
}

/// Simulates a scene; frame i holds the state at t = i / fps.
pub fn simulate(config: &SceneConfig) -> Result<Trajectory> {
    run(config, false).map(|(t, _)| t)
}

/// Like [`simulate`], also checking conservation and penetration at every
/// substep.
pub fn simulate_with_diagnostics(config: &SceneConfig) -> Result<(Trajectory, SimDiagnostics)> {
    run(config, true)
}

#[cfg(test)]
mod tests;
