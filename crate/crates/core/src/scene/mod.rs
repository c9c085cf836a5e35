//! Seeded scene sampling and prompt text.

mod preset;
mod prompt;

pub use preset::{CountRange, Range, SamplingPreset};
pub use prompt::render_prompt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numfmt::sig9;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Sphere,
    Box,
    Cylinder,
    Cone,
    Icosphere,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Sphere,
        ShapeKind::Box,
        ShapeKind::Cylinder,
        ShapeKind::Cone,
        ShapeKind::Icosphere,
    ];
}

/// Horizontal push, applied as a one-frame impulse at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialForce {
    /// N
    pub magnitude: f64,
    /// Degrees in [0, 360). 0° points along +x, 90° along +z.
    pub direction_deg: f64,
}

impl InitialForce {
    pub const NONE: InitialForce = InitialForce {
        magnitude: 0.0,
        direction_deg: 0.0,
    };

    /// Unit horizontal direction of the push.
    pub fn direction(&self) -> [f64; 3] {
        let a = self.direction_deg.to_radians();
        [a.cos(), 0.0, a.sin()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape_kind: ShapeKind,
    pub category_label: String,
    /// kg
    pub mass: f64,
    /// m, diameter for round shapes, edge length for boxes, and both
    /// diameter and height for cylinders and cones
    pub characteristic_size: f64,
    pub restitution: f64,
    pub friction: f64,
    /// m, world frame with +y up, ground plane at y = 0
    pub initial_position: [f64; 3],
    pub initial_force: InitialForce,
    /// m, height of the lowest point of the collision shape
    pub drop_height: f64,
    pub color: [u8; 3],
}

impl ObjectSpec {
    /// Radius of the sphere used for collisions (exact for spheres,
    /// bounding proxy for cylinders and cones). Boxes use their half extent.
    pub fn collision_radius(&self) -> f64 {
        let s = self.characteristic_size;
        match self.shape_kind {
            ShapeKind::Sphere | ShapeKind::Icosphere => 0.5 * s,
            ShapeKind::Box => 0.5 * s,
            ShapeKind::Cylinder | ShapeKind::Cone => 0.5 * s * std::f64::consts::SQRT_2,
        }
    }

    /// Radius of a sphere enclosing the rendered shape.
    pub fn bounding_radius(&self) -> f64 {
        match self.shape_kind {
            ShapeKind::Box => 0.5 * self.characteristic_size * 3f64.sqrt(),
            _ => self.collision_radius(),
        }
    }

    /// Initial velocity change produced by the push: impulse = F / fps.
    pub fn push_velocity(&self, fps: f64) -> [f64; 3] {
        let dv = self.initial_force.magnitude / (fps * self.mass);
        let d = self.initial_force.direction();
        [dv * d[0], 0.0, dv * d[2]]
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.initial_force;
        let ok = self.mass > 0.0
            && self.characteristic_size > 0.0
            && (0.0..=1.0).contains(&self.restitution)
            && self.friction >= 0.0
            && self.drop_height >= 0.0
            && f.magnitude >= 0.0
            && (0.0..360.0).contains(&f.direction_deg)
            && self.initial_position.iter().all(|v| v.is_finite())
            && self.mass.is_finite()
            && self.characteristic_size.is_finite()
            && self.friction.is_finite()
            && f.magnitude.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "object '{}' violates parameter invariants",
                self.category_label
            )))
        }
    }
}

/// Pinhole camera. Pixel centers sit at integer coordinates; +v points down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    /// px
    pub focal_length: f64,
    /// px
    pub principal_point: [f64; 2],
    pub near: f64,
    pub far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub seed: u64,
    pub objects: Vec<ObjectSpec>,
    pub camera: CameraSpec,
    /// m/s², magnitude of downward gravity
    pub gravity: f64,
    pub frame_count: usize,
    pub fps: f64,
    /// [width, height]
    pub resolution: [u32; 2],
    pub prompt: String,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        for o in &self.objects {
            o.validate()?;
        }
        if self.objects.len() > 254 {
            return Err(Error::Config("at most 254 objects fit in an 8-bit mask".into()));
        }
        if self.frame_count < 2 {
            return Err(Error::Config("frame_count must be >= 2".into()));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) || !self.gravity.is_finite() {
            return Err(Error::Config("fps must be > 0 and gravity finite".into()));
        }
        if self.resolution[0] == 0 || self.resolution[1] == 0 {
            return Err(Error::Config("resolution components must be > 0".into()));
        }
        let c = &self.camera;
        if !(c.focal_length > 0.0 && c.near > 0.0 && c.near < c.far) {
            return Err(Error::Config("camera needs f > 0 and 0 < near < far".into()));
        }
        Ok(())
    }

    /// Clip duration in seconds, first to last frame.
    pub fn duration(&self) -> f64 {
        (self.frame_count - 1) as f64 / self.fps
    }
}

struct BallCategory {
    label: &'static str,
    mass: (f64, f64),
    diameter: (f64, f64),
}

const BALLS: [BallCategory; 6] = [
    BallCategory { label: "basketball", mass: (0.567, 0.650), diameter: (0.235, 0.245) },
    BallCategory { label: "soccer ball", mass: (0.410, 0.450), diameter: (0.215, 0.225) },
    BallCategory { label: "tennis ball", mass: (0.056, 0.059), diameter: (0.065, 0.069) },
    BallCategory { label: "bowling ball", mass: (4.5, 7.26), diameter: (0.216, 0.218) },
    BallCategory { label: "volleyball", mass: (0.260, 0.280), diameter: (0.205, 0.215) },
    BallCategory { label: "baseball", mass: (0.142, 0.149), diameter: (0.073, 0.075) },
];

const MATERIALS: [&str; 4] = ["wooden", "plastic", "rubber", "metal"];

const PALETTE: [([u8; 3], &str); 8] = [
    ([220, 60, 50], "red"),
    ([240, 150, 40], "orange"),
    ([235, 210, 60], "yellow"),
    ([70, 170, 80], "green"),
    ([60, 120, 220], "blue"),
    ([150, 80, 200], "purple"),
    ([240, 240, 240], "white"),
    ([110, 75, 50], "brown"),
];

pub fn color_name(color: [u8; 3]) -> &'static str {
    PALETTE
        .iter()
        .find(|(c, _)| *c == color)
        .map(|(_, n)| *n)
        .unwrap_or("colored")
}

fn uniform(rng: &mut ChaCha8Rng, r: Range) -> f64 {
    let x = if r.min == r.max {
        r.min
    } else {
        rng.random_range(r.min..=r.max)
    };
    sig9(x).clamp(r.min, r.max)
}

/// Samples inside the intersection of a nominal interval and the preset
/// range, falling back to the preset range when they do not overlap.
fn uniform_within(rng: &mut ChaCha8Rng, nominal: (f64, f64), r: Range) -> f64 {
    let lo = nominal.0.max(r.min);
    let hi = nominal.1.min(r.max);
    if lo <= hi {
        uniform(rng, Range::new(lo, hi))
    } else {
        uniform(rng, r)
    }
}

fn sample_object(rng: &mut ChaCha8Rng, preset: &SamplingPreset) -> ObjectSpec {
    let shape_kind = preset.shapes[rng.random_range(0..preset.shapes.len())];
    let (category_label, mass, characteristic_size) = match shape_kind {
        ShapeKind::Sphere => {
            let ball = &BALLS[rng.random_range(0..BALLS.len())];
            let mass = uniform_within(rng, ball.mass, preset.mass);
            let size = uniform_within(rng, ball.diameter, preset.size);
            (ball.label.to_string(), mass, size)
        }
        other => {
            let material = MATERIALS[rng.random_range(0..MATERIALS.len())];
            let noun = match other {
                ShapeKind::Box => "cube",
                ShapeKind::Cylinder => "cylinder",
                ShapeKind::Cone => "cone",
                _ => "icosphere",
            };
            let mass = uniform(rng, preset.mass);
            let size = uniform(rng, preset.size);
            (format!("{material} {noun}"), mass, size)
        }
    };
    let restitution = uniform(rng, preset.restitution);
    let friction = uniform(rng, preset.friction);
    let magnitude = uniform(rng, preset.force);
    let mut direction_deg = sig9(rng.random_range(0.0..360.0));
    if direction_deg >= 360.0 {
        direction_deg = 0.0;
    }
    let drop_height = uniform(rng, preset.drop_height);
    let color = PALETTE[rng.random_range(0..PALETTE.len())].0;
    ObjectSpec {
        shape_kind,
        category_label,
        mass,
        characteristic_size,
        restitution,
        friction,
        initial_position: [0.0; 3],
        initial_force: InitialForce {
            magnitude,
            direction_deg,
        },
        drop_height,
        color,
    }
}

/// Places objects in the spawn disk, rejecting horizontal overlaps.
fn place_objects(rng: &mut ChaCha8Rng, objects: &mut [ObjectSpec], radius: f64) {
    const ATTEMPTS: usize = 64;
    for i in 0..objects.len() {
        let r_i = objects[i].bounding_radius();
        let mut xz = [0.0, 0.0];
        for _ in 0..ATTEMPTS {
            let rho = radius * rng.random::<f64>().sqrt();
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            xz = [sig9(rho * phi.cos()), sig9(rho * phi.sin())];
            let clear = objects[..i].iter().all(|o| {
                let dx = o.initial_position[0] - xz[0];
                let dz = o.initial_position[2] - xz[1];
                (dx * dx + dz * dz).sqrt() > o.bounding_radius() + r_i
            });
            if clear {
                break;
            }
        }
        let o = &mut objects[i];
        let y = sig9(o.drop_height + o.collision_radius());
        o.initial_position = [xz[0], y, xz[1]];
    }
}

fn sample_camera(
    rng: &mut ChaCha8Rng,
    preset: &SamplingPreset,
    objects: &[ObjectSpec],
) -> CameraSpec {
    let n = objects.len().max(1) as f64;
    let mut centroid = [0.0; 3];
    for o in objects {
        for (c, p) in centroid.iter_mut().zip(o.initial_position) {
            *c += p / n;
        }
    }
    let look_at = [sig9(centroid[0]), sig9(0.5 * centroid[1]), sig9(centroid[2])];
    let elevation = uniform(rng, preset.camera_elevation_deg).to_radians();
    let azimuth = uniform(rng, preset.camera_azimuth_deg).to_radians();
    let distance = uniform(rng, preset.camera_distance);
    let fov = uniform(rng, preset.fov_deg).to_radians();
    let position = [
        sig9(look_at[0] + distance * elevation.cos() * azimuth.cos()),
        sig9(look_at[1] + distance * elevation.sin()),
        sig9(look_at[2] + distance * elevation.cos() * azimuth.sin()),
    ];
    let [w, h] = preset.resolution;
    CameraSpec {
        position,
        look_at,
        focal_length: sig9(0.5 * w as f64 / (0.5 * fov).tan()),
        principal_point: [0.5 * (w as f64 - 1.0), 0.5 * (h as f64 - 1.0)],
        near: preset.near,
        far: preset.far,
    }
}

/// Samples a complete scene. A pure function of `(seed, preset)`.
pub fn sample_scene(seed: u64, preset: &SamplingPreset) -> Result<SceneConfig> {
    preset.validate()?;
    if preset.force.max <= 0.0 {
        return Err(Error::Config(
            "force range must allow a nonzero push (force.max > 0)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(preset.object_count.min..=preset.object_count.max);
    let mut objects: Vec<ObjectSpec> = (0..count).map(|_| sample_object(&mut rng, preset)).collect();
    if objects.iter().all(|o| o.initial_force.magnitude == 0.0) {
        let k = rng.random_range(0..objects.len());
        objects[k].initial_force.magnitude = preset.force.max;
    }
    place_objects(&mut rng, &mut objects, preset.spawn_radius);
    let camera = sample_camera(&mut rng, preset, &objects);
    let mut config = SceneConfig {
        seed,
        objects,
        camera,
        gravity: preset.gravity,
        frame_count: preset.frame_count,
        fps: preset.fps,
        resolution: preset.resolution,
        prompt: String::new(),
    };
    config.prompt = render_prompt(&config);
    Ok(config)
}

/// True when some pair of objects, moving on straight horizontal lines at
/// their push velocities for the clip duration, comes within the sum of
/// their bounding radii.
pub fn has_ballistic_near_miss(config: &SceneConfig) -> bool {
    let t_end = config.duration();
    let objs = &config.objects;
    for i in 0..objs.len() {
        for j in (i + 1)..objs.len() {
            let (a, b) = (&objs[i], &objs[j]);
            let va = a.push_velocity(config.fps);
            let vb = b.push_velocity(config.fps);
            let p = [
                b.initial_position[0] - a.initial_position[0],
                b.initial_position[2] - a.initial_position[2],
            ];
            let v = [vb[0] - va[0], vb[2] - va[2]];
            let vv = v[0] * v[0] + v[1] * v[1];
            let t = if vv > 0.0 {
                (-(p[0] * v[0] + p[1] * v[1]) / vv).clamp(0.0, t_end)
            } else {
                0.0
            };
            let d = ((p[0] + v[0] * t).powi(2) + (p[1] + v[1] * t).powi(2)).sqrt();
            if d <= a.bounding_radius() + b.bounding_radius() {
                return true;
            }
        }
    }
    false
}
