//! Scene builders shared by unit tests.

use crate::scene::{CameraSpec, InitialForce, ObjectSpec, SceneConfig, ShapeKind};

pub const G: f64 = 9.81;

pub fn ball(y: f64, e: f64, mu: f64) -> ObjectSpec {
    ObjectSpec {
        shape_kind: ShapeKind::Sphere,
        category_label: "ball".into(),
        mass: 0.5,
        characteristic_size: 0.2,
        restitution: e,
        friction: mu,
        initial_position: [0.0, y, 0.0],
        initial_force: InitialForce::NONE,
        drop_height: y - 0.1,
        color: [200, 200, 200],
    }
}

pub fn scene(objects: Vec<ObjectSpec>, frames: usize) -> SceneConfig {
    SceneConfig {
        seed: 0,
        objects,
        camera: CameraSpec {
            position: [0.0, 1.0, 6.0],
            look_at: [0.0, 1.0, 0.0],
            focal_length: 500.0,
            principal_point: [255.5, 255.5],
            near: 0.05,
            far: 100.0,
        },
        gravity: G,
        frame_count: frames,
        fps: 24.0,
        resolution: [512, 512],
        prompt: String::new(),
    }
}

