//! Software rasterizer for a pinhole camera. Each frame yields color, planar
//! depth and an instance-id mask.

pub mod camera;
pub mod codec;
pub mod mesh;
mod raster;

use nalgebra::{UnitQuaternion, Vector3};

pub use camera::{project_camera_point, project_point, View};
pub use raster::{RenderObject, AMBIENT, BACKGROUND_RGB, GROUND_RGB, LIGHT_DIR};

use crate::scene::{CameraSpec, SceneConfig, ShapeKind};
use crate::sim::Trajectory;
use crate::{Error, Result};
use mesh::Mesh;
use raster::Target;

/// Pixel-aligned row-major frame buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub width: usize,
    pub height: usize,
    /// 3 bytes per pixel
    pub rgb: Vec<u8>,
    /// m, camera-space z; the camera's far value where nothing was hit
    pub depth: Vec<f32>,
    /// object index + 1; 0 for background and ground
    pub mask: Vec<u8>,
}

impl FrameSet {
    pub fn new(width: usize, height: usize, far: f64) -> Self {
        let n = width * height;
        FrameSet {
            width,
            height,
            rgb: BACKGROUND_RGB.repeat(n),
            depth: vec![far as f32; n],
            mask: vec![0; n],
        }
    }

    pub fn depth_at(&self, x: usize, y: usize) -> f32 {
        self.depth[y * self.width + x]
    }

    pub fn mask_at(&self, x: usize, y: usize) -> u8 {
        self.mask[y * self.width + x]
    }

    pub fn rgb_at(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Draw the ground plane (mask id 0, but it writes depth and color).
    pub ground: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { ground: true }
    }
}

/// Renders posed objects. Objects are drawn in order; the z-buffer decides
/// visibility.
pub fn render_objects(
    objects: &[RenderObject],
    camera: &CameraSpec,
    width: usize,
    height: usize,
    options: RenderOptions,
) -> Result<FrameSet> {
    let view = View::new(camera)?;
    let mut frame = FrameSet::new(width, height, camera.far);
    let light = view.direction_to_camera(&Vector3::from(LIGHT_DIR).normalize());
    let mut target = Target {
        frame: &mut frame,
        camera,
        view,
        light,
    };
    if options.ground {
        target.ground(camera.look_at);
    }
    for obj in objects {
        match Mesh::for_shape(obj.shape) {
            None => target.sphere(&obj.position, 0.5 * obj.size, obj.id, obj.color),
            Some(mesh) => target.mesh(&mesh, obj),
        }
    }
    Ok(frame)
}

/// Poses every object of `config` at trajectory frame `frame_index`.
pub fn posed_objects(config: &SceneConfig, trajectory: &Trajectory, frame_index: usize) -> Result<Vec<RenderObject>> {
    let states = trajectory.frames.get(frame_index).ok_or(Error::FrameOutOfRange {
        index: frame_index,
        len: trajectory.len(),
    })?;
    if states.len() != config.objects.len() {
        return Err(Error::Config(format!(
            "trajectory has {} bodies, scene has {} objects",
            states.len(),
            config.objects.len()
        )));
    }
    Ok(config
        .objects
        .iter()
        .zip(states)
        .enumerate()
        .map(|(k, (spec, s))| RenderObject {
            id: (k + 1) as u8,
            shape: spec.shape_kind,
            size: spec.characteristic_size,
            color: spec.color,
            position: s.position,
            orientation: s.orientation,
        })
        .collect())
}

pub fn render_frame(
    config: &SceneConfig,
    trajectory: &Trajectory,
    frame_index: usize,
    options: RenderOptions,
) -> Result<FrameSet> {
    let objects = posed_objects(config, trajectory, frame_index)?;
    let [w, h] = config.resolution;
    render_objects(&objects, &config.camera, w as usize, h as usize, options)
}

/// A sphere object at `position` with identity orientation.
pub fn sphere_object(id: u8, diameter: f64, position: [f64; 3]) -> RenderObject {
    RenderObject {
        id,
        shape: ShapeKind::Sphere,
        size: diameter,
        color: [200, 200, 200],
        position: Vector3::from(position),
        orientation: UnitQuaternion::identity(),
    }
}
