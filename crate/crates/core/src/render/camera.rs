use nalgebra::{Matrix3, Vector3};

use crate::scene::CameraSpec;
use crate::{Error, Result};

/// World-to-camera rigid transform. Camera axes: +x right, +y down,
/// +z forward (world +y is up).
#[derive(Debug, Clone, Copy)]
pub struct View {
    pub rotation: Matrix3<f64>,
    pub eye: Vector3<f64>,
}

impl View {
    pub fn new(camera: &CameraSpec) -> Result<Self> {
        let eye = Vector3::from(camera.position);
        let forward = Vector3::from(camera.look_at) - eye;
        let len = forward.norm();
        if !(len > 1e-12) {
            return Err(Error::Config("degenerate camera: position equals look_at".into()));
        }
        let forward = forward / len;
        let right = forward.cross(&Vector3::y());
        if right.norm() < 1e-9 {
            return Err(Error::Config("degenerate camera: view direction parallel to up".into()));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        Ok(View { rotation, eye })
    }

    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.eye)
    }

    pub fn direction_to_camera(&self, d: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * d
    }
}

/// Pinhole projection of a camera-space point: u = f·x/z + c_x, v = f·y/z + c_y.
pub fn project_camera_point(p: [f64; 3], camera: &CameraSpec) -> Result<[f64; 2]> {
    let [x, y, z] = p;
    if !(z > camera.near) {
        return Err(Error::BehindCamera { z, near: camera.near });
    }
    let f = camera.focal_length;
    let [cx, cy] = camera.principal_point;
    Ok([f * x / z + cx, f * y / z + cy])
}

/// Projects a world-space point to pixel coordinates.
pub fn project_point(p: [f64; 3], camera: &CameraSpec) -> Result<[f64; 2]> {
    let view = View::new(camera)?;
    let c = view.to_camera(&Vector3::from(p));
    project_camera_point([c.x, c.y, c.z], camera)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraSpec {
        CameraSpec {
            position: [0.0, 0.0, 0.0],
            look_at: [0.0, 0.0, 1.0],
            focal_length: 500.0,
            principal_point: [256.0, 256.0],
            near: 0.05,
            far: 100.0,
        }
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        assert_eq!(project_camera_point([0.0, 0.0, 3.0], &cam()).unwrap(), [256.0, 256.0]);
        assert_eq!(project_point([0.0, 0.0, 3.0], &cam()).unwrap(), [256.0, 256.0]);
    }

    #[test]
    fn arithmetic_example() {
        assert_eq!(project_camera_point([1.0, 0.0, 5.0], &cam()).unwrap(), [356.0, 256.0]);
    }

    #[test]
    fn doubling_depth_halves_offset() {
        let a = project_camera_point([0.4, -0.3, 2.0], &cam()).unwrap();
        let b = project_camera_point([0.4, -0.3, 4.0], &cam()).unwrap();
        assert!(((a[0] - 256.0) - 2.0 * (b[0] - 256.0)).abs() < 1e-12);
        assert!(((a[1] - 256.0) - 2.0 * (b[1] - 256.0)).abs() < 1e-12);
    }

    #[test]
    fn behind_camera_is_an_error() {
        assert!(matches!(
            project_camera_point([0.0, 0.0, 0.01], &cam()),
            Err(Error::BehindCamera { .. })
        ));
        assert!(project_point([0.0, 0.0, -1.0], &cam()).is_err());
    }

    #[test]
    fn world_up_projects_upward_in_the_image() {
        let c = CameraSpec {
            position: [0.0, 1.0, 5.0],
            look_at: [0.0, 1.0, 0.0],
            ..cam()
        };
        let lo = project_point([0.0, 0.5, 0.0], &c).unwrap();
        let hi = project_point([0.0, 1.5, 0.0], &c).unwrap();
        assert!(hi[1] < lo[1]);
        let right = project_point([1.0, 1.0, 0.0], &c).unwrap();
        assert!(right[0] > 256.0);
    }

    #[test]
    fn degenerate_camera_is_rejected() {
        let c = CameraSpec {
            look_at: [0.0, 0.0, 0.0],
            ..cam()
        };
        assert!(matches!(View::new(&c), Err(Error::Config(_))));
        let c = CameraSpec {
            look_at: [0.0, -3.0, 0.0],
            ..cam()
        };
        assert!(View::new(&c).is_err());
    }
}
