//! Closed-form pinhole kinematics and projectile motion.
//!
//! Camera coordinates follow the renderer: +x right, +y down, +z forward.
//! A world-space upward acceleration therefore shows up as negative ÿ and
//! negative v̈; pixel tracks from `pis` use the same downward v axis, so
//! their a_y of a falling object is positive.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Point state up to second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics3D {
    /// m
    pub position: [f64; 3],
    /// m/s
    pub velocity: [f64; 3],
    /// m/s²
    pub acceleration: [f64; 3],
}

/// Image-plane velocity and acceleration, px/s and px/s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedKinematics {
    pub u_dot: f64,
    pub v_dot: f64,
    pub u_ddot: f64,
    pub v_ddot: f64,
}

impl Kinematics3D {
    pub fn at_rest(position: [f64; 3]) -> Self {
        Kinematics3D {
            position,
            velocity: [0.0; 3],
            acceleration: [0.0; 3],
        }
    }

    /// Places in-plane motion (x right, y up) at camera depth `depth` facing
    /// the camera: y is flipped to point down, z is constant.
    pub fn fronto_parallel(self, depth: f64) -> Self {
        let flip = |v: [f64; 3]| [v[0], -v[1], 0.0];
        let mut position = flip(self.position);
        position[2] = depth;
        Kinematics3D {
            position,
            velocity: flip(self.velocity),
            acceleration: flip(self.acceleration),
        }
    }
}

/// Image position relative to the principal point: (f·x/z, f·y/z).
pub fn project_position(k: &Kinematics3D, f: f64) -> Result<[f64; 2]> {
    let [x, y, z] = k.position;
    if !(z > 0.0) {
        return Err(Error::BehindCamera { z, near: 0.0 });
    }
    Ok([f * x / z, f * y / z])
}

/// First and second time derivatives of u = f·x/z and v = f·y/z:
///
/// u̇ = (f/z)(ẋ − (x/z)ż)
/// ü = (f/z)(ẍ − (x/z)z̈) − (2f/z²)(żẋ − (x/z)ż²)
///
/// and likewise for v with y in place of x.
pub fn project_kinematics(k: &Kinematics3D, f: f64) -> Result<ProjectedKinematics> {
    let [x, y, z] = k.position;
    if !(z > 0.0) {
        return Err(Error::BehindCamera { z, near: 0.0 });
    }
    let [xd, yd, zd] = k.velocity;
    let [xdd, ydd, zdd] = k.acceleration;
    let rate = |p: f64, pd: f64| f / z * (pd - p / z * zd);
    let accel = |p: f64, pd: f64, pdd: f64| {
        f / z * (pdd - p / z * zdd) - 2.0 * f / (z * z) * (zd * pd - p / z * zd * zd)
    };
    Ok(ProjectedKinematics {
        u_dot: rate(x, xd),
        v_dot: rate(y, yd),
        u_ddot: accel(x, xd, xdd),
        v_ddot: accel(y, yd, ydd),
    })
}

/// Projectile launched from the origin of a vertical plane (x horizontal,
/// y up, z = 0) with speed `v0` at angle `theta` above horizontal.
pub fn projectile_state(v0: f64, theta: f64, g: f64, t: f64) -> Kinematics3D {
    let (vx, vy) = (v0 * theta.cos(), v0 * theta.sin());
    Kinematics3D {
        position: [vx * t, vy * t - 0.5 * g * t * t, 0.0],
        velocity: [vx, vy - g * t, 0.0],
        acceleration: [0.0, -g, 0.0],
    }
}

/// Time at which the vertical velocity vanishes.
pub fn apex_time(v0: f64, theta: f64, g: f64) -> f64 {
    v0 * theta.sin() / g
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Polynomial trajectory p(t) = p0 + v0 t + ½ a t² + ⅙ j t³.
    fn trajectory(p0: [f64; 3], v0: [f64; 3], a0: [f64; 3], j: [f64; 3], t: f64) -> [f64; 3] {
        std::array::from_fn(|i| p0[i] + v0[i] * t + 0.5 * a0[i] * t * t + j[i] * t * t * t / 6.0)
    }

    fn uv(p: [f64; 3], f: f64) -> [f64; 2] {
        [f * p[0] / p[2], f * p[1] / p[2]]
    }

    #[test]
    fn fronto_parallel_reduces_to_scaling() {
        let k = Kinematics3D {
            position: [0.4, -0.2, 5.0],
            velocity: [1.5, -2.0, 0.0],
            acceleration: [0.3, 9.81, 0.0],
        };
        let p = project_kinematics(&k, 500.0).unwrap();
        assert_eq!(p.u_dot, 500.0 * 1.5 / 5.0);
        assert_eq!(p.u_ddot, 500.0 * 0.3 / 5.0);
        assert_eq!(p.v_dot, 500.0 * -2.0 / 5.0);
        assert_eq!(p.v_ddot, 500.0 * 9.81 / 5.0);
    }

    #[test]
    fn static_point_is_still() {
        let p = project_kinematics(&Kinematics3D::at_rest([1.0, 2.0, 3.0]), 300.0).unwrap();
        assert_eq!([p.u_dot, p.v_dot, p.u_ddot, p.v_ddot], [0.0; 4]);
    }

    #[test]
    fn rejects_nonpositive_depth() {
        assert!(project_kinematics(&Kinematics3D::at_rest([0.0, 0.0, 0.0]), 1.0).is_err());
        assert!(project_kinematics(&Kinematics3D::at_rest([0.0, 0.0, -1.0]), 1.0).is_err());
    }

    #[test]
    fn projectile_closed_forms() {
        let (v0, th, g) = (7.0, 0.6, 9.81);
        let k = projectile_state(v0, th, g, 0.0);
        assert_eq!(k.velocity[..2], [v0 * th.cos(), v0 * th.sin()]);
        assert_eq!(k.acceleration[..2], [0.0, -g]);
        let t = apex_time(v0, th, g);
        assert!(projectile_state(v0, th, g, t).velocity[1].abs() < 1e-12);
    }

    #[test]
    fn projected_falling_object_accelerates_downward_in_pixels() {
        let k = projectile_state(3.0, 0.8, 9.81, 0.2).fronto_parallel(6.0);
        let p = project_kinematics(&k, 400.0).unwrap();
        assert!(p.v_ddot > 0.0);
        assert_eq!(p.u_ddot, 0.0);
    }

    proptest! {
        #[test]
        fn matches_finite_differences(
            p0 in prop::array::uniform3(-2.0f64..2.0),
            z0 in 3.0f64..9.0,
            v0 in prop::array::uniform3(-3.0f64..3.0),
            a0 in prop::array::uniform3(-10.0f64..10.0),
            j in prop::array::uniform3(-5.0f64..5.0),
            f in 100.0f64..800.0,
        ) {
            let p0 = [p0[0], p0[1], z0];
            let h = 1e-5;
            let state = |t: f64| Kinematics3D {
                position: trajectory(p0, v0, a0, j, t),
                velocity: std::array::from_fn(|i| v0[i] + a0[i] * t + 0.5 * j[i] * t * t),
                acceleration: std::array::from_fn(|i| a0[i] + j[i] * t),
            };
            let at = |t: f64| uv(trajectory(p0, v0, a0, j, t), f);
            let rates = |t: f64| project_kinematics(&state(t), f).unwrap();
            let p = rates(0.0);
            let (m, pl) = (at(-h), at(h));
            let (rm, rp) = (rates(-h), rates(h));
            let fd = [
                (pl[0] - m[0]) / (2.0 * h),
                (pl[1] - m[1]) / (2.0 * h),
                (rp.u_dot - rm.u_dot) / (2.0 * h),
                (rp.v_dot - rm.v_dot) / (2.0 * h),
            ];
            let exact = [p.u_dot, p.v_dot, p.u_ddot, p.v_ddot];
            for (a, n) in exact.iter().zip(&fd) {
                prop_assert!((a - n).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {n}");
            }
        }

        #[test]
        fn fronto_parallel_preserves_acceleration_sign(
            pos in prop::array::uniform2(-2.0f64..2.0),
            vel in prop::array::uniform2(-3.0f64..3.0),
            acc in prop::array::uniform2(-10.0f64..10.0),
            z in 1.0f64..10.0,
            f in 50.0f64..900.0,
        ) {
            let k = Kinematics3D {
                position: [pos[0], pos[1], z],
                velocity: [vel[0], vel[1], 0.0],
                acceleration: [acc[0], acc[1], 0.0],
            };
            let p = project_kinematics(&k, f).unwrap();
            prop_assert_eq!(p.u_ddot.signum(), acc[0].signum());
            prop_assert_eq!(p.v_ddot.signum(), acc[1].signum());
        }

        #[test]
        fn doubling_focal_length_doubles_outputs(
            pos in prop::array::uniform3(0.5f64..4.0),
            vel in prop::array::uniform3(-3.0f64..3.0),
            acc in prop::array::uniform3(-10.0f64..10.0),
            f in 50.0f64..900.0,
        ) {
            let k = Kinematics3D { position: pos, velocity: vel, acceleration: acc };
            let a = project_kinematics(&k, f).unwrap();
            let b = project_kinematics(&k, 2.0 * f).unwrap();
            prop_assert_eq!([b.u_dot, b.v_dot, b.u_ddot, b.v_ddot], [2.0 * a.u_dot, 2.0 * a.v_dot, 2.0 * a.u_ddot, 2.0 * a.v_ddot]);
        }

        #[test]
        fn general_motion_stays_bounded(
            pos in prop::array::uniform3(-2.0f64..2.0),
            vel in prop::array::uniform3(-3.0f64..3.0),
            acc in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let k = Kinematics3D { position: [pos[0], pos[1], pos[2] + 5.0], velocity: vel, acceleration: acc };
            let p = project_kinematics(&k, 500.0).unwrap();
            let bound = 500.0 / 3.0 * (10.0 + 2.0 / 3.0 * 10.0) + 2.0 * 500.0 / 9.0 * (9.0 + 2.0 / 3.0 * 9.0);
            prop_assert!(p.u_ddot.abs() <= bound && p.v_ddot.abs() <= bound);
        }
    }
}
