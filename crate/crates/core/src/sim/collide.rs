//! Narrow-phase contacts between shapes and against the ground plane.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

/// Collision geometry in body coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Collider {
    Sphere { radius: f64 },
    /// Cube with the given half edge length.
    Cube { half: f64 },
}

impl Collider {
    /// Radius of the enclosing sphere.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Collider::Sphere { radius } => radius,
            Collider::Cube { half } => half * 3f64.sqrt(),
        }
    }
}

/// Pose of a collider in world space.
#[derive(Debug, Clone, Copy)]
pub struct Placed {
    pub collider: Collider,
    pub center: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

/// One contact point. `normal` points from body b (or the ground) toward
/// body a; `gap` is the signed separation along it (negative = overlap).
#[derive(Debug, Clone, Copy)]
pub struct ContactPoint {
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub gap: f64,
}

fn cube_vertices(p: &Placed, half: f64) -> [Vector3<f64>; 8] {
    let r: Matrix3<f64> = p.rotation.to_rotation_matrix().into_inner();
    let mut out = [Vector3::zeros(); 8];
    for (i, v) in out.iter_mut().enumerate() {
        let s = Vector3::new(
            if i & 1 == 0 { -half } else { half },
            if i & 2 == 0 { -half } else { half },
            if i & 4 == 0 { -half } else { half },
        );
        *v = p.center + r * s;
    }
    out
}

/// Contacts between a placed collider and the ground plane y = 0.
pub fn against_ground(a: &Placed, margin: f64, out: &mut Vec<ContactPoint>) {
    let up = Vector3::y();
    match a.collider {
        Collider::Sphere { radius } => {
            let gap = a.center.y - radius;
            if gap < margin {
                out.push(ContactPoint {
                    point: a.center - up * radius,
                    normal: up,
                    gap,
                });
            }
        }
        Collider::Cube { half } => {
            for v in cube_vertices(a, half) {
                if v.y < margin {
                    out.push(ContactPoint {
                        point: v,
                        normal: up,
                        gap: v.y,
                    });
                }
            }
        }
    }
}

/// Signed distance to the ground (negative = penetration depth).
pub fn ground_gap(a: &Placed) -> f64 {
    match a.collider {
        Collider::Sphere { radius } => a.center.y - radius,
        Collider::Cube { half } => cube_vertices(a, half)
            .iter()
            .map(|v| v.y)
            .fold(f64::INFINITY, f64::min),
    }
}

/// Contacts between two placed colliders.
pub fn between(a: &Placed, b: &Placed, margin: f64, out: &mut Vec<ContactPoint>) {
    match (a.collider, b.collider) {
        (Collider::Sphere { radius: ra }, Collider::Sphere { radius: rb }) => {
            let d = a.center - b.center;
            let dist = d.norm();
            let gap = dist - ra - rb;
            if gap < margin {
                let normal = if dist > 1e-12 { d / dist } else { Vector3::y() };
                out.push(ContactPoint {
                    point: b.center + normal * (rb + 0.5 * gap),
                    normal,
                    gap,
                });
            }
        }
        (Collider::Sphere { radius }, Collider::Cube { half }) => {
            if let Some(c) = sphere_cube(a.center, radius, b, half) {
                if c.gap < margin {
                    out.push(c);
                }
            }
        }
        (Collider::Cube { .. }, Collider::Sphere { .. }) => {
            let start = out.len();
            between(b, a, margin, out);
            for c in &mut out[start..] {
                c.normal = -c.normal;
            }
        }
        (Collider::Cube { half: ha }, Collider::Cube { half: hb }) => {
            cube_cube(a, ha, b, hb, margin, out);
        }
    }
}

/// Signed separation between two colliders: exact for sphere pairs and
/// sphere-cube, separating-axis distance for cube pairs (exact when
/// overlapping, a lower bound otherwise).
pub fn pair_gap(a: &Placed, b: &Placed) -> f64 {
    match (a.collider, b.collider) {
        (Collider::Sphere { radius: ra }, Collider::Sphere { radius: rb }) => {
            (a.center - b.center).norm() - ra - rb
        }
        (Collider::Sphere { radius }, Collider::Cube { half }) => {
            sphere_cube(a.center, radius, b, half).map_or(f64::INFINITY, |c| c.gap)
        }
        (Collider::Cube { .. }, Collider::Sphere { .. }) => pair_gap(b, a),
        (Collider::Cube { half: ha }, Collider::Cube { half: hb }) => {
            sat(a, ha, b, hb).separation
        }
    }
}

/// Sphere (a) against cube (b); normal points from the cube to the sphere.
fn sphere_cube(center: Vector3<f64>, radius: f64, cube: &Placed, half: f64) -> Option<ContactPoint> {
    let local = cube.rotation.inverse_transform_vector(&(center - cube.center));
    let clamped = local.map(|x| x.clamp(-half, half));
    let inside = local.iter().all(|x| x.abs() <= half);
    if inside {
        let (k, depth) = (0..3)
            .map(|k| (k, half - local[k].abs()))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        let mut n_local = Vector3::zeros();
        n_local[k] = if local[k] >= 0.0 { 1.0 } else { -1.0 };
        let normal = cube.rotation.transform_vector(&n_local);
        Some(ContactPoint {
            point: center - normal * radius,
            normal,
            gap: -depth - radius,
        })
    } else {
        let diff = local - clamped;
        let dist = diff.norm();
        let normal = cube.rotation.transform_vector(&(diff / dist));
        Some(ContactPoint {
            point: cube.center + cube.rotation.transform_vector(&clamped),
            normal,
            gap: dist - radius,
        })
    }
}

enum Feature {
    FaceA,
    FaceB,
    Edge(usize, usize),
}

struct SatResult {
    separation: f64,
    /// Unit axis oriented from b toward a.
    normal: Vector3<f64>,
    feature: Feature,
}

fn sat(a: &Placed, ha: f64, b: &Placed, hb: f64) -> SatResult {
    let ra: Matrix3<f64> = a.rotation.to_rotation_matrix().into_inner();
    let rb: Matrix3<f64> = b.rotation.to_rotation_matrix().into_inner();
    let d = a.center - b.center;
    let axes_a: [Vector3<f64>; 3] = [ra.column(0).into(), ra.column(1).into(), ra.column(2).into()];
    let axes_b: [Vector3<f64>; 3] = [rb.column(0).into(), rb.column(1).into(), rb.column(2).into()];
    let separation_on = |l: &Vector3<f64>| {
        let pa: f64 = axes_a.iter().map(|x| x.dot(l).abs()).sum::<f64>() * ha;
        let pb: f64 = axes_b.iter().map(|x| x.dot(l).abs()).sum::<f64>() * hb;
        d.dot(l).abs() - pa - pb
    };
    let mut best = SatResult {
        separation: f64::NEG_INFINITY,
        normal: Vector3::y(),
        feature: Feature::FaceA,
    };
    let mut consider = |l: Vector3<f64>, feature: Feature, bias: f64| {
        let s = separation_on(&l);
        if s > best.separation + bias {
            let normal = if d.dot(&l) < 0.0 { -l } else { l };
            best = SatResult {
                separation: s,
                normal,
                feature,
            };
        }
    };
    for l in &axes_a {
        consider(*l, Feature::FaceA, 0.0);
    }
    for l in &axes_b {
        consider(*l, Feature::FaceB, 1e-9);
    }
    // Edge axes must beat face axes clearly to be chosen.
    let edge_bias = 1e-5 * (ha + hb);
    for i in 0..3 {
        for j in 0..3 {
            let c = axes_a[i].cross(&axes_b[j]);
            let n = c.norm();
            if n > 1e-6 {
                consider(c / n, Feature::Edge(i, j), edge_bias);
            }
        }
    }
    best
}

/// Vertices of `inc` lying against the face of `reference` whose outward
/// normal is `face_n`. Emits contacts with the given contact normal.
#[allow(clippy::too_many_arguments)]
fn face_contacts(
    reference: &Placed,
    h_ref: f64,
    face_n: Vector3<f64>,
    inc: &Placed,
    h_inc: f64,
    contact_normal: Vector3<f64>,
    margin: f64,
    out: &mut Vec<ContactPoint>,
) {
    let r: Matrix3<f64> = reference.rotation.to_rotation_matrix().into_inner();
    let tol = 1e-6 + 1e-3 * h_ref;
    for v in cube_vertices(inc, h_inc) {
        let rel = v - reference.center;
        let gap = rel.dot(&face_n) - h_ref;
        if gap >= margin {
            continue;
        }
        let within = (0..3).all(|k| {
            let axis: Vector3<f64> = r.column(k).into();
            axis.dot(&face_n).abs() > 0.5 || rel.dot(&axis).abs() <= h_ref + tol
        });
        if within {
            out.push(ContactPoint {
                point: v,
                normal: contact_normal,
                gap,
            });
        }
    }
}

fn closest_between_segments(
    p1: Vector3<f64>,
    d1: Vector3<f64>,
    p2: Vector3<f64>,
    d2: Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    // Segments p + s d, s in [-1, 1].
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let b = d1.dot(&d2);
    let c = d1.dot(&r);
    let f = d2.dot(&r);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-14 {
        ((b * f - c * e) / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if !(-1.0..=1.0).contains(&t) {
        t = t.clamp(-1.0, 1.0);
        s = ((b * t - c) / a).clamp(-1.0, 1.0);
    }
    (p1 + d1 * s, p2 + d2 * t)
}

fn cube_cube(a: &Placed, ha: f64, b: &Placed, hb: f64, margin: f64, out: &mut Vec<ContactPoint>) {
    let res = sat(a, ha, b, hb);
    if res.separation >= margin {
        return;
    }
    let n = res.normal;
    let ra: Matrix3<f64> = a.rotation.to_rotation_matrix().into_inner();
    let rb: Matrix3<f64> = b.rotation.to_rotation_matrix().into_inner();
    match res.feature {
        Feature::FaceA | Feature::FaceB => {
            let parallel = |r: &Matrix3<f64>| (0..3).any(|k| r.column(k).dot(&n).abs() > 1.0 - 1e-6);
            let start = out.len();
            // b's vertices against a's face pointing toward b (-n)
            if matches!(res.feature, Feature::FaceA) || parallel(&ra) {
                face_contacts(a, ha, -n, b, hb, n, margin, out);
            }
            // a's vertices against b's face pointing toward a (+n)
            if matches!(res.feature, Feature::FaceB) || parallel(&rb) {
                face_contacts(b, hb, n, a, ha, n, margin, out);
            }
            if out.len() == start {
                // Corner grazing outside the face projection: use the
                // deepest vertex of the incident box.
                let (inc, h_inc, dir) = match res.feature {
                    Feature::FaceA => (b, hb, n),
                    _ => (a, ha, -n),
                };
                let deepest = cube_vertices(inc, h_inc)
                    .into_iter()
                    .min_by(|x, y| x.dot(&dir).total_cmp(&y.dot(&dir)).reverse());
                if let Some(v) = deepest {
                    out.push(ContactPoint {
                        point: v,
                        normal: n,
                        gap: res.separation,
                    });
                }
            }
        }
        Feature::Edge(i, j) => {
            let support = |p: &Placed, r: &Matrix3<f64>, h: f64, skip: usize, dir: Vector3<f64>| {
                let mut c = p.center;
                for k in 0..3 {
                    if k != skip {
                        let axis: Vector3<f64> = r.column(k).into();
                        c += axis * (h * axis.dot(&dir).signum());
                    }
                }
                let edge: Vector3<f64> = r.column(skip).into();
                (c, edge * h)
            };
            let (pa, da) = support(a, &ra, ha, i, -n);
            let (pb, db) = support(b, &rb, hb, j, n);
            let (qa, qb) = closest_between_segments(pa, da, pb, db);
            out.push(ContactPoint {
                point: 0.5 * (qa + qb),
                normal: n,
                gap: res.separation,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(c: [f64; 3], r: f64) -> Placed {
        Placed {
            collider: Collider::Sphere { radius: r },
            center: Vector3::from(c),
            rotation: UnitQuaternion::identity(),
        }
    }

    fn cube(c: [f64; 3], h: f64, rot: UnitQuaternion<f64>) -> Placed {
        Placed {
            collider: Collider::Cube { half: h },
            center: Vector3::from(c),
            rotation: rot,
        }
    }

    #[test]
    fn sphere_pair_gap_and_normal() {
        let mut out = Vec::new();
        between(&sphere([1.9, 0.0, 0.0], 1.0), &sphere([0.0; 3], 1.0), 0.0, &mut out);
        assert_eq!(out.len(), 1);
        assert!((out[0].gap + 0.1).abs() < 1e-12);
        assert!((out[0].normal - Vector3::x()).norm() < 1e-12);
    }

    #[test]
    fn resting_cube_touches_ground_with_four_corners() {
        let mut out = Vec::new();
        against_ground(&cube([0.0, 0.5, 0.0], 0.5, UnitQuaternion::identity()), 1e-3, &mut out);
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|c| c.gap.abs() < 1e-12));
    }

    #[test]
    fn sphere_against_cube_face_edge_and_inside() {
        let b = cube([0.0; 3], 1.0, UnitQuaternion::identity());
        // face
        let g = pair_gap(&sphere([1.5, 0.0, 0.0], 0.25), &b);
        assert!((g - 0.25).abs() < 1e-12);
        // edge region
        let g = pair_gap(&sphere([2.0, 2.0, 0.0], 0.5), &b);
        assert!((g - (2f64.sqrt() - 0.5)).abs() < 1e-12);
        // center inside, nearest face at distance 0.2
        let g = pair_gap(&sphere([0.8, 0.0, 0.0], 0.1), &b);
        assert!((g + 0.3).abs() < 1e-12);
        // normal points from the cube to the sphere either way round
        let mut out = Vec::new();
        between(&b, &sphere([1.05, 0.0, 0.0], 0.1), 0.0, &mut out);
        assert!((out[0].normal + Vector3::x()).norm() < 1e-12);
    }

    #[test]
    fn stacked_cubes_produce_face_manifold() {
        let a = cube([0.2, 1.99, 0.0], 1.0, UnitQuaternion::identity());
        let b = cube([0.0, 0.0, 0.0], 1.0, UnitQuaternion::identity());
        let mut out = Vec::new();
        between(&a, &b, 1e-3, &mut out);
        assert!(out.len() >= 4, "{}", out.len());
        for c in &out {
            assert!((c.normal - Vector3::y()).norm() < 1e-9);
            assert!((c.gap + 0.01).abs() < 1e-9);
        }
        assert!((pair_gap(&a, &b) + 0.01).abs() < 1e-12);
    }

    #[test]
    fn rotated_cube_edge_contact() {
        let rot = UnitQuaternion::from_euler_angles(0.0, 0.0, std::f64::consts::FRAC_PI_4)
            * UnitQuaternion::from_euler_angles(std::f64::consts::FRAC_PI_4, 0.0, 0.0);
        let b = cube([0.0; 3], 1.0, UnitQuaternion::identity());
        let a = cube([0.0, 2.0, 0.0], 1.0, rot);
        let g = pair_gap(&a, &b);
        let mut out = Vec::new();
        between(&a, &b, 1.0, &mut out);
        assert!(!out.is_empty());
        assert!(out.iter().all(|c| c.normal.y > 0.0));
        assert!(g < 1.0 && g > -1.0);
    }
}
