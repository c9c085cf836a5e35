//! Unit-size triangle meshes centered at the body origin.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::scene::ShapeKind;

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Outward (counter-clockwise seen from outside) winding.
    pub triangles: Vec<[usize; 3]>,
}

const SEGMENTS: usize = 32;

impl Mesh {
    /// Mesh for a shape with characteristic size 1. `None` for spheres,
    /// which are rendered analytically.
    pub fn for_shape(shape: ShapeKind) -> Option<Mesh> {
        let mut m = match shape {
            ShapeKind::Sphere => return None,
            ShapeKind::Icosphere => icosphere(2, 0.5),
            ShapeKind::Box => cube(),
            ShapeKind::Cylinder => lathe(0.5, 0.5),
            ShapeKind::Cone => lathe(0.5, 0.0),
        };
        m.orient_outward();
        Some(m)
    }

    /// Flips triangles whose normal points toward the origin. Valid for
    /// convex meshes containing the origin.
    fn orient_outward(&mut self) {
        for t in &mut self.triangles {
            let [a, b, c] = t.map(|i| self.vertices[i]);
            let n = (b - a).cross(&(c - a));
            if n.dot(&(a + b + c)) < 0.0 {
                t.swap(1, 2);
            }
        }
    }
}

fn cube() -> Mesh {
    let h = 0.5;
    let vertices = (0..8)
        .map(|i| {
            Vector3::new(
                if i & 1 == 0 { -h } else { h },
                if i & 2 == 0 { -h } else { h },
                if i & 4 == 0 { -h } else { h },
            )
        })
        .collect();
    let quads = [[0, 1, 3, 2], [4, 6, 7, 5], [0, 4, 5, 1], [2, 3, 7, 6], [0, 2, 6, 4], [1, 5, 7, 3]];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    Mesh { vertices, triangles }
}

/// Cylinder (`top_radius == bottom_radius`) or cone (`top_radius == 0`),
/// unit height, centered at mid-height.
fn lathe(bottom_radius: f64, top_radius: f64) -> Mesh {
    let mut vertices = Vec::new();
    let ring = |vs: &mut Vec<Vector3<f64>>, r: f64, y: f64| {
        let start = vs.len();
        for k in 0..SEGMENTS {
            let a = std::f64::consts::TAU * k as f64 / SEGMENTS as f64;
            vs.push(Vector3::new(r * a.cos(), y, r * a.sin()));
        }
        start
    };
    let bottom = ring(&mut vertices, bottom_radius, -0.5);
    let bottom_center = vertices.len();
    vertices.push(Vector3::new(0.0, -0.5, 0.0));
    let mut triangles = Vec::new();
    if top_radius > 0.0 {
        let top = ring(&mut vertices, top_radius, 0.5);
        let top_center = vertices.len();
        vertices.push(Vector3::new(0.0, 0.5, 0.0));
        for k in 0..SEGMENTS {
            let n = (k + 1) % SEGMENTS;
            triangles.push([bottom + k, top + k, top + n]);
            triangles.push([bottom + k, top + n, bottom + n]);
            triangles.push([top_center, top + n, top + k]);
        }
    } else {
        let apex = vertices.len();
        vertices.push(Vector3::new(0.0, 0.5, 0.0));
        for k in 0..SEGMENTS {
            triangles.push([bottom + k, apex, bottom + (k + 1) % SEGMENTS]);
        }
    }
    for k in 0..SEGMENTS {
        triangles.push([bottom_center, bottom + k, bottom + (k + 1) % SEGMENTS]);
    }
    Mesh { vertices, triangles }
}

fn icosphere(subdivisions: usize, radius: f64) -> Mesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, phi, 0.0), (1.0, phi, 0.0), (-1.0, -phi, 0.0), (1.0, -phi, 0.0),
        (0.0, -1.0, phi), (0.0, 1.0, phi), (0.0, -1.0, -phi), (0.0, 1.0, -phi),
        (phi, 0.0, -1.0), (phi, 0.0, 1.0), (-phi, 0.0, -1.0), (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vs: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vs.push(((vs[a] + vs[b]) * 0.5).normalize());
                vs.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    Mesh { vertices, triangles }
}
