use nalgebra::{UnitQuaternion, Vector3};

use super::camera::View;
use super::mesh::Mesh;
use super::FrameSet;
use crate::scene::{CameraSpec, ShapeKind};

/// Ambient term of the Lambertian shading.
pub const AMBIENT: f64 = 0.25;
/// Direction toward the light, world frame.
pub const LIGHT_DIR: [f64; 3] = [0.35, 0.85, 0.4];
pub const BACKGROUND_RGB: [u8; 3] = [186, 200, 214];
pub const GROUND_RGB: [u8; 3] = [140, 138, 132];
/// m, half size of the rendered ground square
pub const GROUND_HALF_SIZE: f64 = 60.0;

/// One object posed for rendering.
#[derive(Debug, Clone)]
pub struct RenderObject {
    pub id: u8,
    pub shape: ShapeKind,
    pub size: f64,
    pub color: [u8; 3],
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

pub(crate) struct Target<'a> {
    pub frame: &'a mut FrameSet,
    pub camera: &'a CameraSpec,
    pub view: View,
    pub light: Vector3<f64>,
}

fn shade(color: [u8; 3], normal_cam: &Vector3<f64>, light_cam: &Vector3<f64>) -> [u8; 3] {
    let k = AMBIENT + (1.0 - AMBIENT) * normal_cam.dot(light_cam).max(0.0);
    color.map(|c| (c as f64 * k).round().clamp(0.0, 255.0) as u8)
}

impl Target<'_> {
    fn write(&mut self, x: usize, y: usize, z: f64, id: u8, rgb: [u8; 3]) {
        let idx = y * self.frame.width + x;
        let z32 = z as f32;
        if z > self.camera.near && z < self.camera.far && z32 < self.frame.depth[idx] {
            self.frame.depth[idx] = z32;
            self.frame.mask[idx] = id;
            self.frame.rgb[3 * idx..3 * idx + 3].copy_from_slice(&rgb);
        }
    }

    /// Exact ray-sphere rasterization with planar depth.
    pub fn sphere(&mut self, center_world: &Vector3<f64>, radius: f64, id: u8, color: [u8; 3]) {
        let c = self.view.to_camera(center_world);
        let cc = c.norm_squared() - radius * radius;
        if cc <= 0.0 || c.z + radius <= self.camera.near {
            return;
        }
        let f = self.camera.focal_length;
        let [px, py] = self.camera.principal_point;
        let (w, h) = (self.frame.width as f64, self.frame.height as f64);
        // Conservative pixel bounds from the bounding box in camera space.
        let (mut u0, mut u1, mut v0, mut v1) = (0.0f64, w - 1.0, 0.0f64, h - 1.0);
        let z_min = c.z - radius;
        if z_min > self.camera.near {
            let us = [(c.x - radius) / z_min, (c.x + radius) / z_min, (c.x - radius) / (c.z + radius), (c.x + radius) / (c.z + radius)];
            let vs = [(c.y - radius) / z_min, (c.y + radius) / z_min, (c.y - radius) / (c.z + radius), (c.y + radius) / (c.z + radius)];
            let fold = |a: &[f64; 4], lo: bool| {
                a.iter()
                    .copied()
                    .fold(if lo { f64::INFINITY } else { f64::NEG_INFINITY }, if lo { f64::min } else { f64::max })
            };
            u0 = u0.max((f * fold(&us, true) + px).floor());
            u1 = u1.min((f * fold(&us, false) + px).ceil());
            v0 = v0.max((f * fold(&vs, true) + py).floor());
            v1 = v1.min((f * fold(&vs, false) + py).ceil());
        }
        if u0 > u1 || v0 > v1 {
            return;
        }
        for y in v0 as usize..=v1 as usize {
            for x in u0 as usize..=u1 as usize {
                let d = Vector3::new((x as f64 - px) / f, (y as f64 - py) / f, 1.0);
                let dd = d.norm_squared();
                let dc = d.dot(&c);
                let disc = dc * dc - dd * cc;
                if disc < 0.0 {
                    continue;
                }
                let t = (dc - disc.sqrt()) / dd;
                let n = (d * t - c) / radius;
                let rgb = shade(color, &n, &self.light);
                self.write(x, y, t, id, rgb);
            }
        }
    }

    /// Rasterizes a camera-space triangle after near-plane clipping.
    fn triangle(&mut self, tri: [Vector3<f64>; 3], id: u8, rgb: [u8; 3]) {
        let near = self.camera.near;
        let inside: Vec<bool> = tri.iter().map(|p| p.z > near).collect();
        let count = inside.iter().filter(|&&b| b).count();
        if count == 0 {
            return;
        }
        if count == 3 {
            self.raster(tri, id, rgb);
            return;
        }
        // Sutherland-Hodgman against z = near.
        let mut poly = Vec::with_capacity(4);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let (ia, ib) = (a.z > near, b.z > near);
            if ia {
                poly.push(a);
            }
            if ia != ib {
                let s = (near - a.z) / (b.z - a.z);
                let mut p = a + (b - a) * s;
                p.z = near * (1.0 + 1e-12);
                poly.push(p);
            }
        }
        for k in 1..poly.len() - 1 {
            self.raster([poly[0], poly[k], poly[k + 1]], id, rgb);
        }
    }

    fn raster(&mut self, tri: [Vector3<f64>; 3], id: u8, rgb: [u8; 3]) {
        let f = self.camera.focal_length;
        let [px, py] = self.camera.principal_point;
        let s: Vec<[f64; 2]> = tri.iter().map(|p| [f * p.x / p.z + px, f * p.y / p.z + py]).collect();
        let area = (s[1][0] - s[0][0]) * (s[2][1] - s[0][1]) - (s[1][1] - s[0][1]) * (s[2][0] - s[0][0]);
        if area.abs() < 1e-12 {
            return;
        }
        let (w, h) = (self.frame.width as f64, self.frame.height as f64);
        let x0 = s.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min).ceil().max(0.0);
        let x1 = s.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max).floor().min(w - 1.0);
        let y0 = s.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min).ceil().max(0.0);
        let y1 = s.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max).floor().min(h - 1.0);
        if x0 > x1 || y0 > y1 {
            return;
        }
        let inv_z = [1.0 / tri[0].z, 1.0 / tri[1].z, 1.0 / tri[2].z];
        let edge = |a: [f64; 2], b: [f64; 2], x: f64, y: f64| (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
        for y in y0 as usize..=y1 as usize {
            for x in x0 as usize..=x1 as usize {
                let (fx, fy) = (x as f64, y as f64);
                let w0 = edge(s[1], s[2], fx, fy) / area;
                let w1 = edge(s[2], s[0], fx, fy) / area;
                let w2 = edge(s[0], s[1], fx, fy) / area;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                // 1/z is affine in screen space.
                let z = 1.0 / (w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2]);
                self.write(x, y, z, id, rgb);
            }
        }
    }

    pub fn mesh(&mut self, mesh: &Mesh, obj: &RenderObject) {
        let verts: Vec<Vector3<f64>> = mesh
            .vertices
            .iter()
            .map(|v| self.view.to_camera(&(obj.position + obj.orientation * (v * obj.size))))
            .collect();
        for t in &mesh.triangles {
            let tri = t.map(|i| verts[i]);
            let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
            // Back-face culling: camera sits at the origin.
            if n.dot(&tri[0]) >= 0.0 {
                continue;
            }
            let rgb = shade(obj.color, &n.normalize(), &self.light);
            self.triangle(tri, obj.id, rgb);
        }
    }

    /// Double-sided ground square at y = 0, written with id 0.
    pub fn ground(&mut self, center: [f64; 3]) {
        let g = GROUND_HALF_SIZE;
        let corners = [(-g, -g), (g, -g), (g, g), (-g, g)]
            .map(|(dx, dz)| self.view.to_camera(&Vector3::new(center[0] + dx, 0.0, center[2] + dz)));
        let up = self.view.direction_to_camera(&Vector3::y());
        let rgb = shade(GROUND_RGB, &up, &self.light);
        self.triangle([corners[0], corners[1], corners[2]], 0, rgb);
        self.triangle([corners[0], corners[2], corners[3]], 0, rgb);
    }
}
