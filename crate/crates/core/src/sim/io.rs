//! Trajectory binary layout (all little-endian):
//!
//! ```text
//! magic     4 bytes  "KTRJ"
//! version   u32      1
//! frames    u32
//! bodies    u32
//! substeps  u32
//! dt        f64      seconds between frames
//! per body: inverse_mass f64, inverse_inertia 9 × f64 (row-major)
//! per frame, per body: position 3 × f64, orientation (w, i, j, k) 4 × f64,
//!                      linear_velocity 3 × f64, angular_velocity 3 × f64
//! ```

use std::path::Path;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use super::{BodyState, ContactEvent, Trajectory};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"KTRJ";
const VERSION: u32 = 1;
const MODALITY: &str = "trajectory";

pub fn trajectory_to_bytes(t: &Trajectory) -> Vec<u8> {
    let bodies = t.body_count();
    let mut out = Vec::with_capacity(28 + bodies * 80 + t.len() * bodies * 104);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, t.len() as u32, bodies as u32, t.substeps as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&t.dt.to_le_bytes());
    let put = |out: &mut Vec<u8>, x: f64| out.extend_from_slice(&x.to_le_bytes());
    if let Some(first) = t.frames.first() {
        for s in first {
            put(&mut out, s.inverse_mass);
            for r in 0..3 {
                for c in 0..3 {
                    put(&mut out, s.inverse_inertia[(r, c)]);
                }
            }
        }
    }
    for frame in &t.frames {
        for s in frame {
            s.position.iter().for_each(|&x| put(&mut out, x));
            let q = s.orientation.quaternion();
            [q.w, q.i, q.j, q.k].into_iter().for_each(|x| put(&mut out, x));
            s.linear_velocity.iter().for_each(|&x| put(&mut out, x));
            s.angular_velocity.iter().for_each(|&x| put(&mut out, x));
        }
    }
    out
}

pub fn trajectory_from_bytes(bytes: &[u8], path: &Path) -> Result<Trajectory> {
    let bad = |reason: &str| Error::format(path, MODALITY, reason);
    if bytes.len() < 28 || &bytes[..4] != MAGIC {
        return Err(bad("missing KTRJ header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    if u32_at(4) != VERSION {
        return Err(bad("unsupported version"));
    }
    let (frames, bodies, substeps) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    let expected = 28 + bodies * 80 + frames * bodies * 104;
    if bytes.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut cursor = 20;
    let mut next = || {
        let x = f64::from_le_bytes(bytes[cursor..cursor + 8].try_into().unwrap());
        cursor += 8;
        x
    };
    let dt = next();
    let mut mass_props = Vec::with_capacity(bodies);
    for _ in 0..bodies {
        let inv_m = next();
        let mut m = Matrix3::zeros();
        for r in 0..3 {
            for c in 0..3 {
                m[(r, c)] = next();
            }
        }
        mass_props.push((inv_m, m));
    }
    let mut all = Vec::with_capacity(frames);
    for _ in 0..frames {
        let mut frame = Vec::with_capacity(bodies);
        for &(inverse_mass, inverse_inertia) in &mass_props {
            let position = Vector3::new(next(), next(), next());
            let (w, i, j, k) = (next(), next(), next(), next());
            let linear_velocity = Vector3::new(next(), next(), next());
            let angular_velocity = Vector3::new(next(), next(), next());
            frame.push(BodyState {
                position,
                orientation: UnitQuaternion::new_unchecked(Quaternion::new(w, i, j, k)),
                linear_velocity,
                angular_velocity,
                inverse_mass,
                inverse_inertia,
            });
        }
        all.push(frame);
    }
    Ok(Trajectory {
        dt,
        substeps,
        frames: all,
        contact_events: Vec::new(),
    })
}

pub fn write_trajectory(t: &Trajectory, path: &Path) -> Result<()> {
    std::fs::write(path, trajectory_to_bytes(t)).map_err(|e| Error::io(path, e))
}

/// Reads the binary record; contact events live in the JSON sidecar.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    trajectory_from_bytes(&bytes, path)
}

pub fn write_contacts_json(events: &[ContactEvent], path: &Path) -> Result<()> {
    let mut value = serde_json::to_value(events)?;
    crate::numfmt::round_json(&mut value);
    let text = serde_json::to_string_pretty(&value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_contacts_json(path: &Path) -> Result<Vec<ContactEvent>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, "contacts", e.to_string()))
}
