use serde::{Deserialize, Serialize};
use std::path::Path;

use super::ShapeKind;
use crate::{Error, Result};

/// Closed interval `[min, max]`. `min == max` pins the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    fn check(&self, name: &str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config(format!("{name}: bounds must be finite")));
        }
        if self.min > self.max {
            return Err(Error::Config(format!(
                "{name}: empty range (min {} > max {})",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

/// Parameter ranges for [`super::sample_scene`].
///
/// Loaded from TOML; every field has a default so a preset file only needs
/// the keys it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingPreset {
    pub object_count: CountRange,
    /// kg
    pub mass: Range,
    /// m, diameter or edge length
    pub size: Range,
    /// N, applied as a one-frame horizontal impulse at t = 0
    pub force: Range,
    /// m, height of the object's lowest point above the ground
    pub drop_height: Range,
    pub restitution: Range,
    pub friction: Range,
    /// m, objects spawn inside this horizontal disk around the origin
    pub spawn_radius: f64,
    pub camera_elevation_deg: Range,
    pub camera_azimuth_deg: Range,
    /// m
    pub camera_distance: Range,
    /// Horizontal field of view.
    pub fov_deg: Range,
    pub near: f64,
    pub far: f64,
    pub shapes: Vec<ShapeKind>,
    /// m/s², magnitude, pointing down
    pub gravity: f64,
    pub frame_count: usize,
    pub fps: f64,
    pub resolution: [u32; 2],
}

impl Default for SamplingPreset {
    fn default() -> Self {
        SamplingPreset {
            object_count: CountRange { min: 3, max: 7 },
            mass: Range::new(0.05, 7.5),
            size: Range::new(0.04, 0.5),
            force: Range::new(0.0, 20.0),
            drop_height: Range::new(0.5, 4.0),
            restitution: Range::new(0.3, 0.9),
            friction: Range::new(0.1, 0.8),
            spawn_radius: 1.2,
            camera_elevation_deg: Range::new(10.0, 40.0),
            camera_azimuth_deg: Range::new(0.0, 360.0),
            camera_distance: Range::new(4.0, 8.0),
            fov_deg: Range::new(60.0, 60.0),
            near: 0.05,
            far: 100.0,
            shapes: ShapeKind::ALL.to_vec(),
            gravity: 9.81,
            frame_count: 90,
            fps: 24.0,
            resolution: [512, 512],
        }
    }
}

impl SamplingPreset {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let preset: SamplingPreset =
            toml::from_str(text).map_err(|e| Error::Config(format!("preset: {e}")))?;
        preset.validate()?;
        Ok(preset)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("preset serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("mass", self.mass),
            ("size", self.size),
            ("force", self.force),
            ("drop_height", self.drop_height),
            ("restitution", self.restitution),
            ("friction", self.friction),
            ("camera_elevation_deg", self.camera_elevation_deg),
            ("camera_azimuth_deg", self.camera_azimuth_deg),
            ("camera_distance", self.camera_distance),
            ("fov_deg", self.fov_deg),
        ];
        for (name, r) in ranges {
            r.check(name)?;
        }
        let positive = |name: &str, lo: f64| {
            if lo > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name}: lower bound must be > 0")))
            }
        };
        positive("mass", self.mass.min)?;
        positive("size", self.size.min)?;
        positive("camera_distance", self.camera_distance.min)?;
        positive("fov_deg", self.fov_deg.min)?;
        if self.force.min < 0.0 || self.drop_height.min < 0.0 || self.friction.min < 0.0 {
            return Err(Error::Config(
                "force, drop_height and friction must be non-negative".into(),
            ));
        }
        if self.restitution.min < 0.0 || self.restitution.max > 1.0 {
            return Err(Error::Config("restitution must lie in [0, 1]".into()));
        }
        if self.camera_elevation_deg.min < 0.0 || self.camera_elevation_deg.max >= 90.0 {
            return Err(Error::Config("camera elevation must lie in [0, 90)".into()));
        }
        if self.camera_azimuth_deg.min < 0.0 || self.camera_azimuth_deg.max > 360.0 {
            return Err(Error::Config("camera azimuth must lie in [0, 360]".into()));
        }
        if self.fov_deg.max >= 180.0 {
            return Err(Error::Config("fov must be < 180 degrees".into()));
        }
        if self.object_count.min < 1 || self.object_count.min > self.object_count.max {
            return Err(Error::Config(format!(
                "object_count: empty range ({}..={})",
                self.object_count.min, self.object_count.max
            )));
        }
        if self.object_count.max > 254 {
            return Err(Error::Config("object_count above 254 exceeds mask ids".into()));
        }
        if !(self.spawn_radius >= 0.0 && self.spawn_radius.is_finite()) {
            return Err(Error::Config("spawn_radius must be finite and >= 0".into()));
        }
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(Error::Config("need 0 < near < far".into()));
        }
        if self.shapes.is_empty() {
            return Err(Error::Config("shapes: empty list".into()));
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(Error::Config("gravity must be finite and >= 0".into()));
        }
        if self.frame_count < 2 {
            return Err(Error::Config("frame_count must be >= 2".into()));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Config("fps must be > 0".into()));
        }
        if self.resolution[0] == 0 || self.resolution[1] == 0 {
            return Err(Error::Config("resolution components must be > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips_through_toml() {
        let p = SamplingPreset::default();
        p.validate().unwrap();
        let back = SamplingPreset::from_toml_str(&p.to_toml_string()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let p = SamplingPreset::from_toml_str("frame_count = 48\nresolution = [64, 64]\n").unwrap();
        assert_eq!(p.frame_count, 48);
        assert_eq!(p.mass, SamplingPreset::default().mass);
    }

    #[test]
    fn inverted_range_is_rejected() {
        let err = SamplingPreset::from_toml_str("mass = { min = 2.0, max = 1.0 }").unwrap_err();
        assert!(err.to_string().contains("mass"), "{err}");
        let err =
            SamplingPreset::from_toml_str("object_count = { min = 5, max = 4 }").unwrap_err();
        assert!(err.to_string().contains("object_count"), "{err}");
    }

    #[test]
    fn out_of_domain_values_are_rejected() {
        for text in [
            "restitution = { min = 0.5, max = 1.5 }",
            "mass = { min = 0.0, max = 1.0 }",
            "frame_count = 1",
            "shapes = []",
            "near = 10.0\nfar = 1.0",
            "unknown_key = 3",
        ] {
            assert!(SamplingPreset::from_toml_str(text).is_err(), "{text}");
        }
    }
}
