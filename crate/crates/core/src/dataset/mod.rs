//! Sample layout on disk and the JSON-lines manifest.
//!
//! ```text
//! root/
//!   manifest.jsonl
//!   scene_000042/
//!     meta.json  trajectory.ktrj  contacts.json
//!     rgb/0000.png  depth/0000.f32  mask/0000.png  ...
//! ```

mod generate;
mod store;

use serde::{Deserialize, Serialize};

use crate::render::project_point;
use crate::scene::{SceneConfig, ShapeKind};
use crate::sim::Trajectory;
use crate::Result;

pub use generate::{generate_dataset, generate_sample, DatasetSummary, GenerateOptions, SampleFailure};
pub use store::{
    contact_map, evaluate_sample, load_frame, load_mask_dir, load_masks, load_sample, read_manifest, read_record, validate_dataset,
    validate_sample, write_manifest, write_sample, LoadedSample, ManifestWriter,
};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const META_FILE: &str = "meta.json";
pub const TRAJECTORY_FILE: &str = "trajectory.ktrj";
pub const CONTACTS_FILE: &str = "contacts.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Rgb,
    Depth,
    Mask,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Rgb, Modality::Depth, Modality::Mask];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Rgb => "rgb",
            Modality::Depth => "depth",
            Modality::Mask => "mask",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Modality::Depth => "f32",
            _ => "png",
        }
    }

    /// Path of one frame relative to the sample directory.
    pub fn frame_path(self, frame: usize) -> String {
        format!("{}/{frame:04}.{}", self.name(), self.extension())
    }
}

pub fn scene_id(seed: u64) -> String {
    format!("scene_{seed:06}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPhysics {
    /// mask id
    pub id: u8,
    pub category_label: String,
    pub shape_kind: ShapeKind,
    /// kg
    pub mass: f64,
    /// m
    pub size: f64,
    /// N
    pub force: f64,
    /// deg
    pub force_angle: f64,
    /// m
    pub start_height: f64,
    /// px, projection of the initial position; null when behind the camera
    pub force_pixel_uv: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFiles {
    /// `{frame:04}` is replaced by the zero-padded frame index.
    pub rgb: String,
    pub depth: String,
    pub mask: String,
    pub trajectory: String,
    pub contacts: String,
}

impl Default for SampleFiles {
    fn default() -> Self {
        let pattern = |m: Modality| format!("{}/{{frame:04}}.{}", m.name(), m.extension());
        SampleFiles {
            rgb: pattern(Modality::Rgb),
            depth: pattern(Modality::Depth),
            mask: pattern(Modality::Mask),
            trajectory: TRAJECTORY_FILE.into(),
            contacts: CONTACTS_FILE.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub object_count: usize,
    pub contact_events: usize,
    /// at least one object-object contact
    pub object_collision: bool,
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub format_version: u32,
    pub scene_id: String,
    pub seed: u64,
    pub prompt: String,
    pub frame_count: usize,
    /// [width, height]
    pub resolution: [u32; 2],
    pub fps: f64,
    pub physics_metadata: Vec<ObjectPhysics>,
    pub stats: SampleStats,
    pub files: SampleFiles,
    pub config: SceneConfig,
}

impl SampleRecord {
    pub fn new(config: &SceneConfig, trajectory: &Trajectory) -> Result<Self> {
        config.validate()?;
        let physics_metadata = config
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| ObjectPhysics {
                id: (i + 1) as u8,
                category_label: o.category_label.clone(),
                shape_kind: o.shape_kind,
                mass: o.mass,
                size: o.characteristic_size,
                force: o.initial_force.magnitude,
                force_angle: o.initial_force.direction_deg,
                start_height: o.drop_height,
                force_pixel_uv: project_point(o.initial_position, &config.camera).ok(),
            })
            .collect();
        Ok(SampleRecord {
            format_version: FORMAT_VERSION,
            scene_id: scene_id(config.seed),
            seed: config.seed,
            prompt: config.prompt.clone(),
            frame_count: config.frame_count,
            resolution: config.resolution,
            fps: config.fps,
            physics_metadata,
            stats: SampleStats {
                object_count: config.objects.len(),
                contact_events: trajectory.contact_events.len(),
                object_collision: trajectory.has_object_collision(),
            },
            files: SampleFiles::default(),
            config: config.clone(),
        })
    }

    pub fn width(&self) -> usize {
        self.resolution[0] as usize
    }

    pub fn height(&self) -> usize {
        self.resolution[1] as usize
    }

    /// Canonical `meta.json` text: fixed key order, floats at 9 significant
    /// digits, pretty-printed, trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        crate::numfmt::round_json(&mut value);
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }
}

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scene_id: String,
    pub seed: u64,
    pub format_version: u32,
    pub frames: usize,
    pub objects: usize,
    pub object_collision: bool,
    /// hex SHA-256 of the sample's meta.json bytes
    pub meta_sha256: String,
}
