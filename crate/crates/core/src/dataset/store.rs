use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{ManifestEntry, Modality, SampleRecord, CONTACTS_FILE, FORMAT_VERSION, MANIFEST_FILE, META_FILE, TRAJECTORY_FILE};
use crate::pis::{evaluate_masks, MaskSequence, PisOptions, PisReport};
use crate::render::codec::{
    decode_depth_f32, decode_id_png, decode_mask_png, decode_rgb_png, encode_depth_f32, encode_mask_png, encode_rgb_png,
};
use crate::render::{project_point, FrameSet};
use crate::sim::{read_contacts_json, read_trajectory, write_contacts_json, write_trajectory, Trajectory};
use crate::{Error, Result};

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn remove_dir_if_present(path: &Path) -> Result<()> {
    match fs::remove_dir_all(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(path, e)),
        _ => Ok(()),
    }
}

/// Appends manifest lines; shared by concurrent sample writers.
pub struct ManifestWriter {
    path: PathBuf,
    file: Mutex<File>,
}

impl ManifestWriter {
    pub fn open(root: &Path) -> Result<Self> {
        create_dir(root)?;
        let path = root.join(MANIFEST_FILE);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(ManifestWriter {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn append(&self, entry: &ManifestEntry) -> Result<()> {
        let line = serde_json::to_string(entry)? + "\n";
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes one sample into `root/{scene_id}` through a temporary directory,
/// renames it into place, then appends its manifest line. `frame(k)`
/// supplies the rendered frames one at a time.
pub fn write_sample(
    record: &SampleRecord,
    trajectory: &Trajectory,
    mut frame: impl FnMut(usize) -> Result<FrameSet>,
    root: &Path,
    manifest: &ManifestWriter,
) -> Result<ManifestEntry> {
    if trajectory.len() != record.frame_count {
        return Err(Error::Config(format!(
            "trajectory has {} frames, record expects {}",
            trajectory.len(),
            record.frame_count
        )));
    }
    let final_dir = root.join(&record.scene_id);
    let tmp = root.join(format!(".{}.tmp", record.scene_id));
    remove_dir_if_present(&tmp)?;
    for m in Modality::ALL {
        create_dir(&tmp.join(m.name()))?;
    }
    let (w, h) = (record.width(), record.height());
    for k in 0..record.frame_count {
        let f = frame(k)?;
        if (f.width, f.height) != (w, h) {
            return Err(Error::Config(format!(
                "frame {k} is {}x{}, record expects {w}x{h}",
                f.width, f.height
            )));
        }
        write_file(&tmp.join(Modality::Rgb.frame_path(k)), &encode_rgb_png(w, h, &f.rgb))?;
        write_file(&tmp.join(Modality::Depth.frame_path(k)), &encode_depth_f32(w, h, &f.depth))?;
        write_file(&tmp.join(Modality::Mask.frame_path(k)), &encode_mask_png(w, h, &f.mask))?;
    }
    write_trajectory(trajectory, &tmp.join(TRAJECTORY_FILE))?;
    write_contacts_json(&trajectory.contact_events, &tmp.join(CONTACTS_FILE))?;
    let meta = record.to_json()?;
    write_file(&tmp.join(META_FILE), meta.as_bytes())?;

    remove_dir_if_present(&final_dir)?;
    fs::rename(&tmp, &final_dir).map_err(|e| Error::io(&final_dir, e))?;

    let entry = ManifestEntry {
        scene_id: record.scene_id.clone(),
        seed: record.seed,
        format_version: FORMAT_VERSION,
        frames: record.frame_count,
        objects: record.stats.object_count,
        object_collision: record.stats.object_collision,
        meta_sha256: sha256_hex(meta.as_bytes()),
    };
    manifest.append(&entry)?;
    Ok(entry)
}

/// Manifest entries, one per scene id (the last line wins).
pub fn read_manifest(root: &Path) -> Result<Vec<ManifestEntry>> {
    let path = root.join(MANIFEST_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(&path, e)),
    };
    let mut by_id = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let entry: ManifestEntry = serde_json::from_str(line)
            .map_err(|e| Error::format(&path, "manifest", format!("line {}: {e}", i + 1)))?;
        by_id.insert(entry.scene_id.clone(), entry);
    }
    let mut entries: Vec<_> = by_id.into_values().collect();
    entries.sort_by(|a, b| (a.seed, &a.scene_id).cmp(&(b.seed, &b.scene_id)));
    Ok(entries)
}

/// Replaces the manifest with `entries`, atomically.
pub fn write_manifest(root: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut text = String::new();
    for e in entries {
        text += &serde_json::to_string(e)?;
        text.push('\n');
    }
    let tmp = root.join(format!(".{MANIFEST_FILE}.tmp"));
    write_file(&tmp, text.as_bytes())?;
    let path = root.join(MANIFEST_FILE);
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
}

/// Parses `meta.json` of a sample directory.
pub fn read_record(dir: &Path) -> Result<SampleRecord> {
    let path = dir.join(META_FILE);
    let bytes = read_file(&path)?;
    let record: SampleRecord =
        serde_json::from_slice(&bytes).map_err(|e| Error::format(&path, "metadata", e.to_string()))?;
    if record.format_version != FORMAT_VERSION {
        return Err(Error::format(
            &path,
            "metadata",
            format!("format_version {} (expected {FORMAT_VERSION})", record.format_version),
        ));
    }
    Ok(record)
}

fn check_dims(path: &Path, modality: Modality, got: (usize, usize), record: &SampleRecord) -> Result<()> {
    let want = (record.width(), record.height());
    if got != want {
        return Err(Error::format(
            path,
            modality.name(),
            format!("size {}x{}, expected {}x{}", got.0, got.1, want.0, want.1),
        ));
    }
    Ok(())
}

fn read_modality(dir: &Path, modality: Modality, frame: usize) -> Result<(PathBuf, Vec<u8>)> {
    let path = dir.join(modality.frame_path(frame));
    let bytes = read_file(&path)?;
    Ok((path, bytes))
}

fn load_rgb(dir: &Path, record: &SampleRecord, frame: usize) -> Result<Vec<u8>> {
    let (path, bytes) = read_modality(dir, Modality::Rgb, frame)?;
    let p = decode_rgb_png(&bytes).map_err(|r| Error::format(&path, "rgb", r))?;
    check_dims(&path, Modality::Rgb, (p.width, p.height), record)?;
    Ok(p.data)
}

fn load_depth(dir: &Path, record: &SampleRecord, frame: usize) -> Result<Vec<f32>> {
    let (path, bytes) = read_modality(dir, Modality::Depth, frame)?;
    let p = decode_depth_f32(&bytes).map_err(|r| Error::format(&path, "depth", r))?;
    check_dims(&path, Modality::Depth, (p.width, p.height), record)?;
    if let Some(z) = p.data.iter().find(|z| !(z.is_finite() && **z > 0.0)) {
        return Err(Error::format(&path, "depth", format!("non-positive or non-finite depth {z}")));
    }
    Ok(p.data)
}

fn load_mask(dir: &Path, record: &SampleRecord, frame: usize) -> Result<Vec<u8>> {
    let (path, bytes) = read_modality(dir, Modality::Mask, frame)?;
    let p = decode_mask_png(&bytes).map_err(|r| Error::format(&path, "mask", r))?;
    check_dims(&path, Modality::Mask, (p.width, p.height), record)?;
    let objects = record.stats.object_count;
    if let Some(id) = p.data.iter().find(|&&id| id as usize > objects) {
        return Err(Error::format(&path, "mask", format!("id {id} exceeds object count {objects}")));
    }
    Ok(p.data)
}

/// Decodes and checks all three modalities of one frame.
pub fn load_frame(dir: &Path, record: &SampleRecord, frame: usize) -> Result<FrameSet> {
    if frame >= record.frame_count {
        return Err(Error::FrameOutOfRange {
            index: frame,
            len: record.frame_count,
        });
    }
    Ok(FrameSet {
        width: record.width(),
        height: record.height(),
        rgb: load_rgb(dir, record, frame)?,
        depth: load_depth(dir, record, frame)?,
        mask: load_mask(dir, record, frame)?,
    })
}

pub fn load_masks(dir: &Path, record: &SampleRecord) -> Result<MaskSequence> {
    Ok(MaskSequence {
        width: record.width(),
        height: record.height(),
        frames: (0..record.frame_count)
            .map(|k| load_mask(dir, record, k))
            .collect::<Result<_>>()?,
    })
}

/// Reads every `*.png` in `dir`, in file-name order, as an id mask
/// (palette-indexed or 8-bit grayscale).
pub fn load_mask_dir(dir: &Path) -> Result<MaskSequence> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::format(dir, "mask", "no .png files"));
    }
    let mut seq: Option<MaskSequence> = None;
    for path in paths {
        let p = decode_id_png(&read_file(&path)?).map_err(|r| Error::format(&path, "mask", r))?;
        let s = seq.get_or_insert_with(|| MaskSequence {
            width: p.width,
            height: p.height,
            frames: Vec::new(),
        });
        if (p.width, p.height) != (s.width, s.height) {
            return Err(Error::format(
                &path,
                "mask",
                format!("size {}x{} differs from {}x{}", p.width, p.height, s.width, s.height),
            ));
        }
        s.frames.push(p.data);
    }
    Ok(seq.expect("at least one mask"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSample {
    pub dir: PathBuf,
    pub record: SampleRecord,
    /// With contact events from the JSON sidecar.
    pub trajectory: Trajectory,
}

fn check_record(dir: &Path, record: &SampleRecord, trajectory: &Trajectory) -> Result<()> {
    let meta = dir.join(META_FILE);
    let traj = dir.join(TRAJECTORY_FILE);
    if record.scene_id != super::scene_id(record.seed) || record.config.seed != record.seed {
        return Err(Error::format(&meta, "metadata", "scene_id, seed, and config.seed disagree"));
    }
    record.config.validate().map_err(|e| Error::format(&meta, "metadata", e.to_string()))?;
    if trajectory.len() != record.frame_count || trajectory.body_count() != record.stats.object_count {
        return Err(Error::format(
            &traj,
            "trajectory",
            format!(
                "{} frames x {} bodies, metadata says {} x {}",
                trajectory.len(),
                trajectory.body_count(),
                record.frame_count,
                record.stats.object_count
            ),
        ));
    }
    for (o, spec) in record.physics_metadata.iter().zip(&record.config.objects) {
        let expected = project_point(spec.initial_position, &record.config.camera).ok();
        let ok = match (o.force_pixel_uv, expected) {
            (Some(a), Some(b)) => (a[0] - b[0]).hypot(a[1] - b[1]) <= 0.5,
            (None, None) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::format(
                &meta,
                "metadata",
                format!("force_pixel_uv of object {} does not match the camera", o.id),
            ));
        }
    }
    Ok(())
}

/// Reads metadata and trajectory and checks their mutual consistency;
/// frame files are not decoded.
pub fn load_sample(dir: &Path) -> Result<LoadedSample> {
    let record = read_record(dir)?;
    let mut trajectory = read_trajectory(&dir.join(TRAJECTORY_FILE))?;
    trajectory.contact_events = read_contacts_json(&dir.join(CONTACTS_FILE))?;
    check_record(dir, &record, &trajectory)?;
    Ok(LoadedSample {
        dir: dir.to_path_buf(),
        record,
        trajectory,
    })
}

/// Contact frames keyed by mask id.
pub fn contact_map(trajectory: &Trajectory) -> BTreeMap<u8, Vec<usize>> {
    (0..trajectory.body_count())
        .map(|k| ((k + 1) as u8, trajectory.contact_frames(k)))
        .collect()
}

/// PIS report for a stored sample: ground-truth masks, with free-flight
/// windows cut at the simulator's contact frames.
pub fn evaluate_sample(dir: &Path, options: &PisOptions) -> Result<PisReport> {
    let sample = load_sample(dir)?;
    let masks = load_masks(dir, &sample.record)?;
    let contacts = contact_map(&sample.trajectory);
    evaluate_masks(&masks, sample.record.fps, Some(&contacts), options)
}

/// Full validation of one manifest entry: checksum, metadata, trajectory,
/// and every frame file of every modality.
pub fn validate_sample(root: &Path, entry: &ManifestEntry) -> Result<LoadedSample> {
    let dir = root.join(&entry.scene_id);
    let meta_path = dir.join(META_FILE);
    let digest = sha256_hex(&read_file(&meta_path)?);
    if digest != entry.meta_sha256 {
        return Err(Error::format(&meta_path, "metadata", "checksum does not match the manifest"));
    }
    let sample = load_sample(&dir)?;
    for k in 0..sample.record.frame_count {
        load_frame(&dir, &sample.record, k)?;
    }
    Ok(sample)
}

/// Validates every manifest entry, returning the failures.
pub fn validate_dataset(root: &Path) -> Result<Vec<(String, Error)>> {
    Ok(read_manifest(root)?
        .iter()
        .filter_map(|e| validate_sample(root, e).err().map(|err| (e.scene_id.clone(), err)))
        .collect())
}

/// Cheap resume check: the checksum matches and every file exists.
pub(crate) fn looks_complete(root: &Path, entry: &ManifestEntry) -> bool {
    let dir = root.join(&entry.scene_id);
    let Ok(meta) = fs::read(dir.join(META_FILE)) else {
        return false;
    };
    sha256_hex(&meta) == entry.meta_sha256
        && [TRAJECTORY_FILE, CONTACTS_FILE].iter().all(|f| dir.join(f).is_file())
        && (0..entry.frames).all(|k| Modality::ALL.iter().all(|m| dir.join(m.frame_path(k)).is_file()))
}
