use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::store::{looks_complete, read_manifest, write_manifest, write_sample, ManifestWriter};
use super::{scene_id, ManifestEntry, SampleRecord};
use crate::render::{render_frame, RenderOptions};
use crate::scene::{sample_scene, SamplingPreset, SceneConfig};
use crate::sim::simulate;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    /// 0 means available parallelism.
    pub workers: usize,
    pub render: RenderOptions,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            workers: 0,
            render: RenderOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub seed: u64,
    /// true for simulation divergence, false for any other error
    pub diverged: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub first_seed: u64,
    pub requested: usize,
    pub written: usize,
    pub skipped_existing: usize,
    pub failures: Vec<SampleFailure>,
    /// object count → samples, over all valid samples in the seed range
    pub object_count_histogram: BTreeMap<usize, usize>,
    /// fraction of valid samples with at least one object-object contact
    pub collision_rate: f64,
}

impl DatasetSummary {
    /// True when every failure is a divergence (those are skipped by design).
    pub fn ok(&self) -> bool {
        self.failures.iter().all(|f| f.diverged)
    }
}

/// Simulates and renders one scene, then writes it.
pub fn generate_sample(
    config: &SceneConfig,
    root: &Path,
    manifest: &ManifestWriter,
    render: RenderOptions,
) -> Result<ManifestEntry> {
    let trajectory = simulate(config)?;
    let record = SampleRecord::new(config, &trajectory)?;
    write_sample(&record, &trajectory, |k| render_frame(config, &trajectory, k, render), root, manifest)
}

enum Outcome {
    Existing(ManifestEntry),
    Written(ManifestEntry),
    Failed(SampleFailure),
}

/// Generates samples for seeds `seed..seed + count` under `root`. Samples
/// already listed in the manifest with intact files are skipped, so an
/// interrupted run can be repeated.
pub fn generate_dataset(
    preset: &SamplingPreset,
    count: usize,
    root: &Path,
    seed: u64,
    options: &GenerateOptions,
) -> Result<DatasetSummary> {
    if count == 0 {
        return Err(Error::Config("count must be >= 1".into()));
    }
    let last = seed
        .checked_add(count as u64 - 1)
        .ok_or_else(|| Error::Config("seed range overflows u64".into()))?;
    preset.validate()?;
    let existing: BTreeMap<String, ManifestEntry> =
        read_manifest(root)?.into_iter().map(|e| (e.scene_id.clone(), e)).collect();
    let manifest = ManifestWriter::open(root)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let seeds: Vec<u64> = (seed..=last).collect();
    let outcomes: Vec<Outcome> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| {
                if let Some(e) = existing.get(&scene_id(s)).filter(|e| looks_complete(root, e)) {
                    return Outcome::Existing(e.clone());
                }
                let result = sample_scene(s, preset).and_then(|c| generate_sample(&c, root, &manifest, options.render));
                match result {
                    Ok(e) => {
                        tracing::debug!(scene_id = %e.scene_id, "sample written");
                        Outcome::Written(e)
                    }
                    Err(err) => {
                        let diverged = matches!(err, Error::Diverged { .. });
                        tracing::warn!(seed = s, diverged, error = %err, "sample skipped");
                        Outcome::Failed(SampleFailure {
                            seed: s,
                            diverged,
                            reason: err.to_string(),
                        })
                    }
                }
            })
            .collect()
    });
    drop(manifest);

    let mut summary = DatasetSummary {
        first_seed: seed,
        requested: count,
        written: 0,
        skipped_existing: 0,
        failures: Vec::new(),
        object_count_histogram: BTreeMap::new(),
        collision_rate: 0.0,
    };
    let mut valid = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Existing(e) => {
                summary.skipped_existing += 1;
                valid.push(e);
            }
            Outcome::Written(e) => {
                summary.written += 1;
                valid.push(e);
            }
            Outcome::Failed(f) => summary.failures.push(f),
        }
    }
    for e in &valid {
        *summary.object_count_histogram.entry(e.objects).or_default() += 1;
    }
    if !valid.is_empty() {
        summary.collision_rate = valid.iter().filter(|e| e.object_collision).count() as f64 / valid.len() as f64;
    }

    // Drop manifest lines of seeds that failed in this run.
    let failed: BTreeSet<String> = summary.failures.iter().map(|f| scene_id(f.seed)).collect();
    let entries: Vec<ManifestEntry> = read_manifest(root)?
        .into_iter()
        .filter(|e| !failed.contains(&e.scene_id))
        .collect();
    write_manifest(root, &entries)?;

    tracing::info!(
        written = summary.written,
        skipped = summary.skipped_existing,
        failed = summary.failures.len(),
        collision_rate = summary.collision_rate,
        histogram = ?summary.object_count_histogram,
        "dataset generation finished"
    );
    Ok(summary)
}
