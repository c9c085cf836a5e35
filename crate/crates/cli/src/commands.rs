use std::path::{Path, PathBuf};

use kinalign::dataset::{
    evaluate_sample, generate_dataset, load_mask_dir, read_manifest, read_record, scene_id, validate_dataset,
    write_sample, DatasetSummary, GenerateOptions, ManifestWriter, SampleRecord, MANIFEST_FILE,
};
use kinalign::pis::{evaluate_masks, Determinant, PisOptions, PisReport};
use kinalign::projection::{project_kinematics, project_position, projectile_state};
use kinalign::render::{render_frame, RenderOptions};
use kinalign::scene::{sample_scene, SamplingPreset};
use kinalign::sim::simulate_with_diagnostics;
use serde::Serialize;

use crate::args::{EvalPisArgs, Format, GenerateArgs, ProjectArgs, SceneArgs, SimulateArgs, ValidateArgs};
use crate::output::{emit, print};
use crate::{CmdResult, Failure};

fn load_preset(a: &SceneArgs) -> Result<SamplingPreset, Failure> {
    let mut preset = match &a.preset {
        Some(path) => SamplingPreset::load(path)?,
        None => SamplingPreset::default(),
    };
    if let Some(res) = a.res {
        preset.resolution = res;
    }
    if let Some(frames) = a.frames {
        preset.frame_count = frames as usize;
    }
    preset.validate()?;
    Ok(preset)
}

#[derive(Serialize)]
struct GenerateOutput<'a> {
    root: &'a Path,
    manifest: PathBuf,
    resolution: [u32; 2],
    frames: usize,
    #[serde(flatten)]
    summary: &'a DatasetSummary,
}

pub fn generate(a: GenerateArgs, seed: u64) -> CmdResult {
    let preset = load_preset(&a.scene)?;
    let options = GenerateOptions {
        workers: a.workers,
        ..GenerateOptions::default()
    };
    let summary = generate_dataset(&preset, a.count as usize, &a.out, seed, &options)?;
    let out = GenerateOutput {
        root: &a.out,
        manifest: a.out.join(MANIFEST_FILE),
        resolution: preset.resolution,
        frames: preset.frame_count,
        summary: &summary,
    };
    emit("generate", seed, &out, None)?;
    if summary.ok() {
        Ok(())
    } else {
        let failed = summary.failures.iter().filter(|f| !f.diverged).count();
        Err(Failure::Runtime(format!("{failed} samples could not be written")))
    }
}

#[derive(Serialize)]
struct Diagnostics {
    max_energy_increase: f64,
    max_momentum_error: f64,
    max_penetration_ratio: f64,
    contact_substeps: usize,
}

#[derive(Serialize)]
struct SimulateOutput {
    scene_id: String,
    prompt: String,
    objects: usize,
    frames: usize,
    contact_events: usize,
    object_collision: bool,
    diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_dir: Option<PathBuf>,
}

pub fn simulate(a: SimulateArgs, seed: u64) -> CmdResult {
    let preset = load_preset(&a.scene)?;
    let config = sample_scene(seed, &preset)?;
    let (trajectory, d) = simulate_with_diagnostics(&config)?;
    let sample_dir = match &a.out {
        Some(root) => {
            let record = SampleRecord::new(&config, &trajectory)?;
            let manifest = ManifestWriter::open(root)?;
            let render = |k| render_frame(&config, &trajectory, k, RenderOptions::default());
            write_sample(&record, &trajectory, render, root, &manifest)?;
            Some(root.join(scene_id(seed)))
        }
        None => None,
    };
    let out = SimulateOutput {
        scene_id: scene_id(seed),
        prompt: config.prompt.clone(),
        objects: config.objects.len(),
        frames: trajectory.len(),
        contact_events: trajectory.contact_events.len(),
        object_collision: trajectory.has_object_collision(),
        diagnostics: Diagnostics {
            max_energy_increase: d.max_energy_increase,
            max_momentum_error: d.max_momentum_error,
            max_penetration_ratio: d.max_penetration_ratio,
            contact_substeps: d.contact_substeps,
        },
        sample_dir,
    };
    emit("simulate", seed, &out, None)
}

#[derive(Serialize)]
struct Invalid {
    scene_id: String,
    error: String,
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    root: &'a Path,
    samples: usize,
    invalid: Vec<Invalid>,
}

pub fn validate(a: ValidateArgs, seed: u64) -> CmdResult {
    let samples = read_manifest(&a.root)?.len();
    let invalid: Vec<Invalid> = validate_dataset(&a.root)?
        .into_iter()
        .map(|(scene_id, e)| Invalid {
            scene_id,
            error: e.to_string(),
        })
        .collect();
    let n = invalid.len();
    emit("validate", seed, &ValidateOutput { root: &a.root, samples, invalid }, None)?;
    if n == 0 {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{n} of {samples} samples are invalid")))
    }
}

fn write_series(path: &Path, report: &PisReport) -> CmdResult {
    let err = |e: csv::Error| Failure::Runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["object", "determinant", "frame", "value"]).map_err(err)?;
    for o in &report.objects {
        for d in Determinant::ALL {
            let Some(e) = o.entry(d) else { continue };
            for (i, v) in e.series.iter().flatten().enumerate() {
                let row = [o.id.to_string(), d.name().into(), (e.frames[0] + i).to_string(), v.to_string()];
                w.write_record(&row).map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn table(report: &PisReport) -> String {
    let mut s = format!("{:<12}{:>10}{:>10}\n", "determinant", "score", "objects");
    for d in Determinant::ALL {
        let score = report.mean.get(d).map_or("-".into(), |v| format!("{v:.3}"));
        let n = report.scored_objects.get(&d).copied().unwrap_or(0);
        s += &format!("{:<12}{:>10}{:>10}\n", d.name(), score, n);
    }
    let statics = report.objects.iter().filter(|o| o.is_static).count();
    s += &format!("{} objects tracked, {} static\n", report.objects.len(), statics);
    s
}

pub fn eval_pis(a: EvalPisArgs, seed: u64) -> CmdResult {
    if !(a.epsilon > 0.0 && a.epsilon.is_finite()) {
        return Err(Failure::Validation(format!("epsilon must be > 0, got {}", a.epsilon)));
    }
    let options = PisOptions {
        epsilon: a.epsilon,
        include_series: a.series.is_some(),
    };
    let (mut report, seed) = match (&a.sample, &a.masks) {
        (Some(dir), _) => (evaluate_sample(dir, &options)?, read_record(dir)?.seed),
        (None, Some(dir)) => {
            let fps = a.fps.unwrap_or(0.0);
            if !(fps > 0.0 && fps.is_finite()) {
                return Err(Failure::Validation(format!("fps must be > 0, got {fps}")));
            }
            (evaluate_masks(&load_mask_dir(dir)?, fps, None, &options)?, seed)
        }
        (None, None) => unreachable!("clap requires an input"),
    };
    if let Some(path) = &a.series {
        write_series(path, &report)?;
        for o in &mut report.objects {
            for e in [&mut o.a_x, &mut o.a_y, &mut o.v_x, &mut o.v_y, &mut o.delta_l].into_iter().flatten() {
                e.series = None;
            }
        }
    }
    match a.format {
        Format::Json => emit("eval-pis", seed, &report, a.out.as_deref()),
        Format::Table => {
            if let Some(out) = &a.out {
                emit("eval-pis", seed, &report, Some(out))?;
            }
            print(&table(&report))
        }
    }
}

#[derive(Serialize)]
struct ProjectRow {
    t: f64,
    u: f64,
    v: f64,
    u_dot: f64,
    v_dot: f64,
    u_ddot: f64,
    v_ddot: f64,
}

#[derive(Serialize)]
struct ProjectOutput {
    v0: f64,
    theta_deg: f64,
    g: f64,
    focal: f64,
    depth: f64,
    fps: f64,
    rows: Vec<ProjectRow>,
}

pub fn project(a: ProjectArgs, seed: u64) -> CmdResult {
    let positive = [a.g, a.focal, a.depth, a.fps].iter().all(|v| *v > 0.0 && v.is_finite());
    if !positive || !(a.v0 >= 0.0 && a.v0.is_finite()) || !a.theta_deg.is_finite() {
        return Err(Failure::Validation(
            "v0 must be >= 0 and g, focal, depth, fps must be > 0".into(),
        ));
    }
    let theta = a.theta_deg.to_radians();
    let flight = (2.0 * a.v0 * theta.sin() / a.g).max(0.0);
    let frames = a.frames.unwrap_or((flight * a.fps).floor() as usize + 1);
    let rows = (0..frames)
        .map(|i| {
            let t = i as f64 / a.fps;
            let k = projectile_state(a.v0, theta, a.g, t).fronto_parallel(a.depth);
            let [u, v] = project_position(&k, a.focal)?;
            let p = project_kinematics(&k, a.focal)?;
            Ok(ProjectRow {
                t,
                u,
                v,
                u_dot: p.u_dot,
                v_dot: p.v_dot,
                u_ddot: p.u_ddot,
                v_ddot: p.v_ddot,
            })
        })
        .collect::<Result<Vec<_>, kinalign::Error>>()?;
    match a.format {
        Format::Json => {
            let out = ProjectOutput {
                v0: a.v0,
                theta_deg: a.theta_deg,
                g: a.g,
                focal: a.focal,
                depth: a.depth,
                fps: a.fps,
                rows,
            };
            emit("project", seed, &out, None)
        }
        Format::Table => {
            let mut s = format!(
                "{:>8}{:>11}{:>11}{:>11}{:>11}{:>11}{:>11}\n",
                "t", "u", "v", "u_dot", "v_dot", "u_ddot", "v_ddot"
            );
            for r in rows {
                s += &format!(
                    "{:>8.4}{:>11.3}{:>11.3}{:>11.3}{:>11.3}{:>11.3}{:>11.3}\n",
                    r.t, r.u, r.v, r.u_dot, r.v_dot, r.u_ddot, r.v_ddot
                );
            }
            print(&s)
        }
    }
}
