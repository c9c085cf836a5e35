use std::path::Path;

use kinalign_losses::depth::DepthWeights;
use kinalign_losses::fixtures::{random_tensor, synthetic_depth_prediction, synthetic_teacher, ObjectPath};
use kinalign_losses::gradcheck::{run_all, GradcheckReport, TOLERANCE};
use kinalign_losses::objective::{total_loss, Breakdown, DepthInputs, ObjectiveWeights, PhysInputs};
use kinalign_losses::tensor::tubelet_frames;
use kinalign_losses::{f32g, Tensor5};
use serde::Serialize;

use crate::args::{EvalArgs, Fixture, GradcheckArgs, LossesCommand};
use crate::output::emit;
use crate::{CmdResult, Failure};

pub fn run(command: LossesCommand, seed: u64) -> CmdResult {
    match command {
        LossesCommand::Gradcheck(a) => gradcheck(a, seed),
        LossesCommand::Eval(a) => eval(a, seed),
    }
}

#[derive(Serialize)]
struct GradcheckOutput {
    tolerance: f64,
    cases: usize,
    reports: Vec<GradcheckReport>,
}

fn gradcheck(a: GradcheckArgs, seed: u64) -> CmdResult {
    if !a.all && a.only.is_empty() {
        return Err(Failure::Validation("pass --all or --only <loss,...>".into()));
    }
    if a.cases == 0 {
        return Err(Failure::Validation("--cases must be >= 1".into()));
    }
    let mut reports = run_all(a.cases, seed);
    if !a.all {
        if let Some(bad) = a.only.iter().find(|n| !reports.iter().any(|r| &r.name == *n)) {
            let known: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
            return Err(Failure::Validation(format!("unknown loss '{bad}', expected one of {known:?}")));
        }
        reports.retain(|r| a.only.contains(&r.name));
    }
    for r in &reports {
        tracing::info!(loss = %r.name, max_relative_error = r.max_relative_error, passed = r.passed, "gradcheck");
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
    let out = GradcheckOutput {
        tolerance: TOLERANCE,
        cases: a.cases,
        reports,
    };
    emit("losses gradcheck", seed, &out, a.out.as_deref())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("gradient check failed for {}", failed.join(", "))))
    }
}

struct DepthSet {
    pred_latent: Tensor5,
    target_latent: Tensor5,
    pred_depth: Tensor5,
    target_depth: Tensor5,
}

fn fixture_phys(fixture: Fixture, frames: usize, tubelet: usize, seed: u64) -> (Tensor5, Tensor5) {
    let objects = [
        ObjectPath {
            start: [1.0, 0.5],
            velocity: [0.15, 0.2],
            sigma: 0.8,
        },
        ObjectPath {
            start: [4.5, 5.0],
            velocity: [-0.1, -0.15],
            sigma: 0.6,
        },
    ];
    let teacher = synthetic_teacher(1, [frames / tubelet, 6, 6], 8, &objects, seed);
    let student = match fixture {
        Fixture::Aligned => teacher.clone(),
        Fixture::Random => teacher
            .axpy(0.5, &random_tensor(teacher.shape(), seed.wrapping_add(1), -1.0, 1.0))
            .expect("same shape"),
    };
    (student, teacher)
}

fn fixture_depth(fixture: Fixture, frames: usize, seed: u64) -> DepthSet {
    let s = seed.wrapping_mul(4);
    let target_latent = random_tensor([1, 4, frames.div_ceil(4), 8, 8], s, -1.0, 1.0);
    let target_depth = Tensor5::from_fn([1, 1, frames, 16, 16], |[_, _, t, y, x]| {
        let (cy, cx) = (4.0 + 0.15 * t as f64, 3.0 + 0.2 * t as f64);
        let r2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
        if r2 < 9.0 {
            2.0 + 0.05 * r2
        } else {
            5.0 - 0.1 * y as f64
        }
    });
    match fixture {
        Fixture::Aligned => DepthSet {
            pred_latent: target_latent.clone(),
            pred_depth: synthetic_depth_prediction(&target_depth, 0.0, s + 1),
            target_latent,
            target_depth,
        },
        Fixture::Random => DepthSet {
            pred_latent: random_tensor(target_latent.shape(), s + 2, -1.0, 1.0),
            pred_depth: random_tensor(target_depth.shape(), s + 3, 1.0, 5.0),
            target_latent,
            target_depth,
        },
    }
}

#[derive(Serialize)]
struct EvalOutput {
    fixture: Option<Fixture>,
    phys_shape: Option<[usize; 5]>,
    depth_shape: Option<[usize; 5]>,
    #[serde(flatten)]
    breakdown: Breakdown,
}

fn write_grad(dir: &Path, name: &str, t: &Option<Tensor5>) -> CmdResult {
    if let Some(t) = t {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
        f32g::write(t, &dir.join(name))?;
    }
    Ok(())
}

fn eval(a: EvalArgs, seed: u64) -> CmdResult {
    if !a.phys && !a.depth {
        return Err(Failure::Validation("pass --phys and/or --depth".into()));
    }
    if a.tubelet == 0 {
        return Err(Failure::Validation("--tubelet must be >= 1".into()));
    }
    let frames = tubelet_frames(a.frames, a.tubelet);
    let weights = ObjectiveWeights {
        lambda_phys: a.lambda_phys,
        lambda_3d: a.lambda_3d,
        margin: a.margin,
        beta: DepthWeights {
            latent: a.beta[0],
            pixel: a.beta[1],
            structure: a.beta[2],
            temporal: a.beta[3],
        },
    };
    weights.validate()?;
    let needs_fixture = (a.phys && a.student.is_none()) || (a.depth && a.pred_latent.is_none());
    if needs_fixture && frames < 2 * a.tubelet.max(2) {
        return Err(Failure::Validation(format!(
            "fixture needs at least {} frames after truncation, got {frames}",
            2 * a.tubelet.max(2)
        )));
    }

    let phys = if a.phys {
        Some(match (&a.student, &a.teacher) {
            (Some(s), Some(t)) => (f32g::read(s)?, f32g::read(t)?),
            _ => fixture_phys(a.fixture, frames, a.tubelet, seed),
        })
    } else {
        None
    };
    let depth = if a.depth {
        Some(match (&a.pred_latent, &a.target_latent, &a.pred_depth, &a.target_depth) {
            (Some(pl), Some(tl), Some(pd), Some(td)) => DepthSet {
                pred_latent: f32g::read(pl)?,
                target_latent: f32g::read(tl)?,
                pred_depth: f32g::read(pd)?,
                target_depth: f32g::read(td)?,
            },
            _ => fixture_depth(a.fixture, frames, seed),
        })
    } else {
        None
    };

    let objective = total_loss(
        a.l_fm,
        phys.as_ref().map(|(s, t)| PhysInputs { student: s, teacher: t }),
        depth.as_ref().map(|d| DepthInputs {
            pred_latent: &d.pred_latent,
            target_latent: &d.target_latent,
            pred_depth: &d.pred_depth,
            target_depth: &d.target_depth,
        }),
        &weights,
    )?;
    if let Some(dir) = &a.grad_out {
        write_grad(dir, "grad_student.f32g", &objective.grad_student)?;
        write_grad(dir, "grad_latent.f32g", &objective.grad_latent)?;
        write_grad(dir, "grad_depth.f32g", &objective.grad_depth)?;
    }
    let out = EvalOutput {
        fixture: needs_fixture.then_some(a.fixture),
        phys_shape: phys.as_ref().map(|(s, _)| s.shape()),
        depth_shape: depth.as_ref().map(|d| d.pred_depth.shape()),
        breakdown: objective.breakdown,
    };
    emit("losses eval", seed, &out, a.out.as_deref())
}
