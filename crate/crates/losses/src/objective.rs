//! L = L_FM + λ_Phys · L_Phys + λ_3D · L_3D, with L_FM supplied by the caller.

use serde::{Deserialize, Serialize};

use crate::align::{phys_loss, DEFAULT_MARGIN};
use crate::depth::{depth_objective, DepthBreakdown, DepthWeights};
use crate::tensor::{DepthLatent, DepthMap, FeatureGrid};
use crate::{Error, Result, Tensor5};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub lambda_phys: f64,
    pub lambda_3d: f64,
    pub margin: f64,
    pub beta: DepthWeights,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            lambda_phys: 0.25,
            lambda_3d: 1.0,
            margin: DEFAULT_MARGIN,
            beta: DepthWeights::default(),
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.lambda_phys, self.lambda_3d, self.margin]
            .iter()
            .all(|v| *v >= 0.0 && v.is_finite());
        if !ok {
            return Err(Error::Invalid("λ weights and margin must be >= 0".into()));
        }
        self.beta.validate()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PhysInputs<'a> {
    pub student: &'a FeatureGrid,
    pub teacher: &'a FeatureGrid,
}

#[derive(Debug, Clone, Copy)]
pub struct DepthInputs<'a> {
    pub pred_latent: &'a DepthLatent,
    pub target_latent: &'a DepthLatent,
    pub pred_depth: &'a DepthMap,
    pub target_depth: &'a DepthMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub l_fm: f64,
    pub l_phys: f64,
    pub l_3d: f64,
    pub depth: Option<DepthBreakdown>,
    pub weights: ObjectiveWeights,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub breakdown: Breakdown,
    /// d total / d student features
    pub grad_student: Option<Tensor5>,
    pub grad_latent: Option<Tensor5>,
    pub grad_depth: Option<Tensor5>,
}

/// Missing inputs contribute zero to their term.
pub fn total_loss(
    l_fm: f64,
    phys: Option<PhysInputs<'_>>,
    depth: Option<DepthInputs<'_>>,
    weights: &ObjectiveWeights,
) -> Result<Objective> {
    if !l_fm.is_finite() {
        return Err(Error::Invalid(format!("L_FM must be finite, got {l_fm}")));
    }
    weights.validate()?;
    let p = phys
        .map(|p| phys_loss(p.student, p.teacher, weights.margin))
        .transpose()?;
    let d = depth
        .map(|d| depth_objective(d.pred_latent, d.target_latent, d.pred_depth, d.target_depth, &weights.beta))
        .transpose()?;
    let l_phys = p.as_ref().map_or(0.0, |p| p.loss);
    let l_3d = d.as_ref().map_or(0.0, |d| d.breakdown.total);
    let total = l_fm + weights.lambda_phys * l_phys + weights.lambda_3d * l_3d;
    let breakdown = Breakdown {
        l_fm,
        l_phys,
        l_3d,
        depth: d.as_ref().map(|d| d.breakdown),
        weights: *weights,
        total,
    };
    tracing::info!(l_fm, l_phys, l_3d, total, "objective");
    Ok(Objective {
        breakdown,
        grad_student: p.map(|p| p.grad.scale(weights.lambda_phys)),
        grad_latent: d.as_ref().map(|d| d.grad_latent.scale(weights.lambda_3d)),
        grad_depth: d.map(|d| d.grad_depth.scale(weights.lambda_3d)),
    })
}
