//! Depth supervision: latent MSE, scale-and-shift-invariant pixel loss,
//! spatial-gradient structure loss, temporal-difference loss, and their
//! weighted sum.

use serde::{Deserialize, Serialize};

use crate::tensor::{same_shape, DepthLatent, DepthMap};
use crate::{pairwise_sum, Error, Result, Tensor5};

/// var(pred) below this makes the per-frame fit degenerate.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    /// d value / d pred
    pub grad: Tensor5,
}

pub fn latent_loss(pred: &DepthLatent, target: &DepthLatent) -> Result<LossGrad> {
    same_shape(pred, target, "latent_loss")?;
    let n = pred.len() as f64;
    let diff: Vec<f64> = pred.data().iter().zip(target.data()).map(|(p, t)| p - t).collect();
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    let grad = Tensor5::new(pred.shape(), diff.iter().map(|d| 2.0 * d / n).collect())?;
    Ok(LossGrad {
        value: pairwise_sum(&sq) / n,
        grad,
    })
}

/// Per-frame least-squares (s, t) minimizing Σ (s·pred + t − target)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsiFit {
    pub scale: f64,
    pub shift: f64,
    /// pred was constant: scale = 0, shift = mean(target)
    pub degenerate: bool,
}

pub fn ssi_fit(pred: &[f64], target: &[f64]) -> Result<SsiFit> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!("ssi_fit: {} vs {} pixels", pred.len(), target.len())));
    }
    if pred.len() < 2 {
        return Err(Error::Invalid("ssi_fit needs at least two pixels".into()));
    }
    let n = pred.len() as f64;
    let mp = pairwise_sum(pred) / n;
    let mt = pairwise_sum(target) / n;
    let var: Vec<f64> = pred.iter().map(|p| (p - mp) * (p - mp)).collect();
    let var = pairwise_sum(&var) / n;
    if var < DEGENERATE_VARIANCE {
        return Ok(SsiFit {
            scale: 0.0,
            shift: mt,
            degenerate: true,
        });
    }
    let cov: Vec<f64> = pred.iter().zip(target).map(|(p, t)| (p - mp) * (t - mt)).collect();
    let scale = pairwise_sum(&cov) / n / var;
    Ok(SsiFit {
        scale,
        shift: mt - scale * mp,
        degenerate: false,
    })
}

fn frames(d: &DepthMap, what: &str) -> Result<(usize, usize)> {
    let [b, c, t, h, w] = d.shape();
    if c != 1 {
        return Err(Error::Shape(format!("{what}: depth maps need one channel, got {c}")));
    }
    Ok((b * t, h * w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelLoss {
    pub value: f64,
    pub grad: Tensor5,
    /// one per (batch, time) frame, batch-major
    pub fits: Vec<SsiFit>,
}

/// Mean over frames of the per-pixel MSE after that frame's optimal affine
/// fit. The gradient holds (s, t) at the optimum.
pub fn pixel_loss(pred: &DepthMap, target: &DepthMap) -> Result<PixelLoss> {
    same_shape(pred, target, "pixel_loss")?;
    let (nf, px) = frames(pred, "pixel_loss")?;
    let mut grad = Tensor5::zeros(pred.shape());
    let mut per_frame = Vec::with_capacity(nf);
    let mut fits = Vec::with_capacity(nf);
    let chunks = pred.data().chunks(px).zip(target.data().chunks(px));
    for ((p, t), g) in chunks.zip(grad.data_mut().chunks_mut(px)) {
        let fit = ssi_fit(p, t)?;
        let r: Vec<f64> = p.iter().zip(t).map(|(p, t)| fit.scale * p + fit.shift - t).collect();
        let sq: Vec<f64> = r.iter().map(|r| r * r).collect();
        per_frame.push(pairwise_sum(&sq) / px as f64);
        for (gi, ri) in g.iter_mut().zip(&r) {
            *gi = 2.0 * fit.scale * ri / (px * nf) as f64;
        }
        fits.push(fit);
    }
    Ok(PixelLoss {
        value: pairwise_sum(&per_frame) / nf as f64,
        grad,
        fits,
    })
}

fn sign(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum()
    }
}

/// L1 match of forward differences along x (width) and y (height),
/// normalized by B·T·H·W.
pub fn structure_loss(pred: &DepthMap, target: &DepthMap) -> Result<LossGrad> {
    same_shape(pred, target, "structure_loss")?;
    let [_, _, _, h, w] = pred.shape();
    if h < 2 || w < 2 {
        return Err(Error::Invalid(format!("structure_loss needs H, W >= 2, got {h}x{w}")));
    }
    let (nf, px) = frames(pred, "structure_loss")?;
    let norm = (nf * px) as f64;
    let mut grad = Tensor5::zeros(pred.shape());
    let mut terms = Vec::with_capacity(nf * 2 * px);
    let chunks = pred.data().chunks(px).zip(target.data().chunks(px));
    for ((p, t), g) in chunks.zip(grad.data_mut().chunks_mut(px)) {
        for i in 0..h {
            for j in 0..w {
                let o = i * w + j;
                for next in [(j + 1 < w).then_some(o + 1), (i + 1 < h).then_some(o + w)].into_iter().flatten() {
                    let r = (p[next] - p[o]) - (t[next] - t[o]);
                    terms.push(r.abs());
                    let s = sign(r) / norm;
                    g[next] += s;
                    g[o] -= s;
                }
            }
        }
    }
    Ok(LossGrad {
        value: pairwise_sum(&terms) / norm,
        grad,
    })
}

/// L1 match of frame-to-frame changes, normalized by B·(T−1)·H·W.
pub fn temporal_loss(pred: &DepthMap, target: &DepthMap) -> Result<LossGrad> {
    same_shape(pred, target, "temporal_loss")?;
    let [b, _, t, h, w] = pred.shape();
    frames(pred, "temporal_loss")?;
    if t < 2 {
        return Err(Error::Invalid(format!("temporal_loss needs T >= 2, got {t}")));
    }
    let px = h * w;
    let norm = (b * (t - 1) * px) as f64;
    let (p, d) = (pred.data(), target.data());
    let mut grad = Tensor5::zeros(pred.shape());
    let g = grad.data_mut();
    let mut terms = Vec::with_capacity(b * (t - 1) * px);
    for bi in 0..b {
        for ti in 0..t - 1 {
            let base = (bi * t + ti) * px;
            for k in base..base + px {
                let r = (p[k + px] - p[k]) - (d[k + px] - d[k]);
                terms.push(r.abs());
                let s = sign(r) / norm;
                g[k + px] += s;
                g[k] -= s;
            }
        }
    }
    Ok(LossGrad {
        value: pairwise_sum(&terms) / norm,
        grad,
    })
}

/// (β_ℓ, β_p, β_s, β_t)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthWeights {
    pub latent: f64,
    pub pixel: f64,
    pub structure: f64,
    pub temporal: f64,
}

impl Default for DepthWeights {
    fn default() -> Self {
        DepthWeights {
            latent: 1.0,
            pixel: 1.0,
            structure: 0.5,
            temporal: 0.5,
        }
    }
}

impl DepthWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.latent, self.pixel, self.structure, self.temporal];
        if w.iter().all(|v| *v >= 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Invalid(format!("depth weights must be >= 0, got {w:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthBreakdown {
    pub latent: f64,
    pub pixel: f64,
    pub structure: f64,
    pub temporal: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthObjective {
    pub breakdown: DepthBreakdown,
    pub grad_latent: Tensor5,
    pub grad_depth: Tensor5,
}

pub fn depth_objective(
    pred_latent: &DepthLatent,
    target_latent: &DepthLatent,
    pred_depth: &DepthMap,
    target_depth: &DepthMap,
    beta: &DepthWeights,
) -> Result<DepthObjective> {
    beta.validate()?;
    let l = latent_loss(pred_latent, target_latent)?;
    let p = pixel_loss(pred_depth, target_depth)?;
    let s = structure_loss(pred_depth, target_depth)?;
    let t = temporal_loss(pred_depth, target_depth)?;
    let grad_depth = p
        .grad
        .scale(beta.pixel)
        .axpy(beta.structure, &s.grad)?
        .axpy(beta.temporal, &t.grad)?;
    Ok(DepthObjective {
        breakdown: DepthBreakdown {
            latent: l.value,
            pixel: p.value,
            structure: s.value,
            temporal: t.value,
            total: beta.latent * l.value + beta.pixel * p.value + beta.structure * s.value + beta.temporal * t.value,
        },
        grad_latent: l.grad.scale(beta.latent),
        grad_depth,
    })
}

#[cfg(test)]
mod tests;
