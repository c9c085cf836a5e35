//! Token projection, trilinear grid adaptation, Gram matrices, and the
//! margin-L1 relational loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{same_shape, FeatureGrid};
use crate::{pairwise_sum, Error, Result, Tensor5};

/// Token norms below this are clamped before normalization.
pub const EPS_NORM: f64 = 1e-8;
pub const DEFAULT_MARGIN: f64 = 0.1;

/// Hidden-state tokens (batch, token, channel) with their source grid.
/// Token order matches [`FeatureGrid`]: time-major, then height, then width.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub batch: usize,
    /// (T_f, h_p, w_p)
    pub grid: [usize; 3],
    pub channels: usize,
    pub data: Vec<f64>,
}

impl TokenSequence {
    pub fn new(batch: usize, grid: [usize; 3], channels: usize, data: Vec<f64>) -> Result<Self> {
        if batch == 0 || channels == 0 || grid.contains(&0) {
            return Err(Error::Shape(format!("empty token sequence {batch}x{grid:?}x{channels}")));
        }
        let n = batch * grid.iter().product::<usize>() * channels;
        if data.len() != n {
            return Err(Error::Shape(format!("token sequence needs {n} values, got {}", data.len())));
        }
        Ok(TokenSequence {
            batch,
            grid,
            channels,
            data,
        })
    }

    pub fn tokens(&self) -> usize {
        self.grid.iter().product()
    }

    pub fn token(&self, b: usize, n: usize) -> &[f64] {
        let c = self.channels;
        let o = (b * self.tokens() + n) * c;
        &self.data[o..o + c]
    }

    /// Same data viewed as a (B, T_f, h_p, w_p, C) grid.
    pub fn to_grid(&self) -> FeatureGrid {
        let [t, h, w] = self.grid;
        Tensor5::new([self.batch, t, h, w, self.channels], self.data.clone()).expect("consistent token shape")
    }

    pub fn from_grid(g: &FeatureGrid) -> Self {
        let [b, t, h, w, c] = g.shape();
        TokenSequence {
            batch: b,
            grid: [t, h, w],
            channels: c,
            data: g.data().to_vec(),
        }
    }
}

fn silu(a: f64) -> f64 {
    a / (1.0 + (-a).exp())
}

fn silu_grad(a: f64) -> f64 {
    let s = 1.0 / (1.0 + (-a).exp());
    s * (1.0 + a * (1.0 - s))
}

/// φ(x) = W2 · silu(W1 x + b1) + b2, plus x itself when `residual` is set
/// (requires input = output width).
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    /// hidden × input, row-major
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// output × hidden, row-major
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub residual: bool,
}

impl Projector {
    /// Zero weights with the residual path: the identity map.
    pub fn identity(width: usize, hidden: usize) -> Self {
        Projector {
            input: width,
            hidden,
            output: width,
            w1: vec![0.0; hidden * width],
            b1: vec![0.0; hidden],
            w2: vec![0.0; width * hidden],
            b2: vec![0.0; width],
            residual: true,
        }
    }

    /// Weights uniform in ±1/√fan_in.
    pub fn random(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize, fan_in: usize| -> Vec<f64> {
            let a = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-a..a)).collect()
        };
        Projector {
            input,
            hidden,
            output,
            w1: draw(hidden * input, input),
            b1: draw(hidden, input),
            w2: draw(output * hidden, hidden),
            b2: draw(output, hidden),
            residual: false,
        }
    }

    fn check(&self) -> Result<()> {
        let ok = self.w1.len() == self.hidden * self.input
            && self.b1.len() == self.hidden
            && self.w2.len() == self.output * self.hidden
            && self.b2.len() == self.output
            && (!self.residual || self.input == self.output);
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("projector parameter sizes are inconsistent".into()))
        }
    }

    /// All parameters in the order w1, b1, w2, b2.
    pub fn params(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn with_params(&self, p: &[f64]) -> Self {
        let mut out = self.clone();
        let (w1, rest) = p.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, b2) = rest.split_at(self.w2.len());
        out.w1 = w1.to_vec();
        out.b1 = b1.to_vec();
        out.w2 = w2.to_vec();
        out.b2 = b2.to_vec();
        out
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.input..(h + 1) * self.input];
                self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let act: Vec<f64> = self.pre_activation(x).into_iter().map(silu).collect();
        for (o, y) in out.iter_mut().enumerate() {
            let row = &self.w2[o * self.hidden..(o + 1) * self.hidden];
            *y = self.b2[o] + row.iter().zip(&act).map(|(w, a)| w * a).sum::<f64>();
            if self.residual {
                *y += x[o];
            }
        }
    }
}

pub fn project_tokens(tokens: &TokenSequence, proj: &Projector) -> Result<TokenSequence> {
    proj.check()?;
    if tokens.channels != proj.input {
        return Err(Error::Shape(format!(
            "tokens have {} channels, projector expects {}",
            tokens.channels, proj.input
        )));
    }
    let mut data = vec![0.0; tokens.batch * tokens.tokens() * proj.output];
    for (x, y) in tokens.data.chunks(proj.input).zip(data.chunks_mut(proj.output)) {
        proj.apply(x, y);
    }
    TokenSequence::new(tokens.batch, tokens.grid, proj.output, data)
}

/// Gradients of a scalar loss with respect to the tokens and the projector
/// parameters (ordered as [`Projector::params`]), given `grad_out` with
/// respect to the projected tokens.
pub fn project_tokens_backward(
    tokens: &TokenSequence,
    proj: &Projector,
    grad_out: &TokenSequence,
) -> Result<(TokenSequence, Vec<f64>)> {
    proj.check()?;
    if grad_out.channels != proj.output || grad_out.data.len() / proj.output != tokens.data.len() / proj.input {
        return Err(Error::Shape("projector gradient does not match its output".into()));
    }
    let (d, k, o_n) = (proj.input, proj.hidden, proj.output);
    let mut gx = vec![0.0; tokens.data.len()];
    let mut gw1 = vec![0.0; k * d];
    let mut gb1 = vec![0.0; k];
    let mut gw2 = vec![0.0; o_n * k];
    let mut gb2 = vec![0.0; o_n];
    for ((x, gy), gxi) in tokens.data.chunks(d).zip(grad_out.data.chunks(o_n)).zip(gx.chunks_mut(d)) {
        let pre = proj.pre_activation(x);
        let act: Vec<f64> = pre.iter().map(|&a| silu(a)).collect();
        let mut g_act = vec![0.0; k];
        for o in 0..o_n {
            gb2[o] += gy[o];
            for h in 0..k {
                gw2[o * k + h] += gy[o] * act[h];
                g_act[h] += gy[o] * proj.w2[o * k + h];
            }
            if proj.residual {
                gxi[o] += gy[o];
            }
        }
        for h in 0..k {
            let g_pre = g_act[h] * silu_grad(pre[h]);
            gb1[h] += g_pre;
            for i in 0..d {
                gw1[h * d + i] += g_pre * x[i];
                gxi[i] += g_pre * proj.w1[h * d + i];
            }
        }
    }
    let grad_tokens = TokenSequence::new(tokens.batch, tokens.grid, d, gx)?;
    Ok((grad_tokens, [gw1, gb1, gw2, gb2].concat()))
}

/// Two-tap interpolation along one axis: target index → (i0, i1, weight of i1).
fn axis_taps(src: usize, tgt: usize) -> Vec<(usize, usize, f64)> {
    (0..tgt)
        .map(|j| {
            if src == 1 || tgt == 1 {
                return (0, 0, 0.0);
            }
            let x = j as f64 * (src - 1) as f64 / (tgt - 1) as f64;
            let i0 = (x.floor() as usize).min(src - 1);
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, x - i0 as f64)
        })
        .collect()
}

struct Resampler {
    src: [usize; 3],
    taps: [Vec<(usize, usize, f64)>; 3],
}

impl Resampler {
    fn new(src: [usize; 3], tgt: [usize; 3]) -> Self {
        Resampler {
            src,
            taps: std::array::from_fn(|a| axis_taps(src[a], tgt[a])),
        }
    }

    /// For every target cell: the eight (source token, weight) corners.
    fn corners(&self, t: usize, y: usize, x: usize) -> [(usize, f64); 8] {
        let [_, h, w] = self.src;
        let (t0, t1, ft) = self.taps[0][t];
        let (y0, y1, fy) = self.taps[1][y];
        let (x0, x1, fx) = self.taps[2][x];
        let mut out = [(0, 0.0); 8];
        let mut k = 0;
        for (ti, wt) in [(t0, 1.0 - ft), (t1, ft)] {
            for (yi, wy) in [(y0, 1.0 - fy), (y1, fy)] {
                for (xi, wx) in [(x0, 1.0 - fx), (x1, fx)] {
                    out[k] = ((ti * h + yi) * w + xi, wt * wy * wx);
                    k += 1;
                }
            }
        }
        out
    }
}

fn check_target(target: [usize; 3]) -> Result<()> {
    if target.contains(&0) {
        return Err(Error::Invalid(format!("target grid {target:?} has an empty axis")));
    }
    Ok(())
}

/// Trilinear resampling of the token grid to `target` = (t_g, h_g, w_g) with
/// align-corners coordinates: target index j samples source coordinate
/// j·(n_src − 1)/(n_tgt − 1). Size-1 axes broadcast.
pub fn grid_adapt(tokens: &TokenSequence, target: [usize; 3]) -> Result<FeatureGrid> {
    check_target(target)?;
    let r = Resampler::new(tokens.grid, target);
    let c = tokens.channels;
    let [tg, hg, wg] = target;
    let mut out = Tensor5::zeros([tokens.batch, tg, hg, wg, c]);
    let data = out.data_mut();
    let mut o = 0;
    for b in 0..tokens.batch {
        for t in 0..tg {
            for y in 0..hg {
                for x in 0..wg {
                    let corners = r.corners(t, y, x);
                    for ch in 0..c {
                        data[o + ch] = corners.iter().map(|&(n, wgt)| wgt * tokens.token(b, n)[ch]).sum();
                    }
                    o += c;
                }
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`grid_adapt`]: pulls a gradient on the target grid back to
/// the source tokens.
pub fn grid_adapt_backward(grad_out: &FeatureGrid, source: [usize; 3]) -> Result<TokenSequence> {
    let [batch, tg, hg, wg, c] = grad_out.shape();
    if source.contains(&0) {
        return Err(Error::Invalid("source grid has an empty axis".into()));
    }
    let r = Resampler::new(source, [tg, hg, wg]);
    let n_src: usize = source.iter().product();
    let mut g = vec![0.0; batch * n_src * c];
    let go = grad_out.data();
    let mut o = 0;
    for b in 0..batch {
        for t in 0..tg {
            for y in 0..hg {
                for x in 0..wg {
                    for (n, wgt) in r.corners(t, y, x) {
                        let base = (b * n_src + n) * c;
                        for ch in 0..c {
                            g[base + ch] += wgt * go[o + ch];
                        }
                    }
                    o += c;
                }
            }
        }
    }
    TokenSequence::new(batch, source, c, g)
}

/// Per-batch N_v × N_v cosine-similarity matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSet {
    pub tokens: usize,
    /// one row-major N_v × N_v matrix per batch entry
    pub matrices: Vec<Vec<f64>>,
    /// tokens whose norm was clamped to [`EPS_NORM`]
    pub clamped_tokens: usize,
}

impl GramSet {
    pub fn get(&self, b: usize, i: usize, j: usize) -> f64 {
        self.matrices[b][i * self.tokens + j]
    }
}

struct Normalized {
    unit: Vec<f64>,
    norms: Vec<f64>,
    clamped: usize,
}

fn normalize(batch: &[f64], n: usize, c: usize) -> Normalized {
    let mut unit = vec![0.0; n * c];
    let mut norms = vec![0.0; n];
    let mut clamped = 0;
    for i in 0..n {
        let s = &batch[i * c..(i + 1) * c];
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < EPS_NORM {
            clamped += 1;
        }
        norms[i] = norm.max(EPS_NORM);
        for k in 0..c {
            unit[i * c + k] = s[k] / norms[i];
        }
    }
    Normalized { unit, norms, clamped }
}

fn gram_of(unit: &[f64], n: usize, c: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let dot: f64 = (0..c).map(|k| unit[i * c + k] * unit[j * c + k]).sum();
            let v = dot.clamp(-1.0, 1.0);
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

/// G_ij = ⟨s_i, s_j⟩ / (‖s_i‖ ‖s_j‖) over the flattened tokens of each batch
/// entry.
pub fn gram(features: &FeatureGrid) -> GramSet {
    let [_, t, h, w, c] = features.shape();
    let n = t * h * w;
    let mut clamped = 0;
    let matrices = features
        .batches()
        .map(|b| {
            let u = normalize(b, n, c);
            clamped += u.clamped;
            gram_of(&u.unit, n, c)
        })
        .collect();
    if clamped > 0 {
        tracing::warn!(clamped, "zero-norm tokens clamped in gram");
    }
    GramSet {
        tokens: n,
        matrices,
        clamped_tokens: clamped,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysLoss {
    /// mean over the batch
    pub loss: f64,
    pub per_batch: Vec<f64>,
    /// d loss / d student
    pub grad: FeatureGrid,
    pub clamped_tokens: usize,
}

fn hinge_slope(delta: f64, margin: f64) -> f64 {
    if delta.abs() > margin {
        delta.signum()
    } else {
        0.0
    }
}

/// L = mean_b (1/N_v²) Σ_ij max(0, |G_S − G_T|_ij − m), with its gradient
/// with respect to the student features.
pub fn phys_loss(student: &FeatureGrid, teacher: &FeatureGrid, margin: f64) -> Result<PhysLoss> {
    same_shape(student, teacher, "phys_loss student vs teacher")?;
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::Invalid(format!("margin must be >= 0, got {margin}")));
    }
    let [batch, t, h, w, c] = student.shape();
    let n = t * h * w;
    let scale = 1.0 / (n * n) as f64;
    let mut grad = Tensor5::zeros(student.shape());
    let mut per_batch = Vec::with_capacity(batch);
    let mut clamped = 0;
    for (b, (s, tch)) in student.batches().zip(teacher.batches()).enumerate() {
        let us = normalize(s, n, c);
        let ut = normalize(tch, n, c);
        clamped += us.clamped + ut.clamped;
        let gs = gram_of(&us.unit, n, c);
        let gt = gram_of(&ut.unit, n, c);
        let terms: Vec<f64> = gs.iter().zip(&gt).map(|(a, b)| ((a - b).abs() - margin).max(0.0)).collect();
        per_batch.push(scale * pairwise_sum(&terms));

        let slope: Vec<f64> = gs.iter().zip(&gt).map(|(a, b)| hinge_slope(a - b, margin) * scale).collect();
        let g = &mut grad.data_mut()[b * n * c..(b + 1) * n * c];
        for i in 0..n {
            let mut g_unit = vec![0.0; c];
            for j in 0..n {
                let k_ij = slope[i * n + j] + slope[j * n + i];
                if k_ij != 0.0 {
                    for k in 0..c {
                        g_unit[k] += k_ij * us.unit[j * c + k];
                    }
                }
            }
            let u = &us.unit[i * c..(i + 1) * c];
            let norm = us.norms[i];
            let radial = if norm > EPS_NORM {
                g_unit.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
            } else {
                0.0
            };
            for k in 0..c {
                g[i * c + k] = (g_unit[k] - radial * u[k]) / norm / batch as f64;
            }
        }
    }
    if clamped > 0 {
        tracing::warn!(clamped, "zero-norm tokens clamped in phys_loss");
    }
    Ok(PhysLoss {
        loss: pairwise_sum(&per_batch) / batch as f64,
        per_batch,
        grad,
        clamped_tokens: clamped,
    })
}

/// The full alignment path: hidden tokens → projector → grid adaptation →
/// relational loss against the teacher grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentLoss {
    pub loss: f64,
    pub grad_tokens: TokenSequence,
    /// ordered as [`Projector::params`]
    pub grad_params: Vec<f64>,
}

pub fn alignment_loss(
    hidden: &TokenSequence,
    proj: &Projector,
    teacher: &FeatureGrid,
    margin: f64,
) -> Result<AlignmentLoss> {
    let [_, tg, hg, wg, _] = teacher.shape();
    let projected = project_tokens(hidden, proj)?;
    let student = grid_adapt(&projected, [tg, hg, wg])?;
    let p = phys_loss(&student, teacher, margin)?;
    let g_projected = grid_adapt_backward(&p.grad, projected.grid)?;
    let (grad_tokens, grad_params) = project_tokens_backward(hidden, proj, &g_projected)?;
    Ok(AlignmentLoss {
        loss: p.loss,
        grad_tokens,
        grad_params,
    })
}
