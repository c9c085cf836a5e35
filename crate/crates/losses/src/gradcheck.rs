//! Central finite-difference checks of every analytic gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::{alignment_loss, phys_loss, Projector, TokenSequence};
use crate::depth::{depth_objective, latent_loss, pixel_loss, structure_loss, temporal_loss, DepthWeights};
use crate::fixtures::{kink_free_margin, l1_kink_distance, random_tensor, random_tokens};
use crate::Tensor5;

pub const STEP: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-4;
/// Sample points closer than this to an L1 or hinge kink are redrawn.
pub const KINK_GAP: f64 = 1e-3;

pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let x0 = x[i];
            x[i] = x0 + h;
            let up = f(&x);
            x[i] = x0 - h;
            let down = f(&x);
            x[i] = x0;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// max_i |a_i − n_i| / max(max_i |n_i|, max_i |a_i|), 0 when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max)
        / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub name: String,
    pub cases: usize,
    pub max_relative_error: f64,
    pub passed: bool,
}

fn with_data(t: &Tensor5, x: &[f64]) -> Tensor5 {
    Tensor5::new(t.shape(), x.to_vec()).expect("same shape")
}

fn report(name: &str, errors: Vec<f64>) -> GradcheckReport {
    let max = errors.iter().fold(0.0f64, |m, e| m.max(*e));
    GradcheckReport {
        name: name.into(),
        cases: errors.len(),
        max_relative_error: max,
        passed: max <= TOLERANCE,
    }
}

/// Random feature-grid shape with N_v ≤ 27.
fn feature_shape(rng: &mut ChaCha8Rng) -> [usize; 5] {
    [
        rng.random_range(1..=2),
        rng.random_range(1..=3),
        rng.random_range(1..=3),
        rng.random_range(2..=3),
        rng.random_range(2..=5),
    ]
}

/// Random depth-map shape within 2×1×4×6×6.
fn depth_shape(rng: &mut ChaCha8Rng) -> [usize; 5] {
    [
        rng.random_range(1..=2),
        1,
        rng.random_range(2..=4),
        rng.random_range(2..=6),
        rng.random_range(2..=6),
    ]
}

fn check_phys(cases: usize, seed: u64) -> GradcheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::new();
    while errors.len() < cases {
        let shape = feature_shape(&mut rng);
        let s = random_tensor(shape, rng.random(), -1.0, 1.0);
        let t = random_tensor(shape, rng.random(), -1.0, 1.0);
        let Some(m) = kink_free_margin(&s, &t, 0.1, KINK_GAP) else {
            continue;
        };
        let analytic = phys_loss(&s, &t, m).unwrap();
        if analytic.loss == 0.0 {
            continue;
        }
        let numeric = central_difference(|x| phys_loss(&with_data(&s, x), &t, m).unwrap().loss, s.data(), STEP);
        errors.push(relative_error(analytic.grad.data(), &numeric));
    }
    report("phys_loss", errors)
}

fn check_alignment_chain(cases: usize, seed: u64) -> GradcheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::new();
    while errors.len() < cases {
        let grid = [rng.random_range(1..=3), rng.random_range(2..=4), rng.random_range(2..=4)];
        let d = rng.random_range(2..=4);
        let hidden = random_tokens(rng.random_range(1..=2), grid, d, rng.random());
        let out = rng.random_range(2..=4);
        let proj = Projector::random(d, 3, out, rng.random());
        let target = [rng.random_range(1..=3), rng.random_range(2..=3), rng.random_range(2..=3)];
        let teacher = random_tensor([hidden.batch, target[0], target[1], target[2], out], rng.random(), -1.0, 1.0);
        let student = crate::align::grid_adapt(&crate::align::project_tokens(&hidden, &proj).unwrap(), target).unwrap();
        let Some(m) = kink_free_margin(&student, &teacher, 0.1, KINK_GAP) else {
            continue;
        };
        let a = alignment_loss(&hidden, &proj, &teacher, m).unwrap();
        if a.loss == 0.0 {
            continue;
        }
        let tokens_at = |x: &[f64]| TokenSequence::new(hidden.batch, hidden.grid, hidden.channels, x.to_vec()).unwrap();
        let n_tok = central_difference(
            |x| alignment_loss(&tokens_at(x), &proj, &teacher, m).unwrap().loss,
            &hidden.data,
            STEP,
        );
        let n_par = central_difference(
            |p| alignment_loss(&hidden, &proj.with_params(p), &teacher, m).unwrap().loss,
            &proj.params(),
            STEP,
        );
        let analytic = [&a.grad_tokens.data[..], &a.grad_params].concat();
        errors.push(relative_error(&analytic, &[n_tok, n_par].concat()));
    }
    report("alignment_chain", errors)
}

fn check_latent(cases: usize, seed: u64) -> GradcheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors = (0..cases)
        .map(|_| {
            let mut shape = depth_shape(&mut rng);
            shape[1] = rng.random_range(1..=3);
            let p = random_tensor(shape, rng.random(), -1.0, 1.0);
            let t = random_tensor(shape, rng.random(), -1.0, 1.0);
            let a = latent_loss(&p, &t).unwrap();
            let n = central_difference(|x| latent_loss(&with_data(&p, x), &t).unwrap().value, p.data(), STEP);
            relative_error(a.grad.data(), &n)
        })
        .collect();
    report("latent_loss", errors)
}

fn depth_pair(rng: &mut ChaCha8Rng, need_gap: bool) -> (Tensor5, Tensor5) {
    loop {
        let shape = depth_shape(rng);
        let p = random_tensor(shape, rng.random(), 1.0, 5.0);
        let t = random_tensor(shape, rng.random(), 1.0, 5.0);
        if !need_gap || l1_kink_distance(&p, &t) >= KINK_GAP {
            return (p, t);
        }
    }
}

type DepthFn = fn(&Tensor5, &Tensor5) -> (f64, Tensor5);

fn check_depth(name: &str, f: DepthFn, l1: bool, cases: usize, seed: u64) -> GradcheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors = (0..cases)
        .map(|_| {
            let (p, t) = depth_pair(&mut rng, l1);
            let (_, g) = f(&p, &t);
            let n = central_difference(|x| f(&with_data(&p, x), &t).0, p.data(), STEP);
            relative_error(g.data(), &n)
        })
        .collect();
    report(name, errors)
}

fn check_depth_objective(cases: usize, seed: u64) -> GradcheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = DepthWeights {
        latent: 1.0,
        pixel: 0.5,
        structure: 0.1,
        temporal: 0.1,
    };
    let errors = (0..cases)
        .map(|_| {
            let (pd, td) = depth_pair(&mut rng, true);
            let [b, _, t, h, w] = pd.shape();
            let pl = random_tensor([b, 2, t, h, w], rng.random(), -1.0, 1.0);
            let tl = random_tensor([b, 2, t, h, w], rng.random(), -1.0, 1.0);
            let a = depth_objective(&pl, &tl, &pd, &td, &beta).unwrap();
            let nl = central_difference(
                |x| depth_objective(&with_data(&pl, x), &tl, &pd, &td, &beta).unwrap().breakdown.total,
                pl.data(),
                STEP,
            );
            let nd = central_difference(
                |x| depth_objective(&pl, &tl, &with_data(&pd, x), &td, &beta).unwrap().breakdown.total,
                pd.data(),
                STEP,
            );
            relative_error(&[a.grad_latent.data(), a.grad_depth.data()].concat(), &[nl, nd].concat())
        })
        .collect();
    report("depth_objective", errors)
}

/// Runs every check on `cases` random small inputs each.
pub fn run_all(cases: usize, seed: u64) -> Vec<GradcheckReport> {
    let pixel: DepthFn = |p, t| {
        let r = pixel_loss(p, t).unwrap();
        (r.value, r.grad)
    };
    let structure: DepthFn = |p, t| {
        let r = structure_loss(p, t).unwrap();
        (r.value, r.grad)
    };
    let temporal: DepthFn = |p, t| {
        let r = temporal_loss(p, t).unwrap();
        (r.value, r.grad)
    };
    vec![
        check_phys(cases, seed),
        check_latent(cases, seed + 1),
        check_depth("pixel_loss", pixel, false, cases, seed + 2),
        check_depth("structure_loss", structure, true, cases, seed + 3),
        check_depth("temporal_loss", temporal, true, cases, seed + 4),
        check_alignment_chain(cases, seed + 5),
        check_depth_objective(cases, seed + 6),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_of_a_cubic() {
        let g = central_difference(|x| x[0].powi(3) + 2.0 * x[0] * x[1], &[1.5, -2.0], 1e-4);
        assert!((g[0] - (3.0 * 2.25 - 4.0)).abs() < 1e-7);
        assert!((g[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn relative_error_scale() {
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!((relative_error(&[1.0, 2.0], &[1.0, 2.002]) - 0.002 / 2.002).abs() < 1e-15);
    }

    #[test]
    fn every_gradient_passes() {
        for r in run_all(20, 11) {
            assert_eq!(r.cases, 20);
            assert!(r.passed, "{} max relative error {:e}", r.name, r.max_relative_error);
        }
    }

    #[test]
    fn a_wrong_gradient_is_caught() {
        let p = random_tensor([1, 1, 2, 3, 3], 1, 1.0, 5.0);
        let t = random_tensor([1, 1, 2, 3, 3], 2, 1.0, 5.0);
        let a = latent_loss(&p, &t).unwrap().grad.scale(1.01);
        let n = central_difference(|x| latent_loss(&with_data(&p, x), &t).unwrap().value, p.data(), STEP);
        assert!(relative_error(a.data(), &n) > TOLERANCE);
    }
}
