use proptest::prelude::*;

use super::*;
use crate::fixtures::{random_depth_pair, random_tensor, synthetic_depth_prediction};

fn frame_values(d: &Tensor5, b: usize, t: usize) -> Vec<f64> {
    let [_, _, _, h, w] = d.shape();
    let mut v = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            v.push(d.get([b, 0, t, y, x]));
        }
    }
    v
}

/// Cramer's rule on the 2×2 normal equations.
fn normal_equations(p: &[f64], d: &[f64]) -> (f64, f64) {
    let n = p.len() as f64;
    let (mut spp, mut sp, mut spd, mut sd) = (0.0, 0.0, 0.0, 0.0);
    for (a, b) in p.iter().zip(d) {
        spp += a * a;
        sp += a;
        spd += a * b;
        sd += b;
    }
    let det = spp * n - sp * sp;
    ((spd * n - sp * sd) / det, (spp * sd - sp * spd) / det)
}

fn pixel_oracle(pred: &Tensor5, target: &Tensor5) -> f64 {
    let [b, _, t, _, _] = pred.shape();
    let mut total = 0.0;
    for bi in 0..b {
        for ti in 0..t {
            let (p, d) = (frame_values(pred, bi, ti), frame_values(target, bi, ti));
            let (s, c) = normal_equations(&p, &d);
            let mut sq = 0.0;
            for k in 0..p.len() {
                sq += (s * p[k] + c - d[k]).powi(2);
            }
            total += sq / p.len() as f64;
        }
    }
    total / (b * t) as f64
}

#[test]
fn latent_examples_and_oracle() {
    let (p, t, _, _) = random_depth_pair([2, 3, 2, 3, 4], 1);
    assert_eq!(latent_loss(&p, &p).unwrap().value, 0.0);
    let shifted = p.map(|v| v + 0.75);
    assert!((latent_loss(&shifted, &p).unwrap().value - 0.5625).abs() <= 1e-12);
    let mut sum = 0.0;
    for i in 0..p.len() {
        sum += (p.data()[i] - t.data()[i]).powi(2);
    }
    assert!((latent_loss(&p, &t).unwrap().value - sum / p.len() as f64).abs() <= 1e-7);
    let wrong = random_tensor([2, 3, 2, 3, 3], 2, -1.0, 1.0);
    assert!(matches!(latent_loss(&p, &wrong), Err(Error::Shape(_))));
}

#[test]
fn ssi_fit_examples() {
    let d: Vec<f64> = (0..12).map(|k| 1.0 + 0.3 * k as f64 + 0.05 * (k * k) as f64).collect();
    let f = ssi_fit(&d, &d).unwrap();
    assert!((f.scale - 1.0).abs() <= 1e-12 && f.shift.abs() <= 1e-12 && !f.degenerate);
    let p: Vec<f64> = d.iter().map(|v| 2.0 * v + 3.0).collect();
    let f = ssi_fit(&p, &d).unwrap();
    assert!((f.scale - 0.5).abs() <= 1e-12 && (f.shift + 1.5).abs() <= 1e-12);
}

#[test]
fn ssi_fit_matches_the_normal_equations() {
    for seed in 0..10 {
        let (_, _, p, d) = random_depth_pair([1, 1, 1, 8, 8], seed);
        let f = ssi_fit(p.data(), d.data()).unwrap();
        let (s, c) = normal_equations(p.data(), d.data());
        assert!((f.scale - s).abs() <= 1e-9 && (f.shift - c).abs() <= 1e-9);
    }
}

#[test]
fn ssi_fit_degenerate_and_invalid() {
    let f = ssi_fit(&[2.0; 6], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    assert_eq!(f, SsiFit { scale: 0.0, shift: 3.5, degenerate: true });
    assert!(matches!(ssi_fit(&[1.0], &[1.0]), Err(Error::Invalid(_))));
    assert!(matches!(ssi_fit(&[1.0, 2.0], &[1.0]), Err(Error::Shape(_))));
    let constant = Tensor5::filled([1, 1, 2, 3, 3], 4.0);
    let target = random_tensor([1, 1, 2, 3, 3], 3, 1.0, 5.0);
    let p = pixel_loss(&constant, &target).unwrap();
    assert!(p.fits.iter().all(|f| f.degenerate));
    assert!(p.grad.data().iter().all(|g| *g == 0.0));
    assert!(p.value.is_finite() && p.value > 0.0);
}

#[test]
fn pixel_loss_examples_and_oracle() {
    let (_, _, p, d) = random_depth_pair([2, 1, 3, 5, 4], 4);
    let flat = Tensor5::filled(d.shape(), 2.5);
    assert_eq!(pixel_loss(&p, &flat).unwrap().value, 0.0);
    assert!((pixel_loss(&p, &d).unwrap().value - pixel_oracle(&p, &d)).abs() <= 1e-7);
    let latent = random_tensor([1, 2, 2, 3, 3], 5, 1.0, 2.0);
    assert!(matches!(pixel_loss(&latent, &latent), Err(Error::Shape(_))));
    assert_eq!(pixel_loss(&p, &d).unwrap().fits.len(), 6);
}

#[test]
fn synthetic_depth_head_is_near_affine() {
    let (_, _, _, d) = random_depth_pair([1, 1, 4, 6, 6], 6);
    let exact = synthetic_depth_prediction(&d, 0.0, 7);
    assert!(pixel_loss(&exact, &d).unwrap().value <= 1e-12);
    let noisy = pixel_loss(&synthetic_depth_prediction(&d, 0.1, 7), &d).unwrap().value;
    let far = pixel_loss(&synthetic_depth_prediction(&d, 1.0, 7), &d).unwrap().value;
    assert!(noisy > 0.0 && noisy < far);
}

#[test]
fn structure_loss_ignores_offsets() {
    let (_, _, p, _) = random_depth_pair([2, 1, 2, 4, 5], 8);
    assert_eq!(structure_loss(&p, &p).unwrap().value, 0.0);
    let shifted = p.map(|v| v + 1.25);
    assert!(structure_loss(&shifted, &p).unwrap().value <= 1e-12);
    let thin = Tensor5::filled([1, 1, 1, 1, 4], 1.0);
    assert!(matches!(structure_loss(&thin, &thin), Err(Error::Invalid(_))));
}

#[test]
fn structure_loss_step_edge_by_hand() {
    let target = Tensor5::from_fn([1, 1, 1, 4, 4], |i| if i[4] >= 2 { 3.0 } else { 1.0 });
    let pred = Tensor5::from_fn([1, 1, 1, 4, 4], |i| 1.0 + 0.5 * i[4] as f64 + 0.25 * i[3] as f64);
    let mut sum = 0.0;
    for y in 0..4 {
        for x in 0..4 {
            let at = |t: &Tensor5, yy: usize, xx: usize| t.get([0, 0, 0, yy, xx]);
            if x < 3 {
                sum += ((at(&pred, y, x + 1) - at(&pred, y, x)) - (at(&target, y, x + 1) - at(&target, y, x))).abs();
            }
            if y < 3 {
                sum += ((at(&pred, y + 1, x) - at(&pred, y, x)) - (at(&target, y + 1, x) - at(&target, y, x))).abs();
            }
        }
    }
    // 4 rows × (0.5 + 1.5 + 0.5) + 12 vertical × 0.25 = 13
    assert!((sum - 13.0).abs() <= 1e-12);
    assert!((structure_loss(&pred, &target).unwrap().value - sum / 16.0).abs() <= 1e-12);
}

#[test]
fn temporal_loss_examples() {
    let (_, _, p, _) = random_depth_pair([2, 1, 3, 3, 3], 9);
    let offsets = [0.5, -2.0];
    let shifted = Tensor5::from_fn(p.shape(), |i| p.get(i) + offsets[i[0]]);
    assert!(temporal_loss(&shifted, &p).unwrap().value <= 1e-12);
    let static_a = Tensor5::from_fn([1, 1, 4, 2, 3], |i| (i[3] * 3 + i[4]) as f64);
    let static_b = Tensor5::from_fn([1, 1, 4, 2, 3], |i| 5.0 - i[4] as f64);
    assert_eq!(temporal_loss(&static_a, &static_b).unwrap().value, 0.0);
    let ramp = |a: f64| Tensor5::from_fn([2, 1, 5, 2, 2], move |i| 1.0 + a * i[2] as f64 + 0.1 * i[3] as f64);
    let v = temporal_loss(&ramp(0.3), &ramp(-0.45)).unwrap().value;
    assert!((v - 0.75).abs() <= 1e-12);
    let single = Tensor5::filled([1, 1, 1, 2, 2], 1.0);
    assert!(matches!(temporal_loss(&single, &single), Err(Error::Invalid(_))));
}

fn components(pl: &Tensor5, tl: &Tensor5, pd: &Tensor5, td: &Tensor5) -> [f64; 4] {
    [
        latent_loss(pl, tl).unwrap().value,
        pixel_loss(pd, td).unwrap().value,
        structure_loss(pd, td).unwrap().value,
        temporal_loss(pd, td).unwrap().value,
    ]
}

#[test]
fn depth_objective_weights() {
    let (pl, tl, pd, td) = random_depth_pair([2, 2, 3, 4, 4], 10);
    let zero = DepthWeights { latent: 0.0, pixel: 0.0, structure: 0.0, temporal: 0.0 };
    let o = depth_objective(&pl, &tl, &pd, &td, &zero).unwrap();
    assert_eq!(o.breakdown.total, 0.0);
    assert!(o.grad_depth.data().iter().chain(o.grad_latent.data()).all(|g| *g == 0.0));
    let c = components(&pl, &tl, &pd, &td);
    for k in 0..4 {
        let mut w = [0.0; 4];
        w[k] = 1.0;
        let beta = DepthWeights { latent: w[0], pixel: w[1], structure: w[2], temporal: w[3] };
        assert_eq!(depth_objective(&pl, &tl, &pd, &td, &beta).unwrap().breakdown.total, c[k]);
    }
    let beta = DepthWeights { latent: 1.0, pixel: 0.5, structure: 0.1, temporal: 0.1 };
    let total = depth_objective(&pl, &tl, &pd, &td, &beta).unwrap().breakdown.total;
    let expected = c[0] + 0.5 * c[1] + 0.1 * c[2] + 0.1 * c[3];
    assert!((total - expected).abs() <= 1e-7);
    let neg = DepthWeights { pixel: -0.5, ..DepthWeights::default() };
    assert!(matches!(depth_objective(&pl, &tl, &pd, &td, &neg), Err(Error::Invalid(_))));
}

#[test]
fn default_weights() {
    let d = DepthWeights::default();
    assert_eq!([d.latent, d.pixel, d.structure, d.temporal], [1.0, 1.0, 0.5, 0.5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pixel_loss_is_affine_invariant(seed in 0u64..10_000, a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let (_, _, p, d) = random_depth_pair([1, 1, 2, 4, 5], seed);
        let moved = p.map(|v| a * v + b);
        let base = pixel_loss(&p, &d).unwrap().value;
        prop_assert!((pixel_loss(&moved, &d).unwrap().value - base).abs() <= 1e-9);
        let target = d.map(|v| a * v + b);
        prop_assert!(pixel_loss(&target, &d).unwrap().value <= 1e-9);
    }

    #[test]
    fn every_term_is_non_negative(seed in 0u64..10_000) {
        let (pl, tl, pd, td) = random_depth_pair([1, 2, 3, 3, 4], seed);
        let c = components(&pl, &tl, &pd, &td);
        prop_assert!(c.iter().all(|v| *v >= 0.0));
        let o = depth_objective(&pl, &tl, &pd, &td, &DepthWeights::default()).unwrap();
        prop_assert!(o.breakdown.total >= 0.0);
    }

    #[test]
    fn batch_permutation_is_equivariant(seed in 0u64..10_000) {
        let (pl, tl, pd, td) = random_depth_pair([3, 2, 2, 3, 3], seed);
        let order = [1, 2, 0];
        let perm = |t: &Tensor5| t.permute_batch(&order).unwrap();
        let a = depth_objective(&pl, &tl, &pd, &td, &DepthWeights::default()).unwrap();
        let b = depth_objective(&perm(&pl), &perm(&tl), &perm(&pd), &perm(&td), &DepthWeights::default()).unwrap();
        prop_assert!((a.breakdown.total - b.breakdown.total).abs() <= 1e-12);
        for (x, y) in perm(&a.grad_depth).data().iter().zip(b.grad_depth.data()) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
    }
}
