//! Built-in numerical self-test: gradient checks against finite
//! differences, oracle equivalence of the metric kernels on random maps, and
//! the hand-computed fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fusion::{
    consistency_loss, consistency_loss_grad, mask_quality_target, raff, raff_attention_grad,
    total_loss, LossComponents, LossWeights, RoiPrediction,
};
use crate::metrics::{aji, object_f1, panoptic_quality, pq_matched_pairs};
use crate::oracle::{aji_brute_force, central_differences, pq_brute_force, relative_error};
use crate::synth::{perturbed_prediction, random_instance_map};
use crate::types::{BinaryMask, BoundingBox, FeatureMap, Grid, InstanceMap, MASK_SIZE};

/// Finite-difference step for gradient checks.
pub const FD_STEP: f64 = 1e-5;
pub const FIXTURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

/// Random map pair; every other trial the prediction is a perturbed copy of
/// the ground truth so that matches actually occur.
pub fn random_pair(rng: &mut ChaCha8Rng, trial: usize, size: usize, max_instances: usize) -> (InstanceMap, InstanceMap) {
    let gt = random_instance_map(rng, size, size, max_instances);
    let pred = if trial.is_multiple_of(2) {
        random_instance_map(rng, size, size, max_instances)
    } else {
        perturbed_prediction(rng, &gt, 0.2, 2, 1)
    };
    (gt, pred)
}

pub fn aji_oracle_mismatches(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .filter(|&t| {
            let (gt, pred) = random_pair(&mut rng, t, 32, 6);
            aji(&gt, &pred).unwrap().to_bits() != aji_brute_force(&gt, &pred).to_bits()
        })
        .count()
}

pub fn pq_oracle_mismatches(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .filter(|&t| {
            let (gt, pred) = random_pair(&mut rng, t, 32, 6);
            let fast = panoptic_quality(&gt, &pred).unwrap();
            let slow = pq_brute_force(&gt, &pred);
            let pairs: Vec<(u32, u32)> = pq_matched_pairs(&gt, &pred)
                .unwrap()
                .into_iter()
                .map(|(g, p, _)| (g, p))
                .collect();
            let close = |a: f64, b: f64| (a - b).abs() <= FIXTURE_TOL;
            !(close(fast.pq, slow.pq)
                && close(fast.dq, slow.dq)
                && close(fast.sq, slow.sq)
                && fast.counts.tp == slow.tp
                && fast.counts.fp == slow.fp
                && fast.counts.fn_ == slow.fn_
                && pairs == slow.pairs)
        })
        .count()
}

/// Largest relative error of the consistency-loss gradient over `trials`
/// random 4×4 grids.
pub fn consistency_grad_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let sem = Grid::from_fn(4, 4, |_, _| rng.gen_range(0.05..0.95));
            let ins = Grid::from_fn(4, 4, |_, _| rng.gen_range(0.05..0.95));
            let analytic = consistency_loss_grad(&sem, &ins).unwrap();
            let numeric = central_differences(ins.data(), FD_STEP, |x| {
                consistency_loss(&sem, &Grid::new(4, 4, x.to_vec()).unwrap()).unwrap()
            });
            relative_error(analytic.data(), &numeric)
        })
        .fold(0.0, f64::max)
}

fn random_features(rng: &mut ChaCha8Rng, c: usize, w: usize, h: usize) -> FeatureMap {
    FeatureMap::new(c, w, h, (0..c * w * h).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Largest relative error of the single-ROI fusion gradient over `trials`
/// random 8×8 feature maps.
pub fn raff_grad_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let c = rng.gen_range(1..=3);
            let f0 = random_features(&mut rng, c, 8, 8);
            let upstream = random_features(&mut rng, c, 8, 8);
            let (w, h) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
            let bbox = BoundingBox::new(rng.gen_range(0..=8 - w), rng.gen_range(0..=8 - h), w, h).unwrap();
            let logits = Grid::from_fn(MASK_SIZE, MASK_SIZE, |_, _| rng.gen_range(-3.0..3.0));
            let roi = RoiPrediction::new(bbox, logits.clone()).unwrap();
            let analytic = raff_attention_grad(&f0, &roi, &upstream).unwrap();
            let numeric = central_differences(logits.data(), FD_STEP, |x| {
                let roi = RoiPrediction::new(bbox, Grid::new(MASK_SIZE, MASK_SIZE, x.to_vec()).unwrap()).unwrap();
                raff(&f0, &[roi])
                    .unwrap()
                    .values()
                    .iter()
                    .zip(upstream.values())
                    .map(|(a, b)| a * b)
                    .sum()
            });
            relative_error(analytic.data(), &numeric)
        })
        .fold(0.0, f64::max)
}

/// Max deviation from the input when every mask logit is −50.
pub fn raff_residual_deviation(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = random_features(&mut rng, 4, 16, 12);
    let rois: Vec<RoiPrediction> = (0..5)
        .map(|_| {
            let (w, h) = (rng.gen_range(1..=16), rng.gen_range(1..=12));
            let bbox = BoundingBox::new(rng.gen_range(0..=16 - w), rng.gen_range(0..=12 - h), w, h).unwrap();
            RoiPrediction::new(bbox, Grid::filled(MASK_SIZE, MASK_SIZE, -50.0)).unwrap()
        })
        .collect();
    let out = raff(&f0, &rois).unwrap();
    out.values()
        .iter()
        .zip(f0.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn rects(width: usize, height: usize, r: &[(u32, usize, usize, usize, usize)]) -> InstanceMap {
    let mut m = InstanceMap::zeros(width, height);
    for &(label, x0, y0, w, h) in r {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                m.set(x, y, label);
            }
        }
    }
    m
}

/// `(name, computed, expected)` for every hand-derived fixture.
pub fn fixtures() -> Vec<(&'static str, f64, f64)> {
    let gt = rects(8, 4, &[(1, 0, 0, 2, 2), (2, 4, 0, 2, 2)]);
    let pred = rects(8, 4, &[(1, 0, 0, 2, 2), (2, 5, 0, 2, 2), (3, 0, 3, 1, 1)]);
    let aji_fixture = aji(&gt, &pred).unwrap();

    let pq_gt = rects(12, 1, &[(1, 0, 0, 5, 1), (2, 8, 0, 2, 1)]);
    let pq_pred = rects(12, 1, &[(1, 0, 0, 4, 1), (2, 11, 0, 1, 1)]);
    let pq_fixture = panoptic_quality(&pq_gt, &pq_pred).unwrap().pq;

    let f1_gt = rects(8, 2, &[(1, 0, 0, 2, 2), (2, 4, 0, 2, 2)]);
    let f1_pred = rects(8, 2, &[(1, 0, 0, 2, 2), (2, 5, 0, 2, 2)]);
    let f1_fixture = object_f1(&f1_gt, &f1_pred, None).unwrap().0;

    let mp = BinaryMask::new(8, 1, vec![true, true, true, true, false, false, false, false]).unwrap();
    let mt = BinaryMask::new(8, 1, vec![false, false, true, true, true, true, false, false]).unwrap();
    let qua_fixture = mask_quality_target(&mp, &mt).unwrap();

    let sem = Grid::new(2, 2, vec![0.2, 0.4, 0.6, 0.8]).unwrap();
    let ins = Grid::new(2, 2, vec![0.0, 0.5, 0.5, 1.0]).unwrap();
    let cons_fixture = consistency_loss(&sem, &ins).unwrap();

    let ones = LossComponents {
        rpn_obj: 1.0,
        rpn_reg: 1.0,
        det_cls: 1.0,
        det_reg: 1.0,
        det_mask: 1.0,
        det_qua: 1.0,
        semseg1: 1.0,
        semseg2: 1.0,
        sem_cons: 1.0,
    };
    let loss_fixture = total_loss(&ones, &LossWeights::default()).unwrap();

    vec![
        ("fixture_aji_6_11", aji_fixture, 6.0 / 11.0),
        ("fixture_pq_0_4", pq_fixture, 0.4),
        ("fixture_f1_0_5", f1_fixture, 0.5),
        ("fixture_quality_5_12", qua_fixture, 5.0 / 12.0),
        ("fixture_consistency_0_025", cons_fixture, 0.025),
        ("fixture_total_loss_7_2", loss_fixture, 7.2),
    ]
}

/// Runs every check. The run is deterministic.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = vec![
        CheckResult::new("aji_oracle_mismatches_100x32", aji_oracle_mismatches(100, 0xA71) as f64, 0.0),
        CheckResult::new("pq_oracle_mismatches_100x32", pq_oracle_mismatches(100, 0x9E) as f64, 0.0),
        CheckResult::new("consistency_grad_rel_error", consistency_grad_error(20, 0xC0), 1e-6),
        CheckResult::new("raff_grad_rel_error", raff_grad_error(20, 0xFF), 1e-5),
        CheckResult::new("raff_residual_identity", raff_residual_deviation(0x1D), 1e-12),
    ];
    for (name, got, expected) in fixtures() {
        out.push(CheckResult::new(name, (got - expected).abs(), FIXTURE_TOL));
    }
    out
}
