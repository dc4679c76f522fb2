//! Randomized metric properties and the counterexamples that bound them.

use instfuse_core::metrics::{
    aji, best_dice, evaluate_image, object_f1, panoptic_quality, pixel_dice, pq_matched_pairs, sbd,
};
use instfuse_core::oracle::{aji_brute_force, pq_brute_force};
use instfuse_core::synth::{nuclei_map, perturbed_prediction, random_instance_map};
use instfuse_core::InstanceMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn row(spans: &[(u32, usize, usize)], width: usize) -> InstanceMap {
    let mut m = InstanceMap::zeros(width, 1);
    for &(label, x0, x1) in spans {
        for x in x0..x1 {
            m.set(x, 0, label);
        }
    }
    m
}

fn shuffle_ids(m: &InstanceMap, rng: &mut ChaCha8Rng) -> InstanceMap {
    let mut ids: Vec<u32> = (1..=5000).collect();
    ids.shuffle(rng);
    m.relabel(|l| if l == 0 { 0 } else { ids[l as usize - 1] })
}

fn pair(rng: &mut ChaCha8Rng, trial: usize) -> (InstanceMap, InstanceMap) {
    match trial % 3 {
        0 => (random_instance_map(rng, 32, 32, 6), random_instance_map(rng, 32, 32, 6)),
        1 => {
            let g = random_instance_map(rng, 32, 32, 6);
            let p = perturbed_prediction(rng, &g, 0.2, 2, 1);
            (g, p)
        }
        _ => {
            let g = nuclei_map(rng, 64, 48, 10);
            let p = perturbed_prediction(rng, &g, 0.2, 2, 2);
            (g, p)
        }
    }
}

#[test]
fn oracles_agree_on_mixed_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for t in 0..150 {
        let (g, p) = pair(&mut rng, t);
        assert_eq!(aji(&g, &p).unwrap().to_bits(), aji_brute_force(&g, &p).to_bits());
        let fast = panoptic_quality(&g, &p).unwrap();
        let slow = pq_brute_force(&g, &p);
        assert!((fast.pq - slow.pq).abs() < 1e-12);
        assert_eq!((fast.counts.tp, fast.counts.fp, fast.counts.fn_), (slow.tp, slow.fp, slow.fn_));
    }
}

#[test]
fn id_free_metrics_ignore_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..200 {
        let (g, p) = pair(&mut rng, t);
        let (g2, p2) = (shuffle_ids(&g, &mut rng), shuffle_ids(&p, &mut rng));
        assert_eq!(panoptic_quality(&g, &p).unwrap(), panoptic_quality(&g2, &p2).unwrap());
        assert_eq!(pixel_dice(&g, &p).unwrap(), pixel_dice(&g2, &p2).unwrap());
        if g.max_label() > 0 && p.max_label() > 0 {
            assert_eq!(sbd(&p, &g).unwrap(), sbd(&p2, &g2).unwrap());
        }
    }
}

#[test]
fn order_preserving_relabeling_keeps_every_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for t in 0..200 {
        let (g, p) = pair(&mut rng, t);
        let (a, b) = (rng.gen_range(1..50), rng.gen_range(0..1000));
        let g2 = g.relabel(|l| if l == 0 { 0 } else { a * l + b });
        let p2 = p.relabel(|l| if l == 0 { 0 } else { 3 * l + 7 });
        assert_eq!(evaluate_image(&g, &p, false).unwrap(), evaluate_image(&g2, &p2, false).unwrap());
    }
}

// AJI visits ground truth in ascending label order, so swapping two ids can
// change which instance gets a contested prediction first.
#[test]
fn aji_depends_on_ground_truth_order() {
    // ids 1 and 2 both prefer prediction 1
    let gt = row(&[(1, 0, 6), (2, 6, 11)], 11);
    let pred = row(&[(2, 0, 1), (1, 4, 11)], 11);
    assert_eq!(aji(&gt, &pred).unwrap(), 2.0 / 17.0);
    let swapped = gt.relabel(|l| [0, 2, 1][l as usize]);
    assert_eq!(aji(&swapped, &pred).unwrap(), 6.0 / 13.0);
}

// F1 breaks equal-intersection ties by the lower ground-truth id.
#[test]
fn f1_depends_on_tie_break_ids() {
    let gt = row(&[(1, 0, 3), (2, 3, 13)], 13);
    let pred = row(&[(1, 1, 5)], 13);
    let (f1, c) = object_f1(&gt, &pred, None).unwrap();
    assert_eq!((c.tp, c.fp, c.fn_), (1, 0, 1));
    assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
    let swapped = gt.relabel(|l| [0, 2, 1][l as usize]);
    assert_eq!(object_f1(&swapped, &pred, None).unwrap().0, 0.0);
}

// Removing a prediction that is a PQ match can raise AJI: the ground truth
// that had greedily taken it falls back to a better-ratio candidate.
#[test]
fn aji_can_rise_when_a_matched_prediction_is_removed() {
    let mut gt = InstanceMap::zeros(23, 2);
    let mut pred = InstanceMap::zeros(23, 2);
    for x in 0..12 {
        gt.set(x, 0, 1);
    }
    for x in 12..17 {
        gt.set(x, 0, 2);
    }
    for x in 8..17 {
        pred.set(x, 0, 1);
    }
    for x in 0..8 {
        pred.set(x, 0, 2);
    }
    for x in 0..23 {
        pred.set(x, 1, 2);
    }
    // prediction 1 matches ground truth 2 at IoU 5/9
    let pairs = pq_matched_pairs(&gt, &pred).unwrap();
    assert_eq!(pairs.len(), 1);
    assert_eq!((pairs[0].0, pairs[0].1), (2, 1));
    let before = aji(&gt, &pred).unwrap();
    let after = aji(&gt, &pred.relabel(|l| if l == 1 { 0 } else { l })).unwrap();
    assert_eq!(before, 4.0 / 53.0);
    assert_eq!(after, 8.0 / 40.0);
    assert!(after > before);
}

#[test]
fn removing_a_match_never_helps_f1_or_pq() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for t in 0..600 {
        let (g, p) = pair(&mut rng, t);
        for (_, victim, _) in pq_matched_pairs(&g, &p).unwrap() {
            let cut = p.relabel(|l| if l == victim { 0 } else { l });
            assert!(panoptic_quality(&g, &cut).unwrap().pq <= panoptic_quality(&g, &p).unwrap().pq);
            assert!(object_f1(&g, &cut, None).unwrap().0 <= object_f1(&g, &p, None).unwrap().0);
            checked += 1;
        }
    }
    assert!(checked > 500);
}

#[test]
fn self_comparison_is_perfect() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let m = random_instance_map(&mut rng, 24, 24, 6);
        if m.max_label() == 0 {
            continue;
        }
        let e = evaluate_image(&m, &m, true).unwrap();
        assert_eq!((e.aji, e.dice, e.f1, e.pq.pq, e.sbd), (1.0, 1.0, 1.0, 1.0, Some(1.0)));
    }
}

#[test]
fn best_dice_bounds_sbd() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for t in 0..200 {
        let (g, p) = pair(&mut rng, t);
        if g.max_label() == 0 || p.max_label() == 0 {
            continue;
        }
        let s = sbd(&p, &g).unwrap();
        assert!(best_dice(&p, &g).unwrap() >= s);
        assert!(best_dice(&g, &p).unwrap() >= s);
        assert_eq!(s, sbd(&g, &p).unwrap());
    }
}
