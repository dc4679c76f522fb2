//! Brute-force reference implementations used to cross-check the fast
//! kernels. Everything here recomputes overlaps by scanning pixels per pair
//! and shares no code with [`crate::metrics`].

use std::collections::BTreeSet;

use crate::types::InstanceMap;

fn labels_of(map: &InstanceMap) -> Vec<u32> {
    map.labels()
        .iter()
        .copied()
        .filter(|&l| l != 0)
        .collect::<BTreeSet<u32>>()
        .into_iter()
        .collect()
}

/// `(|A ∩ B|, |A ∪ B|, |A|)` for instance `a` of `ma` and `b` of `mb`.
fn pair_counts(ma: &InstanceMap, a: u32, mb: &InstanceMap, b: u32) -> (u64, u64, u64) {
    let (mut inter, mut union, mut area_a) = (0, 0, 0);
    for (&la, &lb) in ma.labels().iter().zip(mb.labels()) {
        let (ia, ib) = (la == a, lb == b);
        inter += (ia && ib) as u64;
        union += (ia || ib) as u64;
        area_a += ia as u64;
    }
    (inter, union, area_a)
}

fn area(map: &InstanceMap, label: u32) -> u64 {
    map.labels().iter().filter(|&&l| l == label).count() as u64
}

/// AJI by literal evaluation of the defining ratio with an explicit
/// used-flag per prediction.
pub fn aji_brute_force(gt: &InstanceMap, pred: &InstanceMap) -> f64 {
    let gts = labels_of(gt);
    let preds = labels_of(pred);
    if gts.is_empty() && preds.is_empty() {
        return 1.0;
    }
    let mut used = vec![false; preds.len()];
    let mut num = 0u64;
    let mut den = 0u64;
    for &g in &gts {
        let mut best: Option<(usize, f64, u64, u64)> = None;
        for (j, &p) in preds.iter().enumerate() {
            if used[j] {
                continue;
            }
            let (inter, union, _) = pair_counts(gt, g, pred, p);
            if inter == 0 {
                continue;
            }
            let score = inter as f64 / union as f64;
            if best.is_none_or(|(_, s, _, _)| score > s) {
                best = Some((j, score, inter, union));
            }
        }
        match best {
            Some((j, _, inter, union)) => {
                used[j] = true;
                num += inter;
                den += union;
            }
            None => den += area(gt, g),
        }
    }
    for (j, &p) in preds.iter().enumerate() {
        if !used[j] {
            den += area(pred, p);
        }
    }
    num as f64 / den as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct PqOracle {
    pub pq: f64,
    pub dq: f64,
    pub sq: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    /// `(gt label, pred label)` of every IoU > 0.5 pair.
    pub pairs: Vec<(u32, u32)>,
}

/// PQ from an exhaustive scan of all ground-truth/prediction pairs.
/// Does not assume matches are one-to-one; callers check `pairs`.
pub fn pq_brute_force(gt: &InstanceMap, pred: &InstanceMap) -> PqOracle {
    let gts = labels_of(gt);
    let preds = labels_of(pred);
    if gts.is_empty() && preds.is_empty() {
        return PqOracle {
            pq: 1.0,
            dq: 1.0,
            sq: 1.0,
            tp: 0,
            fp: 0,
            fn_: 0,
            pairs: Vec::new(),
        };
    }
    let mut pairs = Vec::new();
    let mut iou_sum = 0.0;
    for &g in &gts {
        for &p in &preds {
            let (inter, union, _) = pair_counts(gt, g, pred, p);
            let iou = inter as f64 / union as f64;
            if iou > 0.5 {
                pairs.push((g, p));
                iou_sum += iou;
            }
        }
    }
    let matched_g: BTreeSet<u32> = pairs.iter().map(|p| p.0).collect();
    let matched_p: BTreeSet<u32> = pairs.iter().map(|p| p.1).collect();
    let tp = pairs.len() as u64;
    let fp = (preds.len() - matched_p.len()) as u64;
    let fn_ = (gts.len() - matched_g.len()) as u64;
    let dq = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
    let sq = if tp == 0 { 0.0 } else { iou_sum / tp as f64 };
    PqOracle {
        pq: dq * sq,
        dq,
        sq,
        tp,
        fp,
        fn_,
        pairs,
    }
}

/// Central differences `(f(x + h e_i) − f(x − h e_i)) / 2h` for every i.
pub fn central_differences(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let plus = f(&probe);
            probe[i] = x[i] - h;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, zero when both vectors vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}
