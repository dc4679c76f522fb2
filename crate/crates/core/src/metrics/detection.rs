use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Overlap;
use crate::error::{Error, Result};
use crate::types::{iou_from_counts, InstanceMap};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PqResult {
    pub pq: f64,
    pub dq: f64,
    pub sq: f64,
    pub counts: MatchCounts,
    pub matched_iou_sum: f64,
}

/// Object-level F1.
///
/// Predictions are processed in `order` (ascending label when `None`).
/// Each one looks at the unclaimed ground-truth instance it overlaps most
/// (lower label on ties) and is a true positive when that overlap covers
/// more than half of the instance, which it then claims.
pub fn object_f1(
    gt: &InstanceMap,
    pred: &InstanceMap,
    order: Option<&[u32]>,
) -> Result<(f64, MatchCounts)> {
    let o = Overlap::new(gt, pred)?;
    let order = match order {
        Some(labels) => Some(order_indices(&o, labels)?),
        None => None,
    };
    Ok(f1_from_overlap(&o, order.as_deref()))
}

/// Converts a label order into prediction indices. The order must be a
/// permutation of the prediction labels.
fn order_indices(o: &Overlap, labels: &[u32]) -> Result<Vec<usize>> {
    let index: HashMap<u32, usize> = o
        .pred_labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, i))
        .collect();
    let mut seen = vec![false; o.n_pred()];
    let mut out = Vec::with_capacity(labels.len());
    for &label in labels {
        let &i = index
            .get(&label)
            .ok_or_else(|| Error::InvalidOrder(format!("unknown prediction label {label}")))?;
        if seen[i] {
            return Err(Error::InvalidOrder(format!("label {label} listed twice")));
        }
        seen[i] = true;
        out.push(i);
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::InvalidOrder(format!(
            "prediction label {} missing from order",
            o.pred_labels[missing]
        )));
    }
    Ok(out)
}

pub(crate) fn f1_from_overlap(o: &Overlap, order: Option<&[usize]>) -> (f64, MatchCounts) {
    let ng = o.n_gt();
    let np = o.n_pred();
    if ng == 0 && np == 0 {
        return (1.0, MatchCounts::default());
    }
    let default_order: Vec<usize>;
    let order = match order {
        Some(o) => o,
        None => {
            default_order = (0..np).collect();
            &default_order
        }
    };

    let mut claimed = vec![false; ng];
    let mut tp = 0u64;
    for &pj in order {
        let mut best: Option<(usize, u64)> = None;
        for &(gi, inter) in &o.by_pred[pj] {
            if claimed[gi] {
                continue;
            }
            if best.is_none_or(|(_, b)| inter > b) {
                best = Some((gi, inter));
            }
        }
        if let Some((gi, inter)) = best {
            if 2 * inter > o.gt_area[gi] {
                claimed[gi] = true;
                tp += 1;
            }
        }
    }
    let counts = MatchCounts {
        tp,
        fp: np as u64 - tp,
        fn_: ng as u64 - tp,
    };
    let f1 = (2 * tp) as f64 / (counts.fn_ + 2 * tp + counts.fp) as f64;
    (f1, counts)
}

/// Panoptic quality with the IoU > 0.5 matching rule.
pub fn panoptic_quality(gt: &InstanceMap, pred: &InstanceMap) -> Result<PqResult> {
    Ok(pq_from_overlap(&Overlap::new(gt, pred)?))
}

/// All `(gt index, pred index, iou)` pairs with IoU > 0.5, in ascending
/// ground-truth order.
///
/// Panics if any instance appears in two pairs; with disjoint instances
/// on each side that cannot happen.
pub(crate) fn pq_matches(o: &Overlap) -> Vec<(usize, usize, f64)> {
    let mut pairs = Vec::new();
    let mut pred_taken = vec![false; o.n_pred()];
    for (gi, row) in o.by_gt.iter().enumerate() {
        let mut gt_taken = false;
        for &(pj, inter) in row {
            let union = o.gt_area[gi] + o.pred_area[pj] - inter;
            if 2 * inter > union {
                assert!(
                    !gt_taken && !pred_taken[pj],
                    "IoU > 0.5 matching is not one-to-one (gt {}, pred {})",
                    o.gt_labels[gi],
                    o.pred_labels[pj]
                );
                gt_taken = true;
                pred_taken[pj] = true;
                pairs.push((gi, pj, iou_from_counts(inter, o.gt_area[gi], o.pred_area[pj])));
            }
        }
    }
    pairs
}

pub(crate) fn pq_from_overlap(o: &Overlap) -> PqResult {
    let ng = o.n_gt() as u64;
    let np = o.n_pred() as u64;
    if ng == 0 && np == 0 {
        return PqResult {
            pq: 1.0,
            dq: 1.0,
            sq: 1.0,
            counts: MatchCounts::default(),
            matched_iou_sum: 0.0,
        };
    }
    let pairs = pq_matches(o);
    let tp = pairs.len() as u64;
    let counts = MatchCounts {
        tp,
        fp: np - tp,
        fn_: ng - tp,
    };
    // summed in value order so the result does not depend on instance ids
    let mut ious: Vec<f64> = pairs.iter().map(|&(_, _, v)| v).collect();
    ious.sort_by(f64::total_cmp);
    let matched_iou_sum: f64 = ious.iter().sum();
    let dq = (2 * tp) as f64 / (2 * tp + counts.fp + counts.fn_) as f64;
    let sq = if tp == 0 {
        0.0
    } else {
        matched_iou_sum / tp as f64
    };
    PqResult {
        pq: dq * sq,
        dq,
        sq,
        counts,
        matched_iou_sum,
    }
}
