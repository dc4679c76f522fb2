//! Instance segmentation metrics over label maps: AJI, object-level F1,
//! PQ/DQ/SQ, pixel Dice and (symmetric) best Dice, plus dataset
//! aggregation.
//!
//! Every metric is derived from exact integer pixel counts held in an
//! [`Overlap`] table; floating point only appears in the final ratios.

mod aggregate;
mod aji;
mod detection;
mod dice;
mod overlap;

use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate, AggregateMetrics, Summary};
pub use aji::{aji, aji_from_overlap};
pub use detection::{object_f1, panoptic_quality, MatchCounts, PqResult};
pub use dice::{best_dice, pixel_dice, sbd};
pub use overlap::Overlap;

use crate::error::Result;
use crate::types::InstanceMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub aji: f64,
    pub dice: f64,
    pub f1: f64,
    pub pq: PqResult,
    pub sbd: Option<f64>,
}

/// Computes every metric for one image pair from a single overlap table.
///
/// With `with_sbd`, SBD is filled in when both maps have instances and left
/// `None` otherwise.
pub fn evaluate_image(gt: &InstanceMap, pred: &InstanceMap, with_sbd: bool) -> Result<ImageMetrics> {
    let o = Overlap::new(gt, pred)?;
    let sbd = if with_sbd && o.n_gt() > 0 && o.n_pred() > 0 {
        // SBD(P, T) with P = prediction
        Some(dice::sbd_from_overlap(&o.transposed())?)
    } else {
        None
    };
    Ok(ImageMetrics {
        aji: aji_from_overlap(&o),
        dice: dice::pixel_dice_from_overlap(&o),
        f1: detection::f1_from_overlap(&o, None).0,
        pq: detection::pq_from_overlap(&o),
        sbd,
    })
}

/// IoU > 0.5 pairs as `(gt label, pred label, iou)`, ascending by gt label.
pub fn pq_matched_pairs(gt: &InstanceMap, pred: &InstanceMap) -> Result<Vec<(u32, u32, f64)>> {
    let o = Overlap::new(gt, pred)?;
    Ok(detection::pq_matches(&o)
        .into_iter()
        .map(|(g, p, v)| (o.gt_labels[g], o.pred_labels[p], v))
        .collect())
}
