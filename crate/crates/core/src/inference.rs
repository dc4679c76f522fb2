//! Test-time fusion of ROI predictions into a single instance map.
//!
//! Predictions below the classification threshold are dropped, the rest are
//! ranked by `s_cls · s_qua`, pasted onto the canvas, and every contested
//! pixel goes to the highest-ranked claimant.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::fusion::{confidence, sigmoid_map};
pub use crate::resize::resize_bilinear;
use crate::types::{BinaryMask, InstanceMap, InstancePrediction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    /// Minimum classification score kept.
    pub beta: f64,
    /// Mask probabilities strictly above this are foreground.
    pub bin_thresh: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            bin_thresh: 0.5,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::OutOfRange {
                name: "beta",
                value: self.beta,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if !(self.bin_thresh > 0.0 && self.bin_thresh < 1.0) {
            return Err(Error::OutOfRange {
                name: "bin_thresh",
                value: self.bin_thresh,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(())
    }
}

/// A full-canvas mask with its fusion confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMask {
    pub mask: BinaryMask,
    pub s_conf: f64,
    pub id: u32,
}

/// Pastes a prediction's 28×28 mask into its box on a blank canvas.
pub fn paste_mask(
    pred: &InstancePrediction,
    canvas_w: usize,
    canvas_h: usize,
    cfg: &InferenceConfig,
) -> Result<BinaryMask> {
    let b = pred.bbox;
    b.check_within(canvas_w, canvas_h)?;
    let probs = sigmoid_map(&pred.mask_logits)?;
    let resized = resize_bilinear(&probs, b.w, b.h)?;
    let mut mask = BinaryMask::zeros(canvas_w, canvas_h);
    for dy in 0..b.h {
        for dx in 0..b.w {
            if resized.get(dx, dy) > cfg.bin_thresh {
                mask.set(b.x + dx, b.y + dy, true);
            }
        }
    }
    Ok(mask)
}

/// Keeps predictions with `s_cls >= beta`, in input order.
pub fn filter_by_score<'a>(
    preds: &'a [InstancePrediction],
    cfg: &InferenceConfig,
) -> Vec<&'a InstancePrediction> {
    preds.iter().filter(|p| p.s_cls >= cfg.beta).collect()
}

fn check_ids(ids: impl Iterator<Item = u32>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if id == 0 {
            return Err(Error::InvalidId(id));
        }
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id));
        }
    }
    Ok(())
}

/// Assigns every claimed pixel to the mask with the highest `s_conf`
/// (lower id on ties) and labels it with that mask's id.
pub fn resolve_overlaps(masks: &[ScoredMask], width: usize, height: usize) -> Result<InstanceMap> {
    check_ids(masks.iter().map(|m| m.id))?;
    for m in masks {
        if m.mask.dims() != (width, height) {
            return Err(Error::dims((width, height), m.mask.dims()));
        }
    }
    let mut ranked: Vec<&ScoredMask> = masks.iter().collect();
    ranked.sort_by(|a, b| b.s_conf.total_cmp(&a.s_conf).then(a.id.cmp(&b.id)));

    let mut labels = vec![0u32; width * height];
    for m in ranked {
        for (label, &bit) in labels.iter_mut().zip(m.mask.bits()) {
            if bit && *label == 0 {
                *label = m.id;
            }
        }
    }
    InstanceMap::new(width, height, labels)
}

/// Threshold, re-weight, paste and resolve. A prediction without a quality
/// score is treated as having quality 1.
pub fn run_inference_fusion(
    preds: &[InstancePrediction],
    canvas_w: usize,
    canvas_h: usize,
    cfg: &InferenceConfig,
) -> Result<InstanceMap> {
    cfg.validate()?;
    check_ids(preds.iter().map(|p| p.id))?;
    let mut scored = Vec::new();
    for p in filter_by_score(preds, cfg) {
        let s_conf = confidence(p.s_cls, p.s_qua.unwrap_or(1.0))?;
        let mask = paste_mask(p, canvas_w, canvas_h, cfg)?;
        if mask.is_empty() {
            continue;
        }
        scored.push(ScoredMask {
            mask,
            s_conf,
            id: p.id,
        });
    }
    resolve_overlaps(&scored, canvas_w, canvas_h)
}
