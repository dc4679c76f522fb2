//! Panoptic feature fusion kernels: residual attention fusion of ROI mask
//! probabilities into a semantic feature map, the mask quality target,
//! confidence re-weighting, the semantic consistency loss and the weighted
//! training loss, and the input fusion of the mask quality head.

use crate::error::{Error, Result};
use crate::resize::{resize_bilinear, resize_bilinear_adjoint};
use crate::types::{
    check_unit, dice_pair, iou, BinaryMask, BoundingBox, FeatureMap, Grid, InstancePrediction,
    MASK_SIZE,
};

/// Channels of an ROI feature patch entering the quality head.
pub const ROI_CHANNELS: usize = 256;
/// Spatial size of an ROI feature patch.
pub const ROI_SIZE: usize = 14;
/// Channel of a two-channel mask prediction that holds the foreground.
pub const FOREGROUND_CHANNEL: usize = 1;
/// Channels after concatenating the space-to-depth mask onto ROI features.
pub const QUALITY_INPUT_CHANNELS: usize = ROI_CHANNELS + 4;

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Elementwise logistic function. Rejects non-finite input.
pub fn sigmoid_map(logits: &Grid) -> Result<Grid> {
    if let Some(index) = logits.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Grid::new(
        logits.width(),
        logits.height(),
        logits.data().iter().map(|&x| sigmoid(x)).collect(),
    )
}

/// Box plus foreground mask logits of one ROI.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiPrediction {
    pub bbox: BoundingBox,
    pub mask_logits: Grid,
}

impl RoiPrediction {
    pub fn new(bbox: BoundingBox, mask_logits: Grid) -> Result<Self> {
        if mask_logits.dims() != (MASK_SIZE, MASK_SIZE) {
            return Err(Error::ShapeMismatch {
                expected: format!("{MASK_SIZE}x{MASK_SIZE}"),
                actual: format!("{}x{}", mask_logits.width(), mask_logits.height()),
            });
        }
        if bbox.w == 0 || bbox.h == 0 {
            return Err(Error::EmptyBox);
        }
        Ok(Self { bbox, mask_logits })
    }

    /// `1 + R(σ(M), (w, h))`, the multiplicative attention over the box.
    fn attention(&self) -> Result<Grid> {
        let probs = sigmoid_map(&self.mask_logits)?;
        let mut a = resize_bilinear(&probs, self.bbox.w, self.bbox.h)?;
        a.data_mut().iter_mut().for_each(|v| *v += 1.0);
        Ok(a)
    }
}

impl From<&InstancePrediction> for RoiPrediction {
    fn from(p: &InstancePrediction) -> Self {
        Self {
            bbox: p.bbox,
            mask_logits: p.mask_logits.clone(),
        }
    }
}

/// Residual attention feature fusion.
///
/// ROIs are applied in list order, each scaling the current features inside
/// its box by `1 + R(σ(M_i), (w_i, h_i))`, the same factor for every channel.
/// Pixels outside all boxes are returned untouched.
pub fn raff(f0: &FeatureMap, rois: &[RoiPrediction]) -> Result<FeatureMap> {
    for roi in rois {
        roi.bbox.check_within(f0.width(), f0.height())?;
    }
    let mut out = f0.clone();
    let (channels, width, height) = out.shape();
    let plane = width * height;
    for roi in rois {
        let attention = roi.attention()?;
        let b = roi.bbox;
        let values = out.values_mut();
        for c in 0..channels {
            for dy in 0..b.h {
                let row = c * plane + (b.y + dy) * width + b.x;
                let factors = &attention.data()[dy * b.w..(dy + 1) * b.w];
                for (v, f) in values[row..row + b.w].iter_mut().zip(factors) {
                    *v *= f;
                }
            }
        }
    }
    Ok(out)
}

/// Gradient of `sum(upstream ⊙ raff(f0, [roi]))` with respect to the ROI's
/// mask logits.
pub fn raff_attention_grad(f0: &FeatureMap, roi: &RoiPrediction, upstream: &FeatureMap) -> Result<Grid> {
    f0.check_same_shape(upstream)?;
    roi.bbox.check_within(f0.width(), f0.height())?;
    let b = roi.bbox;
    let grad_attention = Grid::from_fn(b.w, b.h, |dx, dy| {
        (0..f0.channels())
            .map(|c| upstream.get(c, b.x + dx, b.y + dy) * f0.get(c, b.x + dx, b.y + dy))
            .sum()
    });
    let mut grad = resize_bilinear_adjoint(&grad_attention, MASK_SIZE, MASK_SIZE)?;
    for (g, &m) in grad.data_mut().iter_mut().zip(roi.mask_logits.data()) {
        *g *= sigmoid(m) * sigmoid(-m);
    }
    Ok(grad)
}

/// Mask quality target: the mean of Dice and IoU between a predicted mask
/// and its ground truth.
pub fn mask_quality_target(mp: &BinaryMask, mt: &BinaryMask) -> Result<f64> {
    let dice = dice_pair(mp, mt)?;
    let jaccard = iou(mp, mt)?;
    if mp.is_empty() && mt.is_empty() {
        return Err(Error::BothEmpty);
    }
    Ok((dice + jaccard) * 0.5)
}

/// Inference confidence `s_cls · s_qua`.
pub fn confidence(s_cls: f64, s_qua: f64) -> Result<f64> {
    check_unit("s_cls", s_cls)?;
    check_unit("s_qua", s_qua)?;
    Ok(s_cls * s_qua)
}

fn check_probability_pair(p_sem: &Grid, p_ins: &Grid) -> Result<()> {
    p_sem.check_same_dims(p_ins)?;
    if p_sem.data().is_empty() {
        return Err(Error::EmptyInput("probability grid"));
    }
    for &v in p_sem.data() {
        check_unit("p_sem", v)?;
    }
    for &v in p_ins.data() {
        check_unit("p_ins", v)?;
    }
    Ok(())
}

/// Mean squared difference between the two branches' foreground
/// probability maps.
pub fn consistency_loss(p_sem: &Grid, p_ins: &Grid) -> Result<f64> {
    check_probability_pair(p_sem, p_ins)?;
    let n = p_sem.data().len() as f64;
    let sum: f64 = p_sem
        .data()
        .iter()
        .zip(p_ins.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n)
}

/// `∂L/∂p_ins = 2 (p_ins − p_sem) / N`
pub fn consistency_loss_grad(p_sem: &Grid, p_ins: &Grid) -> Result<Grid> {
    check_probability_pair(p_sem, p_ins)?;
    let n = p_sem.data().len() as f64;
    Grid::new(
        p_sem.width(),
        p_sem.height(),
        p_sem
            .data()
            .iter()
            .zip(p_ins.data())
            .map(|(s, i)| 2.0 * (i - s) / n)
            .collect(),
    )
}

/// Every scalar loss term of the training objective.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossComponents {
    pub rpn_obj: f64,
    pub rpn_reg: f64,
    pub det_cls: f64,
    pub det_reg: f64,
    pub det_mask: f64,
    pub det_qua: f64,
    pub semseg1: f64,
    pub semseg2: f64,
    pub sem_cons: f64,
}

impl LossComponents {
    fn named(&self) -> [(&'static str, f64); 9] {
        [
            ("rpn_obj", self.rpn_obj),
            ("rpn_reg", self.rpn_reg),
            ("det_cls", self.det_cls),
            ("det_reg", self.det_reg),
            ("det_mask", self.det_mask),
            ("det_qua", self.det_qua),
            ("semseg1", self.semseg1),
            ("semseg2", self.semseg2),
            ("sem_cons", self.sem_cons),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Weight on the two semantic segmentation losses.
    pub alpha1: f64,
    /// Weight on the consistency loss.
    pub alpha2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha1: 0.1,
            alpha2: 1.0,
        }
    }
}

fn check_nonnegative(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::OutOfRange {
            name,
            value: v,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(())
}

/// Weighted sum of all loss terms.
pub fn total_loss(c: &LossComponents, w: &LossWeights) -> Result<f64> {
    for (name, v) in c.named() {
        check_nonnegative(name, v)?;
    }
    check_nonnegative("alpha1", w.alpha1)?;
    check_nonnegative("alpha2", w.alpha2)?;
    Ok(c.rpn_obj
        + c.rpn_reg
        + c.det_cls
        + c.det_reg
        + c.det_mask
        + c.det_qua
        + w.alpha1 * (c.semseg1 + c.semseg2)
        + w.alpha2 * c.sem_cons)
}

/// Builds the quality-head input: the 256×14×14 ROI features followed by
/// the foreground channel of a 2×28×28 mask prediction folded into 4×14×14.
///
/// Output channel `256 + 2·dy + dx` at `(bx, by)` holds mask pixel
/// `(2·bx + dx, 2·by + dy)`.
pub fn quality_input_fusion(roi_features: &FeatureMap, mask_logits: &FeatureMap) -> Result<FeatureMap> {
    if roi_features.shape() != (ROI_CHANNELS, ROI_SIZE, ROI_SIZE) {
        return Err(Error::ShapeMismatch {
            expected: format!("{ROI_CHANNELS}x{ROI_SIZE}x{ROI_SIZE}"),
            actual: format!("{:?}", roi_features.shape()),
        });
    }
    if mask_logits.shape() != (2, MASK_SIZE, MASK_SIZE) {
        return Err(Error::ShapeMismatch {
            expected: format!("2x{MASK_SIZE}x{MASK_SIZE}"),
            actual: format!("{:?}", mask_logits.shape()),
        });
    }
    let mut values = Vec::with_capacity(QUALITY_INPUT_CHANNELS * ROI_SIZE * ROI_SIZE);
    values.extend_from_slice(roi_features.values());
    for dy in 0..2 {
        for dx in 0..2 {
            for by in 0..ROI_SIZE {
                for bx in 0..ROI_SIZE {
                    values.push(mask_logits.get(FOREGROUND_CHANNEL, 2 * bx + dx, 2 * by + dy));
                }
            }
        }
    }
    FeatureMap::new(QUALITY_INPUT_CHANNELS, ROI_SIZE, ROI_SIZE, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_features(rng: &mut ChaCha8Rng, c: usize, w: usize, h: usize) -> FeatureMap {
        FeatureMap::new(c, w, h, (0..c * w * h).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
    }

    fn constant_roi(bbox: BoundingBox, logit: f64) -> RoiPrediction {
        RoiPrediction::new(bbox, Grid::filled(MASK_SIZE, MASK_SIZE, logit)).unwrap()
    }

    #[test]
    fn sigmoid_values() {
        let g = Grid::new(4, 1, vec![0.0, 50.0, -50.0, 3f64.ln()]).unwrap();
        let s = sigmoid_map(&g).unwrap();
        assert_eq!(s.get(0, 0), 0.5);
        assert!((s.get(1, 0) - 1.0).abs() <= 1e-15);
        assert!(s.get(2, 0).abs() <= 1e-15 && s.get(2, 0) > 0.0);
        assert!((s.get(3, 0) - 0.75).abs() <= 1e-15);
        let bad = Grid::new(1, 1, vec![f64::NAN]).unwrap();
        assert!(sigmoid_map(&bad).is_err());
    }

    #[test]
    fn raff_zero_attention_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f0 = random_features(&mut rng, 3, 10, 8);
        let out = raff(&f0, &[constant_roi(BoundingBox::new(2, 1, 5, 6).unwrap(), -1e6)]).unwrap();
        for (a, b) in out.values().iter().zip(f0.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn raff_half_attention_scales_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f0 = random_features(&mut rng, 2, 9, 7);
        let b = BoundingBox::new(3, 2, 4, 3).unwrap();
        let out = raff(&f0, &[constant_roi(b, 0.0)]).unwrap();
        for c in 0..2 {
            for y in 0..7 {
                for x in 0..9 {
                    let expected = if b.contains(x, y) { f0.get(c, x, y) * 1.5 } else { f0.get(c, x, y) };
                    assert_eq!(out.get(c, x, y), expected);
                }
            }
        }
    }

    #[test]
    fn raff_overlap_is_sequential() {
        let f0 = FeatureMap::new(1, 6, 6, vec![1.0; 36]).unwrap();
        let a = BoundingBox::new(0, 0, 4, 4).unwrap();
        let b = BoundingBox::new(2, 2, 4, 4).unwrap();
        let out = raff(&f0, &[constant_roi(a, 0.0), constant_roi(b, 0.0)]).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                let k = a.contains(x, y) as i32 + b.contains(x, y) as i32;
                assert_eq!(out.get(0, x, y), 1.5f64.powi(k));
            }
        }
    }

    #[test]
    fn raff_rejects_out_of_bounds_box() {
        let f0 = FeatureMap::zeros(1, 4, 4);
        let r = constant_roi(BoundingBox::new(2, 2, 3, 1).unwrap(), 0.0);
        assert!(matches!(raff(&f0, &[r]), Err(Error::BoxOutOfBounds { .. })));
        assert_eq!(raff(&f0, &[]).unwrap(), f0);
    }

    #[test]
    fn raff_grad_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f0 = random_features(&mut rng, 2, 8, 8);
        let b = BoundingBox::new(1, 1, 6, 5).unwrap();
        let zero = FeatureMap::zeros(2, 8, 8);
        let g = raff_attention_grad(&f0, &constant_roi(b, 0.3), &zero).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));

        let up = random_features(&mut rng, 2, 8, 8);
        for logit in [50.0, -50.0] {
            let g = raff_attention_grad(&f0, &constant_roi(b, logit), &up).unwrap();
            assert!(g.data().iter().all(|v| v.abs() <= 1e-15));
        }
        let wrong = FeatureMap::zeros(1, 8, 8);
        assert!(raff_attention_grad(&f0, &constant_roi(b, 0.0), &wrong).is_err());
    }

    #[test]
    fn raff_grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f0 = random_features(&mut rng, 3, 8, 8);
        let up = random_features(&mut rng, 3, 8, 8);
        let b = BoundingBox::new(1, 2, 6, 5).unwrap();
        let logits = Grid::from_fn(MASK_SIZE, MASK_SIZE, |_, _| rng.gen_range(-3.0..3.0));
        let roi = RoiPrediction::new(b, logits.clone()).unwrap();
        let analytic = raff_attention_grad(&f0, &roi, &up).unwrap();

        let objective = |m: &Grid| -> f64 {
            let out = raff(&f0, &[RoiPrediction::new(b, m.clone()).unwrap()]).unwrap();
            out.values().iter().zip(up.values()).map(|(a, u)| a * u).sum()
        };
        let h = 1e-5;
        let mut num = Vec::new();
        for i in 0..logits.data().len() {
            let mut plus = logits.clone();
            plus.data_mut()[i] += h;
            let mut minus = logits.clone();
            minus.data_mut()[i] -= h;
            num.push((objective(&plus) - objective(&minus)) / (2.0 * h));
        }
        let diff: f64 = analytic.data().iter().zip(&num).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.data().iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / scale < 1e-5, "relative error {}", diff / scale);
    }

    #[test]
    fn quality_target_cases() {
        let mut a = BinaryMask::zeros(4, 2);
        let mut b = BinaryMask::zeros(4, 2);
        for x in 0..4 {
            a.set(x, 0, true);
        }
        b.set(2, 0, true);
        b.set(3, 0, true);
        b.set(0, 1, true);
        b.set(1, 1, true);
        assert_eq!(mask_quality_target(&a, &a).unwrap(), 1.0);
        let mut c = BinaryMask::zeros(4, 2);
        c.set(0, 1, true);
        assert_eq!(mask_quality_target(&a, &c).unwrap(), 0.0);
        assert!((mask_quality_target(&a, &b).unwrap() - 5.0 / 12.0).abs() < 1e-12);
        let e = BinaryMask::zeros(4, 2);
        assert!(matches!(mask_quality_target(&e, &e), Err(Error::BothEmpty)));
        assert!(mask_quality_target(&a, &BinaryMask::zeros(2, 2)).is_err());
    }

    #[test]
    fn confidence_cases() {
        assert_eq!(confidence(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(confidence(0.37, 0.0).unwrap(), 0.0);
        assert!((confidence(0.9, 0.8).unwrap() - 0.72).abs() < 1e-15);
        assert!(confidence(1.1, 0.5).is_err());
        assert!(confidence(0.5, -0.1).is_err());
    }

    #[test]
    fn consistency_loss_cases() {
        let ones = Grid::filled(3, 3, 1.0);
        let zeros = Grid::filled(3, 3, 0.0);
        assert_eq!(consistency_loss(&ones, &ones).unwrap(), 0.0);
        assert_eq!(consistency_loss(&ones, &zeros).unwrap(), 1.0);
        let sem = Grid::new(2, 2, vec![0.2, 0.4, 0.6, 0.8]).unwrap();
        let ins = Grid::new(2, 2, vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        assert!((consistency_loss(&sem, &ins).unwrap() - 0.025).abs() < 1e-12);
        assert!(consistency_loss(&sem, &Grid::filled(2, 3, 0.0)).is_err());
        assert!(consistency_loss(&sem, &Grid::filled(2, 2, 1.5)).is_err());
    }

    #[test]
    fn consistency_grad_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Grid::from_fn(4, 4, |_, _| rng.gen_range(0.05..0.95));
        let b = Grid::from_fn(4, 4, |_, _| rng.gen_range(0.05..0.95));
        assert!(consistency_loss_grad(&a, &a).unwrap().data().iter().all(|&v| v == 0.0));
        let g1 = consistency_loss_grad(&a, &b).unwrap();
        let g2 = consistency_loss_grad(&b, &a).unwrap();
        for (x, y) in g1.data().iter().zip(g2.data()) {
            assert_eq!(*x, -*y);
        }
        let h = 1e-5;
        for i in 0..16 {
            let mut plus = b.clone();
            plus.data_mut()[i] += h;
            let mut minus = b.clone();
            minus.data_mut()[i] -= h;
            let fd = (consistency_loss(&a, &plus).unwrap() - consistency_loss(&a, &minus).unwrap()) / (2.0 * h);
            let an = g1.data()[i];
            assert!((fd - an).abs() / an.abs().max(1e-12) < 1e-6);
        }
    }

    #[test]
    fn total_loss_cases() {
        let w = LossWeights::default();
        assert_eq!((w.alpha1, w.alpha2), (0.1, 1.0));
        assert_eq!(total_loss(&LossComponents::default(), &w).unwrap(), 0.0);
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
        assert!((total_loss(&ones, &w).unwrap() - 7.2).abs() < 1e-12);
        let off = LossWeights {
            alpha1: 0.0,
            alpha2: 0.0,
        };
        assert_eq!(total_loss(&ones, &off).unwrap(), 6.0);
        let bad = LossComponents {
            det_qua: -0.1,
            ..ones
        };
        assert!(total_loss(&bad, &w).is_err());
        let nan = LossComponents {
            semseg2: f64::NAN,
            ..ones
        };
        assert!(total_loss(&nan, &w).is_err());
    }

    #[test]
    fn quality_fusion_shapes_and_placement() {
        let feats = FeatureMap::zeros(ROI_CHANNELS, ROI_SIZE, ROI_SIZE);
        let zeros = FeatureMap::zeros(2, MASK_SIZE, MASK_SIZE);
        let out = quality_input_fusion(&feats, &zeros).unwrap();
        assert_eq!(out.shape(), (QUALITY_INPUT_CHANNELS, ROI_SIZE, ROI_SIZE));
        assert!(out.values().iter().all(|&v| v == 0.0));

        let mut mask = vec![0.0; 2 * MASK_SIZE * MASK_SIZE];
        mask[MASK_SIZE * MASK_SIZE..].iter_mut().for_each(|v| *v = 0.7);
        let constant = FeatureMap::new(2, MASK_SIZE, MASK_SIZE, mask).unwrap();
        let out = quality_input_fusion(&feats, &constant).unwrap();
        for c in 0..QUALITY_INPUT_CHANNELS {
            let expect = if c >= ROI_CHANNELS { 0.7 } else { 0.0 };
            assert!(out.channel(c).iter().all(|&v| v == expect));
        }

        // single foreground pixel at row 3, col 5
        let mut mask = FeatureMap::zeros(2, MASK_SIZE, MASK_SIZE);
        let idx = mask.index(FOREGROUND_CHANNEL, 5, 3);
        mask.values_mut()[idx] = 2.5;
        let out = quality_input_fusion(&feats, &mask).unwrap();
        let hits: Vec<(usize, usize, usize)> = (0..QUALITY_INPUT_CHANNELS)
            .flat_map(|c| (0..ROI_SIZE).flat_map(move |y| (0..ROI_SIZE).map(move |x| (c, x, y))))
            .filter(|&(c, x, y)| out.get(c, x, y) != 0.0)
            .collect();
        assert_eq!(hits, vec![(ROI_CHANNELS + 3, 2, 1)]);

        assert!(quality_input_fusion(&FeatureMap::zeros(255, 14, 14), &zeros).is_err());
        assert!(quality_input_fusion(&feats, &FeatureMap::zeros(1, 28, 28)).is_err());
    }
}
