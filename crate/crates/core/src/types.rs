//! Shared data model: label maps, binary masks, boxes, real grids and
//! feature maps, plus the elementary overlap arithmetic every metric uses.
//!
//! Storage is row-major with the origin at the top-left pixel. A box's
//! anchor `(x, y)` is its minimum column and minimum row, and it covers the
//! half-open window `[x, x + w) × [y, y + h)`.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Side length of an ROI mask prediction.
pub const MASK_SIZE: usize = 28;

/// H×W map of instance ids. `0` is background, every other value is one
/// instance. Ids need not be contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl InstanceMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::BufferLength {
                len: labels.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: u32) {
        self.labels[y * self.width + x] = label;
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.labels.iter().all(|&l| l == 0)
    }

    /// Foreground (`label > 0`) as a binary mask.
    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l > 0).collect(),
        }
    }

    pub fn instance_mask(&self, label: u32) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l != 0 && l == label).collect(),
        }
    }

    /// Applies `f` to every nonzero label. Background stays background.
    pub fn relabel(&self, mut f: impl FnMut(u32) -> u32) -> Self {
        Self {
            width: self.width,
            height: self.height,
            labels: self
                .labels
                .iter()
                .map(|&l| if l == 0 { 0 } else { f(l) })
                .collect(),
        }
    }

    pub(crate) fn check_same_dims(&self, other: &InstanceMap) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// H×W boolean mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::BufferLength {
                len: bits.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Number of set pixels.
    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Axis-aligned pixel rectangle, `[x, x + w) × [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BoundingBox {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::EmptyBox);
        }
        Ok(Self { x, y, w, h })
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.w == 0 || self.h == 0 {
            return Err(Error::EmptyBox);
        }
        if self.right() > width || self.bottom() > height {
            return Err(Error::BoxOutOfBounds {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
                width,
                height,
            });
        }
        Ok(())
    }
}

/// Row-major 2-D grid of reals (logits, probabilities, gradients).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BufferLength {
                len: data.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub(crate) fn check_same_dims(&self, other: &Grid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// C×H×W real feature volume. Values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != channels * width * height {
            return Err(Error::ShapeMismatch {
                expected: format!("{channels}x{height}x{width} = {}", channels * width * height),
                actual: values.len().to_string(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            channels,
            width,
            height,
            values,
        })
    }

    pub fn zeros(channels: usize, width: usize, height: usize) -> Self {
        Self {
            channels,
            width,
            height,
            values: vec![0.0; channels * width * height],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(channels, width, height)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn index(&self, c: usize, x: usize, y: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f64 {
        self.values[self.index(c, x, y)]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.width * self.height;
        &self.values[c * plane..(c + 1) * plane]
    }

    pub(crate) fn check_same_shape(&self, other: &FeatureMap) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.shape()),
                actual: format!("{:?}", other.shape()),
            });
        }
        Ok(())
    }
}

/// One detected object: box, foreground mask logits at ROI resolution,
/// classification score and optional predicted mask quality.
#[derive(Debug, Clone, PartialEq)]
pub struct InstancePrediction {
    pub id: u32,
    pub bbox: BoundingBox,
    pub mask_logits: Grid,
    pub s_cls: f64,
    pub s_qua: Option<f64>,
}

impl InstancePrediction {
    pub fn new(
        id: u32,
        bbox: BoundingBox,
        mask_logits: Grid,
        s_cls: f64,
        s_qua: Option<f64>,
    ) -> Result<Self> {
        if mask_logits.dims() != (MASK_SIZE, MASK_SIZE) {
            return Err(Error::ShapeMismatch {
                expected: format!("{MASK_SIZE}x{MASK_SIZE}"),
                actual: format!("{}x{}", mask_logits.width(), mask_logits.height()),
            });
        }
        if bbox.w == 0 || bbox.h == 0 {
            return Err(Error::EmptyBox);
        }
        check_unit("s_cls", s_cls)?;
        if let Some(q) = s_qua {
            check_unit("s_qua", q)?;
        }
        Ok(Self {
            id,
            bbox,
            mask_logits,
            s_cls,
            s_qua,
        })
    }
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// One instance found in a label map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceInfo {
    pub label: u32,
    pub pixel_count: u64,
    pub bbox: BoundingBox,
}

/// Enumerates the distinct nonzero labels of `map` in ascending order with
/// their pixel counts and tight bounding boxes.
pub fn extract_instances(map: &InstanceMap) -> Vec<InstanceInfo> {
    struct Acc {
        count: u64,
        min_x: usize,
        min_y: usize,
        max_x: usize,
        max_y: usize,
    }

    let mut accs: HashMap<u32, Acc> = HashMap::new();
    for y in 0..map.height {
        let row = &map.labels[y * map.width..(y + 1) * map.width];
        for (x, &label) in row.iter().enumerate() {
            if label == 0 {
                continue;
            }
            let acc = accs.entry(label).or_insert(Acc {
                count: 0,
                min_x: x,
                min_y: y,
                max_x: x,
                max_y: y,
            });
            acc.count += 1;
            acc.min_x = acc.min_x.min(x);
            acc.max_x = acc.max_x.max(x);
            acc.min_y = acc.min_y.min(y);
            acc.max_y = acc.max_y.max(y);
        }
    }

    let mut out: Vec<InstanceInfo> = accs
        .into_iter()
        .map(|(label, a)| InstanceInfo {
            label,
            pixel_count: a.count,
            bbox: BoundingBox {
                x: a.min_x,
                y: a.min_y,
                w: a.max_x - a.min_x + 1,
                h: a.max_y - a.min_y + 1,
            },
        })
        .collect();
    out.sort_unstable_by_key(|i| i.label);
    out
}

/// `(|a ∩ b|, |a|, |b|)`
pub fn overlap_counts(a: &BinaryMask, b: &BinaryMask) -> Result<(u64, u64, u64)> {
    if a.dims() != b.dims() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    let (mut inter, mut na, mut nb) = (0u64, 0u64, 0u64);
    for (&pa, &pb) in a.bits.iter().zip(&b.bits) {
        na += pa as u64;
        nb += pb as u64;
        inter += (pa && pb) as u64;
    }
    Ok((inter, na, nb))
}

/// IoU from exact counts. Zero when both sets are empty.
#[inline]
pub fn iou_from_counts(inter: u64, a: u64, b: u64) -> f64 {
    let union = a + b - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Dice from exact counts. Zero when both sets are empty.
#[inline]
pub fn dice_from_counts(inter: u64, a: u64, b: u64) -> f64 {
    let total = a + b;
    if total == 0 {
        0.0
    } else {
        (2 * inter) as f64 / total as f64
    }
}

pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let (inter, na, nb) = overlap_counts(a, b)?;
    Ok(iou_from_counts(inter, na, nb))
}

pub fn dice_pair(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let (inter, na, nb) = overlap_counts(a, b)?;
    Ok(dice_from_counts(inter, na, nb))
}
