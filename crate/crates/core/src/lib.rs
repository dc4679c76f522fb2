//! Instance segmentation evaluation and panoptic mask fusion.
//!
//! * [`metrics`]: AJI, object F1, PQ/DQ/SQ, pixel Dice, best/symmetric best
//!   Dice and dataset aggregation over [`InstanceMap`]s.
//! * [`fusion`]: residual attention feature fusion, mask quality target,
//!   consistency loss with gradients, loss weighting, quality-head input.
//! * [`inference`]: threshold, confidence re-weighting, mask pasting and
//!   overlap resolution into a final label map.
//! * [`io`]: PNG label maps, prediction JSON, CSV/markdown reports.

pub mod error;
pub mod fusion;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod resize;
pub mod selftest;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    dice_pair, extract_instances, iou, BinaryMask, BoundingBox, FeatureMap, Grid, InstanceInfo,
    InstanceMap, InstancePrediction, MASK_SIZE,
};
