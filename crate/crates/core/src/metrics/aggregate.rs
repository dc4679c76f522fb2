use serde::{Deserialize, Serialize};

use super::ImageMetrics;
use crate::error::{Error, Result};

/// Mean and population standard deviation of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Summary {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Summary {
            mean,
            std: var.sqrt(),
            n: values.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub n_images: usize,
    pub aji: Summary,
    pub dice: Summary,
    pub f1: Summary,
    pub pq: Summary,
    pub dq: Summary,
    pub sq: Summary,
    /// Over the images that have an SBD value; `None` if none do.
    pub sbd: Option<Summary>,
}

pub fn aggregate(values: &[ImageMetrics]) -> Result<AggregateMetrics> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no per-image metrics to aggregate"));
    }
    let column = |f: fn(&ImageMetrics) -> f64| -> Summary {
        let v: Vec<f64> = values.iter().map(f).collect();
        Summary::of(&v).expect("nonempty")
    };
    let sbd: Vec<f64> = values.iter().filter_map(|m| m.sbd).collect();
    Ok(AggregateMetrics {
        n_images: values.len(),
        aji: column(|m| m.aji),
        dice: column(|m| m.dice),
        f1: column(|m| m.f1),
        pq: column(|m| m.pq.pq),
        dq: column(|m| m.pq.dq),
        sq: column(|m| m.pq.sq),
        sbd: Summary::of(&sbd),
    })
}
