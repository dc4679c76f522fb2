//! Prediction files: one JSON object per image.
//!
//! ```json
//! {
//!   "canvas": {"width": 64, "height": 48},
//!   "instances": [
//!     {"id": 1, "box": {"x": 3, "y": 5, "w": 20, "h": 18},
//!      "s_cls": 0.93, "s_qua": 0.81, "mask_logits": [784 numbers, row-major]}
//!   ]
//! }
//! ```
//! `s_qua` may be omitted.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BoundingBox, Grid, InstancePrediction, MASK_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct BoxRecord {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PredictionRecord {
    id: u32,
    #[serde(rename = "box")]
    bbox: BoxRecord,
    s_cls: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s_qua: Option<f64>,
    mask_logits: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFile {
    canvas: Canvas,
    instances: Vec<PredictionRecord>,
}

/// Validated contents of one prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub canvas: Canvas,
    pub instances: Vec<InstancePrediction>,
}

impl PredictionRecord {
    fn validate(self, canvas: Canvas) -> std::result::Result<InstancePrediction, String> {
        if self.id == 0 {
            return Err("id must be >= 1".into());
        }
        let n = MASK_SIZE * MASK_SIZE;
        if self.mask_logits.len() != n {
            return Err(format!(
                "mask_logits has {} values, expected {n}",
                self.mask_logits.len()
            ));
        }
        let b = self.bbox;
        let bbox = BoundingBox::new(b.x, b.y, b.w, b.h).map_err(|e| e.to_string())?;
        bbox.check_within(canvas.width, canvas.height)
            .map_err(|e| e.to_string())?;
        let logits = Grid::new(MASK_SIZE, MASK_SIZE, self.mask_logits).map_err(|e| e.to_string())?;
        InstancePrediction::new(self.id, bbox, logits, self.s_cls, self.s_qua).map_err(|e| e.to_string())
    }
}

pub fn parse_predictions_json(text: &str, path: &Path) -> Result<PredictionFile> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let canvas = raw.canvas;
    let mut seen = HashSet::new();
    let mut instances = Vec::with_capacity(raw.instances.len());
    for (index, record) in raw.instances.into_iter().enumerate() {
        let id = record.id;
        let pred = record.validate(canvas).map_err(|detail| Error::Record {
            path: path.to_path_buf(),
            index,
            detail,
        })?;
        if !seen.insert(id) {
            return Err(Error::Record {
                path: path.to_path_buf(),
                index,
                detail: format!("duplicate id {id}"),
            });
        }
        instances.push(pred);
    }
    Ok(PredictionFile { canvas, instances })
}

pub fn read_predictions_json(path: impl AsRef<Path>) -> Result<PredictionFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions_json(&text, path)
}

pub fn write_predictions_json(file: &PredictionFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw = RawFile {
        canvas: file.canvas,
        instances: file
            .instances
            .iter()
            .map(|p| PredictionRecord {
                id: p.id,
                bbox: BoxRecord {
                    x: p.bbox.x,
                    y: p.bbox.y,
                    w: p.bbox.w,
                    h: p.bbox.h,
                },
                s_cls: p.s_cls,
                s_qua: p.s_qua,
                mask_logits: p.mask_logits.data().to_vec(),
            })
            .collect(),
    };
    let text = serde_json::to_string(&raw).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
