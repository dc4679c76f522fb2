//! File formats: label-map PNGs, prediction JSON, metric reports, and
//! pairing of ground-truth and prediction directories.

mod label_png;
mod predictions;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub use label_png::{read_label_png, write_label_png, MAX_PNG_LABEL};
pub use predictions::{
    parse_predictions_json, read_predictions_json, write_predictions_json, Canvas, PredictionFile,
};
pub use report::{render_report, write_report, Report, ReportFormat, REPORT_COLUMNS};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPair {
    pub image_id: String,
    pub gt_path: PathBuf,
    pub pred_path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pairing {
    pub pairs: Vec<DatasetPair>,
    /// Stems present only in the ground-truth directory.
    pub gt_only: Vec<String>,
    /// Stems present only in the prediction directory.
    pub pred_only: Vec<String>,
}

/// Files in `dir` with extension `ext` (case-insensitive), keyed by stem.
pub fn files_by_stem(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case(ext));
        if !matches {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path.clone());
        }
    }
    Ok(out)
}

/// Pairs `*.png` files of the two directories by identical stem, sorted
/// lexicographically by stem.
pub fn pair_dataset(gt_dir: &Path, pred_dir: &Path) -> Result<Pairing> {
    let gt = files_by_stem(gt_dir, "png")?;
    let mut pred = files_by_stem(pred_dir, "png")?;
    let mut pairing = Pairing::default();
    for (stem, gt_path) in gt {
        match pred.remove(&stem) {
            Some(pred_path) => pairing.pairs.push(DatasetPair {
                image_id: stem,
                gt_path,
                pred_path,
            }),
            None => pairing.gt_only.push(stem),
        }
    }
    pairing.pred_only = pred.into_keys().collect();
    Ok(pairing)
}
