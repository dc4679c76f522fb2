use std::collections::HashMap;

use crate::error::Result;
use crate::types::InstanceMap;

const DENSE_LABEL_LIMIT: u32 = 1 << 20;
const DENSE_PAIR_LIMIT: usize = 1 << 20;

/// Maps raw labels to dense indices `0..n` in ascending label order.
enum LabelIndex {
    Dense(Vec<u32>),
    Sparse(HashMap<u32, u32>),
}

impl LabelIndex {
    #[inline]
    fn get(&self, label: u32) -> usize {
        match self {
            LabelIndex::Dense(v) => v[label as usize] as usize,
            LabelIndex::Sparse(m) => m[&label] as usize,
        }
    }
}

/// Sorted labels, areas and an index for one map.
fn index_labels(map: &InstanceMap) -> (Vec<u32>, Vec<u64>, LabelIndex) {
    let max = map.max_label();
    if max < DENSE_LABEL_LIMIT {
        let mut counts = vec![0u64; max as usize + 1];
        for &l in map.labels() {
            counts[l as usize] += 1;
        }
        let mut lookup = vec![u32::MAX; max as usize + 1];
        let mut labels = Vec::new();
        let mut areas = Vec::new();
        for (label, &c) in counts.iter().enumerate().skip(1) {
            if c > 0 {
                lookup[label] = labels.len() as u32;
                labels.push(label as u32);
                areas.push(c);
            }
        }
        (labels, areas, LabelIndex::Dense(lookup))
    } else {
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for &l in map.labels() {
            if l != 0 {
                *counts.entry(l).or_default() += 1;
            }
        }
        let mut pairs: Vec<(u32, u64)> = counts.into_iter().collect();
        pairs.sort_unstable();
        let lookup = pairs
            .iter()
            .enumerate()
            .map(|(i, &(l, _))| (l, i as u32))
            .collect();
        let (labels, areas) = pairs.into_iter().unzip();
        (labels, areas, LabelIndex::Sparse(lookup))
    }
}

/// Sparse contingency table between the instances of two label maps.
///
/// Instances on each side are indexed `0..n` in ascending label order, and
/// every adjacency list is sorted by the other side's index, so iterating a
/// list visits partners in ascending label order.
#[derive(Debug, Clone)]
pub struct Overlap {
    pub(crate) gt_labels: Vec<u32>,
    pub(crate) gt_area: Vec<u64>,
    pub(crate) pred_labels: Vec<u32>,
    pub(crate) pred_area: Vec<u64>,
    /// `by_gt[g]` lists `(pred index, |g ∩ p|)` with nonzero intersection.
    pub(crate) by_gt: Vec<Vec<(usize, u64)>>,
    pub(crate) by_pred: Vec<Vec<(usize, u64)>>,
    /// Pixels that are foreground in both maps.
    pub(crate) fg_inter: u64,
}

impl Overlap {
    pub fn new(gt: &InstanceMap, pred: &InstanceMap) -> Result<Self> {
        gt.check_same_dims(pred)?;
        let (gt_labels, gt_area, gt_index) = index_labels(gt);
        let (pred_labels, pred_area, pred_index) = index_labels(pred);
        let ng = gt_labels.len();
        let np = pred_labels.len();

        let mut by_gt: Vec<Vec<(usize, u64)>> = vec![Vec::new(); ng];
        let mut fg_inter = 0u64;

        if ng * np <= DENSE_PAIR_LIMIT {
            let mut table = vec![0u64; ng * np];
            for (&g, &p) in gt.labels().iter().zip(pred.labels()) {
                if g != 0 && p != 0 {
                    table[gt_index.get(g) * np + pred_index.get(p)] += 1;
                    fg_inter += 1;
                }
            }
            for (gi, row) in table.chunks(np.max(1)).take(ng).enumerate() {
                by_gt[gi].extend(
                    row.iter()
                        .enumerate()
                        .filter(|(_, &c)| c > 0)
                        .map(|(pj, &c)| (pj, c)),
                );
            }
        } else {
            let mut table: HashMap<(u32, u32), u64> = HashMap::new();
            for (&g, &p) in gt.labels().iter().zip(pred.labels()) {
                if g != 0 && p != 0 {
                    let key = (gt_index.get(g) as u32, pred_index.get(p) as u32);
                    *table.entry(key).or_default() += 1;
                    fg_inter += 1;
                }
            }
            for ((gi, pj), c) in table {
                by_gt[gi as usize].push((pj as usize, c));
            }
            for row in &mut by_gt {
                row.sort_unstable();
            }
        }

        let mut by_pred: Vec<Vec<(usize, u64)>> = vec![Vec::new(); np];
        for (gi, row) in by_gt.iter().enumerate() {
            for &(pj, c) in row {
                by_pred[pj].push((gi, c));
            }
        }

        Ok(Self {
            gt_labels,
            gt_area,
            pred_labels,
            pred_area,
            by_gt,
            by_pred,
            fg_inter,
        })
    }

    pub fn gt_labels(&self) -> &[u32] {
        &self.gt_labels
    }

    pub fn pred_labels(&self) -> &[u32] {
        &self.pred_labels
    }

    pub fn n_gt(&self) -> usize {
        self.gt_labels.len()
    }

    pub fn n_pred(&self) -> usize {
        self.pred_labels.len()
    }

    pub(crate) fn gt_fg(&self) -> u64 {
        self.gt_area.iter().sum()
    }

    pub(crate) fn pred_fg(&self) -> u64 {
        self.pred_area.iter().sum()
    }

    /// Swaps the roles of the two maps.
    pub fn transposed(&self) -> Overlap {
        Overlap {
            gt_labels: self.pred_labels.clone(),
            gt_area: self.pred_area.clone(),
            pred_labels: self.gt_labels.clone(),
            pred_area: self.gt_area.clone(),
            by_gt: self.by_pred.clone(),
            by_pred: self.by_gt.clone(),
            fg_inter: self.fg_inter,
        }
    }
}
