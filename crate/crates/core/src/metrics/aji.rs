use super::Overlap;
use crate::error::Result;
use crate::types::InstanceMap;

/// Aggregated Jaccard Index.
///
/// Ground-truth instances are visited in ascending label order. Each one
/// takes the unused prediction with the highest IoU among those it touches
/// (lower prediction label wins a tie) and marks it used. Unmatched ground
/// truth adds its area to the denominator, and so does every prediction
/// left unused at the end.
pub fn aji(gt: &InstanceMap, pred: &InstanceMap) -> Result<f64> {
    Ok(aji_from_overlap(&Overlap::new(gt, pred)?))
}

pub fn aji_from_overlap(o: &Overlap) -> f64 {
    if o.n_gt() == 0 && o.n_pred() == 0 {
        return 1.0;
    }
    let mut used = vec![false; o.n_pred()];
    let mut numerator = 0u64;
    let mut denominator = 0u64;

    for (gi, row) in o.by_gt.iter().enumerate() {
        let g_area = o.gt_area[gi];
        // (pred index, intersection, union)
        let mut best: Option<(usize, u64, u64)> = None;
        for &(pj, inter) in row {
            if used[pj] {
                continue;
            }
            let union = g_area + o.pred_area[pj] - inter;
            let better = match best {
                None => true,
                // inter/union > b_inter/b_union, compared exactly
                Some((_, b_inter, b_union)) => {
                    (inter as u128) * (b_union as u128) > (b_inter as u128) * (union as u128)
                }
            };
            if better {
                best = Some((pj, inter, union));
            }
        }
        match best {
            Some((pj, inter, union)) => {
                used[pj] = true;
                numerator += inter;
                denominator += union;
            }
            None => denominator += g_area,
        }
    }

    denominator += used
        .iter()
        .zip(&o.pred_area)
        .filter(|(&u, _)| !u)
        .map(|(_, &a)| a)
        .sum::<u64>();

    numerator as f64 / denominator as f64
}
