use super::Overlap;
use crate::error::{Error, Result};
use crate::types::{dice_from_counts, InstanceMap};

/// Dice between the binarized maps. Two all-background maps score 1.
pub fn pixel_dice(gt: &InstanceMap, pred: &InstanceMap) -> Result<f64> {
    Ok(pixel_dice_from_overlap(&Overlap::new(gt, pred)?))
}

pub(crate) fn pixel_dice_from_overlap(o: &Overlap) -> f64 {
    let (g, p) = (o.gt_fg(), o.pred_fg());
    if g == 0 && p == 0 {
        return 1.0;
    }
    dice_from_counts(o.fg_inter, g, p)
}

/// Mean over the instances of `p` of their best Dice against any instance
/// of `t`.
pub fn best_dice(p: &InstanceMap, t: &InstanceMap) -> Result<f64> {
    let o = Overlap::new(p, t)?;
    if o.n_gt() == 0 {
        return Err(Error::NoInstances("first map"));
    }
    Ok(best_dice_rows(&o))
}

/// BD with the overlap's ground-truth side as `P`. Requires `n_gt > 0`.
pub(crate) fn best_dice_rows(o: &Overlap) -> f64 {
    let mut best: Vec<f64> = o
        .by_gt
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|&(j, inter)| dice_from_counts(inter, o.gt_area[i], o.pred_area[j]))
                .fold(0.0, f64::max)
        })
        .collect();
    // value order keeps the mean independent of instance ids
    best.sort_by(f64::total_cmp);
    best.iter().sum::<f64>() / o.n_gt() as f64
}

/// Symmetric best Dice: the smaller of the two best-Dice directions.
pub fn sbd(p: &InstanceMap, t: &InstanceMap) -> Result<f64> {
    sbd_from_overlap(&Overlap::new(p, t)?)
}

pub(crate) fn sbd_from_overlap(o: &Overlap) -> Result<f64> {
    if o.n_gt() == 0 {
        return Err(Error::NoInstances("first map"));
    }
    if o.n_pred() == 0 {
        return Err(Error::NoInstances("second map"));
    }
    let forward = best_dice_rows(o);
    let backward = best_dice_rows(&o.transposed());
    Ok(forward.min(backward))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::test_util::paint;

    #[test]
    fn pixel_dice_cases() {
        let m = paint(4, 4, &[(1, 0, 0, 2, 2), (2, 2, 2, 2, 2)]);
        assert_eq!(pixel_dice(&m, &m).unwrap(), 1.0);
        let e = InstanceMap::zeros(4, 4);
        assert_eq!(pixel_dice(&m, &e).unwrap(), 0.0);
        assert_eq!(pixel_dice(&e, &e).unwrap(), 1.0);
        // n = 4 each, overlap 2; labels differ but binarization ignores them
        let a = paint(4, 1, &[(1, 0, 0, 4, 1)]);
        let b = paint(4, 2, &[(9, 2, 0, 2, 2)]);
        assert!(pixel_dice(&a, &b).is_err());
        let b = paint(4, 1, &[(9, 2, 0, 2, 1), (3, 0, 0, 1, 1)]);
        let a = paint(4, 1, &[(1, 0, 0, 2, 1), (2, 2, 0, 1, 1)]);
        // |a| = 3, |b| = 3, overlap {0, 2} = 2
        assert!((pixel_dice(&a, &b).unwrap() - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn pixel_dice_half_overlap() {
        let a = paint(8, 1, &[(1, 0, 0, 4, 1)]);
        let b = paint(8, 1, &[(1, 2, 0, 4, 1)]);
        assert_eq!(pixel_dice(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn best_dice_cases() {
        let m = paint(6, 6, &[(1, 0, 0, 2, 2), (2, 3, 3, 3, 3)]);
        assert_eq!(best_dice(&m, &m).unwrap(), 1.0);
        assert_eq!(best_dice(&m, &InstanceMap::zeros(6, 6)).unwrap(), 0.0);
        assert!(matches!(
            best_dice(&InstanceMap::zeros(6, 6), &m),
            Err(Error::NoInstances(_))
        ));

        let p = paint(8, 1, &[(1, 2, 0, 4, 1)]);
        let t = paint(8, 2, &[(1, 0, 0, 4, 1), (2, 4, 1, 4, 1)]);
        assert!(best_dice(&p, &t).is_err());
        let p = paint(12, 1, &[(1, 2, 0, 4, 1)]);
        let t = paint(12, 1, &[(1, 0, 0, 4, 1), (2, 8, 0, 4, 1)]);
        assert_eq!(best_dice(&p, &t).unwrap(), 0.5);
    }

    #[test]
    fn sbd_cases() {
        let t = paint(8, 1, &[(1, 0, 0, 3, 1), (2, 4, 0, 3, 1)]);
        assert_eq!(sbd(&t, &t).unwrap(), 1.0);
        let p = paint(8, 1, &[(5, 0, 0, 3, 1)]);
        assert_eq!(best_dice(&p, &t).unwrap(), 1.0);
        assert_eq!(best_dice(&t, &p).unwrap(), 0.5);
        assert_eq!(sbd(&p, &t).unwrap(), 0.5);
        assert_eq!(sbd(&t, &p).unwrap(), 0.5);
        let e = InstanceMap::zeros(8, 1);
        assert!(sbd(&p, &e).is_err());
        assert!(sbd(&e, &p).is_err());
    }
}
