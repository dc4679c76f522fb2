//! Seeded synthetic label maps for property checks, the self-test and
//! benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::types::InstanceMap;

fn paint_ellipse(map: &mut InstanceMap, label: u32, cx: f64, cy: f64, rx: f64, ry: f64) {
    let (w, h) = map.dims();
    let x0 = (cx - rx).floor().max(0.0) as usize;
    let x1 = ((cx + rx).ceil() as usize).min(w.saturating_sub(1));
    let y0 = (cy - ry).floor().max(0.0) as usize;
    let y1 = ((cy + ry).ceil() as usize).min(h.saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = (x as f64 - cx) / rx;
            let dy = (y as f64 - cy) / ry;
            if dx * dx + dy * dy <= 1.0 {
                map.set(x, y, label);
            }
        }
    }
}

fn paint_rect(map: &mut InstanceMap, label: u32, x: usize, y: usize, w: usize, h: usize) {
    for yy in y..(y + h).min(map.height()) {
        for xx in x..(x + w).min(map.width()) {
            map.set(xx, yy, label);
        }
    }
}

/// Distinct random labels in `1..=max`.
fn random_labels<R: Rng>(rng: &mut R, n: usize, max: u32) -> Vec<u32> {
    let mut pool: Vec<u32> = (1..=max).collect();
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

/// Up to `max_instances` overlapping rectangles and ellipses with random,
/// non-contiguous labels. Later shapes paint over earlier ones.
pub fn random_instance_map<R: Rng>(rng: &mut R, width: usize, height: usize, max_instances: usize) -> InstanceMap {
    let mut map = InstanceMap::zeros(width, height);
    let n = rng.gen_range(0..=max_instances);
    for label in random_labels(rng, n, 200) {
        let w = rng.gen_range(1..=width.div_ceil(2).max(1));
        let h = rng.gen_range(1..=height.div_ceil(2).max(1));
        let x = rng.gen_range(0..width);
        let y = rng.gen_range(0..height);
        if rng.gen_bool(0.5) {
            paint_rect(&mut map, label, x, y, w, h);
        } else {
            paint_ellipse(&mut map, label, x as f64, y as f64, w as f64 / 2.0 + 0.5, h as f64 / 2.0 + 0.5);
        }
    }
    map
}

/// A prediction-like copy of `gt`: each instance is kept with probability
/// `1 - drop`, shifted by up to `max_shift` pixels and relabeled; a few
/// spurious blobs are added.
pub fn perturbed_prediction<R: Rng>(rng: &mut R, gt: &InstanceMap, drop: f64, max_shift: i64, spurious: usize) -> InstanceMap {
    let (w, h) = gt.dims();
    let labels: Vec<u32> = {
        let mut l: Vec<u32> = gt.labels().iter().copied().filter(|&l| l != 0).collect();
        l.sort_unstable();
        l.dedup();
        l
    };
    let new_ids = random_labels(rng, labels.len() + spurious, (labels.len() + spurious) as u32 * 3 + 10);
    // per source label: replacement id and shift, or None when dropped
    let mut plan = std::collections::HashMap::with_capacity(labels.len());
    for (&label, &new_id) in labels.iter().zip(&new_ids) {
        let keep = !rng.gen_bool(drop);
        let sx = rng.gen_range(-max_shift..=max_shift);
        let sy = rng.gen_range(-max_shift..=max_shift);
        if keep {
            plan.insert(label, (new_id, sx, sy));
        }
    }
    let mut out = InstanceMap::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let Some(&(id, sx, sy)) = plan.get(&gt.get(x, y)) else {
                continue;
            };
            let (nx, ny) = (x as i64 + sx, y as i64 + sy);
            if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                out.set(nx as usize, ny as usize, id);
            }
        }
    }
    for &id in &new_ids[labels.len()..] {
        let cx = rng.gen_range(0.0..w as f64);
        let cy = rng.gen_range(0.0..h as f64);
        let r = rng.gen_range(1.0..(w.min(h) as f64 / 8.0).max(1.5));
        paint_ellipse(&mut out, id, cx, cy, r, r);
    }
    out
}

/// A nuclei-like map: about `n` non-touching ellipses on a jittered grid.
pub fn nuclei_map<R: Rng>(rng: &mut R, width: usize, height: usize, n: usize) -> InstanceMap {
    let mut map = InstanceMap::zeros(width, height);
    let aspect = width as f64 / height as f64;
    let cols = ((n as f64 * aspect).sqrt().ceil() as usize).max(1);
    let rows = n.div_ceil(cols);
    let cell_w = width as f64 / cols as f64;
    let cell_h = height as f64 / rows as f64;
    let r_max = (cell_w.min(cell_h) / 2.0 - 1.0).max(1.0);
    let mut label = 0u32;
    for row in 0..rows {
        for col in 0..cols {
            if label as usize >= n {
                break;
            }
            label += 1;
            let rx = rng.gen_range(r_max * 0.45..=r_max);
            let ry = rng.gen_range(r_max * 0.45..=r_max);
            let cx = (col as f64 + 0.5) * cell_w + rng.gen_range(-(r_max - rx)..=(r_max - rx));
            let cy = (row as f64 + 0.5) * cell_h + rng.gen_range(-(r_max - ry)..=(r_max - ry));
            paint_ellipse(&mut map, label, cx, cy, rx, ry);
        }
    }
    map
}
