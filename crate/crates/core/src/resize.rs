//! Bilinear resampling with half-pixel centers and clamp-to-edge, and its
//! adjoint.
//!
//! Destination pixel `d` samples source coordinate `(d + 0.5) * s - 0.5`
//! where `s = src_len / dst_len`; coordinates below zero clamp to zero and
//! the upper neighbour clamps to the last pixel.

use crate::error::{Error, Result};
use crate::types::Grid;

#[derive(Debug, Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    frac: f64,
}

fn taps(src_len: usize, dst_len: usize) -> Vec<Tap> {
    let scale = src_len as f64 / dst_len as f64;
    (0..dst_len)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).max(0.0);
            let lo = (s.floor() as usize).min(src_len - 1);
            let hi = (lo + 1).min(src_len - 1);
            let frac = if hi == lo { 0.0 } else { s - lo as f64 };
            Tap { lo, hi, frac }
        })
        .collect()
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn check_dims(src: (usize, usize), dst: (usize, usize)) -> Result<()> {
    if dst.0 == 0 || dst.1 == 0 {
        return Err(Error::ZeroDimension {
            width: dst.0,
            height: dst.1,
        });
    }
    if src.0 == 0 || src.1 == 0 {
        return Err(Error::ZeroDimension {
            width: src.0,
            height: src.1,
        });
    }
    Ok(())
}

/// Resamples `grid` to `target_w × target_h`.
pub fn resize_bilinear(grid: &Grid, target_w: usize, target_h: usize) -> Result<Grid> {
    check_dims(grid.dims(), (target_w, target_h))?;
    let xs = taps(grid.width(), target_w);
    let ys = taps(grid.height(), target_h);
    let mut out = Vec::with_capacity(target_w * target_h);
    for ty in &ys {
        for tx in &xs {
            let top = lerp(grid.get(tx.lo, ty.lo), grid.get(tx.hi, ty.lo), tx.frac);
            let bottom = lerp(grid.get(tx.lo, ty.hi), grid.get(tx.hi, ty.hi), tx.frac);
            out.push(lerp(top, bottom, ty.frac));
        }
    }
    Grid::new(target_w, target_h, out)
}

/// Transpose of [`resize_bilinear`] as a linear map: scatters `upstream`
/// (shaped like the resize output) back onto a `src_w × src_h` grid.
pub fn resize_bilinear_adjoint(upstream: &Grid, src_w: usize, src_h: usize) -> Result<Grid> {
    check_dims((src_w, src_h), upstream.dims())?;
    let xs = taps(src_w, upstream.width());
    let ys = taps(src_h, upstream.height());
    let mut out = Grid::filled(src_w, src_h, 0.0);
    let acc = out.data_mut();
    for (dy, ty) in ys.iter().enumerate() {
        for (dx, tx) in xs.iter().enumerate() {
            let g = upstream.get(dx, dy);
            let (wx0, wx1) = (1.0 - tx.frac, tx.frac);
            let (wy0, wy1) = (1.0 - ty.frac, ty.frac);
            acc[ty.lo * src_w + tx.lo] += g * wy0 * wx0;
            acc[ty.lo * src_w + tx.hi] += g * wy0 * wx1;
            acc[ty.hi * src_w + tx.lo] += g * wy1 * wx0;
            acc[ty.hi * src_w + tx.hi] += g * wy1 * wx1;
        }
    }
    Ok(out)
}
