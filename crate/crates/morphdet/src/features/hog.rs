//! Histogram of oriented gradients.
//!
//! Unsigned orientations over 0-180 degrees in `hog_bins` hard-assigned
//! bins, cell histograms of `hog_cell` pixels, square blocks of `hog_block`
//! cells at stride one cell, L2-Hys block normalization (clip at 0.2, then
//! renormalize). Gradients are central differences with clamped borders.

use crate::config::DescriptorConfig;
use crate::error::{Error, Result};
use crate::imaging::ImagePlane;

const CLIP: f64 = 0.2;
const NORM_EPS: f64 = 1e-12;

/// Block-normalized HoG descriptor; blocks scan left-to-right, top-to-bottom.
pub fn hog_descriptor(plane: &ImagePlane, cfg: &DescriptorConfig) -> Result<Vec<f64>> {
    let (w, h) = (plane.width(), plane.height());
    let cell = cfg.hog_cell;
    let block = cfg.hog_block;
    let bins = cfg.hog_bins;
    let cells_x = w / cell;
    let cells_y = h / cell;
    if cells_x < block || cells_y < block {
        return Err(Error::PlaneTooSmall(format!(
            "HoG needs at least {0}x{0} cells of {cell} px, got {w}x{h}",
            block
        )));
    }

    // Cell histograms; leftover pixels right/below the covered area are
    // ignored.
    let mut cell_hist = vec![0.0f64; cells_x * cells_y * bins];
    for cy in 0..cells_y {
        for cx in 0..cells_x {
            let hist = &mut cell_hist[(cy * cells_x + cx) * bins..(cy * cells_x + cx + 1) * bins];
            for py in cy * cell..(cy + 1) * cell {
                for px in cx * cell..(cx + 1) * cell {
                    let (mag, theta) = gradient(plane, px, py);
                    let bin = ((theta * bins as f64 / 180.0) as usize).min(bins - 1);
                    hist[bin] += mag;
                }
            }
        }
    }

    let blocks_x = cells_x - block + 1;
    let blocks_y = cells_y - block + 1;
    let block_dim = block * block * bins;
    let mut out = Vec::with_capacity(blocks_x * blocks_y * block_dim);
    let mut v = vec![0.0f64; block_dim];
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            for j in 0..block {
                for i in 0..block {
                    let base = ((by + j) * cells_x + (bx + i)) * bins;
                    let dst = (j * block + i) * bins;
                    v[dst..dst + bins].copy_from_slice(&cell_hist[base..base + bins]);
                }
            }
            let norm = (v.iter().map(|x| x * x).sum::<f64>() + NORM_EPS).sqrt();
            for x in v.iter_mut() {
                *x = (*x / norm).min(CLIP);
            }
            let norm2 = (v.iter().map(|x| x * x).sum::<f64>() + NORM_EPS).sqrt();
            for x in v.iter_mut() {
                *x /= norm2;
            }
            out.extend_from_slice(&v);
        }
    }
    Ok(out)
}

/// Gradient magnitude and unsigned orientation in `[0, 180)` degrees at one
/// pixel, using central differences with indices clamped at the borders.
#[inline]
fn gradient(plane: &ImagePlane, x: usize, y: usize) -> (f64, f64) {
    let (w, h) = (plane.width(), plane.height());
    let xm = x.saturating_sub(1);
    let xp = (x + 1).min(w - 1);
    let ym = y.saturating_sub(1);
    let yp = (y + 1).min(h - 1);
    let gx = 0.5 * (plane.at(xp, y) - plane.at(xm, y));
    let gy = 0.5 * (plane.at(x, yp) - plane.at(x, ym));
    let mag = (gx * gx + gy * gy).sqrt();
    let mut theta = gy.atan2(gx).to_degrees();
    if theta < 0.0 {
        theta += 180.0;
    }
    if theta >= 180.0 {
        theta -= 180.0;
    }
    (mag, theta)
}
