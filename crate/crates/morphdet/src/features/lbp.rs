//! Local binary patterns, LBP(8, 1).
//!
//! Each interior pixel is coded by comparing its eight radius-1 neighbors
//! against the center (`neighbor >= center` sets the bit, so ties count).
//! Bit 0 is the east neighbor and bits proceed counter-clockwise. Codes are
//! accumulated into a 256-bin histogram and L1-normalized.

use crate::error::{Error, Result};
use crate::imaging::ImagePlane;

/// Neighbor offsets `(dx, dy)` starting east, counter-clockwise (negative
/// `dy` is up).
const NEIGHBORS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 256-bin L1-normalized LBP histogram over the interior pixels.
pub fn lbp_histogram(plane: &ImagePlane) -> Result<Vec<f64>> {
    let (w, h) = (plane.width(), plane.height());
    if w < 3 || h < 3 {
        return Err(Error::PlaneTooSmall(format!(
            "LBP needs at least 3x3, got {w}x{h}"
        )));
    }
    let data = plane.data();
    let mut counts = [0u64; 256];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let center = data[y * w + x];
            let mut code = 0u8;
            for (bit, (dx, dy)) in NEIGHBORS.iter().enumerate() {
                let nx = (x as isize + dx) as usize;
                let ny = (y as isize + dy) as usize;
                if data[ny * w + nx] >= center {
                    code |= 1 << bit;
                }
            }
            counts[code as usize] += 1;
        }
    }
    let total = ((w - 2) * (h - 2)) as f64;
    Ok(counts.iter().map(|c| *c as f64 / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};

    /// Brute-force recomputation with its own neighbor bookkeeping.
    fn naive_lbp(plane: &ImagePlane) -> Vec<f64> {
        let (w, h) = (plane.width(), plane.height());
        let mut counts = vec![0u64; 256];
        let offs: [(i64, i64); 8] = [
            (1, 0),
            (1, -1),
            (0, -1),
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        for y in 1..(h as i64) - 1 {
            for x in 1..(w as i64) - 1 {
                let c = plane.at(x as usize, y as usize);
                let mut code = 0usize;
                for (i, (dx, dy)) in offs.iter().enumerate() {
                    if plane.at((x + dx) as usize, (y + dy) as usize) >= c {
                        code += 1 << i;
                    }
                }
                counts[code] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        counts.iter().map(|c| *c as f64 / total as f64).collect()
    }

    #[test]
    fn constant_plane_codes_255() {
        let p = ImagePlane::filled(8, 8, 0.3);
        let hist = lbp_histogram(&p).unwrap();
        assert_eq!(hist[255], 1.0);
        assert!(hist[..255].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bright_center_contributes_code_zero() {
        let mut p = ImagePlane::filled(3, 3, 0.0);
        p.set(1, 1, 1.0);
        let hist = lbp_histogram(&p).unwrap();
        assert_eq!(hist[0], 1.0);
    }

    #[test]
    fn too_small_plane_rejected() {
        assert!(lbp_histogram(&ImagePlane::filled(2, 3, 0.0)).is_err());
    }

    #[test]
    fn matches_naive_oracle_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let p = ImagePlane::new(16, 16, (0..256).map(|_| rng.random()).collect()).unwrap();
            assert_eq!(lbp_histogram(&p).unwrap(), naive_lbp(&p));
        }
    }

    #[test]
    fn invariant_to_positive_affine_rescale() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        let base: Vec<f64> = (0..144).map(|_| rng.random()).collect();
        let p = ImagePlane::new(12, 12, base.clone()).unwrap();
        let q = ImagePlane::new(12, 12, base.iter().map(|v| 2.5 * v + 0.1).collect()).unwrap();
        assert_eq!(lbp_histogram(&p).unwrap(), lbp_histogram(&q).unwrap());
    }

    #[test]
    fn histogram_sums_to_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let p = ImagePlane::new(9, 7, (0..63).map(|_| rng.random()).collect()).unwrap();
        let sum: f64 = lbp_histogram(&p).unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
