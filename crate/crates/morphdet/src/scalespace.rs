//! Laplacian scale-space decomposition.
//!
//! Each color channel is decomposed into a 3-level band-pass pyramid with
//! the 5-tap binomial kernel `[1, 4, 6, 4, 1] / 16` applied separably and
//! reflect-101 border handling. Six channels x three levels yield the 18
//! sub-images consumed by feature extraction; the deepest low-pass residue
//! is retained on the pyramid only so the construction stays invertible.

use crate::error::{Error, Result};
use crate::imaging::{ColorChannel, ColorStack, ImagePlane};

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Number of pyramid levels per channel.
pub const LEVELS: usize = 3;

/// Total sub-images per input image (6 channels x 3 levels).
pub const SUB_IMAGES: usize = 6 * LEVELS;

#[inline]
fn reflect101(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    // Two passes are enough for a kernel reach of 2 on planes >= 2 wide.
    while i < 0 || i >= n {
        if i < 0 {
            i = -i;
        }
        if i >= n {
            i = 2 * (n - 1) - i;
        }
    }
    i as usize
}

/// Separable 5-tap convolution along rows, writing into `dst`.
fn conv5_rows(src: &[f64], w: usize, h: usize, gain: f64, dst: &mut [f64]) {
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut dst[y * w..(y + 1) * w];
        if w >= 5 {
            for x in 0..2 {
                let mut acc = 0.0;
                for (t, k) in KERNEL.iter().enumerate() {
                    acc += k * row[reflect101(x as isize + t as isize - 2, w)];
                }
                out[x] = acc * gain;
            }
            for x in 2..w - 2 {
                out[x] = gain
                    * (KERNEL[0] * row[x - 2]
                        + KERNEL[1] * row[x - 1]
                        + KERNEL[2] * row[x]
                        + KERNEL[3] * row[x + 1]
                        + KERNEL[4] * row[x + 2]);
            }
            for x in w - 2..w {
                let mut acc = 0.0;
                for (t, k) in KERNEL.iter().enumerate() {
                    acc += k * row[reflect101(x as isize + t as isize - 2, w)];
                }
                out[x] = acc * gain;
            }
        } else {
            for x in 0..w {
                let mut acc = 0.0;
                for (t, k) in KERNEL.iter().enumerate() {
                    acc += k * row[reflect101(x as isize + t as isize - 2, w)];
                }
                out[x] = acc * gain;
            }
        }
    }
}

/// Separable 5-tap convolution along columns, writing into `dst`.
fn conv5_cols(src: &[f64], w: usize, h: usize, gain: f64, dst: &mut [f64]) {
    for y in 0..h {
        let ym2 = reflect101(y as isize - 2, h) * w;
        let ym1 = reflect101(y as isize - 1, h) * w;
        let y0 = y * w;
        let yp1 = reflect101(y as isize + 1, h) * w;
        let yp2 = reflect101(y as isize + 2, h) * w;
        for x in 0..w {
            dst[y0 + x] = gain
                * (KERNEL[0] * src[ym2 + x]
                    + KERNEL[1] * src[ym1 + x]
                    + KERNEL[2] * src[y0 + x]
                    + KERNEL[3] * src[yp1 + x]
                    + KERNEL[4] * src[yp2 + x]);
        }
    }
}

fn blur(plane: &ImagePlane, gain_per_axis: f64) -> ImagePlane {
    let (w, h) = (plane.width(), plane.height());
    let mut tmp = vec![0.0; w * h];
    let mut out = vec![0.0; w * h];
    conv5_rows(plane.data(), w, h, gain_per_axis, &mut tmp);
    conv5_cols(&tmp, w, h, gain_per_axis, &mut out);
    ImagePlane::new(w, h, out).expect("blur preserves dimensions")
}

/// Low-pass and decimate by two. Output dimensions are `ceil(dims / 2)`.
pub fn gaussian_reduce(plane: &ImagePlane) -> Result<ImagePlane> {
    let (w, h) = (plane.width(), plane.height());
    if w < 2 || h < 2 {
        return Err(Error::PlaneTooSmall(format!(
            "gaussian_reduce needs at least 2x2, got {w}x{h}"
        )));
    }
    let blurred = blur(plane, 1.0);
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let mut data = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            data.push(blurred.at(x * 2, y * 2));
        }
    }
    ImagePlane::new(ow, oh, data)
}

/// Zero-interleave upsample to `target` dimensions and low-pass with the
/// same kernel at gain 2 per axis. Valid targets are `2w-1..=2w` by
/// `2h-1..=2h`.
pub fn expand(plane: &ImagePlane, target_w: usize, target_h: usize) -> Result<ImagePlane> {
    let (w, h) = (plane.width(), plane.height());
    let w_ok = target_w == 2 * w || target_w + 1 == 2 * w;
    let h_ok = target_h == 2 * h || target_h + 1 == 2 * h;
    if !w_ok || !h_ok {
        return Err(Error::DimensionMismatch(format!(
            "expand of {w}x{h} cannot produce {target_w}x{target_h}"
        )));
    }
    let mut up = vec![0.0; target_w * target_h];
    for y in 0..h {
        for x in 0..w {
            if 2 * x < target_w && 2 * y < target_h {
                up[2 * y * target_w + 2 * x] = plane.at(x, y);
            }
        }
    }
    let up = ImagePlane::new(target_w, target_h, up)?;
    Ok(blur(&up, 2.0))
}

/// A band-pass pyramid plus the low-pass residue needed to invert it.
#[derive(Debug, Clone)]
pub struct LaplacianPyramid {
    bands: Vec<ImagePlane>,
    residue: ImagePlane,
}

impl LaplacianPyramid {
    pub fn bands(&self) -> &[ImagePlane] {
        &self.bands
    }

    pub fn residue(&self) -> &ImagePlane {
        &self.residue
    }

    pub fn into_bands(self) -> Vec<ImagePlane> {
        self.bands
    }

    /// Reconstruct the original plane from bands and residue.
    pub fn collapse(&self) -> Result<ImagePlane> {
        let mut g = self.residue.clone();
        for band in self.bands.iter().rev() {
            let e = expand(&g, band.width(), band.height())?;
            let data: Vec<f64> = band
                .data()
                .iter()
                .zip(e.data())
                .map(|(b, e)| b + e)
                .collect();
            g = ImagePlane::new(band.width(), band.height(), data)?;
        }
        Ok(g)
    }
}

/// Build a `levels`-deep band-pass pyramid of `plane`.
pub fn laplacian_pyramid(plane: &ImagePlane, levels: usize) -> Result<LaplacianPyramid> {
    if levels == 0 {
        return Err(Error::PlaneTooSmall("pyramid needs at least one level".into()));
    }
    let min_side = 1usize << levels;
    if plane.width() < min_side || plane.height() < min_side {
        return Err(Error::PlaneTooSmall(format!(
            "{}x{} plane cannot be halved {levels} times (needs >= {min_side} per axis)",
            plane.width(),
            plane.height()
        )));
    }
    let mut gaussians = vec![plane.clone()];
    for i in 0..levels {
        let next = gaussian_reduce(&gaussians[i])?;
        gaussians.push(next);
    }
    let mut bands = Vec::with_capacity(levels);
    for i in 0..levels {
        let up = expand(
            &gaussians[i + 1],
            gaussians[i].width(),
            gaussians[i].height(),
        )?;
        let data: Vec<f64> = gaussians[i]
            .data()
            .iter()
            .zip(up.data())
            .map(|(g, e)| g - e)
            .collect();
        bands.push(ImagePlane::new(
            gaussians[i].width(),
            gaussians[i].height(),
            data,
        )?);
    }
    let residue = gaussians.pop().expect("levels >= 1");
    Ok(LaplacianPyramid { bands, residue })
}

/// The 18 band-pass sub-images of one input, in channel-major order:
/// H level 1..3, S level 1..3, ..., Cr level 1..3.
#[derive(Debug, Clone)]
pub struct ScaleSpaceStack {
    sub_images: Vec<ImagePlane>,
    source_id: String,
}

impl ScaleSpaceStack {
    pub fn sub_images(&self) -> &[ImagePlane] {
        &self.sub_images
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// Canonical flat index of `(channel, level)`, with `level` in `0..3`.
    pub fn index_of(channel: ColorChannel, level: usize) -> usize {
        let c = ColorChannel::ALL
            .iter()
            .position(|x| *x == channel)
            .unwrap();
        c * LEVELS + level
    }

    /// Inverse of [`ScaleSpaceStack::index_of`].
    pub fn channel_and_level(index: usize) -> (ColorChannel, usize) {
        (ColorChannel::ALL[index / LEVELS], index % LEVELS)
    }
}

/// Decompose all six channels of `cs`, producing the 18-entry stack.
pub fn build_scale_space_stack(cs: &ColorStack) -> Result<ScaleSpaceStack> {
    let mut sub_images = Vec::with_capacity(SUB_IMAGES);
    for channel in cs.channels() {
        let pyr = laplacian_pyramid(channel, LEVELS)?;
        sub_images.extend(pyr.into_bands());
    }
    debug_assert_eq!(sub_images.len(), SUB_IMAGES);
    Ok(ScaleSpaceStack {
        sub_images,
        source_id: cs.source_id().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{decompose_color_spaces, RgbPlanes};
    use rand::{RngExt, SeedableRng};

    fn random_plane(w: usize, h: usize, seed: u64) -> ImagePlane {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ImagePlane::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap()
    }

    #[test]
    fn reduce_preserves_dc() {
        let p = ImagePlane::filled(7, 5, 0.37);
        let r = gaussian_reduce(&p).unwrap();
        assert_eq!((r.width(), r.height()), (4, 3));
        assert!(r.data().iter().all(|v| (v - 0.37).abs() < 1e-12));
    }

    #[test]
    fn reduce_halves_dims() {
        let p = ImagePlane::filled(4, 4, 0.0);
        let r = gaussian_reduce(&p).unwrap();
        assert_eq!((r.width(), r.height()), (2, 2));
    }

    #[test]
    fn reduce_rejects_degenerate() {
        let p = ImagePlane::filled(1, 9, 0.0);
        assert!(gaussian_reduce(&p).is_err());
    }

    #[test]
    fn reduce_impulse_matches_hand_convolution() {
        let mut p = ImagePlane::filled(9, 9, 0.0);
        p.set(4, 4, 1.0);
        // Independent check: direct 2-D convolution with the outer-product
        // kernel at the aligned output pixel (4, 4) -> (2, 2).
        let mut direct = 0.0;
        for (ty, ky) in KERNEL.iter().enumerate() {
            for (tx, kx) in KERNEL.iter().enumerate() {
                let sx = 4 + tx as isize - 2;
                let sy = 4 + ty as isize - 2;
                if sx == 4 && sy == 4 {
                    direct += ky * kx;
                }
            }
        }
        assert!((direct - 6.0 / 16.0 * 6.0 / 16.0).abs() < 1e-15);
        let r = gaussian_reduce(&p).unwrap();
        assert!((r.at(2, 2) - direct).abs() < 1e-15);
    }

    #[test]
    fn expand_preserves_dc() {
        let p = ImagePlane::filled(3, 4, 0.61);
        for (tw, th) in [(6, 8), (5, 7), (6, 7), (5, 8)] {
            let e = expand(&p, tw, th).unwrap();
            assert_eq!((e.width(), e.height()), (tw, th));
            assert!(
                e.data().iter().all(|v| (v - 0.61).abs() < 1e-12),
                "target {tw}x{th}"
            );
        }
    }

    #[test]
    fn expand_rejects_bad_target() {
        let p = ImagePlane::filled(3, 3, 0.0);
        assert!(expand(&p, 7, 6).is_err());
        assert!(expand(&p, 6, 4).is_err());
    }

    #[test]
    fn reduce_then_expand_tracks_smooth_ramp() {
        let (w, h) = (65, 65);
        let mut p = ImagePlane::filled(w, h, 0.0);
        for y in 0..h {
            for x in 0..w {
                p.set(x, y, 0.5 * (x as f64 / (w - 1) as f64 + y as f64 / (h - 1) as f64));
            }
        }
        let r = gaussian_reduce(&p).unwrap();
        let e = expand(&r, w, h).unwrap();
        let max_err = p
            .data()
            .iter()
            .zip(e.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 0.02, "max err {max_err}");
    }

    #[test]
    fn pyramid_of_constant_is_flat() {
        let p = ImagePlane::filled(32, 32, 0.8);
        let pyr = laplacian_pyramid(&p, 3).unwrap();
        for band in pyr.bands() {
            assert!(band.data().iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn pyramid_collapse_is_exact() {
        for seed in 0..10 {
            let p = random_plane(37, 29, seed);
            let pyr = laplacian_pyramid(&p, 3).unwrap();
            let rec = pyr.collapse().unwrap();
            let max_err = p
                .data()
                .iter()
                .zip(rec.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(max_err < 1e-6, "seed {seed}: max err {max_err}");
        }
    }

    #[test]
    fn pyramid_level_dims() {
        let p = ImagePlane::filled(320, 320, 0.1);
        let pyr = laplacian_pyramid(&p, 3).unwrap();
        let dims: Vec<usize> = pyr.bands().iter().map(|b| b.width()).collect();
        assert_eq!(dims, vec![320, 160, 80]);
        assert_eq!(pyr.residue().width(), 40);
    }

    #[test]
    fn pyramid_too_small_rejected() {
        let p = ImagePlane::filled(7, 32, 0.0);
        assert!(laplacian_pyramid(&p, 3).is_err());
    }

    #[test]
    fn pyramid_is_linear() {
        let x = random_plane(24, 24, 1);
        let y = random_plane(24, 24, 2);
        let (a, b) = (0.7, -0.3);
        let combo_data: Vec<f64> = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(xv, yv)| a * xv + b * yv)
            .collect();
        let combo = ImagePlane::new(24, 24, combo_data).unwrap();
        let px = laplacian_pyramid(&x, 3).unwrap();
        let py = laplacian_pyramid(&y, 3).unwrap();
        let pc = laplacian_pyramid(&combo, 3).unwrap();
        for ((bx, by), bc) in px.bands().iter().zip(py.bands()).zip(pc.bands()) {
            for ((vx, vy), vc) in bx.data().iter().zip(by.data()).zip(bc.data()) {
                assert!((a * vx + b * vy - vc).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn stack_has_18_canonical_entries() {
        let rgb = RgbPlanes {
            r: random_plane(32, 32, 3),
            g: random_plane(32, 32, 4),
            b: random_plane(32, 32, 5),
        };
        let cs = decompose_color_spaces(&rgb, "t").unwrap();
        let stack = build_scale_space_stack(&cs).unwrap();
        assert_eq!(stack.sub_images().len(), 18);
        // 1-based entry 4 is the S channel at the finest level.
        assert_eq!(
            ScaleSpaceStack::channel_and_level(3),
            (ColorChannel::S, 0)
        );
        assert_eq!(ScaleSpaceStack::index_of(ColorChannel::S, 0), 3);
        assert_eq!(
            ScaleSpaceStack::channel_and_level(17),
            (ColorChannel::Cr, 2)
        );
        // Dimensions halve per level within a channel.
        for c in 0..6 {
            assert_eq!(stack.sub_images()[c * 3].width(), 32);
            assert_eq!(stack.sub_images()[c * 3 + 1].width(), 16);
            assert_eq!(stack.sub_images()[c * 3 + 2].width(), 8);
        }
    }

    #[test]
    fn stack_of_constant_gray_is_flat() {
        let rgb = RgbPlanes {
            r: ImagePlane::filled(32, 32, 0.5),
            g: ImagePlane::filled(32, 32, 0.5),
            b: ImagePlane::filled(32, 32, 0.5),
        };
        let cs = decompose_color_spaces(&rgb, "t").unwrap();
        let stack = build_scale_space_stack(&cs).unwrap();
        for sub in stack.sub_images() {
            assert!(sub.data().iter().all(|v| v.abs() < 1e-9));
        }
    }
}
