//! Synthetic dataset generator.
//!
//! Stands in for the private morph dataset so the full pipeline can be
//! exercised end to end. Bona fide samples are smooth procedural portrait
//! patterns (oval, eyes, nose, mouth over a graded background) plus pixel
//! noise. A morph averages two displaced renderings of the same pattern,
//! which doubles the feature edges exactly the way landmark morphs ghost
//! eye and nose contours; the displacement scales with `ghost_amplitude`,
//! so at amplitude zero the two renderings coincide and morphs become
//! statistically identical to bona fides. Print-scan media are emulated
//! with blur, noise, banding, and gamma; compression re-encodes as JPEG
//! quality 75. Every file is a pure function of (seed, sample, cell), so
//! regeneration is byte-identical.

use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifiers::Label;
use crate::error::{Error, Result};
use crate::harness::{
    label_name, Compression, DatasetManifest, ManifestRow, Medium, Partition, PostProcessing,
};
use crate::imaging::ImagePlane;

/// Generator options. Defaults produce an easily separable
/// digital/before/uncompressed dataset at the working resolution.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub n_per_class: usize,
    pub seed: u64,
    /// Rendered image side length in pixels.
    pub resolution: usize,
    /// Ghosting displacement scale; 1.0 is the default difficulty, 0.0
    /// makes morphs indistinguishable from bona fides.
    pub ghost_amplitude: f64,
    pub media: Vec<Medium>,
    pub posts: Vec<PostProcessing>,
    pub compressions: Vec<Compression>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            n_per_class: 100,
            seed: 42,
            resolution: 320,
            ghost_amplitude: 1.0,
            media: vec![Medium::Digital],
            posts: vec![PostProcessing::Before],
            compressions: vec![Compression::No],
        }
    }
}

impl SynthOptions {
    /// All twelve (medium, post, compressed) cells.
    pub fn full_matrix(mut self) -> Self {
        self.media = Medium::ALL.to_vec();
        self.posts = PostProcessing::ALL.to_vec();
        self.compressions = Compression::ALL.to_vec();
        self
    }
}

/// Generate images and a `manifest.csv` under `out_dir`, returning the
/// loaded manifest.
pub fn generate_synthetic_dataset(out_dir: &Path, opts: &SynthOptions) -> Result<DatasetManifest> {
    if opts.n_per_class < 2 {
        return Err(Error::Manifest(
            "synthetic generator needs at least 2 samples per class".into(),
        ));
    }
    if opts.resolution < 64 {
        return Err(Error::Manifest("synthetic resolution too small".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut rows = Vec::new();
    let n_train = opts.n_per_class.div_ceil(2);
    for class_idx in 0..opts.n_per_class {
        for label in [Label::BonaFide, Label::Morph] {
            let partition = if class_idx < n_train {
                Partition::Train
            } else {
                Partition::Test
            };
            // Subject pools are disjoint per partition by construction;
            // morphs name their two contributing subjects.
            let subject_id = match label {
                Label::BonaFide => format!("{}-s{class_idx:04}", partition.label()),
                Label::Morph => {
                    let other = if class_idx < n_train {
                        (class_idx + 1) % n_train
                    } else {
                        n_train + (class_idx - n_train + 1) % (opts.n_per_class - n_train)
                    };
                    format!(
                        "{}-s{class_idx:04}+s{other:04}",
                        partition.label()
                    )
                }
            };
            // The base pattern is shared by all cells of this sample.
            let base = render_sample(opts, class_idx, label);
            for &medium in &opts.media {
                for &post in &opts.posts {
                    for &compressed in &opts.compressions {
                        // Post-processing reduces ghosting, so "after"
                        // morphs are re-rendered with a damped
                        // displacement.
                        let rendered = if label == Label::Morph && post == PostProcessing::After {
                            render_with_ghost(
                                opts,
                                class_idx,
                                label,
                                opts.ghost_amplitude * 0.35,
                            )
                        } else {
                            base.clone()
                        };
                        let transformed = apply_medium(&rendered, medium, opts.seed, class_idx);
                        let ext = match compressed {
                            Compression::No => "png",
                            Compression::Yes => "jpg",
                        };
                        let rel_path = format!(
                            "{}_{}_{:04}_{}_{}_{}.{ext}",
                            partition.label(),
                            label_name(label),
                            class_idx,
                            medium.label(),
                            post.label(),
                            compressed.label()
                        );
                        let path = out_dir.join(&rel_path);
                        write_image(&transformed, &path, compressed)?;
                        rows.push(ManifestRow {
                            rel_path,
                            path,
                            label,
                            medium,
                            post,
                            compressed,
                            partition,
                            subject_id: subject_id.clone(),
                        });
                    }
                }
            }
        }
    }

    let manifest_path = out_dir.join("manifest.csv");
    DatasetManifest::write(&rows, &manifest_path)?;
    DatasetManifest::load(&manifest_path)
}

/// RGB planes of one rendered sample.
#[derive(Clone)]
pub(crate) struct Rendered {
    pub r: ImagePlane,
    pub g: ImagePlane,
    pub b: ImagePlane,
}

fn sample_rng(seed: u64, class_idx: usize, label: Label, stream: u64) -> ChaCha8Rng {
    let mix = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(class_idx as u64)
        .wrapping_mul(0x2545_f491_4f6c_dd1d)
        .wrapping_add(label.as_u8() as u64 + 1)
        .wrapping_mul(0xd6e8_feb8_6659_fd93)
        .wrapping_add(stream);
    ChaCha8Rng::seed_from_u64(mix)
}

fn render_sample(opts: &SynthOptions, class_idx: usize, label: Label) -> Rendered {
    let ghost = match label {
        Label::BonaFide => 0.0,
        Label::Morph => opts.ghost_amplitude,
    };
    render_with_ghost(opts, class_idx, label, ghost)
}

/// Portrait geometry drawn from the shared prior.
struct FaceParams {
    cx: f64,
    cy: f64,
    oval_rx: f64,
    oval_ry: f64,
    eye_dx: f64,
    eye_y: f64,
    eye_r: f64,
    nose_len: f64,
    mouth_y: f64,
    mouth_w: f64,
    skin: [f64; 3],
    bg_top: f64,
    bg_bottom: f64,
}

fn draw_params(rng: &mut ChaCha8Rng, side: f64) -> FaceParams {
    FaceParams {
        cx: side * rng.random_range(0.47..0.53),
        cy: side * rng.random_range(0.47..0.53),
        oval_rx: side * rng.random_range(0.26..0.31),
        oval_ry: side * rng.random_range(0.34..0.40),
        eye_dx: side * rng.random_range(0.10..0.13),
        eye_y: side * rng.random_range(-0.09..-0.06),
        eye_r: side * rng.random_range(0.022..0.030),
        nose_len: side * rng.random_range(0.08..0.11),
        mouth_y: side * rng.random_range(0.13..0.17),
        mouth_w: side * rng.random_range(0.08..0.11),
        skin: [
            rng.random_range(0.72..0.82),
            rng.random_range(0.58..0.68),
            rng.random_range(0.48..0.58),
        ],
        bg_top: rng.random_range(0.85..0.95),
        bg_bottom: rng.random_range(0.60..0.75),
    }
}

/// Displacements of the feature landmarks between the two blended
/// identities, in pixels at unit amplitude. Concentrated on the eye
/// region, with smaller nose and mouth shifts.
struct GhostField {
    eye_l: (f64, f64),
    eye_r: (f64, f64),
    nose: (f64, f64),
    mouth: (f64, f64),
}

fn draw_ghost_field(rng: &mut ChaCha8Rng, side: f64) -> GhostField {
    let px = side / 320.0;
    let mut offset = |scale: f64| -> (f64, f64) {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let mag = rng.random_range(0.6..1.0) * scale * px;
        (mag * angle.cos(), mag * angle.sin())
    };
    GhostField {
        eye_l: offset(3.2),
        eye_r: offset(3.2),
        nose: offset(1.6),
        mouth: offset(1.8),
    }
}

fn render_with_ghost(
    opts: &SynthOptions,
    class_idx: usize,
    label: Label,
    ghost: f64,
) -> Rendered {
    let side = opts.resolution;
    let mut geom_rng = sample_rng(opts.seed, class_idx, label, 1);
    let params = draw_params(&mut geom_rng, side as f64);
    let field = draw_ghost_field(&mut geom_rng, side as f64);

    // Average of the two displaced identities; at ghost == 0 the two
    // renderings are the same image, so a morph degenerates to a bona
    // fide pattern exactly.
    let a = render_pattern(side, &params, &field, 0.5 * ghost);
    let b = render_pattern(side, &params, &field, -0.5 * ghost);
    let mut luma: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * x + 0.5 * y).collect();

    let mut noise_rng = sample_rng(opts.seed, class_idx, label, 2);
    for v in luma.iter_mut() {
        let n: f64 = noise_rng.random_range(-0.018..0.018);
        *v = (*v + n).clamp(0.0, 1.0);
    }

    // Tint the single-channel pattern into skin-toned RGB.
    let n = side * side;
    let mut r = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut bch = Vec::with_capacity(n);
    for v in &luma {
        r.push((v * params.skin[0] / 0.8).clamp(0.0, 1.0));
        g.push((v * params.skin[1] / 0.8).clamp(0.0, 1.0));
        bch.push((v * params.skin[2] / 0.8).clamp(0.0, 1.0));
    }
    Rendered {
        r: ImagePlane::new(side, side, r).unwrap(),
        g: ImagePlane::new(side, side, g).unwrap(),
        b: ImagePlane::new(side, side, bch).unwrap(),
    }
}

/// Draw one identity: smooth strokes built from distance profiles.
fn render_pattern(side: usize, p: &FaceParams, field: &GhostField, amp: f64) -> Vec<f64> {
    let mut img = vec![0.0f64; side * side];
    let edge = 1.4 * side as f64 / 320.0;
    let smooth = |d: f64| -> f64 { 1.0 / (1.0 + (d / edge).exp()) };

    let eye_l = (
        p.cx - p.eye_dx + amp * field.eye_l.0,
        p.cy + p.eye_y + amp * field.eye_l.1,
    );
    let eye_r = (
        p.cx + p.eye_dx + amp * field.eye_r.0,
        p.cy + p.eye_y + amp * field.eye_r.1,
    );
    let nose_top = (p.cx + amp * field.nose.0, p.cy - 0.01 * side as f64);
    let mouth = (
        p.cx + amp * field.mouth.0,
        p.cy + p.mouth_y + amp * field.mouth.1,
    );

    for y in 0..side {
        for x in 0..side {
            let (fx, fy) = (x as f64, y as f64);
            // Background gradient.
            let mut v = p.bg_top + (p.bg_bottom - p.bg_top) * fy / side as f64;

            // Face oval: brighter interior with a soft edge.
            let od = (((fx - p.cx) / p.oval_rx).powi(2) + ((fy - p.cy) / p.oval_ry).powi(2))
                .sqrt();
            let inside = smooth((od - 1.0) * p.oval_rx.min(p.oval_ry) * 0.5);
            v = v * (1.0 - inside) + 0.80 * inside;

            // Eyes: dark discs with a soft rim.
            for (ex, ey) in [eye_l, eye_r] {
                let d = ((fx - ex).powi(2) + (fy - ey).powi(2)).sqrt();
                let disc = smooth(d - p.eye_r);
                v = v * (1.0 - disc) + 0.15 * disc;
            }

            // Nose: a vertical stroke ending in a dot.
            let ndx = (fx - nose_top.0).abs();
            if fy >= nose_top.1 && fy <= nose_top.1 + p.nose_len {
                let stroke = smooth(ndx - 0.6 * edge) * 0.35;
                v -= stroke * 0.4;
            }
            let tip = ((fx - nose_top.0).powi(2)
                + (fy - (nose_top.1 + p.nose_len)).powi(2))
            .sqrt();
            let tip_disc = smooth(tip - 1.8 * edge);
            v = v * (1.0 - 0.3 * tip_disc) + 0.45 * 0.3 * tip_disc;

            // Mouth: a horizontal stroke.
            let mdx = (fx - mouth.0).abs();
            let mdy = (fy - mouth.1).abs();
            if mdx <= p.mouth_w {
                let stroke = smooth(mdy - 0.8 * edge);
                v = v * (1.0 - 0.6 * stroke) + 0.25 * 0.6 * stroke;
            }

            img[y * side + x] = v.clamp(0.0, 1.0);
        }
    }
    img
}

// Seed salts for the two print-scan pipelines.
const PS1_SALT: u64 = 0x7073_3100;
const PS2_SALT: u64 = 0x7073_3200;

/// Print-scan emulation: blur, sensor noise, banding, gamma.
fn apply_medium(img: &Rendered, medium: Medium, seed: u64, class_idx: usize) -> Rendered {
    match medium {
        Medium::Digital => img.clone(),
        Medium::Ps1 => degrade(img, seed ^ PS1_SALT, class_idx, 0.6, 0.008, 0.0, 1.06),
        Medium::Ps2 => degrade(img, seed ^ PS2_SALT, class_idx, 1.1, 0.015, 0.012, 0.94),
    }
}

fn degrade(
    img: &Rendered,
    seed: u64,
    class_idx: usize,
    blur_sigma: f64,
    noise: f64,
    banding: f64,
    gamma: f64,
) -> Rendered {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(class_idx as u64));
    let process = |plane: &ImagePlane, rng: &mut ChaCha8Rng| -> ImagePlane {
        let blurred = box_blur(plane, blur_sigma);
        let (w, h) = (blurred.width(), blurred.height());
        let mut data = blurred.data().to_vec();
        for (i, v) in data.iter_mut().enumerate() {
            let y = i / w;
            let band = banding * (y as f64 * 0.7).sin();
            let n: f64 = rng.random_range(-1.0..1.0) * noise;
            *v = (*v + n + band).clamp(0.0, 1.0).powf(gamma);
        }
        ImagePlane::new(w, h, data).unwrap()
    };
    Rendered {
        r: process(&img.r, &mut rng),
        g: process(&img.g, &mut rng),
        b: process(&img.b, &mut rng),
    }
}

/// Cheap separable blur: repeated 3-tap [1 2 1]/4 passes approximating a
/// Gaussian of roughly the requested sigma.
fn box_blur(plane: &ImagePlane, sigma: f64) -> ImagePlane {
    let passes = ((sigma * sigma * 2.0).round() as usize).max(1);
    let (w, h) = (plane.width(), plane.height());
    let mut cur = plane.data().to_vec();
    let mut tmp = vec![0.0f64; w * h];
    for _ in 0..passes {
        for y in 0..h {
            for x in 0..w {
                let xm = x.saturating_sub(1);
                let xp = (x + 1).min(w - 1);
                tmp[y * w + x] =
                    0.25 * cur[y * w + xm] + 0.5 * cur[y * w + x] + 0.25 * cur[y * w + xp];
            }
        }
        for y in 0..h {
            let ym = y.saturating_sub(1);
            let yp = (y + 1).min(h - 1);
            for x in 0..w {
                cur[y * w + x] =
                    0.25 * tmp[ym * w + x] + 0.5 * tmp[y * w + x] + 0.25 * tmp[yp * w + x];
            }
        }
    }
    ImagePlane::new(w, h, cur).unwrap()
}

fn write_image(img: &Rendered, path: &Path, compressed: Compression) -> Result<()> {
    let (w, h) = (img.r.width() as u32, img.r.height() as u32);
    let mut buf = image::RgbImage::new(w, h);
    for (i, px) in buf.pixels_mut().enumerate() {
        px.0 = [
            (img.r.data()[i] * 255.0).round() as u8,
            (img.g.data()[i] * 255.0).round() as u8,
            (img.b.data()[i] * 255.0).round() as u8,
        ];
    }
    let mut bytes: Vec<u8> = Vec::new();
    match compressed {
        Compression::No => {
            use image::ImageEncoder;
            image::codecs::png::PngEncoder::new(&mut bytes)
                .write_image(buf.as_raw(), w, h, image::ExtendedColorType::Rgb8)
                .map_err(|e| Error::Decode {
                    path: path.to_path_buf(),
                    reason: format!("png encode failed: {e}"),
                })?;
        }
        Compression::Yes => {
            let mut encoder =
                image::codecs::jpeg::JpegEncoder::new_with_quality(&mut bytes, 75);
            encoder
                .encode_image(&buf)
                .map_err(|e| Error::Decode {
                    path: path.to_path_buf(),
                    reason: format!("jpeg encode failed: {e}"),
                })?;
        }
    }
    crate::codec::atomic_write(path, &bytes).map_err(|e| Error::io(path, e))
}
