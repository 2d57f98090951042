//! Regenerate the pinned BSIF filter bank.
//!
//! The bank shipped at `data/bsif_11x11_8.bank` was produced by exactly this
//! program: 11x11 patches are sampled from a fixed-seed procedural texture
//! corpus (oriented gratings, multi-octave value noise, and step patterns),
//! whitened, and rotated by symmetric FastICA. Running it again reproduces
//! the same bytes.
//!
//! ```bash
//! cargo run --release -p morphdet --example learn_bsif_bank -- [out-path]
//! ```

use morphdet::features::bsif::learn_filter_bank;
use morphdet::imaging::ImagePlane;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TEXTURES: usize = 24;
const TEXTURE_SIDE: usize = 128;
const PATCHES: usize = 24_000;
const FILTERS: usize = 8;
const FILTER_SIZE: usize = 11;
const SEED: u64 = 20_240_611;

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/morphdet/data/bsif_11x11_8.bank".to_string());

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let textures: Vec<ImagePlane> = (0..TEXTURES).map(|_| procedural_texture(&mut rng)).collect();

    let mut patches = Vec::with_capacity(PATCHES);
    for _ in 0..PATCHES {
        let t = &textures[rng.random_range(0..textures.len())];
        let x0 = rng.random_range(0..t.width() - FILTER_SIZE);
        let y0 = rng.random_range(0..t.height() - FILTER_SIZE);
        let mut patch = Vec::with_capacity(FILTER_SIZE * FILTER_SIZE);
        for y in y0..y0 + FILTER_SIZE {
            for x in x0..x0 + FILTER_SIZE {
                patch.push(t.at(x, y));
            }
        }
        patches.push(patch);
    }

    let bank = learn_filter_bank(&patches, FILTERS, FILTER_SIZE, SEED).expect("learning failed");
    bank.save(std::path::Path::new(&out)).expect("write failed");
    println!(
        "wrote {} filters of {}x{} to {}",
        bank.count(),
        bank.size(),
        bank.size(),
        out
    );
    for (i, f) in bank.filters().iter().enumerate() {
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        let energy: f64 = f.iter().map(|v| v * v).sum();
        println!("  filter {i}: mean {mean:+.2e}, energy {energy:.6}");
    }
}

/// One texture: a few oriented gratings over multi-octave value noise, with
/// occasional hard steps so the corpus contains edges as well as waves.
fn procedural_texture(rng: &mut ChaCha8Rng) -> ImagePlane {
    let n = TEXTURE_SIDE;
    let mut data = vec![0.0f64; n * n];

    for _ in 0..3 {
        let freq = rng.random_range(0.04..0.6);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let amp = rng.random_range(0.2..0.6);
        let (c, s) = (theta.cos(), theta.sin());
        for y in 0..n {
            for x in 0..n {
                let u = c * x as f64 + s * y as f64;
                data[y * n + x] += amp * (freq * u + phase).sin();
            }
        }
    }

    // Value noise: coarse random lattices upsampled bilinearly.
    for octave in [8usize, 16, 32] {
        let cells = n / octave + 2;
        let lattice: Vec<f64> = (0..cells * cells).map(|_| rng.random::<f64>() - 0.5).collect();
        let amp = 0.4 / (octave as f64).sqrt();
        for y in 0..n {
            for x in 0..n {
                let fx = x as f64 / octave as f64;
                let fy = y as f64 / octave as f64;
                let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
                let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
                let l = |a: usize, b: usize| lattice[b * cells + a];
                let v = l(x0, y0) * (1.0 - tx) * (1.0 - ty)
                    + l(x0 + 1, y0) * tx * (1.0 - ty)
                    + l(x0, y0 + 1) * (1.0 - tx) * ty
                    + l(x0 + 1, y0 + 1) * tx * ty;
                data[y * n + x] += amp * v;
            }
        }
    }

    // A couple of hard steps at random orientations.
    for _ in 0..2 {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let offset = rng.random_range(0.3..0.7) * n as f64;
        let amp = rng.random_range(0.1..0.3);
        let (c, s) = (theta.cos(), theta.sin());
        for y in 0..n {
            for x in 0..n {
                if c * x as f64 + s * y as f64 > offset {
                    data[y * n + x] += amp;
                }
            }
        }
    }

    // Normalize into [0, 1].
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9);
    for v in data.iter_mut() {
        *v = (*v - lo) / span;
    }
    ImagePlane::new(n, n, data).expect("texture dimensions")
}
