//! Binarized statistical image features.
//!
//! Each pixel is coded by the signs of its responses to a bank of learned
//! linear filters: filter `b` responding positively sets bit `b`, and the
//! resulting 8-bit codes are histogrammed (256 bins, L1-normalized).
//!
//! The bank shipped under `data/bsif_11x11_8.bank` was learned once by PCA
//! whitening plus fixed-seed FastICA over patches of procedurally generated
//! textures (see the `learn_bsif_bank` example) and its bytes are pinned so
//! results stay reproducible. Banks are 8 filters of 11x11 taps with
//! zero-mean, orthonormal rows; all three properties are re-verified on
//! every load.

use std::path::Path;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{atomic_write, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::imaging::ImagePlane;

const MAGIC: &[u8; 8] = b"BSIFBNK1";
const MEAN_TOL: f64 = 1e-9;
const ORTHO_TOL: f64 = 1e-9;

/// Responses this close to zero are treated as zero when binarizing, so a
/// mathematically zero response (for example a constant input under a
/// zero-mean filter) cannot flip a bit through rounding noise.
const RESPONSE_EPS: f64 = 1e-12;

static DEFAULT_BANK: OnceLock<Result<FilterBank>> = OnceLock::new();
static DEFAULT_BANK_BYTES: &[u8] = include_bytes!("../../data/bsif_11x11_8.bank");

/// A validated bank of square zero-mean filters with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    size: usize,
    filters: Vec<Vec<f64>>,
}

impl FilterBank {
    pub fn new(size: usize, filters: Vec<Vec<f64>>) -> Result<Self> {
        let bank = Self { size, filters };
        bank.validate()?;
        Ok(bank)
    }

    pub fn count(&self) -> usize {
        self.filters.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    /// The pinned 8-filter 11x11 bank embedded in the crate.
    pub fn default_bank() -> Result<&'static FilterBank> {
        match DEFAULT_BANK.get_or_init(|| FilterBank::from_bytes(DEFAULT_BANK_BYTES)) {
            Ok(bank) => Ok(bank),
            Err(_) => Err(Error::FilterBank(
                "embedded default bank failed validation".into(),
            )),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.filters.is_empty() || self.filters.len() > 16 {
            return Err(Error::FilterBank(format!(
                "unsupported filter count {}",
                self.filters.len()
            )));
        }
        let taps = self.size * self.size;
        if self.size % 2 == 0 || self.size < 3 {
            return Err(Error::FilterBank(format!(
                "filter size {} must be odd and >= 3",
                self.size
            )));
        }
        for (i, f) in self.filters.iter().enumerate() {
            if f.len() != taps {
                return Err(Error::FilterBank(format!(
                    "filter {i} has {} taps, expected {taps}",
                    f.len()
                )));
            }
            let mean = f.iter().sum::<f64>() / taps as f64;
            if mean.abs() > MEAN_TOL {
                return Err(Error::FilterBank(format!(
                    "filter {i} is not zero-mean (mean {mean:.3e})"
                )));
            }
        }
        for i in 0..self.filters.len() {
            for j in i..self.filters.len() {
                let dot: f64 = self.filters[i]
                    .iter()
                    .zip(&self.filters[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).abs() > ORTHO_TOL {
                    return Err(Error::FilterBank(format!(
                        "rows {i},{j} not orthonormal (dot {dot:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_magic(MAGIC);
        w.put_u32(self.filters.len() as u32);
        w.put_u32(self.size as u32);
        for f in &self.filters {
            for tap in f {
                w.put_f64(*tap);
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::checked(bytes).map_err(Error::FilterBank)?;
        r.expect_magic(MAGIC).map_err(Error::FilterBank)?;
        let count = r.take_u32().map_err(Error::FilterBank)? as usize;
        let size = r.take_u32().map_err(Error::FilterBank)? as usize;
        let taps = size.checked_mul(size).ok_or_else(|| {
            Error::FilterBank("filter size overflows".into())
        })?;
        let mut filters = Vec::with_capacity(count);
        for _ in 0..count {
            let mut f = Vec::with_capacity(taps);
            for _ in 0..taps {
                f.push(r.take_f64().map_err(Error::FilterBank)?);
            }
            filters.push(f);
        }
        r.finish().map_err(Error::FilterBank)?;
        Self::new(size, filters)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, &self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// 256-bin L1-normalized histogram of BSIF codes over all pixels of the
/// plane, with reflect-101 borders.
pub fn bsif_histogram(plane: &ImagePlane, bank: &FilterBank) -> Result<Vec<f64>> {
    let (w, h) = (plane.width(), plane.height());
    if w < 2 || h < 2 {
        return Err(Error::PlaneTooSmall(format!(
            "BSIF needs at least 2x2, got {w}x{h}"
        )));
    }
    if bank.count() != 8 || bank.size() != 11 {
        return Err(Error::FilterBank(format!(
            "expected the 8-filter 11x11 bank, got {} of {}x{}",
            bank.count(),
            bank.size(),
            bank.size()
        )));
    }
    let size = bank.size();
    let reach = size / 2;

    // Reflect-pad once, then run all filters over the padded buffer.
    let pw = w + 2 * reach;
    let ph = h + 2 * reach;
    let mut padded = vec![0.0f64; pw * ph];
    for py in 0..ph {
        let sy = reflect(py as isize - reach as isize, h);
        for px in 0..pw {
            let sx = reflect(px as isize - reach as isize, w);
            padded[py * pw + px] = plane.at(sx, sy);
        }
    }

    let mut codes = vec![0u8; w * h];
    for (bit, filter) in bank.filters().iter().enumerate() {
        let mask = 1u8 << bit;
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                let mut t = 0;
                for ky in 0..size {
                    let row = (y + ky) * pw + x;
                    for kx in 0..size {
                        acc += filter[t] * padded[row + kx];
                        t += 1;
                    }
                }
                if acc > RESPONSE_EPS {
                    codes[y * w + x] |= mask;
                }
            }
        }
    }

    let mut counts = [0u64; 256];
    for c in &codes {
        counts[*c as usize] += 1;
    }
    let total = (w * h) as f64;
    Ok(counts.iter().map(|c| *c as f64 / total).collect())
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
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

/// Learn a filter bank from image patches: per-patch DC removal, PCA onto
/// the top `count` components, then a fixed-seed symmetric FastICA rotation
/// within that subspace. The returned rows are the ICA rotation composed
/// with the orthonormal PCA basis, so they stay orthonormal and zero-mean.
pub fn learn_filter_bank(
    patches: &[Vec<f64>],
    count: usize,
    size: usize,
    seed: u64,
) -> Result<FilterBank> {
    let taps = size * size;
    if patches.len() < taps * 4 {
        return Err(Error::FilterBank(format!(
            "need at least {} patches to learn {count} filters, got {}",
            taps * 4,
            patches.len()
        )));
    }
    if count == 0 || count > taps {
        return Err(Error::FilterBank(format!("cannot learn {count} filters")));
    }
    let n = patches.len();

    // Column per patch, DC removed per patch and per dimension.
    let mut z = DMatrix::<f64>::zeros(taps, n);
    for (j, p) in patches.iter().enumerate() {
        if p.len() != taps {
            return Err(Error::FilterBank(format!(
                "patch {j} has {} taps, expected {taps}",
                p.len()
            )));
        }
        let mean = p.iter().sum::<f64>() / taps as f64;
        for i in 0..taps {
            z[(i, j)] = p[i] - mean;
        }
    }
    let dim_mean = z.column_mean();
    for mut col in z.column_iter_mut() {
        col -= &dim_mean;
    }

    // PCA basis of the patch covariance.
    let cov = &z * z.transpose() / n as f64;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..taps).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let mut basis = DMatrix::<f64>::zeros(taps, count);
    for (k, idx) in order.iter().take(count).enumerate() {
        basis.set_column(k, &eig.eigenvectors.column(*idx));
    }

    // Whitened coordinates for the ICA stage.
    let mut y = basis.transpose() * &z; // count x n
    for k in 0..count {
        let lambda = eig.eigenvalues[order[k]].max(1e-12);
        let s = 1.0 / lambda.sqrt();
        for j in 0..n {
            y[(k, j)] *= s;
        }
    }

    let w = fast_ica_rotation(&y, seed);
    let mut rows = (w * basis.transpose()).transpose(); // taps x count

    // Numerical cleanup: project out the constant direction and
    // re-orthonormalize with modified Gram-Schmidt.
    for k in 0..count {
        let mut col = rows.column(k).clone_owned();
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        for prev in 0..k {
            let p = rows.column(prev);
            let dot = col.dot(&p);
            col -= p * dot;
        }
        let norm = col.norm();
        if norm < 1e-9 {
            return Err(Error::FilterBank(
                "degenerate component during orthonormalization".into(),
            ));
        }
        col /= norm;
        rows.set_column(k, &col);
    }

    let filters: Vec<Vec<f64>> = (0..count)
        .map(|k| rows.column(k).iter().copied().collect())
        .collect();
    FilterBank::new(size, filters)
}

/// Symmetric FastICA with the tanh nonlinearity; returns an orthogonal
/// rotation. Deterministic for a fixed seed.
fn fast_ica_rotation(y: &DMatrix<f64>, seed: u64) -> DMatrix<f64> {
    let m = y.nrows();
    let n = y.ncols() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = DMatrix::<f64>::from_fn(m, m, |_, _| rng.random::<f64>() - 0.5);
    let mut w = symmetric_decorrelate(&init);
    for _ in 0..300 {
        let u = &w * y; // m x n
        let g = u.map(|v| v.tanh());
        let gp_mean: Vec<f64> = (0..m)
            .map(|i| u.row(i).iter().map(|v| 1.0 - v.tanh() * v.tanh()).sum::<f64>() / n)
            .collect();
        let mut w_new = &g * y.transpose() / n;
        for i in 0..m {
            for j in 0..m {
                w_new[(i, j)] -= gp_mean[i] * w[(i, j)];
            }
        }
        let w_next = symmetric_decorrelate(&w_new);
        let delta = (0..m)
            .map(|i| (1.0 - (w_next.row(i).transpose().dot(&w.row(i).transpose())).abs()).abs())
            .fold(0.0, f64::max);
        w = w_next;
        if delta < 1e-12 {
            break;
        }
    }
    w
}

/// `(W W^T)^{-1/2} W`.
fn symmetric_decorrelate(w: &DMatrix<f64>) -> DMatrix<f64> {
    let wwt = w * w.transpose();
    let eig = wwt.symmetric_eigen();
    let m = w.nrows();
    let mut inv_sqrt = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        inv_sqrt[(i, i)] = 1.0 / eig.eigenvalues[i].max(1e-18).sqrt();
    }
    &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose() * w
}
