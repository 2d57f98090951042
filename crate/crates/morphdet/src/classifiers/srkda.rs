//! Kernel discriminant analysis via spectral regression.
//!
//! For the two-class case the class-indicator responses, orthogonalized
//! against the constant vector, reduce to a single centered indicator. The
//! discriminant coefficients come from kernel ridge regression onto that
//! response, `(K + delta I) alpha = y`, solved by a dense Cholesky
//! factorization. Probes are scored by their projected coordinate relative
//! to the midpoint of the projected class means, oriented so morphs sit
//! above bona fides.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::classifiers::Label;
use crate::error::{Error, Result};

/// Trained SRKDA discriminant.
#[derive(Debug, Clone)]
pub struct SrkdaParams {
    pub sigma: f64,
    pub delta: f64,
    /// Regression coefficients, one per training column.
    pub alpha: Vec<f64>,
    /// Standardized training columns the kernel is evaluated against.
    pub train: Arc<DMatrix<f64>>,
    pub projected_mean_bona: f64,
    pub projected_mean_morph: f64,
}

/// Train on standardized columns of `x`. `gram` must be `x^T x`; pairwise
/// distances and the RBF kernel are derived from it.
pub fn train(
    x: Arc<DMatrix<f64>>,
    labels: &[Label],
    sigma: Option<f64>,
    delta: f64,
    gram: &DMatrix<f64>,
) -> Result<SrkdaParams> {
    let n = x.ncols();
    if labels.len() != n {
        return Err(Error::Training("label count mismatch".into()));
    }
    if delta <= 0.0 {
        return Err(Error::Training(
            "SRKDA regularization delta must be positive".into(),
        ));
    }
    let n_morph = labels.iter().filter(|l| **l == Label::Morph).count();
    if n_morph == 0 || n_morph == n {
        return Err(Error::Training(
            "SRKDA training needs both classes present".into(),
        ));
    }

    let sigma = match sigma {
        Some(s) => s,
        None => median_pairwise_distance(gram)?,
    };
    if !(sigma > 0.0) {
        return Err(Error::Training(format!(
            "SRKDA kernel bandwidth must be positive, got {sigma}"
        )));
    }

    let kernel = rbf_from_gram(gram, sigma);

    // Class indicator orthogonalized against the ones vector.
    let frac_morph = n_morph as f64 / n as f64;
    let response = DVector::<f64>::from_iterator(
        n,
        labels.iter().map(|l| match l {
            Label::Morph => 1.0 - frac_morph,
            Label::BonaFide => -frac_morph,
        }),
    );

    let mut system = kernel.clone();
    for i in 0..n {
        system[(i, i)] += delta;
    }
    let chol = Cholesky::new(system).ok_or_else(|| {
        Error::Training("SRKDA system not positive definite; increase delta".into())
    })?;
    let mut alpha = chol.solve(&response);

    // Projections of the training set and class means.
    let projections = &kernel * &alpha;
    let (mut sum_b, mut sum_m, mut cnt_b) = (0.0, 0.0, 0usize);
    for (p, l) in projections.iter().zip(labels) {
        match l {
            Label::BonaFide => {
                sum_b += p;
                cnt_b += 1;
            }
            Label::Morph => sum_m += p,
        }
    }
    let mut mean_b = sum_b / cnt_b as f64;
    let mut mean_m = sum_m / n_morph as f64;
    // Orient the discriminant so morphs project higher.
    if mean_m < mean_b {
        alpha.neg_mut();
        mean_b = -mean_b;
        mean_m = -mean_m;
    }

    Ok(SrkdaParams {
        sigma,
        delta,
        alpha: alpha.iter().copied().collect(),
        train: x,
        projected_mean_bona: mean_b,
        projected_mean_morph: mean_m,
    })
}

/// Projected coordinate of a standardized probe minus the midpoint of the
/// projected class means.
pub fn score(params: &SrkdaParams, z: &[f64]) -> f64 {
    let midpoint = 0.5 * (params.projected_mean_bona + params.projected_mean_morph);
    project(params, z) - midpoint
}

/// Raw projection `sum_i alpha_i k(x_i, z)`.
pub fn project(params: &SrkdaParams, z: &[f64]) -> f64 {
    let x = params.train.as_ref();
    let inv_two_sigma2 = 1.0 / (2.0 * params.sigma * params.sigma);
    let mut acc = 0.0;
    for (j, a) in params.alpha.iter().enumerate() {
        let col = x.column(j);
        let mut d2 = 0.0;
        for (xv, zv) in col.iter().zip(z) {
            let d = xv - zv;
            d2 += d * d;
        }
        acc += a * (-d2 * inv_two_sigma2).exp();
    }
    acc
}

/// RBF kernel value between two equal-length vectors.
pub fn rbf_kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Median of the pairwise Euclidean distances implied by a Gram matrix.
pub fn median_pairwise_distance(gram: &DMatrix<f64>) -> Result<f64> {
    let n = gram.nrows();
    if n < 2 {
        return Err(Error::Training(
            "median distance needs at least two samples".into(),
        ));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d2 = gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)];
            dists.push(d2.max(0.0).sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median > 0.0 {
        Ok(median)
    } else {
        // Degenerate geometry (all points identical); fall back to unit
        // bandwidth rather than a singular kernel.
        Ok(1.0)
    }
}

fn rbf_from_gram(gram: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    let n = gram.nrows();
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    DMatrix::from_fn(n, n, |i, j| {
        let d2 = (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0);
        (-d2 * inv_two_sigma2).exp()
    })
}
