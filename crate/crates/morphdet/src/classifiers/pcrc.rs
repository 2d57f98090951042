//! Collaborative representation classifier.
//!
//! Probes are coded over the pooled training dictionary by ridge
//! regression, `alpha = (X^T X + lambda I)^{-1} X^T q`, and classified by
//! per-class reconstruction residual. The regularized normal matrix is
//! factored once at training time; the projection operator is applied
//! through that factorization rather than stored densely.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::classifiers::Label;
use crate::error::{Error, Result};

/// Trained collaborative-representation model.
#[derive(Debug, Clone)]
pub struct PcrcParams {
    pub lambda: f64,
    /// Pooled dictionary: standardized training columns.
    pub train: Arc<DMatrix<f64>>,
    /// Class of each dictionary column.
    pub labels: Vec<Label>,
    /// Cholesky factor of `X^T X + lambda I`.
    pub chol: Cholesky<f64, Dyn>,
}

/// Train on standardized columns of `x`. `gram` must be `x^T x`.
pub fn train(
    x: Arc<DMatrix<f64>>,
    labels: &[Label],
    lambda: f64,
    gram: &DMatrix<f64>,
) -> Result<PcrcParams> {
    if lambda <= 0.0 {
        return Err(Error::Training("P-CRC lambda must be positive".into()));
    }
    let n = x.ncols();
    if labels.len() != n {
        return Err(Error::Training("label count mismatch".into()));
    }
    let n_morph = labels.iter().filter(|l| **l == Label::Morph).count();
    if n_morph == 0 || n_morph == n {
        return Err(Error::Training(
            "P-CRC training needs both classes present".into(),
        ));
    }
    let mut system = gram.clone();
    for i in 0..n {
        system[(i, i)] += lambda;
    }
    let chol = Cholesky::new(system).ok_or_else(|| {
        Error::Training("P-CRC normal matrix not positive definite".into())
    })?;
    Ok(PcrcParams {
        lambda,
        train: x,
        labels: labels.to_vec(),
        chol,
    })
}

/// Ridge coding coefficients of a standardized probe.
pub fn code(params: &PcrcParams, z: &[f64]) -> DVector<f64> {
    let q = DVector::from_column_slice(z);
    let v = params.train.tr_mul(&q);
    params.chol.solve(&v)
}

/// Per-class reconstruction residuals `(bona fide, morph)`.
pub fn residuals(params: &PcrcParams, z: &[f64]) -> (f64, f64) {
    let alpha = code(params, z);
    let d = params.train.nrows();
    let mut recon_b = vec![0.0f64; d];
    let mut recon_m = vec![0.0f64; d];
    for (j, label) in params.labels.iter().enumerate() {
        let a = alpha[j];
        if a == 0.0 {
            continue;
        }
        let col = params.train.column(j);
        let target = match label {
            Label::BonaFide => &mut recon_b,
            Label::Morph => &mut recon_m,
        };
        for (t, xv) in target.iter_mut().zip(col.iter()) {
            *t += a * xv;
        }
    }
    let norm_of_diff = |recon: &[f64]| -> f64 {
        recon
            .iter()
            .zip(z)
            .map(|(r, q)| (q - r) * (q - r))
            .sum::<f64>()
            .sqrt()
    };
    (norm_of_diff(&recon_b), norm_of_diff(&recon_m))
}

/// `residual(bona fide) - residual(morph)`: positive when the morph
/// sub-dictionary reconstructs the probe better.
pub fn score(params: &PcrcParams, z: &[f64]) -> f64 {
    let (r_b, r_m) = residuals(params, z);
    r_b - r_m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_data::blobs;
    use crate::classifiers::{gram_matrix, train_pcrc, FeatureType, ModelParams, TrainingSet};

    fn orthonormal_toy(lambda: f64) -> PcrcParams {
        let ts = TrainingSet::with_identity_standardization(
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            vec![Label::BonaFide, Label::Morph],
        )
        .unwrap();
        let model = train_pcrc(&ts, FeatureType::Lbp, lambda).unwrap();
        match model.params {
            ModelParams::Pcrc(p) => p,
            _ => unreachable!(),
        }
    }

    #[test]
    fn orthonormal_dictionary_matches_closed_form() {
        // With X^T X = I the ridge code is X^T q / (1 + lambda), so probing
        // with the morph column e2 gives residuals 1 and lambda/(1+lambda).
        let p = orthonormal_toy(0.1);
        let (r_b, r_m) = residuals(&p, &[0.0, 1.0, 0.0]);
        assert!((r_b - 1.0).abs() < 1e-12);
        assert!((r_m - 0.1 / 1.1).abs() < 1e-12);
        assert!(r_m < r_b);
        assert!(score(&p, &[0.0, 1.0, 0.0]) > 0.0);
    }

    #[test]
    fn bona_fide_training_column_scores_negative() {
        let p = orthonormal_toy(0.1);
        assert!(score(&p, &[1.0, 0.0, 0.0]) < 0.0);
    }

    #[test]
    fn orthogonal_probe_scores_zero() {
        let p = orthonormal_toy(0.1);
        assert_eq!(score(&p, &[0.0, 0.0, 1.0]), 0.0);
    }

    #[test]
    fn huge_lambda_shrinks_codes_to_zero() {
        let p = orthonormal_toy(1e6);
        let probe = [0.0, 1.0, 0.0];
        let (r_b, r_m) = residuals(&p, &probe);
        let norm = 1.0;
        assert!((r_b - norm).abs() < 1e-3);
        assert!((r_m - norm).abs() < 1e-3);
    }

    #[test]
    fn zero_lambda_rejected() {
        let ts = TrainingSet::with_identity_standardization(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![Label::BonaFide, Label::Morph],
        )
        .unwrap();
        assert!(train_pcrc(&ts, FeatureType::Lbp, 0.0).is_err());
        assert!(train_pcrc(&ts, FeatureType::Lbp, -1.0).is_err());
    }

    #[test]
    fn class_partition_reconstructions_sum_to_pooled() {
        let (vectors, labels) = blobs(12, 61);
        let ts = TrainingSet::new(vectors.clone(), labels).unwrap();
        let model = train_pcrc(&ts, FeatureType::Lbp, 0.01).unwrap();
        let p = match &model.params {
            ModelParams::Pcrc(p) => p,
            _ => unreachable!(),
        };
        let probe = model.standardization.apply(&[0.4, -0.9]).unwrap();
        let alpha = code(p, &probe);
        let pooled = p.train.as_ref() * &alpha;
        // Rebuild the two class parts and compare their sum.
        let d = p.train.nrows();
        let mut parts = vec![0.0f64; d];
        for class in [Label::BonaFide, Label::Morph] {
            let mut part = vec![0.0f64; d];
            for (j, l) in p.labels.iter().enumerate() {
                if *l == class {
                    for (t, xv) in part.iter_mut().zip(p.train.column(j).iter()) {
                        *t += alpha[j] * xv;
                    }
                }
            }
            for (acc, v) in parts.iter_mut().zip(&part) {
                *acc += v;
            }
        }
        for (a, b) in parts.iter().zip(pooled.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_blobs_reach_full_training_accuracy() {
        let (vectors, labels) = crate::classifiers::test_data::angular_blobs(20, 71);
        let ts =
            TrainingSet::with_identity_standardization(vectors.clone(), labels.clone()).unwrap();
        let model = train_pcrc(&ts, FeatureType::Lbp, 0.01).unwrap();
        for (v, l) in vectors.iter().zip(&labels) {
            let s = model.score(v).unwrap();
            assert!(s * l.sign() > 0.0, "{v:?} misclassified (score {s})");
        }
    }
}
