//! Soft-margin linear SVM trained by dual coordinate descent.
//!
//! The bias is folded in as an extra regularized constant feature, which
//! removes the dual equality constraint and lets each alpha update stay a
//! box-clipped one-dimensional Newton step. Updates run in a fixed cyclic
//! order, so training is deterministic. The loop exits once the duality gap
//! between the (augmented) primal and dual objectives drops below
//! [`GAP_TOLERANCE`].

use nalgebra::DMatrix;

use crate::classifiers::Label;
use crate::error::{Error, Result};

/// Required duality gap at convergence.
pub const GAP_TOLERANCE: f64 = 1e-6;

const MAX_PASSES: usize = 500_000;

/// Trained linear SVM: decision value is `weights . x + bias`, positive
/// toward morph.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Duality gap reached at convergence.
    pub duality_gap: f64,
}

/// Train on standardized columns of `x` (dim x n). `gram` must be the
/// precomputed `x^T x`.
pub fn train(x: &DMatrix<f64>, labels: &[Label], c: f64, gram: &DMatrix<f64>) -> Result<SvmParams> {
    let n = x.ncols();
    if labels.len() != n {
        return Err(Error::Training("label count mismatch".into()));
    }
    if c <= 0.0 {
        return Err(Error::Training("SVM C must be positive".into()));
    }
    let n_morph = labels.iter().filter(|l| **l == Label::Morph).count();
    if n_morph == 0 || n_morph == n {
        return Err(Error::Training(
            "SVM training needs both classes present".into(),
        ));
    }
    let y: Vec<f64> = labels.iter().map(Label::sign).collect();

    // Augmented Gram: q[i][j] = y_i y_j (x_i . x_j + 1).
    let mut q = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            q[(i, j)] = y[i] * y[j] * (gram[(i, j)] + 1.0);
        }
    }

    let mut alpha = vec![0.0f64; n];
    // grad_i = (q alpha)_i - 1.
    let mut grad = vec![-1.0f64; n];
    let mut gap = f64::INFINITY;
    let mut converged = false;
    for _pass in 0..MAX_PASSES {
        for i in 0..n {
            let d = q[(i, i)];
            if d <= 0.0 {
                continue;
            }
            let candidate = (alpha[i] - grad[i] / d).clamp(0.0, c);
            let delta = candidate - alpha[i];
            if delta != 0.0 {
                alpha[i] = candidate;
                let col = q.column(i);
                for (g, qji) in grad.iter_mut().zip(col.iter()) {
                    *g += delta * qji;
                }
            }
        }
        // Gap from the maintained gradient: y_i f(x_i) = grad_i + 1.
        let quad: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g + 1.0)).sum();
        let hinge: f64 = grad.iter().map(|g| (-g).max(0.0)).sum();
        let alpha_sum: f64 = alpha.iter().sum();
        gap = quad + c * hinge - alpha_sum;
        if gap < GAP_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Training(format!(
            "SVM did not reach duality gap {GAP_TOLERANCE} (gap {gap:.3e})"
        )));
    }

    let mut weights = vec![0.0f64; x.nrows()];
    let mut bias = 0.0;
    for (j, (a, yj)) in alpha.iter().zip(&y).enumerate() {
        if *a != 0.0 {
            let coef = a * yj;
            let col = x.column(j);
            for (w, xv) in weights.iter_mut().zip(col.iter()) {
                *w += coef * xv;
            }
            bias += coef;
        }
    }
    Ok(SvmParams {
        c,
        weights,
        bias,
        duality_gap: gap,
    })
}

/// Signed distance `w . z + b` of a standardized probe.
pub fn score(params: &SvmParams, z: &[f64]) -> f64 {
    params
        .weights
        .iter()
        .zip(z)
        .map(|(w, x)| w * x)
        .sum::<f64>()
        + params.bias
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_data::blobs;
    use crate::classifiers::{gram_matrix, train_linear_svm, FeatureType, TrainingSet};

    fn toy_pair(c: f64) -> SvmParams {
        let ts = TrainingSet::with_identity_standardization(
            vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            vec![Label::BonaFide, Label::Morph],
        )
        .unwrap();
        let model = train_linear_svm(&ts, FeatureType::Lbp, c).unwrap();
        match model.params {
            crate::classifiers::ModelParams::Svm(p) => p,
            _ => unreachable!(),
        }
    }

    #[test]
    fn symmetric_pair_splits_at_zero() {
        let p = toy_pair(10.0);
        // Boundary along x = 0: classify both training points correctly.
        assert!(score(&p, &[-1.0, 0.0]) < 0.0);
        assert!(score(&p, &[1.0, 0.0]) > 0.0);
        assert!(p.bias.abs() < 1e-5);
        // A point on the hyperplane scores ~0.
        assert!(score(&p, &[0.0, 3.0]).abs() < 1e-5);
        // Probe on the morph side.
        assert!(score(&p, &[2.0, 0.0]) > 0.0);
    }

    #[test]
    fn score_is_affine_along_weight_ray() {
        let p = toy_pair(1.0);
        let x0 = [0.3, -0.2];
        let norm2: f64 = p.weights.iter().map(|w| w * w).sum();
        let at = |t: f64| {
            let z: Vec<f64> = x0.iter().zip(&p.weights).map(|(x, w)| x + t * w).collect();
            score(&p, &z)
        };
        let (s0, s1, s2) = (at(0.0), at(1.0), at(2.0));
        assert!((s1 - s0 - norm2).abs() < 1e-9);
        assert!((s2 - s1 - norm2).abs() < 1e-9);
    }

    #[test]
    fn single_class_rejected() {
        let x = DMatrix::from_column_slice(1, 2, &[0.0, 1.0]);
        let gram = gram_matrix(&x);
        let err = train(&x, &[Label::Morph, Label::Morph], 1.0, &gram).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
    }

    #[test]
    fn separable_blobs_reach_full_training_accuracy() {
        let (vectors, labels) = blobs(20, 42);
        let ts = TrainingSet::new(vectors.clone(), labels.clone()).unwrap();
        let model = train_linear_svm(&ts, FeatureType::Lbp, 1.0).unwrap();
        for (v, l) in vectors.iter().zip(&labels) {
            let s = model.score(v).unwrap();
            assert!(s * l.sign() > 0.0, "point {v:?} misclassified (score {s})");
        }
    }

    #[test]
    fn agrees_with_projected_gradient_reference() {
        // Independent reference: projected gradient ascent on the same
        // augmented dual, tiny fixed step, many iterations.
        let (vectors, labels) = blobs(20, 7);
        let ts = TrainingSet::new(vectors.clone(), labels.clone()).unwrap();
        let x = ts.standardized_matrix().unwrap();
        let gram = gram_matrix(&x);
        let c = 1.0;
        let n = x.ncols();
        let y: Vec<f64> = labels.iter().map(Label::sign).collect();
        let mut alpha = vec![0.0f64; n];
        let max_diag = (0..n)
            .map(|i| gram[(i, i)] + 1.0)
            .fold(0.0f64, f64::max);
        let step = 1.0 / (max_diag * n as f64);
        for _ in 0..200_000 {
            let mut grad = vec![1.0f64; n];
            for i in 0..n {
                for j in 0..n {
                    grad[i] -= y[i] * y[j] * (gram[(i, j)] + 1.0) * alpha[j];
                }
            }
            for i in 0..n {
                alpha[i] = (alpha[i] + step * grad[i]).clamp(0.0, c);
            }
        }
        let mut w_ref = vec![0.0f64; x.nrows()];
        let mut b_ref = 0.0;
        for j in 0..n {
            for (wi, xi) in w_ref.iter_mut().zip(x.column(j).iter()) {
                *wi += alpha[j] * y[j] * xi;
            }
            b_ref += alpha[j] * y[j];
        }

        let params = train(&x, &labels, c, &gram).unwrap();
        for j in 0..n {
            let z: Vec<f64> = x.column(j).iter().copied().collect();
            let s_ref: f64 =
                w_ref.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>() + b_ref;
            let s = score(&params, &z);
            assert_eq!(s.signum(), s_ref.signum(), "decision mismatch at {j}");
        }
    }

    #[test]
    fn kkt_constraints_hold_at_convergence() {
        let (vectors, labels) = blobs(15, 3);
        let ts = TrainingSet::new(vectors.clone(), labels.clone()).unwrap();
        let x = ts.standardized_matrix().unwrap();
        let gram = gram_matrix(&x);
        let params = train(&x, &labels, 1.0, &gram).unwrap();
        assert!(params.duality_gap < GAP_TOLERANCE);
        // With the gap closed, every training point satisfies the
        // soft-margin constraint with its implied slack.
        for j in 0..x.ncols() {
            let z: Vec<f64> = x.column(j).iter().copied().collect();
            let margin = labels[j].sign() * score(&params, &z);
            let slack = (1.0 - margin).max(0.0);
            assert!(margin >= 1.0 - slack - GAP_TOLERANCE);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (vectors, labels) = blobs(20, 99);
        let ts = TrainingSet::new(vectors.clone(), labels).unwrap();
        let a = train_linear_svm(&ts, FeatureType::Lbp, 1.0).unwrap();
        let b = train_linear_svm(&ts, FeatureType::Lbp, 1.0).unwrap();
        for v in &vectors {
            let (sa, sb) = (a.score(v).unwrap(), b.score(v).unwrap());
            assert!((sa - sb).abs() < 1e-12);
        }
    }
}
