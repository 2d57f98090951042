//! The classifier ensemble: linear SVM, SRKDA, and P-CRC.
//!
//! Each classifier is trained independently per feature type on
//! standardized vectors, giving nine models whose raw scores populate the
//! 3x3 score grid for a probe. All scores are oriented so that higher
//! means more morph-like. Training is single-threaded and deterministic;
//! trained models are immutable and cheap to share.

pub mod pcrc;
pub mod srkda;
pub mod svm;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::{FeatureSet, FeatureType};

pub use pcrc::PcrcParams;
pub use srkda::SrkdaParams;
pub use svm::SvmParams;

/// Ground-truth class of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    BonaFide,
    Morph,
}

impl Label {
    /// Signed target used by the classifiers: morph = +1.
    pub fn sign(&self) -> f64 {
        match self {
            Label::BonaFide => -1.0,
            Label::Morph => 1.0,
        }
    }

    pub fn as_u8(&self) -> u8 {
        match self {
            Label::BonaFide => 0,
            Label::Morph => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label::BonaFide),
            1 => Ok(Label::Morph),
            _ => Err(Error::Training(format!("unknown label byte {v}"))),
        }
    }
}

/// Per-dimension affine map fitted on training rows: zero mean, unit scale.
/// Zero-variance dimensions keep scale 1 so they map to exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardization {
    /// Fit mean and population standard deviation per dimension.
    pub fn fit(vectors: &[Vec<f64>]) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Training("cannot standardize an empty set".into()));
        }
        let dim = vectors[0].len();
        let n = vectors.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in vectors {
            if v.len() != dim {
                return Err(Error::Training("vectors differ in dimension".into()));
            }
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for v in vectors {
            for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
                let d = x - m;
                *s += d * d;
            }
        }
        let scale = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    /// Pass-through map of the given dimension.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn from_parts(mean: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if mean.len() != scale.len() {
            return Err(Error::Training(
                "standardization mean/scale length mismatch".into(),
            ));
        }
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.mean.len() {
            return Err(Error::Training(format!(
                "vector dim {} does not match standardization dim {}",
                v.len(),
                self.mean.len()
            )));
        }
        Ok(v.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }
}

/// Labeled training vectors of one feature type plus the standardization
/// fitted on them.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    vectors: Vec<Vec<f64>>,
    labels: Vec<Label>,
    standardization: Standardization,
}

impl TrainingSet {
    /// Build a set and fit its standardization. Requires at least two
    /// samples per class.
    pub fn new(vectors: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        Self::check_classes(&vectors, &labels, 2)?;
        let standardization = Standardization::fit(&vectors)?;
        Ok(Self {
            vectors,
            labels,
            standardization,
        })
    }

    /// Build a set with a pass-through standardization. Used when vectors
    /// are already commensurate (toy dictionaries, unit tests); only one
    /// sample per class is required.
    pub fn with_identity_standardization(
        vectors: Vec<Vec<f64>>,
        labels: Vec<Label>,
    ) -> Result<Self> {
        Self::check_classes(&vectors, &labels, 1)?;
        let dim = vectors[0].len();
        Ok(Self {
            vectors,
            labels,
            standardization: Standardization::identity(dim),
        })
    }

    fn check_classes(vectors: &[Vec<f64>], labels: &[Label], min_per_class: usize) -> Result<()> {
        if vectors.len() != labels.len() {
            return Err(Error::Training("vector/label count mismatch".into()));
        }
        if vectors.is_empty() {
            return Err(Error::Training("empty training set".into()));
        }
        let dim = vectors[0].len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Training("vectors differ in dimension".into()));
        }
        let n_bona = labels.iter().filter(|l| **l == Label::BonaFide).count();
        let n_morph = labels.len() - n_bona;
        if n_bona < min_per_class || n_morph < min_per_class {
            return Err(Error::Training(format!(
                "need at least {min_per_class} samples per class, got {n_bona} bona fide and {n_morph} morph"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    /// Standardized samples as matrix columns (dim x n).
    pub fn standardized_matrix(&self) -> Result<DMatrix<f64>> {
        let (d, n) = (self.dim(), self.len());
        let mut m = DMatrix::<f64>::zeros(d, n);
        for (j, v) in self.vectors.iter().enumerate() {
            let z = self.standardization.apply(v)?;
            for (i, x) in z.iter().enumerate() {
                m[(i, j)] = *x;
            }
        }
        Ok(m)
    }
}

/// The three classifier families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    Svm,
    Srkda,
    Pcrc,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Svm,
        ClassifierKind::Srkda,
        ClassifierKind::Pcrc,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Srkda => "srkda",
            ClassifierKind::Pcrc => "pcrc",
        }
    }

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|k| k == self).unwrap()
    }
}

/// Kind-specific trained parameters.
#[derive(Debug, Clone)]
pub enum ModelParams {
    Svm(SvmParams),
    Srkda(SrkdaParams),
    Pcrc(PcrcParams),
}

/// Reproducibility metadata carried by every trained model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelMetadata {
    pub seed: u64,
    pub descriptor_digest: String,
}

/// One trained classifier for one feature type.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub feature_type: FeatureType,
    pub standardization: Standardization,
    pub params: ModelParams,
    pub metadata: ModelMetadata,
}

impl TrainedModel {
    /// Raw morph score of an unstandardized probe vector; higher means
    /// more morph-like.
    pub fn score(&self, raw: &[f64]) -> Result<f64> {
        let z = self.standardization.apply(raw)?;
        let s = match &self.params {
            ModelParams::Svm(p) => svm::score(p, &z),
            ModelParams::Srkda(p) => srkda::score(p, &z),
            ModelParams::Pcrc(p) => pcrc::score(p, &z),
        };
        if !s.is_finite() {
            return Err(Error::Training(format!(
                "non-finite {} score",
                self.kind.label()
            )));
        }
        Ok(s)
    }
}

/// Train a soft-margin linear SVM (dual coordinate descent solved to a
/// duality gap below `svm::GAP_TOLERANCE`).
pub fn train_linear_svm(ts: &TrainingSet, feature_type: FeatureType, c: f64) -> Result<TrainedModel> {
    let x = Arc::new(ts.standardized_matrix()?);
    let gram = gram_matrix(&x);
    let params = svm::train(&x, ts.labels(), c, &gram)?;
    Ok(TrainedModel {
        kind: ClassifierKind::Svm,
        feature_type,
        standardization: ts.standardization().clone(),
        params: ModelParams::Svm(params),
        metadata: ModelMetadata::default(),
    })
}

/// Train spectral-regression KDA with an RBF kernel. `sigma = None`
/// selects the median pairwise training distance.
pub fn train_srkda(
    ts: &TrainingSet,
    feature_type: FeatureType,
    sigma: Option<f64>,
    delta: f64,
) -> Result<TrainedModel> {
    let x = Arc::new(ts.standardized_matrix()?);
    let gram = gram_matrix(&x);
    let params = srkda::train(x, ts.labels(), sigma, delta, &gram)?;
    Ok(TrainedModel {
        kind: ClassifierKind::Srkda,
        feature_type,
        standardization: ts.standardization().clone(),
        params: ModelParams::Srkda(params),
        metadata: ModelMetadata::default(),
    })
}

/// Train the collaborative-representation classifier with ridge parameter
/// `lambda`.
pub fn train_pcrc(ts: &TrainingSet, feature_type: FeatureType, lambda: f64) -> Result<TrainedModel> {
    let x = Arc::new(ts.standardized_matrix()?);
    let gram = gram_matrix(&x);
    let params = pcrc::train(x, ts.labels(), lambda, &gram)?;
    Ok(TrainedModel {
        kind: ClassifierKind::Pcrc,
        feature_type,
        standardization: ts.standardization().clone(),
        params: ModelParams::Pcrc(params),
        metadata: ModelMetadata::default(),
    })
}

/// Train all three classifiers of one feature type, sharing the
/// standardized matrix and its Gram matrix.
pub fn train_feature_type(
    ts: &TrainingSet,
    feature_type: FeatureType,
    cfg: &crate::config::ClassifierConfig,
) -> Result<Vec<TrainedModel>> {
    let x = Arc::new(ts.standardized_matrix()?);
    let gram = gram_matrix(&x);
    let std = ts.standardization().clone();
    let svm_params = svm::train(&x, ts.labels(), cfg.svm_c, &gram)?;
    let srkda_params = srkda::train(
        Arc::clone(&x),
        ts.labels(),
        cfg.srkda_sigma,
        cfg.srkda_delta,
        &gram,
    )?;
    let pcrc_params = pcrc::train(Arc::clone(&x), ts.labels(), cfg.pcrc_lambda, &gram)?;
    Ok(vec![
        TrainedModel {
            kind: ClassifierKind::Svm,
            feature_type,
            standardization: std.clone(),
            params: ModelParams::Svm(svm_params),
            metadata: ModelMetadata::default(),
        },
        TrainedModel {
            kind: ClassifierKind::Srkda,
            feature_type,
            standardization: std.clone(),
            params: ModelParams::Srkda(srkda_params),
            metadata: ModelMetadata::default(),
        },
        TrainedModel {
            kind: ClassifierKind::Pcrc,
            feature_type,
            standardization: std,
            params: ModelParams::Pcrc(pcrc_params),
            metadata: ModelMetadata::default(),
        },
    ])
}

pub(crate) fn gram_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.tr_mul(x)
}

/// The 3x3 raw score grid of one probe, indexed (feature type, classifier).
/// Higher values are more morph-like.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSet {
    grid: [[f64; 3]; 3],
}

impl ScoreSet {
    pub fn new(grid: [[f64; 3]; 3]) -> Self {
        Self { grid }
    }

    pub fn get(&self, f: FeatureType, c: ClassifierKind) -> f64 {
        self.grid[f.index()][c.index()]
    }

    pub fn set(&mut self, f: FeatureType, c: ClassifierKind, v: f64) {
        self.grid[f.index()][c.index()] = v;
    }

    /// Canonical flat stream index of a grid cell, feature-major.
    pub fn stream_index(f: FeatureType, c: ClassifierKind) -> usize {
        f.index() * 3 + c.index()
    }

    /// Streams in canonical order.
    pub fn streams(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for f in FeatureType::ALL {
            for c in ClassifierKind::ALL {
                out[Self::stream_index(f, c)] = self.get(f, c);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.grid.iter().flatten().all(|v| v.is_finite())
    }
}

/// The nine models of a trained ensemble, one per (feature, classifier)
/// cell.
#[derive(Debug, Clone)]
pub struct ModelSet {
    models: Vec<TrainedModel>,
}

impl ModelSet {
    /// Validates that every (feature type, classifier) cell is present
    /// exactly once.
    pub fn new(models: Vec<TrainedModel>) -> Result<Self> {
        for f in FeatureType::ALL {
            for c in ClassifierKind::ALL {
                let count = models
                    .iter()
                    .filter(|m| m.feature_type == f && m.kind == c)
                    .count();
                if count != 1 {
                    return Err(Error::Training(format!(
                        "model grid needs exactly one ({}, {}) model, found {count}",
                        f.label(),
                        c.label()
                    )));
                }
            }
        }
        Ok(Self { models })
    }

    pub fn get(&self, f: FeatureType, c: ClassifierKind) -> &TrainedModel {
        self.models
            .iter()
            .find(|m| m.feature_type == f && m.kind == c)
            .expect("validated on construction")
    }

    pub fn models(&self) -> &[TrainedModel] {
        &self.models
    }

    /// Score one probe against all nine models.
    pub fn score_probe(&self, fs: &FeatureSet) -> Result<ScoreSet> {
        let mut grid = ScoreSet::new([[0.0; 3]; 3]);
        for f in FeatureType::ALL {
            let vector = &fs.get(f).values;
            for c in ClassifierKind::ALL {
                grid.set(f, c, self.get(f, c).score(vector)?);
            }
        }
        Ok(grid)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_single_vector_maps_to_zero() {
        let s = Standardization::fit(&[vec![3.0, -1.0, 7.5]]).unwrap();
        assert_eq!(s.apply(&[3.0, -1.0, 7.5]).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn standardize_pair_maps_to_unit() {
        let s = Standardization::fit(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(s.apply(&[0.0]).unwrap(), vec![-1.0]);
        assert_eq!(s.apply(&[2.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn standardized_columns_have_zero_mean() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let vectors: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..10).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let s = Standardization::fit(&vectors).unwrap();
        let mut col_sums = vec![0.0; 10];
        for v in &vectors {
            for (acc, z) in col_sums.iter_mut().zip(s.apply(v).unwrap()) {
                *acc += z;
            }
        }
        for acc in col_sums {
            assert!((acc / 50.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_rejects_empty() {
        assert!(Standardization::fit(&[]).is_err());
    }

    #[test]
    fn training_set_requires_both_classes() {
        let err = TrainingSet::new(
            vec![vec![0.0], vec![1.0]],
            vec![Label::Morph, Label::Morph],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Training(_)));
    }

    #[test]
    fn score_set_streams_are_canonical() {
        let mut ss = ScoreSet::new([[0.0; 3]; 3]);
        ss.set(FeatureType::Hog, ClassifierKind::Pcrc, 0.7);
        let streams = ss.streams();
        assert_eq!(
            streams[ScoreSet::stream_index(FeatureType::Hog, ClassifierKind::Pcrc)],
            0.7
        );
        assert_eq!(ScoreSet::stream_index(FeatureType::Lbp, ClassifierKind::Svm), 0);
        assert_eq!(ScoreSet::stream_index(FeatureType::Bsif, ClassifierKind::Pcrc), 8);
    }
}
