//! Two-level weighted-sum score fusion.
//!
//! Level 1 has one fusion unit per classifier, combining that classifier's
//! three feature streams; level 2 combines the three classifier-level
//! scores into the final morph score. Weights are estimated once on a
//! development split by bootstrapping each stream's D-EER and renormalizing
//! `1 - EER` (or `1 / EER`) onto the simplex, then kept constant. Raw
//! streams are min-max normalized to `[0, 1]` (parameters learned on the
//! same development split) so the weighted sums are commensurate.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifiers::{ClassifierKind, Label, ScoreSet};
use crate::config::WeightRule;
use crate::error::{Error, Result};
use crate::features::FeatureType;
use crate::metrics::{d_eer, LabeledScores};

const SIMPLEX_TOL: f64 = 1e-9;

/// Fusion weights: per-classifier triples over the feature streams, and
/// one triple over the classifier-level fused scores. Every triple is
/// nonnegative and sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    /// `level1[classifier][feature]`.
    pub level1: [[f64; 3]; 3],
    /// `level2[classifier]`.
    pub level2: [f64; 3],
}

impl FusionWeights {
    pub fn validate(&self) -> Result<()> {
        for triple in self.level1.iter().chain(std::iter::once(&self.level2)) {
            if triple.iter().any(|w| *w < 0.0 || !w.is_finite()) {
                return Err(Error::Fusion("weights must be nonnegative".into()));
            }
            let sum: f64 = triple.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::Fusion(format!(
                    "weight triple sums to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// Uniform weights at both levels.
    pub fn uniform() -> Self {
        Self {
            level1: [[1.0 / 3.0; 3]; 3],
            level2: [1.0 / 3.0; 3],
        }
    }
}

/// Per-stream min-max ranges learned on the development split. A stream
/// whose range is empty is degenerate: it normalizes to 0 and must carry
/// zero weight.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationParams {
    pub min: [f64; 9],
    pub max: [f64; 9],
}

impl NormalizationParams {
    /// Learn ranges from raw development score grids.
    pub fn fit(dev: &[ScoreSet]) -> Result<Self> {
        if dev.is_empty() {
            return Err(Error::Fusion("cannot fit normalization on no scores".into()));
        }
        let mut min = [f64::INFINITY; 9];
        let mut max = [f64::NEG_INFINITY; 9];
        for ss in dev {
            for (s, v) in ss.streams().iter().enumerate() {
                min[s] = min[s].min(*v);
                max[s] = max[s].max(*v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn is_degenerate(&self, stream: usize) -> bool {
        !(self.max[stream] > self.min[stream])
    }

    /// Min-max map of one stream value into `[0, 1]`, clipped outside the
    /// learned range. Degenerate streams map to 0.
    pub fn normalize_stream(&self, stream: usize, value: f64) -> f64 {
        if self.is_degenerate(stream) {
            return 0.0;
        }
        ((value - self.min[stream]) / (self.max[stream] - self.min[stream])).clamp(0.0, 1.0)
    }
}

/// Min-max normalize a raw score grid.
pub fn normalize_scores(params: &NormalizationParams, ss: &ScoreSet) -> ScoreSet {
    let mut out = ScoreSet::new([[0.0; 3]; 3]);
    for f in FeatureType::ALL {
        for c in ClassifierKind::ALL {
            let s = ScoreSet::stream_index(f, c);
            out.set(f, c, params.normalize_stream(s, ss.get(f, c)));
        }
    }
    out
}

/// Level-1 fusion: for each classifier, the weighted sum of its three
/// normalized feature streams.
pub fn fuse_level1(weights: &FusionWeights, normalized: &ScoreSet) -> [f64; 3] {
    let mut out = [0.0; 3];
    for c in ClassifierKind::ALL {
        let mut acc = 0.0;
        for f in FeatureType::ALL {
            acc += weights.level1[c.index()][f.index()] * normalized.get(f, c);
        }
        out[c.index()] = acc;
    }
    out
}

/// Level-2 fusion: weighted sum of the classifier-level scores. With
/// simplex weights and normalized inputs the result stays in `[0, 1]`.
pub fn fuse_level2(weights: &FusionWeights, level1: &[f64; 3]) -> f64 {
    weights
        .level2
        .iter()
        .zip(level1)
        .map(|(w, s)| w * s)
        .sum()
}

/// Normalize and fuse a raw score grid into the final morph score.
pub fn fuse(weights: &FusionWeights, params: &NormalizationParams, raw: &ScoreSet) -> f64 {
    let normalized = normalize_scores(params, raw);
    fuse_level2(weights, &fuse_level1(weights, &normalized))
}

/// Morph iff `score >= threshold`.
pub fn decide(score: f64, threshold: f64) -> Label {
    if score >= threshold {
        Label::Morph
    } else {
        Label::BonaFide
    }
}

/// Bootstrap-estimate fusion weights and normalization parameters from
/// labeled development score grids.
///
/// Each replicate resamples the development set with replacement per class
/// (shared across streams) and measures every stream's D-EER; a stream's
/// weight is the configured function of its mean bootstrapped D-EER,
/// renormalized per triple. With `replicates == 1` the development set is
/// used as-is (no resampling). Level-2 weights are estimated identically
/// from the level-1 fused development scores. Deterministic given `seed`.
pub fn estimate_weights_bootstrap(
    dev: &[(ScoreSet, Label)],
    replicates: u32,
    seed: u64,
    rule: WeightRule,
) -> Result<(FusionWeights, NormalizationParams)> {
    if replicates == 0 {
        return Err(Error::Fusion("need at least one bootstrap replicate".into()));
    }
    let bona_idx: Vec<usize> = indices_of(dev, Label::BonaFide);
    let morph_idx: Vec<usize> = indices_of(dev, Label::Morph);
    if bona_idx.is_empty() || morph_idx.is_empty() {
        return Err(Error::Fusion(
            "development set must contain both classes".into(),
        ));
    }

    let grids: Vec<ScoreSet> = dev.iter().map(|(ss, _)| *ss).collect();
    let params = NormalizationParams::fit(&grids)?;
    if (0..9).all(|s| params.is_degenerate(s)) {
        return Err(Error::Fusion("all nine streams are degenerate".into()));
    }

    let normalized: Vec<[f64; 9]> = grids
        .iter()
        .map(|ss| normalize_scores(&params, ss).streams())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream_values =
        |samples: &[usize], stream: usize| -> Vec<f64> {
            samples.iter().map(|i| normalized[*i][stream]).collect()
        };

    // Mean bootstrapped D-EER per raw stream.
    let mut mean_eer = [0.0f64; 9];
    for _ in 0..replicates {
        let (b_sample, m_sample) =
            resample(&mut rng, &bona_idx, &morph_idx, replicates == 1);
        for stream in 0..9 {
            if params.is_degenerate(stream) {
                continue;
            }
            let ls = LabeledScores::new(
                stream_values(&b_sample, stream),
                stream_values(&m_sample, stream),
            )?;
            mean_eer[stream] += d_eer(&ls)?.value;
        }
    }
    for eer in mean_eer.iter_mut() {
        *eer /= replicates as f64;
    }

    let mut level1 = [[0.0f64; 3]; 3];
    for c in ClassifierKind::ALL {
        let mut triple = [0.0f64; 3];
        for f in FeatureType::ALL {
            let s = ScoreSet::stream_index(f, c);
            triple[f.index()] = if params.is_degenerate(s) {
                0.0
            } else {
                rule_weight(rule, mean_eer[s])
            };
        }
        level1[c.index()] = normalize_triple(triple).ok_or_else(|| {
            Error::Fusion(format!(
                "all feature streams degenerate for classifier {}",
                c.label()
            ))
        })?;
    }

    // Level-1 fused development scores, then the same estimation once more.
    let provisional = FusionWeights {
        level1,
        level2: [1.0 / 3.0; 3],
    };
    let fused1: Vec<[f64; 3]> = normalized
        .iter()
        .map(|streams| {
            let mut grid = ScoreSet::new([[0.0; 3]; 3]);
            for f in FeatureType::ALL {
                for c in ClassifierKind::ALL {
                    grid.set(f, c, streams[ScoreSet::stream_index(f, c)]);
                }
            }
            fuse_level1(&provisional, &grid)
        })
        .collect();

    let mut mean_eer2 = [0.0f64; 3];
    let mut constant2 = [true; 3];
    for c in 0..3 {
        let first = fused1[0][c];
        constant2[c] = fused1.iter().all(|v| v[c] == first);
    }
    for _ in 0..replicates {
        let (b_sample, m_sample) =
            resample(&mut rng, &bona_idx, &morph_idx, replicates == 1);
        for c in 0..3 {
            if constant2[c] {
                continue;
            }
            let ls = LabeledScores::new(
                b_sample.iter().map(|i| fused1[*i][c]).collect(),
                m_sample.iter().map(|i| fused1[*i][c]).collect(),
            )?;
            mean_eer2[c] += d_eer(&ls)?.value;
        }
    }
    let mut triple2 = [0.0f64; 3];
    for c in 0..3 {
        triple2[c] = if constant2[c] {
            0.0
        } else {
            rule_weight(rule, mean_eer2[c] / replicates as f64)
        };
    }
    let level2 = normalize_triple(triple2)
        .ok_or_else(|| Error::Fusion("all classifier-level streams degenerate".into()))?;

    let weights = FusionWeights { level1, level2 };
    weights.validate()?;
    Ok((weights, params))
}

fn indices_of(dev: &[(ScoreSet, Label)], label: Label) -> Vec<usize> {
    dev.iter()
        .enumerate()
        .filter(|(_, (_, l))| *l == label)
        .map(|(i, _)| i)
        .collect()
}

/// Per-class resample with replacement; the identity sample when
/// `no_resample` is set.
fn resample(
    rng: &mut ChaCha8Rng,
    bona_idx: &[usize],
    morph_idx: &[usize],
    no_resample: bool,
) -> (Vec<usize>, Vec<usize>) {
    if no_resample {
        return (bona_idx.to_vec(), morph_idx.to_vec());
    }
    let draw = |rng: &mut ChaCha8Rng, pool: &[usize]| -> Vec<usize> {
        (0..pool.len())
            .map(|_| pool[rng.random_range(0..pool.len())])
            .collect()
    };
    (draw(rng, bona_idx), draw(rng, morph_idx))
}

fn rule_weight(rule: WeightRule, eer: f64) -> f64 {
    match rule {
        WeightRule::OneMinusEer => (1.0 - eer).max(0.0),
        WeightRule::InverseEer => 1.0 / eer.max(0.01),
    }
}

fn normalize_triple(triple: [f64; 3]) -> Option<[f64; 3]> {
    let sum: f64 = triple.iter().sum();
    if sum <= 0.0 {
        return None;
    }
    Some([triple[0] / sum, triple[1] / sum, triple[2] / sum])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn grid_from_streams(streams: [f64; 9]) -> ScoreSet {
        let mut g = ScoreSet::new([[0.0; 3]; 3]);
        for f in FeatureType::ALL {
            for c in ClassifierKind::ALL {
                g.set(f, c, streams[ScoreSet::stream_index(f, c)]);
            }
        }
        g
    }

    /// Development set where every classifier sees three feature streams
    /// with exact D-EERs built from crossed tails: `crossed[f]` of ten
    /// samples per class sit on the wrong side of 0.5.
    fn crafted_dev(crossed: [usize; 3]) -> Vec<(ScoreSet, Label)> {
        let n = 10;
        let mut dev = Vec::new();
        for i in 0..n {
            let mut streams = [0.0; 9];
            for f in FeatureType::ALL {
                let k = crossed[f.index()];
                // Bona fide sample i: low score unless among the k crossed.
                let v = if i < k { 0.6 + i as f64 * 0.01 } else { 0.1 + i as f64 * 0.01 };
                for c in ClassifierKind::ALL {
                    streams[ScoreSet::stream_index(f, c)] = v;
                }
            }
            dev.push((grid_from_streams(streams), Label::BonaFide));
        }
        for i in 0..n {
            let mut streams = [0.0; 9];
            for f in FeatureType::ALL {
                let k = crossed[f.index()];
                let v = if i < k { 0.4 - i as f64 * 0.01 } else { 0.9 - i as f64 * 0.01 };
                for c in ClassifierKind::ALL {
                    streams[ScoreSet::stream_index(f, c)] = v;
                }
            }
            dev.push((grid_from_streams(streams), Label::Morph));
        }
        dev
    }

    #[test]
    fn normalization_maps_range_to_unit_interval() {
        let dev = vec![
            grid_from_streams([0.2; 9]),
            grid_from_streams([0.8; 9]),
        ];
        let p = NormalizationParams::fit(&dev).unwrap();
        assert_eq!(p.normalize_stream(0, 0.2), 0.0);
        assert_eq!(p.normalize_stream(0, 0.8), 1.0);
        // Out-of-range scores clip.
        assert_eq!(p.normalize_stream(0, 1.4), 1.0);
        assert_eq!(p.normalize_stream(0, -0.5), 0.0);
        // Mid-range maps to one half.
        assert!((p.normalize_stream(0, 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn level1_equal_weights_average() {
        let w = FusionWeights::uniform();
        let mut grid = ScoreSet::new([[0.0; 3]; 3]);
        for (f, v) in FeatureType::ALL.iter().zip([0.2, 0.4, 0.6]) {
            for c in ClassifierKind::ALL {
                grid.set(*f, c, v);
            }
        }
        let fused = fuse_level1(&w, &grid);
        for c in 0..3 {
            assert!((fused[c] - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_weights_pass_streams_through() {
        let mut w = FusionWeights::uniform();
        w.level1 = [[1.0, 0.0, 0.0]; 3]; // LBP only
        w.level2 = [0.0, 1.0, 0.0]; // SRKDA only
        let mut grid = ScoreSet::new([[0.0; 3]; 3]);
        grid.set(FeatureType::Lbp, ClassifierKind::Srkda, 0.77);
        let l1 = fuse_level1(&w, &grid);
        assert_eq!(l1[ClassifierKind::Srkda.index()], 0.77);
        assert_eq!(fuse_level2(&w, &l1), 0.77);
    }

    #[test]
    fn fusion_matches_dot_product_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut raw = [0.0; 9];
            for v in raw.iter_mut() {
                *v = rng.random();
            }
            let grid = grid_from_streams(raw);
            let mut random_triple = || -> [f64; 3] {
                let r: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = r.iter().sum();
                [r[0] / s, r[1] / s, r[2] / s]
            };
            let l1_w = [random_triple(), random_triple(), random_triple()];
            let l2_w = random_triple();
            let w = FusionWeights {
                level1: l1_w,
                level2: l2_w,
            };
            w.validate().unwrap();

            let l1 = fuse_level1(&w, &grid);
            let mut expect_final = 0.0;
            for c in ClassifierKind::ALL {
                let mut acc = 0.0;
                for f in FeatureType::ALL {
                    acc += l1_w[c.index()][f.index()] * grid.get(f, c);
                }
                assert!((l1[c.index()] - acc).abs() < 1e-12);
                expect_final += l2_w[c.index()] * acc;
            }
            assert!((fuse_level2(&w, &l1) - expect_final).abs() < 1e-12);
        }
    }

    #[test]
    fn convexity_keeps_fused_scores_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = FusionWeights::uniform();
        for _ in 0..100 {
            let mut raw = [0.0; 9];
            for v in raw.iter_mut() {
                *v = rng.random();
            }
            let grid = grid_from_streams(raw);
            let fused = fuse_level2(&w, &fuse_level1(&w, &grid));
            assert!((0.0..=1.0).contains(&fused));
        }
    }

    #[test]
    fn bootstrap_weights_follow_one_minus_eer_rule() {
        let dev = crafted_dev([1, 2, 3]); // stream D-EERs 0.1, 0.2, 0.3
        let (w, _) =
            estimate_weights_bootstrap(&dev, 1, 7, WeightRule::OneMinusEer).unwrap();
        let expect = [0.9 / 2.4, 0.8 / 2.4, 0.7 / 2.4];
        for c in 0..3 {
            for f in 0..3 {
                assert!(
                    (w.level1[c][f] - expect[f]).abs() < 1e-12,
                    "classifier {c} feature {f}: {} vs {}",
                    w.level1[c][f],
                    expect[f]
                );
            }
        }
    }

    #[test]
    fn perfect_stream_gets_twice_the_weight_of_a_random_one() {
        // Feature 0: EER 0 (perfect); feature 1: EER 0.5 (chance);
        // feature 2: EER 0.
        let dev = crafted_dev([0, 5, 0]);
        let (w, _) =
            estimate_weights_bootstrap(&dev, 1, 7, WeightRule::OneMinusEer).unwrap();
        for c in 0..3 {
            assert!((w.level1[c][0] / w.level1[c][1] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let dev = crafted_dev([1, 2, 3]);
        let a = estimate_weights_bootstrap(&dev, 100, 123, WeightRule::OneMinusEer).unwrap();
        let b = estimate_weights_bootstrap(&dev, 100, 123, WeightRule::OneMinusEer).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn weights_stay_on_simplex_for_any_seed() {
        let dev = crafted_dev([2, 0, 4]);
        for seed in 0..20 {
            for replicates in [1u32, 3, 25] {
                let (w, _) =
                    estimate_weights_bootstrap(&dev, replicates, seed, WeightRule::OneMinusEer)
                        .unwrap();
                w.validate().unwrap();
            }
        }
    }

    #[test]
    fn degenerate_stream_gets_zero_weight() {
        let mut dev = crafted_dev([1, 2, 3]);
        // Make every HoG stream constant.
        for (ss, _) in dev.iter_mut() {
            for c in ClassifierKind::ALL {
                ss.set(FeatureType::Hog, c, 0.42);
            }
        }
        let (w, p) = estimate_weights_bootstrap(&dev, 5, 11, WeightRule::OneMinusEer).unwrap();
        for c in 0..3 {
            assert_eq!(w.level1[c][FeatureType::Hog.index()], 0.0);
            let sum: f64 = w.level1[c].iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        assert!(p.is_degenerate(ScoreSet::stream_index(
            FeatureType::Hog,
            ClassifierKind::Svm
        )));
    }

    #[test]
    fn single_class_dev_set_rejected() {
        let dev: Vec<(ScoreSet, Label)> = (0..5)
            .map(|i| (grid_from_streams([i as f64; 9]), Label::Morph))
            .collect();
        assert!(matches!(
            estimate_weights_bootstrap(&dev, 5, 1, WeightRule::OneMinusEer),
            Err(Error::Fusion(_))
        ));
    }

    #[test]
    fn decide_uses_at_least_threshold_convention() {
        assert_eq!(decide(0.5, 0.5), Label::Morph);
        assert_eq!(decide(0.0, 0.5), Label::BonaFide);
        assert_eq!(decide(0.9, 0.5), Label::Morph);
    }

    #[test]
    fn dev_eer_threshold_balances_dev_error_rates() {
        let dev = crafted_dev([2, 2, 2]);
        let (w, p) = estimate_weights_bootstrap(&dev, 1, 3, WeightRule::OneMinusEer).unwrap();
        let fused: Vec<(f64, Label)> = dev
            .iter()
            .map(|(ss, l)| (fuse(&w, &p, ss), *l))
            .collect();
        let bona: Vec<f64> = fused
            .iter()
            .filter(|(_, l)| *l == Label::BonaFide)
            .map(|(s, _)| *s)
            .collect();
        let morph: Vec<f64> = fused
            .iter()
            .filter(|(_, l)| *l == Label::Morph)
            .map(|(s, _)| *s)
            .collect();
        let ls = LabeledScores::new(bona.clone(), morph.clone()).unwrap();
        let eer = d_eer(&ls).unwrap();
        let a = crate::metrics::apcer(&morph, eer.threshold).unwrap();
        let b = crate::metrics::bpcer(&bona, eer.threshold).unwrap();
        assert_eq!(a, b);
        assert!((eer.value - 0.2).abs() < 1e-12);
    }

    #[test]
    fn common_positive_scaling_preserves_probe_ranking() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let dev = crafted_dev([1, 3, 2]);
        let mut probes = Vec::new();
        for _ in 0..50 {
            let mut raw = [0.0; 9];
            for v in raw.iter_mut() {
                *v = rng.random_range(0.0..1.0);
            }
            probes.push(grid_from_streams(raw));
        }
        let rank = |scale: f64| -> Vec<usize> {
            let scaled_dev: Vec<(ScoreSet, Label)> = dev
                .iter()
                .map(|(ss, l)| {
                    let streams = ss.streams().map(|v| v * scale);
                    (grid_from_streams(streams), *l)
                })
                .collect();
            let (w, p) =
                estimate_weights_bootstrap(&scaled_dev, 1, 5, WeightRule::OneMinusEer).unwrap();
            let scores: Vec<f64> = probes
                .iter()
                .map(|ss| {
                    let streams = ss.streams().map(|v| v * scale);
                    fuse(&w, &p, &grid_from_streams(streams))
                })
                .collect();
            let mut order: Vec<usize> = (0..scores.len()).collect();
            order.sort_by(|a, b| scores[*a].total_cmp(&scores[*b]));
            order
        };
        let base = rank(1.0);
        for scale in [0.25, 3.0, 1000.0] {
            assert_eq!(rank(scale), base, "scale {scale}");
        }
    }
}
