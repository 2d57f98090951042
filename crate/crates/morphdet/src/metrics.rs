//! ISO/IEC 30107-3 style evaluation: APCER, BPCER, D-EER, BPCER at fixed
//! APCER operating points, and DET curves.
//!
//! Scores are oriented higher = more morph-like and a probe is called a
//! morph when `score >= threshold`. So APCER (attacks accepted as bona
//! fide) counts morph scores below the threshold and grows with it, while
//! BPCER counts bona fide scores at or above the threshold and shrinks.
//! Rates are kept as exact integer counts internally and only converted to
//! decimals at the output boundary.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Scores of an evaluation set split by ground truth.
#[derive(Debug, Clone)]
pub struct LabeledScores {
    bona_fide: Vec<f64>,
    morph: Vec<f64>,
}

impl LabeledScores {
    pub fn new(bona_fide: Vec<f64>, morph: Vec<f64>) -> Result<Self> {
        if bona_fide.is_empty() || morph.is_empty() {
            return Err(Error::Metric(
                "both classes need at least one score".into(),
            ));
        }
        if bona_fide.iter().chain(&morph).any(|s| !s.is_finite()) {
            return Err(Error::Metric("scores must be finite".into()));
        }
        Ok(Self { bona_fide, morph })
    }

    pub fn bona_fide(&self) -> &[f64] {
        &self.bona_fide
    }

    pub fn morph(&self) -> &[f64] {
        &self.morph
    }

    /// Candidate thresholds: every distinct score, the midpoints between
    /// consecutive distinct scores, and sentinels below and above the
    /// score range.
    pub fn candidate_thresholds(&self) -> Vec<f64> {
        let mut distinct: Vec<f64> = self.bona_fide.iter().chain(&self.morph).copied().collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let mut out = Vec::with_capacity(2 * distinct.len() + 2);
        out.push(distinct[0] - 1.0);
        for w in distinct.windows(2) {
            out.push(w[0]);
            out.push(0.5 * (w[0] + w[1]));
        }
        out.push(*distinct.last().unwrap());
        out.push(distinct.last().unwrap() + 1.0);
        out
    }
}

/// Exact count-based rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rate {
    num: u64,
    den: u64,
}

impl Rate {
    fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn apcer_rate(morph: &[f64], threshold: f64) -> Rate {
    Rate {
        num: morph.iter().filter(|s| **s < threshold).count() as u64,
        den: morph.len() as u64,
    }
}

fn bpcer_rate(bona: &[f64], threshold: f64) -> Rate {
    Rate {
        num: bona.iter().filter(|s| **s >= threshold).count() as u64,
        den: bona.len() as u64,
    }
}

/// Fraction of morph scores below the threshold (attacks accepted as bona
/// fide).
pub fn apcer(morph_scores: &[f64], threshold: f64) -> Result<f64> {
    if morph_scores.is_empty() {
        return Err(Error::Metric("APCER of an empty morph list".into()));
    }
    Ok(apcer_rate(morph_scores, threshold).as_f64())
}

/// Fraction of bona fide scores at or above the threshold (bona fides
/// rejected as attacks).
pub fn bpcer(bona_fide_scores: &[f64], threshold: f64) -> Result<f64> {
    if bona_fide_scores.is_empty() {
        return Err(Error::Metric("BPCER of an empty bona fide list".into()));
    }
    Ok(bpcer_rate(bona_fide_scores, threshold).as_f64())
}

/// Detection equal error rate and the threshold attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionEer {
    pub value: f64,
    pub threshold: f64,
}

/// Sweep all candidate thresholds, pick the one minimizing |APCER - BPCER|
/// (ties resolved toward the lower threshold) and report the mean of the
/// two rates there. Comparisons are exact on the underlying counts.
pub fn d_eer(ls: &LabeledScores) -> Result<DetectionEer> {
    let mut best: Option<(u64, f64, Rate, Rate)> = None; // |diff| cross-multiplied
    for t in ls.candidate_thresholds() {
        let a = apcer_rate(&ls.morph, t);
        let b = bpcer_rate(&ls.bona_fide, t);
        // |a.num/a.den - b.num/b.den| compared on a common denominator.
        let diff = (a.num * b.den).abs_diff(b.num * a.den);
        match &best {
            Some((d, _, _, _)) if *d <= diff => {}
            _ => best = Some((diff, t, a, b)),
        }
    }
    let (_, threshold, a, b) = best.expect("candidate list is never empty");
    let value = (a.num * b.den + b.num * a.den) as f64 / (2 * a.den * b.den) as f64;
    Ok(DetectionEer { value, threshold })
}

/// BPCER at the operating point with APCER at most `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BpcerAtApcer {
    pub target: f64,
    pub value: f64,
    pub threshold: f64,
    /// False when no threshold reached the APCER target and the value was
    /// reported at the maximum candidate instead.
    pub attained: bool,
}

/// Largest threshold whose APCER stays at or below `target` (the minimum
/// BPCER subject to that constraint); reports BPCER there.
pub fn bpcer_at_apcer(ls: &LabeledScores, target: f64) -> Result<BpcerAtApcer> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::Metric(format!(
            "APCER target {target} outside [0, 1]"
        )));
    }
    let candidates = ls.candidate_thresholds();
    let mut chosen: Option<f64> = None;
    for t in &candidates {
        let a = apcer_rate(&ls.morph, *t);
        // a.num/a.den <= target, exactly.
        if a.num as f64 <= target * a.den as f64 {
            chosen = Some(*t);
        }
    }
    match chosen {
        Some(threshold) => Ok(BpcerAtApcer {
            target,
            value: bpcer_rate(&ls.bona_fide, threshold).as_f64(),
            threshold,
            attained: true,
        }),
        None => {
            let threshold = *candidates.last().unwrap();
            Ok(BpcerAtApcer {
                target,
                value: bpcer_rate(&ls.bona_fide, threshold).as_f64(),
                threshold,
                attained: false,
            })
        }
    }
}

/// One DET operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetPoint {
    pub threshold: f64,
    pub apcer: f64,
    pub bpcer: f64,
}

/// The full DET staircase over all candidate thresholds, ascending.
pub fn det_curve(ls: &LabeledScores) -> Result<Vec<DetPoint>> {
    Ok(ls
        .candidate_thresholds()
        .into_iter()
        .map(|t| DetPoint {
            threshold: t,
            apcer: apcer_rate(&ls.morph, t).as_f64(),
            bpcer: bpcer_rate(&ls.bona_fide, t).as_f64(),
        })
        .collect())
}

/// Evaluation summary for one score set.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub bona_fide_count: usize,
    pub morph_count: usize,
    pub d_eer: f64,
    pub eer_threshold: f64,
    /// Keyed by the APCER target rendered as a decimal string.
    pub bpcer_at_apcer: BTreeMap<String, f64>,
    pub bpcer_targets_attained: BTreeMap<String, bool>,
    pub det_points: Vec<DetPoint>,
}

/// The operating-point targets reported in the standard tables.
pub const DEFAULT_APCER_TARGETS: [f64; 2] = [0.05, 0.10];

/// Evaluate a score set at the given APCER targets.
pub fn evaluate(ls: &LabeledScores, targets: &[f64]) -> Result<EvalReport> {
    let eer = d_eer(ls)?;
    let mut map = BTreeMap::new();
    let mut attained = BTreeMap::new();
    for t in targets {
        let b = bpcer_at_apcer(ls, *t)?;
        map.insert(format!("{t}"), b.value);
        attained.insert(format!("{t}"), b.attained);
    }
    Ok(EvalReport {
        bona_fide_count: ls.bona_fide.len(),
        morph_count: ls.morph.len(),
        d_eer: eer.value,
        eer_threshold: eer.threshold,
        bpcer_at_apcer: map,
        bpcer_targets_attained: attained,
        det_points: det_curve(ls)?,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// DET curve as `threshold,apcer,bpcer` CSV.
    pub fn det_csv(&self) -> String {
        let mut out = String::from("threshold,apcer,bpcer\n");
        for p in &self.det_points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.apcer, p.bpcer));
        }
        out
    }
}

impl std::fmt::Display for EvalReport {
    /// Rates as percentages with two decimals.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "samples: {} bona fide / {} morph",
            self.bona_fide_count, self.morph_count
        )?;
        writeln!(
            f,
            "D-EER: {:.2}% (threshold {:.6})",
            self.d_eer * 100.0,
            self.eer_threshold
        )?;
        for (target, value) in &self.bpcer_at_apcer {
            let pct: f64 = target.parse::<f64>().unwrap_or(0.0) * 100.0;
            write!(f, "BPCER @ APCER={pct}%: {:.2}%", value * 100.0)?;
            if let Some(false) = self.bpcer_targets_attained.get(target) {
                write!(f, " (target not attained)")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
