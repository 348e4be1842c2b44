//! Countermeasure evaluation: EER, normalized minimum t-DCF, adaptive
//! calibration error (aECE), prediction confidence consistency (PCC) and
//! accuracy per uncertainty decile.
//!
//! Scores follow the bonafide-high polarity: a trial is accepted as bonafide
//! at threshold τ when `score >= τ`. Polarity is never auto-corrected.

use serde::{Deserialize, Serialize};

use crate::data::ScoreRecord;
use crate::error::{Error, Result};
use crate::opinion::{Class, Opinion};

/// One point of the threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub threshold: f64,
    /// Spoof trials accepted (score ≥ τ) over all spoof trials.
    pub far: f64,
    /// Bonafide trials rejected (score < τ) over all bonafide trials.
    pub frr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub eer: f64,
    pub eer_threshold: f64,
    pub min_tdcf: Option<f64>,
    pub n_bonafide: usize,
    pub n_spoof: usize,
}

/// Cost model for the normalized t-DCF with the ASV system held at a fixed
/// operating point.
///
/// Defaults are the ASVspoof 2019 evaluation-plan constants (an external
/// convention) with an error-free ASV system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdcfCosts {
    pub c_miss_asv: f64,
    pub c_fa_asv: f64,
    pub c_miss_cm: f64,
    pub c_fa_cm: f64,
    pub p_target: f64,
    pub p_nontarget: f64,
    pub p_spoof: f64,
    /// ASV miss rate on target trials.
    pub p_miss_asv: f64,
    /// ASV false-alarm rate on zero-effort nontarget trials.
    pub p_fa_asv: f64,
    /// ASV miss rate on spoof trials (spoofs the ASV rejects on its own).
    pub p_miss_spoof_asv: f64,
}

impl Default for TdcfCosts {
    fn default() -> Self {
        TdcfCosts {
            c_miss_asv: 1.0,
            c_fa_asv: 1.0,
            c_miss_cm: 1.0,
            c_fa_cm: 1.0,
            p_target: 0.9405,
            p_nontarget: 0.0095,
            p_spoof: 0.05,
            p_miss_asv: 0.0,
            p_fa_asv: 0.0,
            p_miss_spoof_asv: 0.0,
        }
    }
}

impl TdcfCosts {
    /// (C₁, C₂) weighting P_miss_cm and P_fa_cm respectively.
    pub fn weights(&self) -> Result<(f64, f64)> {
        let costs = [self.c_miss_asv, self.c_fa_asv, self.c_miss_cm, self.c_fa_cm];
        if costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Metric("t-DCF costs must be positive".into()));
        }
        let priors = [self.p_target, self.p_nontarget, self.p_spoof];
        if priors.iter().any(|p| !(0.0..=1.0).contains(p)) || priors.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::Metric(
                "t-DCF priors must lie in [0, 1] and sum to at most 1".into(),
            ));
        }
        let rates = [self.p_miss_asv, self.p_fa_asv, self.p_miss_spoof_asv];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Metric("ASV error rates must lie in [0, 1]".into()));
        }
        let c1 = self.p_target * (self.c_miss_cm - self.c_miss_asv * self.p_miss_asv)
            - self.p_nontarget * self.c_fa_asv * self.p_fa_asv;
        let c2 = self.c_fa_cm * self.p_spoof * (1.0 - self.p_miss_spoof_asv);
        if !(c1 > 0.0 && c2 > 0.0) {
            return Err(Error::Metric(format!(
                "degenerate t-DCF costs: C1 = {c1}, C2 = {c2} (both must be positive)"
            )));
        }
        Ok((c1, c2))
    }
}

fn split_scores(records: &[ScoreRecord]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut bona = Vec::new();
    let mut spoof = Vec::new();
    for r in records {
        match r.key {
            Class::Bonafide => bona.push(r.score),
            Class::Spoof => spoof.push(r.score),
        }
    }
    if bona.is_empty() || spoof.is_empty() {
        return Err(Error::Metric(format!(
            "need both classes, got {} bonafide and {} spoof trials",
            bona.len(),
            spoof.len()
        )));
    }
    Ok((bona, spoof))
}

/// FAR/FRR at every distinct score and at +∞, thresholds ascending.
///
/// Sorting once and walking both lists keeps this O(N log N).
pub fn det_curve(records: &[ScoreRecord]) -> Result<Vec<DetPoint>> {
    let (mut bona, mut spoof) = split_scores(records)?;
    bona.sort_by(f64::total_cmp);
    spoof.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = bona.iter().chain(&spoof).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);

    let (nb, ns) = (bona.len() as f64, spoof.len() as f64);
    let (mut bona_below, mut spoof_below) = (0usize, 0usize);
    let mut points = Vec::with_capacity(thresholds.len());
    for t in thresholds {
        while bona_below < bona.len() && bona[bona_below] < t {
            bona_below += 1;
        }
        while spoof_below < spoof.len() && spoof[spoof_below] < t {
            spoof_below += 1;
        }
        points.push(DetPoint {
            threshold: t,
            far: (spoof.len() - spoof_below) as f64 / ns,
            frr: bona_below as f64 / nb,
        });
    }
    Ok(points)
}

/// Linear interpolation of the FAR = FRR crossing on a sweep.
///
/// Returns `(eer, threshold)`. The sweep starts with FRR = 0 < FAR = 1 and
/// ends at +∞ with FRR = 1 > FAR = 0, so a crossing always exists. When the
/// crossing segment ends at +∞ the threshold reported is the largest score.
pub fn eer_from_sweep(points: &[DetPoint]) -> (f64, f64) {
    let i = points
        .iter()
        .position(|p| p.frr >= p.far)
        .expect("sweep ends with FRR = 1 >= FAR = 0");
    if i == 0 {
        return (points[0].frr, points[0].threshold);
    }
    let (a, b) = (points[i - 1], points[i]);
    let gap_a = a.far - a.frr;
    let gap_b = b.far - b.frr;
    let t = gap_a / (gap_a - gap_b);
    let eer = a.frr + t * (b.frr - a.frr);
    let threshold = if b.threshold.is_finite() {
        a.threshold + t * (b.threshold - a.threshold)
    } else {
        a.threshold
    };
    (eer, threshold)
}

/// Equal error rate and its threshold.
pub fn compute_eer(records: &[ScoreRecord]) -> Result<(f64, f64)> {
    Ok(eer_from_sweep(&det_curve(records)?))
}

/// min over τ of (C₁·P_miss_cm(τ) + C₂·P_fa_cm(τ)) / min(C₁, C₂).
pub fn min_tdcf_from_sweep(points: &[DetPoint], costs: &TdcfCosts) -> Result<f64> {
    let (c1, c2) = costs.weights()?;
    let norm = c1.min(c2);
    Ok(points
        .iter()
        .map(|p| (c1 * p.frr + c2 * p.far) / norm)
        .fold(f64::INFINITY, f64::min))
}

pub fn compute_min_tdcf(records: &[ScoreRecord], costs: &TdcfCosts) -> Result<f64> {
    min_tdcf_from_sweep(&det_curve(records)?, costs)
}

/// EER and (optionally) min t-DCF over one score set.
pub fn evaluate(records: &[ScoreRecord], costs: Option<&TdcfCosts>) -> Result<EvalReport> {
    let sweep = det_curve(records)?;
    let (eer, eer_threshold) = eer_from_sweep(&sweep);
    let min_tdcf = costs.map(|c| min_tdcf_from_sweep(&sweep, c)).transpose()?;
    let n_bonafide = records.iter().filter(|r| r.key == Class::Bonafide).count();
    Ok(EvalReport {
        eer,
        eer_threshold,
        min_tdcf,
        n_bonafide,
        n_spoof: records.len() - n_bonafide,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub mean_confidence: f64,
    pub accuracy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub aece: f64,
    /// Absent when some bin has zero accuracy.
    pub pcc: Option<f64>,
    pub bins: Vec<CalibrationBin>,
    pub r_bins: usize,
}

/// Sizes of `r` equal-mass groups over `n` items; the first `n mod r`
/// groups get the extra item.
fn group_sizes(n: usize, r: usize) -> impl Iterator<Item = usize> {
    let (base, extra) = (n / r, n % r);
    (0..r).map(move |i| base + usize::from(i < extra))
}

/// Sorts `(key, correct)` pairs by key (stable) and folds them into `r`
/// equal-mass groups of (mean key, accuracy, count).
fn equal_mass_groups(mut pairs: Vec<(f64, bool)>, r: usize) -> Vec<CalibrationBin> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(r);
    let mut start = 0;
    for size in group_sizes(pairs.len(), r) {
        let group = &pairs[start..start + size];
        start += size;
        let n = size as f64;
        out.push(CalibrationBin {
            mean_confidence: group.iter().map(|p| p.0).sum::<f64>() / n,
            accuracy: group.iter().filter(|p| p.1).count() as f64 / n,
            count: size,
        });
    }
    out
}

/// Equal-mass confidence bins.
pub fn calibration_bins(confidences: &[f64], correct: &[bool], r_bins: usize) -> Result<Vec<CalibrationBin>> {
    if confidences.len() != correct.len() {
        return Err(Error::Metric(format!(
            "{} confidences but {} correctness flags",
            confidences.len(),
            correct.len()
        )));
    }
    if r_bins == 0 {
        return Err(Error::Metric("need at least one bin".into()));
    }
    if confidences.len() < r_bins {
        return Err(Error::Metric(format!(
            "{} predictions cannot fill {r_bins} bins",
            confidences.len()
        )));
    }
    if let Some(c) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(Error::Metric(format!("confidence {c} outside [0, 1]")));
    }
    let pairs = confidences.iter().copied().zip(correct.iter().copied()).collect();
    Ok(equal_mass_groups(pairs, r_bins))
}

fn aece_of(bins: &[CalibrationBin]) -> f64 {
    bins.iter().map(|b| (b.mean_confidence - b.accuracy).abs()).sum::<f64>() / bins.len() as f64
}

fn pcc_of(bins: &[CalibrationBin]) -> Result<f64> {
    let mut sum = 0.0;
    for (r, b) in bins.iter().enumerate() {
        if b.accuracy == 0.0 {
            return Err(Error::Metric(format!(
                "PCC undefined: bin {r} (mean confidence {}) has zero accuracy",
                b.mean_confidence
            )));
        }
        sum += (b.mean_confidence / b.accuracy - 1.0).abs();
    }
    Ok(sum)
}

/// (1/R) Σ_r |conf(b_r) − acc(b_r)| over equal-mass bins.
pub fn compute_aece(confidences: &[f64], correct: &[bool], r_bins: usize) -> Result<f64> {
    Ok(aece_of(&calibration_bins(confidences, correct, r_bins)?))
}

/// Σ_r |conf(b_r) / acc(b_r) − 1| over the same bins as aECE.
pub fn compute_pcc(confidences: &[f64], correct: &[bool], r_bins: usize) -> Result<f64> {
    pcc_of(&calibration_bins(confidences, correct, r_bins)?)
}

/// aECE, PCC (when defined) and the bins they were computed from.
pub fn calibration_report(confidences: &[f64], correct: &[bool], r_bins: usize) -> Result<CalibrationReport> {
    let bins = calibration_bins(confidences, correct, r_bins)?;
    Ok(CalibrationReport {
        aece: aece_of(&bins),
        pcc: pcc_of(&bins).ok(),
        bins,
        r_bins,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyGroup {
    pub mean_uncertainty: f64,
    pub accuracy: f64,
    pub count: usize,
}

/// Accuracy per equal-mass uncertainty group, lowest uncertainty first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBins {
    pub groups: Vec<UncertaintyGroup>,
}

pub const UNCERTAINTY_GROUPS: usize = 10;

/// Groups `(u, correct)` pairs into ten equal-mass groups by ascending u.
pub fn uncertainty_bins_from_pairs(pairs: &[(f64, bool)]) -> Result<UncertaintyBins> {
    if pairs.len() < UNCERTAINTY_GROUPS {
        return Err(Error::Metric(format!(
            "need at least {UNCERTAINTY_GROUPS} predictions, got {}",
            pairs.len()
        )));
    }
    let groups = equal_mass_groups(pairs.to_vec(), UNCERTAINTY_GROUPS)
        .into_iter()
        .map(|b| UncertaintyGroup {
            mean_uncertainty: b.mean_confidence,
            accuracy: b.accuracy,
            count: b.count,
        })
        .collect();
    Ok(UncertaintyBins { groups })
}

/// Decile table over opinions; correctness uses the argmax class, never
/// Unknown.
pub fn uncertainty_bins(opinions: &[(Opinion, Class)]) -> Result<UncertaintyBins> {
    let pairs: Vec<(f64, bool)> = opinions
        .iter()
        .map(|(o, label)| (o.uncertainty, o.predicted_class() == *label))
        .collect();
    uncertainty_bins_from_pairs(&pairs)
}

/// max_k p_k.
pub fn confidence_of(o: &Opinion) -> f64 {
    o.confidence()
}

/// Binary decision and confidence from a bonafide probability:
/// bonafide when p > 1/2 (ties go to spoof), confidence max(p, 1 − p).
pub fn binary_decision(p_bonafide: f64) -> (Class, f64) {
    if p_bonafide > 0.5 {
        (Class::Bonafide, p_bonafide)
    } else {
        (Class::Spoof, 1.0 - p_bonafide)
    }
}

/// Min–max maps scores onto [0, 1]; a constant set maps to 1/2.
pub fn minmax_normalize(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![0.5; scores.len()];
    }
    scores.iter().map(|s| (s - lo) / (hi - lo)).collect()
}
