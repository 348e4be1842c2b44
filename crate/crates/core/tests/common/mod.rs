//! Shared oracles and experiment plumbing for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trustcm::data::{gen_blobs, BlobConfig, Dataset, ScoreRecord};
use trustcm::metrics::{binary_decision, compute_aece, minmax_normalize, uncertainty_bins, TdcfCosts};
use trustcm::net::{predict, train, Objective, TrainConfig, TrainedModel};
use trustcm::opinion::Class;

/// Rates at τ by direct counting.
fn rates_at(records: &[ScoreRecord], t: f64) -> (f64, f64) {
    let (mut nb, mut ns, mut miss, mut fa) = (0usize, 0usize, 0usize, 0usize);
    for r in records {
        match r.key {
            Class::Bonafide => {
                nb += 1;
                if r.score < t {
                    miss += 1;
                }
            }
            Class::Spoof => {
                ns += 1;
                if r.score >= t {
                    fa += 1;
                }
            }
        }
    }
    (fa as f64 / ns as f64, miss as f64 / nb as f64)
}

/// Every candidate threshold: −∞, each score, +∞; ascending, distinct.
fn all_thresholds(records: &[ScoreRecord]) -> Vec<f64> {
    let mut t: Vec<f64> = records.iter().map(|r| r.score).collect();
    t.push(f64::NEG_INFINITY);
    t.push(f64::INFINITY);
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.dedup();
    t
}

/// Quadratic-time EER: count rates at every threshold, then interpolate the
/// first segment on which FRR − FAR changes sign.
pub fn brute_eer(records: &[ScoreRecord]) -> (f64, f64) {
    let ts = all_thresholds(records);
    let pts: Vec<(f64, f64, f64)> = ts
        .iter()
        .map(|&t| {
            let (far, frr) = rates_at(records, t);
            (t, far, frr)
        })
        .collect();
    for i in 1..pts.len() {
        let (t1, far1, frr1) = pts[i];
        if frr1 >= far1 {
            let (t0, far0, frr0) = pts[i - 1];
            let d0 = far0 - frr0;
            let d1 = far1 - frr1;
            let w = d0 / (d0 - d1);
            let eer = frr0 + w * (frr1 - frr0);
            let thr = if t1.is_finite() { t0 + w * (t1 - t0) } else { t0 };
            return (eer, thr);
        }
    }
    unreachable!("FRR reaches 1 at +inf")
}

pub fn brute_min_tdcf(records: &[ScoreRecord], c: &TdcfCosts) -> f64 {
    let c1 = c.p_target * (c.c_miss_cm - c.c_miss_asv * c.p_miss_asv) - c.p_nontarget * c.c_fa_asv * c.p_fa_asv;
    let c2 = c.c_fa_cm * c.p_spoof * (1.0 - c.p_miss_spoof_asv);
    let mut best = f64::INFINITY;
    for t in all_thresholds(records) {
        let (far, frr) = rates_at(records, t);
        best = best.min((c1 * frr + c2 * far) / c1.min(c2));
    }
    best
}

/// A random two-class score set of size 2..=max_n. Scores are drawn from a
/// coarse grid half the time so that ties are common.
pub fn random_score_set(rng: &mut ChaCha8Rng, max_n: usize) -> Vec<ScoreRecord> {
    let n = rng.random_range(2..=max_n);
    let coarse = rng.random_bool(0.5);
    let shift: f64 = rng.random_range(0.0..2.0);
    (0..n)
        .map(|i| {
            let key = if i == 0 {
                Class::Bonafide
            } else if i == 1 {
                Class::Spoof
            } else if rng.random_bool(0.5) {
                Class::Bonafide
            } else {
                Class::Spoof
            };
            let base: f64 = if coarse {
                rng.random_range(0..8) as f64 / 8.0
            } else {
                rng.random_range(-1.0..1.0)
            };
            let score = if key == Class::Bonafide { base + shift } else { base };
            ScoreRecord::new(format!("t{i}"), score, None, key).unwrap()
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn blobs(n_per_class: usize, noise_fraction: f64, seed: u64) -> Dataset {
    gen_blobs(&BlobConfig {
        n_per_class,
        dim: 2,
        separation: 6.0,
        noise_fraction,
        seed,
    })
    .unwrap()
}

pub fn score_records(model: &TrainedModel, data: &Dataset) -> Vec<ScoreRecord> {
    data.samples()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let u = if model.config.objective == Objective::Evidential {
                Some(predict(model, &s.features).unwrap().uncertainty)
            } else {
                None
            };
            ScoreRecord::new(format!("t{i}"), model.score(&s.features).unwrap(), u, s.label).unwrap()
        })
        .collect()
}

pub fn accuracy(model: &TrainedModel, data: &Dataset) -> f64 {
    let hits = data
        .samples()
        .iter()
        .filter(|s| predict(model, &s.features).unwrap().predicted_class() == s.label)
        .count();
    hits as f64 / data.len() as f64
}

pub fn mean_uncertainty(model: &TrainedModel, data: &Dataset) -> f64 {
    data.samples()
        .iter()
        .map(|s| predict(model, &s.features).unwrap().uncertainty)
        .sum::<f64>()
        / data.len() as f64
}

/// One seed of the trend experiments: evidential and softmax models trained
/// on identical clean blobs, probed on a half-corrupted test set and on a
/// shifted copy of the clean test set.
pub struct SeedOutcome {
    pub seed: u64,
    /// Accuracy of the lowest-u decile minus the highest-u decile.
    pub decile_gap: f64,
    pub evidential_aece: f64,
    /// Min–max normalized logit-difference scores.
    pub baseline_aece: f64,
    /// Softmax probabilities used directly, for reference.
    pub baseline_prob_aece: f64,
    pub u_in: f64,
    pub u_shifted: f64,
    pub u_scaled: f64,
}

pub const OOD_SHIFT_SIGMAS: f64 = 10.0;

pub fn run_seed(seed: u64) -> SeedOutcome {
    let train_set = blobs(1000, 0.0, seed);
    let clean_test = blobs(500, 0.0, seed + 1_000);
    let noisy_test = blobs(500, 0.5, seed + 2_000);

    let evidential = train(
        &train_set,
        &TrainConfig {
            seed,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let baseline = train(
        &train_set,
        &TrainConfig {
            seed,
            objective: Objective::Softmax,
            ..TrainConfig::default()
        },
    )
    .unwrap();

    let opinions: Vec<_> = noisy_test
        .samples()
        .iter()
        .map(|s| (predict(&evidential, &s.features).unwrap(), s.label))
        .collect();
    let deciles = uncertainty_bins(&opinions).unwrap();
    let decile_gap = deciles.groups[0].accuracy - deciles.groups[9].accuracy;

    let conf: Vec<f64> = opinions.iter().map(|(o, _)| o.confidence()).collect();
    let ok: Vec<bool> = opinions.iter().map(|(o, l)| o.predicted_class() == *l).collect();
    let evidential_aece = compute_aece(&conf, &ok, 10).unwrap();

    let labels: Vec<Class> = noisy_test.samples().iter().map(|s| s.label).collect();
    let binary_aece = |p_bonafide: &[f64]| {
        let (c, k): (Vec<f64>, Vec<bool>) = p_bonafide
            .iter()
            .zip(&labels)
            .map(|(p, l)| {
                let (class, conf) = binary_decision(*p);
                (conf, class == *l)
            })
            .unzip();
        compute_aece(&c, &k, 10).unwrap()
    };
    let raw: Vec<f64> = noisy_test
        .samples()
        .iter()
        .map(|s| baseline.score(&s.features).unwrap())
        .collect();
    let baseline_aece = binary_aece(&minmax_normalize(&raw));
    let probs: Vec<f64> = noisy_test
        .samples()
        .iter()
        .map(|s| baseline.probs(&s.features).unwrap()[0])
        .collect();
    let baseline_prob_aece = binary_aece(&probs);

    // clusters have unit standard deviation; shift every feature by 10σ
    let shifted = clean_test.shifted(&vec![OOD_SHIFT_SIGMAS; clean_test.dim()]).unwrap();
    let scaled = Dataset::new(
        clean_test
            .samples()
            .iter()
            .map(|s| trustcm::data::Sample {
                features: s.features.iter().map(|v| v * 100.0).collect(),
                label: s.label,
            })
            .collect(),
    )
    .unwrap();

    SeedOutcome {
        seed,
        decile_gap,
        evidential_aece,
        baseline_aece,
        baseline_prob_aece,
        u_in: mean_uncertainty(&evidential, &clean_test),
        u_shifted: mean_uncertainty(&evidential, &shifted),
        u_scaled: mean_uncertainty(&evidential, &scaled),
    }
}

pub const TREND_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
