//! Evaluation report over a score file: JSON document plus CSV plot data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{write_text_atomic, ScoreRecord};
use crate::error::{Error, Result};
use crate::metrics::{
    binary_decision, calibration_report, det_curve, evaluate, minmax_normalize, uncertainty_bins_from_pairs,
    CalibrationReport, DetPoint, EvalReport, TdcfCosts, UncertaintyBins,
};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// How scores become confidences for calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScoreNormalization {
    /// Scores are already bonafide probabilities in [0, 1].
    #[default]
    None,
    /// Min–max over the evaluated set, for scores on an arbitrary scale.
    Minmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub r_bins: usize,
    pub normalization: ScoreNormalization,
    /// `None` disables the t-DCF.
    pub tdcf: Option<TdcfCosts>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            r_bins: 10,
            normalization: ScoreNormalization::None,
            tdcf: Some(TdcfCosts::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub config: EvalConfig,
    pub metrics: EvalReport,
    /// Confidence = max(s, 1 − s) of the (normalized) score.
    pub calibration: CalibrationReport,
    /// Confidence = 1 − u; present when every record carries u.
    pub calibration_uncertainty: Option<CalibrationReport>,
    pub uncertainty_bins: Option<UncertaintyBins>,
    #[serde(skip)]
    pub det: Vec<DetPoint>,
}

/// Runs every metric the score file supports.
pub fn build_report(records: &[ScoreRecord], cfg: &EvalConfig) -> Result<Report> {
    let metrics = evaluate(records, cfg.tdcf.as_ref())?;
    let det = det_curve(records)?;

    let raw: Vec<f64> = records.iter().map(|r| r.score).collect();
    let probs = match cfg.normalization {
        ScoreNormalization::Minmax => minmax_normalize(&raw),
        ScoreNormalization::None => {
            if let Some(s) = raw.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                return Err(Error::Metric(format!(
                    "score {s} is outside [0, 1]; use min-max normalization for unbounded scores"
                )));
            }
            raw
        }
    };
    let (confidence, correct): (Vec<f64>, Vec<bool>) = probs
        .iter()
        .zip(records)
        .map(|(p, r)| {
            let (class, conf) = binary_decision(*p);
            (conf, class == r.key)
        })
        .unzip();
    let calibration = calibration_report(&confidence, &correct, cfg.r_bins)?;

    let uncertainties: Option<Vec<f64>> = records.iter().map(|r| r.uncertainty).collect();
    let (calibration_uncertainty, uncertainty_bins) = match uncertainties {
        Some(us) => {
            let one_minus_u: Vec<f64> = us.iter().map(|u| 1.0 - u).collect();
            let pairs: Vec<(f64, bool)> = us.iter().copied().zip(correct.iter().copied()).collect();
            let bins = if pairs.len() >= crate::metrics::UNCERTAINTY_GROUPS {
                Some(uncertainty_bins_from_pairs(&pairs)?)
            } else {
                None
            };
            (Some(calibration_report(&one_minus_u, &correct, cfg.r_bins)?), bins)
        }
        None => (None, None),
    };

    Ok(Report {
        format_version: REPORT_FORMAT_VERSION,
        config: cfg.clone(),
        metrics,
        calibration,
        calibration_uncertainty,
        uncertainty_bins,
        det,
    })
}

pub fn report_to_json(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn write_report(report: &Report, path: impl AsRef<Path>) -> Result<()> {
    write_text_atomic(path.as_ref(), &report_to_json(report)?)
}

fn calibration_csv(c: &CalibrationReport) -> String {
    let mut s = String::from("bin,mean_confidence,accuracy,count\n");
    for (i, b) in c.bins.iter().enumerate() {
        writeln!(s, "{i},{:?},{:?},{}", b.mean_confidence, b.accuracy, b.count).unwrap();
    }
    s
}

/// Writes `det.csv`, `calibration.csv` and, when available,
/// `calibration_uncertainty.csv` and `uncertainty_bins.csv` into `dir`.
pub fn write_plot_data(report: &Report, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let p = dir.join(name);
        write_text_atomic(&p, &body)?;
        files.push(p);
        Ok(())
    };

    let mut det = String::from("threshold,far,frr\n");
    for p in &report.det {
        writeln!(det, "{:?},{:?},{:?}", p.threshold, p.far, p.frr).unwrap();
    }
    put("det.csv", det)?;
    put("calibration.csv", calibration_csv(&report.calibration))?;
    if let Some(c) = &report.calibration_uncertainty {
        put("calibration_uncertainty.csv", calibration_csv(c))?;
    }
    if let Some(u) = &report.uncertainty_bins {
        let mut s = String::from("group,mean_uncertainty,accuracy,count\n");
        for (i, g) in u.groups.iter().enumerate() {
            writeln!(s, "{i},{:?},{:?},{}", g.mean_uncertainty, g.accuracy, g.count).unwrap();
        }
        put("uncertainty_bins.csv", s)?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opinion::Class;

    fn rec(id: &str, s: f64, u: Option<f64>, key: Class) -> ScoreRecord {
        ScoreRecord::new(id, s, u, key).unwrap()
    }

    fn hand_example() -> Vec<ScoreRecord> {
        vec![
            rec("a", 0.6, None, Class::Bonafide),
            rec("b", 0.6, None, Class::Spoof),
            rec("c", 0.9, None, Class::Bonafide),
            rec("d", 0.9, None, Class::Bonafide),
        ]
    }

    #[test]
    fn hand_example_calibration() {
        let cfg = EvalConfig {
            r_bins: 2,
            ..EvalConfig::default()
        };
        let r = build_report(&hand_example(), &cfg).unwrap();
        assert!((r.calibration.aece - 0.1).abs() < 1e-15);
        assert!((r.calibration.pcc.unwrap() - 0.3).abs() < 1e-15);
        assert!(r.uncertainty_bins.is_none());
        assert!(r.calibration_uncertainty.is_none());
    }

    #[test]
    fn unbounded_scores_need_normalization() {
        let recs = vec![rec("a", 3.0, None, Class::Bonafide), rec("b", -2.0, None, Class::Spoof)];
        let cfg = EvalConfig {
            r_bins: 1,
            ..EvalConfig::default()
        };
        assert!(build_report(&recs, &cfg).is_err());
        let cfg = EvalConfig {
            normalization: ScoreNormalization::Minmax,
            ..cfg
        };
        let r = build_report(&recs, &cfg).unwrap();
        assert_eq!(r.metrics.eer, 0.0);
        assert_eq!(r.calibration.aece, 0.0);
    }

    #[test]
    fn uncertainty_sections_follow_the_column() {
        let recs: Vec<ScoreRecord> = (0..20)
            .map(|i| {
                let key = if i % 2 == 0 { Class::Bonafide } else { Class::Spoof };
                let s = if key == Class::Bonafide { 0.8 } else { 0.3 };
                rec(&format!("t{i}"), s, Some(i as f64 / 40.0), key)
            })
            .collect();
        let r = build_report(&recs, &EvalConfig::default()).unwrap();
        assert_eq!(r.uncertainty_bins.as_ref().unwrap().groups.len(), 10);
        assert!(r.calibration_uncertainty.is_some());
        assert_eq!(r.metrics.min_tdcf, Some(0.0));
    }

    #[test]
    fn json_is_stable_and_versioned() {
        let cfg = EvalConfig {
            r_bins: 2,
            tdcf: None,
            ..EvalConfig::default()
        };
        let a = report_to_json(&build_report(&hand_example(), &cfg).unwrap()).unwrap();
        let b = report_to_json(&build_report(&hand_example(), &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["config"]["r_bins"], 2);
        assert!(v["metrics"]["min_tdcf"].is_null());
    }

    #[test]
    fn plot_files_written() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = EvalConfig {
            r_bins: 2,
            ..EvalConfig::default()
        };
        let r = build_report(&hand_example(), &cfg).unwrap();
        let files = write_plot_data(&r, dir.path().join("plots")).unwrap();
        assert_eq!(files.len(), 2);
        let det = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(det.lines().count(), 1 + 2 + 1);
        assert!(det.ends_with("inf,0.0,1.0\n"), "{det}");
    }
}
