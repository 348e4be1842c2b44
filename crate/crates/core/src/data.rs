//! Synthetic bonafide/spoof feature clusters and the two text formats.
//!
//! Dataset files are comma-separated, one sample per line, features first
//! and the integer label last (`0` = bonafide, `1` = spoofed), no header:
//!
//! ```text
//! 0.5,-1.25,0
//! ```
//!
//! Score files are tab-separated `trial_id  score  [uncertainty]  key`, where
//! `key` is `bonafide` or `spoof` and a higher score means more bonafide.
//! The uncertainty column is optional per line.
//!
//! Both formats are UTF-8 with LF line endings. Reals are written with the
//! shortest decimal that parses back to the same `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opinion::Class;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Class,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
}

impl Dataset {
    /// Builds a dataset, checking uniform dimension and finite features.
    /// An empty sample list is allowed here; training rejects it.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let dim = samples.first().map_or(0, |s| s.features.len());
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != dim {
                return Err(Error::Dimension {
                    what: "sample features",
                    expected: dim,
                    actual: s.features.len(),
                });
            }
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract(format!("sample {i} has a non-finite feature")));
            }
        }
        Ok(Dataset { samples, dim })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, class: Class) -> usize {
        self.samples.iter().filter(|s| s.label == class).count()
    }

    /// Copy with `delta` added to every feature vector.
    pub fn shifted(&self, delta: &[f64]) -> Result<Dataset> {
        if delta.len() != self.dim {
            return Err(Error::Dimension {
                what: "shift vector",
                expected: self.dim,
                actual: delta.len(),
            });
        }
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                features: s.features.iter().zip(delta).map(|(x, d)| x + d).collect(),
                label: s.label,
            })
            .collect();
        Dataset::new(samples)
    }

    /// Concatenation of two datasets of the same dimension.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().cloned());
        Dataset::new(samples)
    }
}

/// Parameters for [`gen_blobs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobConfig {
    pub n_per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub noise_fraction: f64,
    pub seed: u64,
}

/// Variance of the extra noise added to corrupted samples.
pub const NOISE_VARIANCE: f64 = 2.0;

/// Two unit-variance isotropic Gaussian clusters centred at ∓separation/2 on
/// the first axis (bonafide negative, spoofed positive).
///
/// The first `n_per_class` samples are bonafide, the rest spoofed.
/// `round(noise_fraction · 2n)` samples, chosen uniformly, get additive
/// N(0, 2·I) noise. Clean coordinates and noise come from separate ChaCha
/// streams, so changing `noise_fraction` leaves the clean draws untouched.
pub fn gen_blobs(cfg: &BlobConfig) -> Result<Dataset> {
    if cfg.n_per_class == 0 || cfg.dim == 0 {
        return Err(Error::contract("n_per_class and dim must be >= 1"));
    }
    if !(cfg.separation >= 0.0 && cfg.separation.is_finite()) {
        return Err(Error::contract(format!(
            "separation must be finite and >= 0, got {}",
            cfg.separation
        )));
    }
    if !(0.0..=1.0).contains(&cfg.noise_fraction) {
        return Err(Error::contract(format!(
            "noise_fraction must lie in [0, 1], got {}",
            cfg.noise_fraction
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = cfg.separation / 2.0;
    let mut samples = Vec::with_capacity(2 * cfg.n_per_class);
    for class in [Class::Bonafide, Class::Spoof] {
        let centre = if class == Class::Bonafide { -half } else { half };
        for _ in 0..cfg.n_per_class {
            let mut features: Vec<f64> = (0..cfg.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            features[0] += centre;
            samples.push(Sample { features, label: class });
        }
    }

    let n = samples.len();
    let n_noisy = (cfg.noise_fraction * n as f64).round() as usize;
    if n_noisy > 0 {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        noise_rng.set_stream(1);
        let mut chosen = sample_indices(&mut noise_rng, n, n_noisy).into_vec();
        chosen.sort_unstable();
        let noise = Normal::new(0.0, NOISE_VARIANCE.sqrt()).expect("valid std");
        for i in chosen {
            for x in &mut samples[i].features {
                *x += noise.sample(&mut noise_rng);
            }
        }
    }
    Dataset::new(samples)
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

fn parse_real(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("{what} {tok:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("{what} {tok:?} is not finite")));
    }
    Ok(v)
}

/// Non-blank lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn format_dataset(d: &Dataset) -> String {
    let mut out = String::new();
    for s in &d.samples {
        for v in &s.features {
            out.push_str(&fmt_real(*v));
            out.push(',');
        }
        out.push_str(&s.label.index().to_string());
        out.push('\n');
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut arity = None;
    for (line, row) in content_lines(text) {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::parse(line, "expected at least one feature and a label"));
        }
        match arity {
            None => arity = Some(fields.len()),
            Some(n) if n != fields.len() => {
                return Err(Error::parse(
                    line,
                    format!("expected {n} fields, found {}", fields.len()),
                ))
            }
            _ => {}
        }
        let (label_tok, feature_toks) = fields.split_last().expect("non-empty");
        let label = match label_tok.trim() {
            "0" => Class::Bonafide,
            "1" => Class::Spoof,
            other => return Err(Error::parse(line, format!("label must be 0 or 1, got {other:?}"))),
        };
        let features = feature_toks
            .iter()
            .map(|t| parse_real(t, line, "feature"))
            .collect::<Result<Vec<_>>>()?;
        samples.push(Sample { features, label });
    }
    if samples.is_empty() {
        return Err(Error::Parse {
            line: None,
            message: "no samples".into(),
        });
    }
    Dataset::new(samples)
}

pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &format_dataset(d))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_dataset(&read_text(path.as_ref())?)
}

/// One countermeasure trial: higher `score` means more bonafide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub trial_id: String,
    pub score: f64,
    pub uncertainty: Option<f64>,
    pub key: Class,
}

impl ScoreRecord {
    pub fn new(trial_id: impl Into<String>, score: f64, uncertainty: Option<f64>, key: Class) -> Result<Self> {
        let trial_id = trial_id.into();
        if trial_id.is_empty() || trial_id.chars().any(char::is_whitespace) {
            return Err(Error::contract(format!(
                "trial id {trial_id:?} must be non-empty without whitespace"
            )));
        }
        if !score.is_finite() {
            return Err(Error::contract(format!("score {score} is not finite")));
        }
        if let Some(u) = uncertainty {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::contract(format!("uncertainty {u} outside [0, 1]")));
            }
        }
        Ok(ScoreRecord {
            trial_id,
            score,
            uncertainty,
            key,
        })
    }
}

pub fn key_token(c: Class) -> &'static str {
    match c {
        Class::Bonafide => "bonafide",
        Class::Spoof => "spoof",
    }
}

pub fn format_scores(records: &[ScoreRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.trial_id);
        out.push('\t');
        out.push_str(&fmt_real(r.score));
        if let Some(u) = r.uncertainty {
            out.push('\t');
            out.push_str(&fmt_real(u));
        }
        out.push('\t');
        out.push_str(key_token(r.key));
        out.push('\n');
    }
    out
}

pub fn parse_scores(text: &str) -> Result<Vec<ScoreRecord>> {
    let mut records = Vec::new();
    for (line, row) in content_lines(text) {
        let fields: Vec<&str> = row.split('\t').collect();
        let (id, score_tok, unc_tok, key_tok) = match fields.as_slice() {
            [id, s, k] => (id, s, None, k),
            [id, s, u, k] => (id, s, Some(u), k),
            _ => {
                return Err(Error::parse(
                    line,
                    format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
                ))
            }
        };
        let key = match key_tok.trim() {
            "bonafide" => Class::Bonafide,
            "spoof" => Class::Spoof,
            other => {
                return Err(Error::parse(
                    line,
                    format!("unknown key {other:?} (expected bonafide or spoof)"),
                ))
            }
        };
        let score = parse_real(score_tok, line, "score")?;
        let uncertainty = unc_tok.map(|t| parse_real(t, line, "uncertainty")).transpose()?;
        let record = ScoreRecord::new(id.trim(), score, uncertainty, key).map_err(|e| match e {
            Error::Contract(msg) => Error::parse(line, msg),
            other => other,
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: None,
            message: "no score records".into(),
        });
    }
    Ok(records)
}

pub fn write_scores(records: &[ScoreRecord], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &format_scores(records))
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreRecord>> {
    parse_scores(&read_text(path.as_ref())?)
}

pub(crate) fn write_text_atomic(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, contents)
}
