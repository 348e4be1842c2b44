//! Evidence, Dirichlet parameters and subjective-logic opinions.
//!
//! Class indices are fixed everywhere: `0` is bonafide, `1` is spoofed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfn::{digamma, lgamma};

/// Ground-truth class of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Bonafide,
    Spoof,
}

impl Class {
    pub const COUNT: usize = 2;

    pub fn index(self) -> usize {
        match self {
            Class::Bonafide => 0,
            Class::Spoof => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Class::Bonafide),
            1 => Some(Class::Spoof),
            _ => None,
        }
    }

    pub fn one_hot(self) -> OneHot {
        OneHot {
            class: self.index(),
            k: Self::COUNT,
        }
    }
}

/// Discrete outcome of an opinion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Bonafide,
    Spoofed,
    Unknown,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Bonafide => "bonafide",
            Decision::Spoofed => "spoofed",
            Decision::Unknown => "unknown",
        }
    }
}

/// Non-negative per-class evidence emitted by an evidential network.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence(Vec<f64>);

impl Evidence {
    pub fn new(e: Vec<f64>) -> Result<Self> {
        if e.len() < 2 {
            return Err(Error::contract(format!(
                "evidence needs at least 2 classes, got {}",
                e.len()
            )));
        }
        if let Some(bad) = e.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::contract(format!(
                "evidence components must be finite and >= 0, got {bad}"
            )));
        }
        Ok(Evidence(e))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }
}

/// Dirichlet concentration parameters with their cached strength S = Σ α.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<f64>,
    strength: f64,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::contract(format!(
                "Dirichlet needs at least 2 components, got {}",
                alpha.len()
            )));
        }
        if let Some(&bad) = alpha.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain {
                function: "DirichletParams::new",
                value: bad,
                expected: "finite alpha > 0",
            });
        }
        let strength = alpha.iter().sum();
        Ok(DirichletParams { alpha, strength })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }
}

/// A one-hot label vector of length `k`, stored as the hot index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHot {
    class: usize,
    k: usize,
}

impl OneHot {
    pub fn new(class: usize, k: usize) -> Result<Self> {
        if class >= k {
            return Err(Error::contract(format!(
                "one-hot index {class} out of range for {k} classes"
            )));
        }
        Ok(OneHot { class, k })
    }

    /// Validates an explicit 0/1 vector.
    pub fn from_slice(y: &[f64]) -> Result<Self> {
        let mut hot = None;
        for (i, &v) in y.iter().enumerate() {
            if v == 1.0 {
                if hot.replace(i).is_some() {
                    return Err(Error::contract("label vector has more than one 1"));
                }
            } else if v != 0.0 {
                return Err(Error::contract(format!("label vector entries must be 0 or 1, got {v}")));
            }
        }
        let class = hot.ok_or_else(|| Error::contract("label vector has no 1"))?;
        Ok(OneHot { class, k: y.len() })
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// y_j as a real.
    pub fn get(&self, j: usize) -> f64 {
        if j == self.class {
            1.0
        } else {
            0.0
        }
    }

    pub(crate) fn check_len(&self, k: usize) -> Result<()> {
        if self.k != k {
            return Err(Error::Dimension {
                what: "label vector",
                expected: k,
                actual: self.k,
            });
        }
        Ok(())
    }
}

/// Belief masses, uncertainty mass and expected class probabilities for one
/// input, plus the resulting decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opinion {
    pub beliefs: Vec<f64>,
    pub uncertainty: f64,
    pub probs: Vec<f64>,
    pub decision: Decision,
}

impl Opinion {
    /// Index of the most probable class; ties go to the higher index
    /// (spoofed in the binary case).
    pub fn argmax(&self) -> usize {
        argmax_high_tie(&self.probs)
    }

    /// The most probable class, ignoring the Unknown outcome.
    pub fn predicted_class(&self) -> Class {
        if self.argmax() == Class::Bonafide.index() {
            Class::Bonafide
        } else {
            Class::Spoof
        }
    }

    /// max_k p_k.
    pub fn confidence(&self) -> f64 {
        self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn argmax_high_tie(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x >= v[best] {
            best = i;
        }
    }
    best
}

/// α_k = e_k + 1.
pub fn evidence_to_alpha(e: &Evidence) -> DirichletParams {
    let alpha: Vec<f64> = e.0.iter().map(|v| v + 1.0).collect();
    let strength = alpha.iter().sum();
    DirichletParams { alpha, strength }
}

/// Forms the opinion for evidence-derived parameters.
///
/// `b_k = (α_k - 1)/S`, `u = K/S`, `p_k = α_k/S`. The decision is Unknown
/// when `u >= unknown_threshold`, otherwise the argmax class (index 0 maps to
/// Bonafide, every other index to Spoofed; ties go to Spoofed).
pub fn opinion_from_alpha(a: &DirichletParams, unknown_threshold: f64) -> Result<Opinion> {
    if !(0.0..=1.0).contains(&unknown_threshold) {
        return Err(Error::contract(format!(
            "unknown_threshold must lie in [0, 1], got {unknown_threshold}"
        )));
    }
    if let Some(bad) = a.alpha.iter().find(|v| **v < 1.0) {
        return Err(Error::contract(format!(
            "alpha component {bad} < 1 would give a negative belief mass"
        )));
    }
    let s = a.strength;
    let k = a.k() as f64;
    let beliefs: Vec<f64> = a.alpha.iter().map(|v| (v - 1.0) / s).collect();
    let probs: Vec<f64> = a.alpha.iter().map(|v| v / s).collect();
    let uncertainty = k / s;

    let decision = if uncertainty >= unknown_threshold {
        Decision::Unknown
    } else if argmax_high_tie(&probs) == Class::Bonafide.index() {
        Decision::Bonafide
    } else {
        Decision::Spoofed
    };

    Ok(Opinion {
        beliefs,
        uncertainty,
        probs,
        decision,
    })
}

/// KL divergence from Dir(α̃) to the uniform Dirichlet Dir(1, …, 1).
pub fn kl_to_uniform(a_tilde: &DirichletParams) -> Result<f64> {
    let s = a_tilde.strength;
    let k = a_tilde.k() as f64;
    let psi_s = digamma(s)?;
    let mut kl = lgamma(s)? - lgamma(k)?;
    for &a in &a_tilde.alpha {
        kl -= lgamma(a)?;
        kl += (a - 1.0) * (digamma(a)? - psi_s);
    }
    // Rounding can leave a tiny negative residue near the minimum.
    Ok(kl.max(0.0))
}

/// α̃ = y + (1 - y) ⊙ α: the true-class component is pinned to 1.
pub fn adjust_alpha(a: &DirichletParams, y: &OneHot) -> Result<DirichletParams> {
    y.check_len(a.k())?;
    let alpha: Vec<f64> = a
        .alpha
        .iter()
        .enumerate()
        .map(|(j, &v)| if j == y.class { 1.0 } else { v })
        .collect();
    let strength = alpha.iter().sum();
    Ok(DirichletParams { alpha, strength })
}
