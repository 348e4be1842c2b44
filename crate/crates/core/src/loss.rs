//! Annealed evidential loss and its gradient with respect to α, plus the
//! plain softmax cross-entropy used by the non-evidential baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opinion::{adjust_alpha, kl_to_uniform, DirichletParams, OneHot};
use crate::specfn::{digamma, trigamma};

/// Per-sample (or batch-mean) decomposition of the evidential loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ace: f64,
    pub kl: f64,
    pub lambda: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(ace: f64, kl: f64, lambda: f64) -> Self {
        LossBreakdown {
            ace,
            kl,
            lambda,
            total: ace + lambda * kl,
        }
    }
}

/// Linear ramp of the KL weight: λ_t = min(1, epoch / T).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    anneal_epochs: usize,
}

impl AnnealSchedule {
    pub fn new(anneal_epochs: usize) -> Result<Self> {
        if anneal_epochs == 0 {
            return Err(Error::contract("anneal_epochs must be positive"));
        }
        Ok(AnnealSchedule { anneal_epochs })
    }

    pub fn anneal_epochs(&self) -> usize {
        self.anneal_epochs
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule { anneal_epochs: 10 }
    }
}

pub fn lambda_at(s: &AnnealSchedule, epoch: usize) -> f64 {
    (epoch as f64 / s.anneal_epochs as f64).min(1.0)
}

/// Expected cross-entropy under Dir(α): Σ_j y_j (ψ(S) - ψ(α_j)).
pub fn ace_loss(a: &DirichletParams, y: &OneHot) -> Result<f64> {
    y.check_len(a.k())?;
    Ok(digamma(a.strength())? - digamma(a.alpha()[y.class()])?)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::contract(format!("lambda must lie in [0, 1], got {lambda}")))
    }
}

/// ace + λ · KL(Dir(α̃) ‖ Dir(1)).
pub fn total_loss(a: &DirichletParams, y: &OneHot, lambda: f64) -> Result<LossBreakdown> {
    check_lambda(lambda)?;
    let ace = ace_loss(a, y)?;
    let kl = kl_to_uniform(&adjust_alpha(a, y)?)?;
    Ok(LossBreakdown::new(ace, kl, lambda))
}

/// ∂ total_loss / ∂α.
///
/// ```text
/// g_k = ψ₁(S) - y_k ψ₁(α_k)
///     + λ (1 - y_k) [ (α̃_k - 1) ψ₁(α̃_k) - (S̃ - K) ψ₁(S̃) ]
/// ```
pub fn total_loss_grad(a: &DirichletParams, y: &OneHot, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    y.check_len(a.k())?;
    let k = a.k() as f64;
    let tri_s = trigamma(a.strength())?;

    let a_tilde = adjust_alpha(a, y)?;
    let s_tilde = a_tilde.strength();
    let kl_shared = (s_tilde - k) * trigamma(s_tilde)?;

    let mut grad = Vec::with_capacity(a.k());
    for (j, (&alpha, &alpha_t)) in a.alpha().iter().zip(a_tilde.alpha()).enumerate() {
        let g = if j == y.class() {
            tri_s - trigamma(alpha)?
        } else {
            tri_s + lambda * ((alpha_t - 1.0) * trigamma(alpha_t)? - kl_shared)
        };
        grad.push(g);
    }
    Ok(grad)
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// -Σ_j y_j log p_j for probabilities `p`.
pub fn cross_entropy(probs: &[f64], y: &OneHot) -> Result<f64> {
    y.check_len(probs.len())?;
    Ok(-probs[y.class()].ln())
}

/// Cross-entropy of softmax(logits) and its gradient with respect to the
/// logits (`p - y`). Uses log-sum-exp so large logits stay finite.
pub fn softmax_cross_entropy(logits: &[f64], y: &OneHot) -> Result<(f64, Vec<f64>)> {
    y.check_len(logits.len())?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let loss = lse - logits[y.class()];
    let grad = softmax(logits)
        .into_iter()
        .enumerate()
        .map(|(j, p)| p - y.get(j))
        .collect();
    Ok((loss, grad))
}
