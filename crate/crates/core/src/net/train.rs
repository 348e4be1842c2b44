use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, Gradients, LayerSpec, NetworkParams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::{lambda_at, softmax, softmax_cross_entropy, total_loss, total_loss_grad, AnnealSchedule};
use crate::opinion::{evidence_to_alpha, opinion_from_alpha, DirichletParams, Evidence, Opinion};

/// Training objective and matching output head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Softplus evidence head trained with the annealed evidential loss.
    Evidential,
    /// Linear logits trained with softmax cross-entropy; the non-evidential
    /// baseline.
    Softmax,
}

impl Objective {
    pub fn head(self) -> Activation {
        match self {
            Objective::Evidential => Activation::Softplus,
            Objective::Softmax => Activation::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub anneal_epochs: usize,
    pub seed: u64,
    pub unknown_threshold: f64,
    pub hidden: Vec<usize>,
    pub objective: Objective,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.05,
            anneal_epochs: 10,
            seed: 0,
            unknown_threshold: 0.5,
            hidden: vec![32, 32],
            objective: Objective::Evidential,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::contract("batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::contract("learning_rate must be a positive real"));
        }
        if self.anneal_epochs == 0 {
            return Err(Error::contract("anneal_epochs must be positive"));
        }
        if !(0.0..=1.0).contains(&self.unknown_threshold) {
            return Err(Error::contract("unknown_threshold must lie in [0, 1]"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::contract("hidden layer widths must be positive"));
        }
        Ok(())
    }

    pub fn layer_specs(&self, input_dim: usize) -> Vec<LayerSpec> {
        LayerSpec::stack(input_dim, &self.hidden, 2, self.objective.head())
    }
}

/// Sample means over one epoch. For the softmax objective `ace` holds the
/// cross-entropy and `kl`, `lambda` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub ace: f64,
    pub kl: f64,
    pub lambda: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: NetworkParams,
    pub config: TrainConfig,
    pub trace: Vec<EpochStats>,
}

impl TrainedModel {
    /// Bonafide score: p_bonafide for the evidential head, the logit
    /// difference z_bonafide − z_spoof for the softmax baseline.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let out = self.params.forward_output(x)?;
        Ok(match self.config.objective {
            Objective::Evidential => {
                let a = evidence_to_alpha(&Evidence::new(out)?);
                a.alpha()[0] / a.strength()
            }
            Objective::Softmax => out[0] - out[1],
        })
    }

    /// Class probabilities: Dirichlet mean or softmax.
    pub fn probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        let out = self.params.forward_output(x)?;
        Ok(match self.config.objective {
            Objective::Evidential => {
                let a = evidence_to_alpha(&Evidence::new(out)?);
                a.alpha().iter().map(|v| v / a.strength()).collect()
            }
            Objective::Softmax => softmax(&out),
        })
    }
}

/// Seeded Glorot initialization for the configured architecture.
pub fn init_params(input_dim: usize, cfg: &TrainConfig) -> Result<NetworkParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    NetworkParams::glorot(cfg.layer_specs(input_dim), &mut rng)
}

/// Mini-batch SGD with mean reduction over each batch.
///
/// A single ChaCha stream seeded from `cfg.seed` drives initialization and
/// then the per-epoch shuffles; per-sample gradients are summed in batch
/// order, so two runs with the same inputs are bit-identical.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::contract("cannot train on an empty dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = NetworkParams::glorot(cfg.layer_specs(data.dim()), &mut rng)?;
    let schedule = AnnealSchedule::new(cfg.anneal_epochs)?;
    let samples = data.samples();
    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lambda = match cfg.objective {
            Objective::Evidential => lambda_at(&schedule, epoch),
            Objective::Softmax => 0.0,
        };
        order.shuffle(&mut rng);
        let (mut sum_ace, mut sum_kl, mut sum_total) = (0.0, 0.0, 0.0);

        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros_like(&params);
            for &i in batch {
                let s = &samples[i];
                let y = s.label.one_hot();
                let trace = params.forward_trace(&s.features)?;
                let grad_out = match cfg.objective {
                    Objective::Evidential => {
                        let alpha = trace.output().iter().map(|e| e + 1.0).collect();
                        let a = DirichletParams::new(alpha).map_err(|_| Error::Diverged { epoch })?;
                        let l = total_loss(&a, &y, lambda)?;
                        sum_ace += l.ace;
                        sum_kl += l.kl;
                        sum_total += l.total;
                        total_loss_grad(&a, &y, lambda)?
                    }
                    Objective::Softmax => {
                        let (l, g) = softmax_cross_entropy(trace.output(), &y)?;
                        sum_ace += l;
                        sum_total += l;
                        g
                    }
                };
                grads.add_assign(&params.backward_trace(&trace, &grad_out)?);
            }
            grads.scale(1.0 / batch.len() as f64);
            params.apply_gradients(&grads, cfg.learning_rate);
        }

        if !sum_total.is_finite() || !params.all_finite() {
            return Err(Error::Diverged { epoch });
        }
        let nf = n as f64;
        trace.push(EpochStats {
            epoch,
            ace: sum_ace / nf,
            kl: sum_kl / nf,
            lambda,
            total: sum_total / nf,
        });
    }

    Ok(TrainedModel {
        params,
        config: cfg.clone(),
        trace,
    })
}

/// forward → α = e + 1 → opinion, with the model's unknown threshold.
pub fn predict(model: &TrainedModel, x: &[f64]) -> Result<Opinion> {
    if model.config.objective != Objective::Evidential {
        return Err(Error::contract("opinions need an evidential model"));
    }
    let e = super::forward(&model.params, x)?;
    opinion_from_alpha(&evidence_to_alpha(&e), model.config.unknown_threshold)
}
