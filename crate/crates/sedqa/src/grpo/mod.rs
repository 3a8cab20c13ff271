//! Group-relative policy optimization for a categorical answer policy.
//!
//! The policy is a linear scorer over sparse features of `(prompt, option)`
//! pairs, normalized with a softmax over the four options. Training samples
//! a group of answers per prompt from the pre-update policy, normalizes the
//! 0/1 rewards within the group into advantages, and takes one clipped
//! surrogate ascent step per group. An optional KL penalty anchors the
//! policy to its initialization.

pub mod featurizer;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Letter, OptionSet};

pub use featurizer::{Featurizer, SparseFeatures, ENGINEERED_FEATURES};

/// Checkpoint format version.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Hyperparameters for [`train`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GrpoConfig {
    /// Sampled answers per prompt per step.
    pub group_size: usize,
    /// Half-width of the ratio clipping interval.
    pub clip_epsilon: f64,
    /// Weight of the KL penalty toward the reference policy.
    pub kl_coeff: f64,
    pub learning_rate: f64,
    /// Passes over the training items.
    pub epochs: usize,
    pub seed: u64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            group_size: 8,
            clip_epsilon: 0.2,
            kl_coeff: 0.0,
            learning_rate: 0.05,
            epochs: 1,
            seed: 0,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.group_size == 0 {
            return Err(Error::invalid("group_size must be positive"));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "clip_epsilon must lie in (0, 1), got {}",
                self.clip_epsilon
            )));
        }
        if self.kl_coeff.is_nan() || self.kl_coeff < 0.0 {
            return Err(Error::invalid(format!(
                "kl_coeff must be non-negative, got {}",
                self.kl_coeff
            )));
        }
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 {
            return Err(Error::invalid(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Linear answer policy over sparse features.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub weights: Vec<f64>,
}

impl Policy {
    pub fn zeros(feature_dim: usize) -> Self {
        Policy {
            weights: vec![0.0; feature_dim],
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    /// Raw per-option scores (dot products).
    pub fn scores(&self, option_features: &[SparseFeatures]) -> Result<Vec<f64>> {
        option_features
            .iter()
            .map(|feats| dot(&self.weights, feats))
            .collect()
    }

    /// Log-softmax of the per-option scores.
    pub fn logprobs(&self, option_features: &[SparseFeatures]) -> Result<Vec<f64>> {
        Ok(log_softmax(&self.scores(option_features)?))
    }

    /// Answer letter for a rendered prompt: the highest-scoring option,
    /// with ties resolved toward the alphabetically first letter.
    pub fn answer(&self, featurizer: &Featurizer, prompt: &str, options: &OptionSet) -> Result<Letter> {
        let feats: Vec<SparseFeatures> = options
            .iter()
            .map(|(_, text)| featurizer.features(prompt, text))
            .collect();
        let scores = self.scores(&feats)?;
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = k;
            }
        }
        Ok(Letter::from_index(best).expect("option index in range"))
    }
}

fn dot(weights: &[f64], feats: &SparseFeatures) -> Result<f64> {
    let mut acc = 0.0;
    for &(idx, val) in feats {
        let w = weights.get(idx).ok_or_else(|| {
            Error::invalid(format!(
                "feature index {idx} out of range for policy of dimension {}",
                weights.len()
            ))
        })?;
        acc += w * val;
    }
    Ok(acc)
}

/// Numerically stable log-softmax.
pub fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln();
    scores.iter().map(|&s| s - max - lse).collect()
}

/// KL divergence between two categorical distributions given as log
/// probabilities over the same support. Zero-probability entries of the
/// first distribution contribute nothing, so point masses are exact.
pub fn kl_divergence(logp: &[f64], logq: &[f64]) -> f64 {
    logp.iter()
        .zip(logq)
        .map(|(&lp, &lq)| {
            let p = lp.exp();
            if p == 0.0 {
                0.0
            } else {
                p * (lp - lq)
            }
        })
        .sum()
}

/// One sampled group for a single prompt: which option each member chose
/// and its group-normalized advantage.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardGroup {
    pub choices: Vec<usize>,
    pub advantages: Vec<f64>,
}

impl RewardGroup {
    /// Builds a group from per-member rewards, normalizing them to zero
    /// mean and unit (population) standard deviation within the group.
    pub fn from_rewards(choices: Vec<usize>, rewards: &[f64]) -> Result<Self> {
        if choices.is_empty() || choices.len() != rewards.len() {
            return Err(Error::invalid(format!(
                "group needs matching non-empty choices and rewards, got {} and {}",
                choices.len(),
                rewards.len()
            )));
        }
        Ok(RewardGroup {
            choices,
            advantages: advantages_from_rewards(rewards),
        })
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}

/// Group-relative advantages: `(r - mean) / std` with the population
/// standard deviation. A zero-variance group yields all-zero advantages.
pub fn advantages_from_rewards(rewards: &[f64]) -> Vec<f64> {
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|&r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return vec![0.0; rewards.len()];
    }
    rewards.iter().map(|&r| (r - mean) / std).collect()
}

/// Clipped-surrogate objective and its gradient with respect to `w_new`.
///
/// `option_features` holds one sparse vector per option. Each group member
/// contributes `min(r * adv, clip(r, 1 - eps, 1 + eps) * adv)` where `r` is
/// the probability ratio of its chosen option under `w_new` versus `w_old`;
/// the mean over members, minus `kl_coeff` times the KL divergence from the
/// `w_ref` policy, is the returned objective. Members whose clipped branch
/// is active and binding contribute zero gradient.
pub fn objective_from_features(
    w_new: &[f64],
    w_old: &[f64],
    w_ref: &[f64],
    option_features: &[SparseFeatures],
    group: &RewardGroup,
    config: &GrpoConfig,
) -> Result<(f64, Vec<f64>)> {
    config.validate()?;
    if w_old.len() != w_new.len() || w_ref.len() != w_new.len() {
        return Err(Error::invalid("policy weight vectors must share one dimension"));
    }
    if group.choices.iter().any(|&c| c >= option_features.len()) {
        return Err(Error::invalid("group choice index out of option range"));
    }

    let lp_new = Policy { weights: w_new.to_vec() }.logprobs(option_features)?;
    let lp_old = Policy { weights: w_old.to_vec() }.logprobs(option_features)?;
    let probs_new: Vec<f64> = lp_new.iter().map(|&lp| lp.exp()).collect();

    let n = group.len() as f64;
    let lo = 1.0 - config.clip_epsilon;
    let hi = 1.0 + config.clip_epsilon;

    // Per-option gradient coefficients for the surrogate term; the gradient
    // of log pi(option k) is phi_k minus the probability-weighted mean of
    // all option features, so coefficients can be pooled per option.
    let mut objective = 0.0;
    let mut coeff = vec![0.0; option_features.len()];
    for (&choice, &adv) in group.choices.iter().zip(&group.advantages) {
        let ratio = (lp_new[choice] - lp_old[choice]).exp();
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(lo, hi) * adv;
        if unclipped <= clipped {
            objective += unclipped / n;
            coeff[choice] += adv * ratio / n;
        } else {
            objective += clipped / n;
        }
    }

    let mut grad = vec![0.0; w_new.len()];
    let coeff_total: f64 = coeff.iter().sum();
    for (k, feats) in option_features.iter().enumerate() {
        let c = coeff[k] - coeff_total * probs_new[k];
        if c != 0.0 {
            for &(idx, val) in feats {
                grad[idx] += c * val;
            }
        }
    }

    if config.kl_coeff > 0.0 {
        let lp_ref = Policy { weights: w_ref.to_vec() }.logprobs(option_features)?;
        let kl = kl_divergence(&lp_new, &lp_ref);
        objective -= config.kl_coeff * kl;
        for (k, feats) in option_features.iter().enumerate() {
            let c = -config.kl_coeff * probs_new[k] * ((lp_new[k] - lp_ref[k]) - kl);
            if c != 0.0 {
                for &(idx, val) in feats {
                    grad[idx] += c * val;
                }
            }
        }
    }

    Ok((objective, grad))
}

/// One training item: per-option features and the correct option's index.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub option_features: Vec<SparseFeatures>,
    pub answer_index: usize,
}

impl TrainExample {
    pub fn new(option_features: Vec<SparseFeatures>, answer_index: usize) -> Result<Self> {
        if option_features.is_empty() {
            return Err(Error::invalid("training example needs at least one option"));
        }
        if answer_index >= option_features.len() {
            return Err(Error::invalid(format!(
                "answer index {answer_index} out of range for {} options",
                option_features.len()
            )));
        }
        Ok(TrainExample {
            option_features,
            answer_index,
        })
    }
}

/// Per-step training diagnostics (recorded after the weight update).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainStep {
    pub epoch: usize,
    pub step: usize,
    pub objective: f64,
    pub mean_reward: f64,
    pub kl_to_ref: f64,
}

/// CSV rendering of a training log.
pub fn training_log_csv(steps: &[TrainStep]) -> String {
    let mut out = String::from("epoch,step,objective,mean_reward,kl_to_ref\n");
    for s in steps {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.epoch, s.step, s.objective, s.mean_reward, s.kl_to_ref
        ));
    }
    out
}

fn sample_choice(rng: &mut ChaCha12Rng, logprobs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (k, &lp) in logprobs.iter().enumerate() {
        cum += lp.exp();
        if u < cum {
            return k;
        }
    }
    logprobs.len() - 1
}

/// Trains the policy in place and returns the per-step log.
///
/// The reference policy for the KL penalty is the state of `policy` at
/// entry. Each step snapshots the pre-update weights, samples a group of
/// answers from them, scores the group with exact-match rewards, and takes
/// one gradient ascent step on the clipped surrogate. Item order is
/// reshuffled every epoch; the whole run is deterministic in the seed.
pub fn train(
    policy: &mut Policy,
    examples: &[TrainExample],
    config: &GrpoConfig,
) -> Result<Vec<TrainStep>> {
    config.validate()?;
    let w_ref = policy.weights.clone();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut log = Vec::new();
    let mut step = 0;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(&mut rng);
        for &idx in &order {
            let example = &examples[idx];
            let w_old = policy.weights.clone();
            let lp_old = Policy { weights: w_old.clone() }.logprobs(&example.option_features)?;

            let choices: Vec<usize> = (0..config.group_size)
                .map(|_| sample_choice(&mut rng, &lp_old))
                .collect();
            let rewards: Vec<f64> = choices
                .iter()
                .map(|&c| if c == example.answer_index { 1.0 } else { 0.0 })
                .collect();
            let mean_reward = rewards.iter().sum::<f64>() / rewards.len() as f64;
            let group = RewardGroup::from_rewards(choices, &rewards)?;

            let (_, grad) = objective_from_features(
                &policy.weights,
                &w_old,
                &w_ref,
                &example.option_features,
                &group,
                config,
            )?;
            for (w, g) in policy.weights.iter_mut().zip(&grad) {
                *w += config.learning_rate * g;
            }

            let (objective, _) = objective_from_features(
                &policy.weights,
                &w_old,
                &w_ref,
                &example.option_features,
                &group,
                config,
            )?;
            let lp_new = policy.logprobs(&example.option_features)?;
            let lp_ref = Policy { weights: w_ref.clone() }.logprobs(&example.option_features)?;
            log.push(TrainStep {
                epoch,
                step,
                objective,
                mean_reward,
                kl_to_ref: kl_divergence(&lp_new, &lp_ref),
            });
            step += 1;
        }
    }
    Ok(log)
}

/// Serialized policy with enough metadata to rebuild its featurizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyCheckpoint {
    pub version: u32,
    pub hash_dim: usize,
    pub feature_dim: usize,
    pub weights: Vec<f64>,
    pub config: GrpoConfig,
}

impl PolicyCheckpoint {
    pub fn new(policy: &Policy, featurizer: &Featurizer, config: GrpoConfig) -> Self {
        PolicyCheckpoint {
            version: CHECKPOINT_VERSION,
            hash_dim: featurizer.hash_dim(),
            feature_dim: featurizer.feature_dim(),
            weights: policy.weights.clone(),
            config,
        }
    }

    /// Validates internal consistency and splits into usable parts.
    pub fn into_parts(self) -> Result<(Policy, Featurizer, GrpoConfig)> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let featurizer = Featurizer::new(self.hash_dim)?;
        if self.feature_dim != featurizer.feature_dim() {
            return Err(Error::invalid(format!(
                "checkpoint feature_dim {} does not match hash_dim {} plus {} engineered slots",
                self.feature_dim,
                self.hash_dim,
                ENGINEERED_FEATURES
            )));
        }
        if self.weights.len() != self.feature_dim {
            return Err(Error::invalid(format!(
                "checkpoint has {} weights but feature_dim {}",
                self.weights.len(),
                self.feature_dim
            )));
        }
        Ok((Policy { weights: self.weights }, featurizer, self.config))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))
    }
}
