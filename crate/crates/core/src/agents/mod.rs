//! Actor-critic agents: DDPG, TD3, PPO and A2C behind one policy type.

mod a2c;
mod ddpg;
mod gaussian;
mod ppo;
mod replay;
mod td3;
mod train;

pub use a2c::{a2c_advantage, a2c_objective, a2c_policy_gradient, a2c_value_loss, PolicyGradient};
pub use ddpg::{ddpg_actor_gradient, ddpg_actor_objective, ddpg_critic_gradient, ddpg_critic_loss, ddpg_target};
pub use gaussian::{diag_gaussian_log_prob, gae};
pub use ppo::{ppo_objective, ppo_surrogate, probability_ratio};
pub use replay::{ReplayBuffer, Transition};
pub use td3::{td3_backup, td3_update, Td3Optimizers};
pub use train::{train_agent, TrainedAgent};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvConfig, EnvError, MarketFrame, Policy, PortfolioState};
use crate::nn::{Activation, Mlp, NnError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("not enough data: need at least {needed} frames, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ddpg,
    Ppo,
    A2c,
    Td3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Ddpg, Algorithm::Ppo, Algorithm::A2c, Algorithm::Td3];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ddpg => "ddpg",
            Algorithm::Ppo => "ppo",
            Algorithm::A2c => "a2c",
            Algorithm::Td3 => "td3",
        }
    }

    /// PPO and A2C act through a Gaussian; DDPG and TD3 are deterministic.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Algorithm::Ppo | Algorithm::A2c)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ddpg" => Ok(Algorithm::Ddpg),
            "ppo" => Ok(Algorithm::Ppo),
            "a2c" => Ok(Algorithm::A2c),
            "td3" => Ok(Algorithm::Td3),
            other => Err(AgentError::UnknownAlgorithm(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Steps collected with exploration noise before off-policy updates begin.
    pub learning_starts: usize,
    pub exploration_noise: f64,
    pub policy_delay: u64,
    pub target_noise: f64,
    pub target_noise_clip: f64,
    pub clip_epsilon: f64,
    pub n_epochs: usize,
    pub minibatch_size: usize,
    /// Rollout length between on-policy updates.
    pub n_steps: usize,
    /// 0 gives the one-step TD advantage.
    pub gae_lambda: f64,
    pub normalize_advantage: bool,
    pub log_std_init: f64,
    pub hidden: Vec<usize>,
    /// Multiplies raw currency rewards before they reach the learner.
    pub reward_scale: f64,
    pub total_timesteps: usize,
}

impl Hyperparams {
    pub fn defaults_for(algorithm: Algorithm) -> Self {
        let base = Self {
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            batch_size: 64,
            buffer_capacity: 100_000,
            learning_starts: 100,
            exploration_noise: 0.1,
            policy_delay: 2,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            clip_epsilon: 0.2,
            n_epochs: 10,
            minibatch_size: 64,
            n_steps: 256,
            gae_lambda: 0.95,
            normalize_advantage: true,
            log_std_init: 0.5f64.ln(),
            hidden: vec![64, 64],
            reward_scale: 1e-4,
            total_timesteps: 10_000,
        };
        match algorithm {
            Algorithm::Ddpg | Algorithm::Td3 => base,
            Algorithm::Ppo => Self {
                actor_lr: 3e-4,
                critic_lr: 3e-4,
                ..base
            },
            Algorithm::A2c => Self {
                actor_lr: 3e-4,
                critic_lr: 3e-4,
                n_steps: 16,
                gae_lambda: 0.0,
                normalize_advantage: false,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidHyperparameters(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad("clip_epsilon must lie in (0, 1)");
        }
        if self.actor_lr < 0.0 || self.critic_lr < 0.0 {
            return bad("learning rates must be non-negative");
        }
        if self.batch_size == 0 || self.minibatch_size == 0 || self.n_steps == 0 || self.buffer_capacity == 0 {
            return bad("batch sizes, rollout length and buffer capacity must be positive");
        }
        if self.policy_delay == 0 {
            return bad("policy_delay must be positive");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        Ok(())
    }
}

/// Maps a portfolio state to `[balance, prices, holdings]` scaled to O(1):
/// balance by the initial balance, prices by reference prices, holdings by
/// `h_max`. Dimension `2D + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub initial_balance: f64,
    pub reference_prices: Vec<f64>,
    pub h_max: f64,
}

impl FeatureScaler {
    pub fn new(config: &EnvConfig, first_frame: &MarketFrame) -> Self {
        Self {
            initial_balance: config.initial_balance,
            reference_prices: first_frame.close_prices.clone(),
            h_max: config.h_max as f64,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.reference_prices.len() + 1
    }

    pub fn features(&self, state: &PortfolioState) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.dim());
        f.push(state.balance / self.initial_balance);
        f.extend(state.prices.iter().zip(&self.reference_prices).map(|(p, r)| p / r));
        f.extend(state.holdings.iter().map(|&h| h as f64 / self.h_max));
        f
    }
}

/// A parameterized agent of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPolicy {
    pub algorithm: Algorithm,
    pub hyper: Hyperparams,
    pub seed: u64,
    pub scaler: FeatureScaler,
    pub actor: Mlp,
    /// State-independent log standard deviations; empty for DDPG/TD3.
    pub log_std: Vec<f64>,
    /// Q critics for DDPG (one) and TD3 (two); a state-value network for PPO/A2C.
    pub critics: Vec<Mlp>,
    pub target_actor: Option<Mlp>,
    pub target_critics: Vec<Mlp>,
}

impl AgentPolicy {
    pub fn new<R: Rng + ?Sized>(
        algorithm: Algorithm,
        hyper: Hyperparams,
        scaler: FeatureScaler,
        seed: u64,
        rng: &mut R,
    ) -> Self {
        let state_dim = scaler.dim();
        let action_dim = scaler.reference_prices.len();
        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend(&hyper.hidden);
            s.push(output);
            s
        };
        let actor = Mlp::new(&sizes(state_dim, action_dim), Activation::Tanh, Activation::Tanh, rng);
        let (log_std, critics, target_actor, target_critics) = match algorithm {
            Algorithm::Ddpg | Algorithm::Td3 => {
                let n = if algorithm == Algorithm::Td3 { 2 } else { 1 };
                let critics: Vec<Mlp> = (0..n)
                    .map(|_| {
                        Mlp::new(
                            &sizes(state_dim + action_dim, 1),
                            Activation::Tanh,
                            Activation::Identity,
                            rng,
                        )
                    })
                    .collect();
                (Vec::new(), critics.clone(), Some(actor.clone()), critics)
            }
            Algorithm::Ppo | Algorithm::A2c => {
                let v = Mlp::new(&sizes(state_dim, 1), Activation::Tanh, Activation::Identity, rng);
                (vec![hyper.log_std_init; action_dim], vec![v], None, Vec::new())
            }
        };
        Self {
            algorithm,
            hyper,
            seed,
            scaler,
            actor,
            log_std,
            critics,
            target_actor,
            target_critics,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    fn check_features(&self, features: &[f64]) -> Result<(), AgentError> {
        if features.len() != self.state_dim() {
            return Err(AgentError::Nn(NnError::DimensionMismatch {
                expected: self.state_dim(),
                found: features.len(),
            }));
        }
        Ok(())
    }

    /// Deterministic actor output, or a noisy/sampled action when exploring.
    /// Always clamped to `[-1, 1]`.
    pub fn act(&self, features: &[f64], explore: bool, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, AgentError> {
        self.check_features(features)?;
        let mean = self.actor.forward(features)?;
        let raw = if !explore {
            mean
        } else if self.algorithm.is_stochastic() {
            self.sample_raw(&mean, rng)
        } else {
            mean.iter()
                .map(|m| m + self.hyper.exploration_noise * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        Ok(raw.into_iter().map(|a| a.clamp(-1.0, 1.0)).collect())
    }

    /// Unclamped Gaussian draw around `mean`.
    pub(crate) fn sample_raw(&self, mean: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        mean.iter()
            .zip(&self.log_std)
            .map(|(m, ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite()
            && self.log_std.iter().all(|v| v.is_finite())
            && self.critics.iter().all(Mlp::is_finite)
            && self.target_actor.as_ref().is_none_or(Mlp::is_finite)
            && self.target_critics.iter().all(Mlp::is_finite)
    }

    /// Versioned JSON checkpoint carrying the algorithm, hyperparameters,
    /// seed and every network.
    pub fn to_checkpoint(&self, training_window: Option<(chrono::NaiveDate, chrono::NaiveDate)>) -> String {
        serde_json::to_string_pretty(&PolicyCheckpoint {
            version: crate::nn::CHECKPOINT_VERSION,
            training_window,
            policy: self.clone(),
        })
        .expect("policy serializes")
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, AgentError> {
        let ck: PolicyCheckpoint =
            serde_json::from_str(text).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        if ck.version != crate::nn::CHECKPOINT_VERSION {
            return Err(AgentError::Nn(NnError::UnsupportedVersion(ck.version)));
        }
        Ok(ck.policy)
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyCheckpoint {
    version: u32,
    training_window: Option<(chrono::NaiveDate, chrono::NaiveDate)>,
    policy: AgentPolicy,
}

/// Evaluation uses the deterministic action.
impl Policy for AgentPolicy {
    fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    fn act(&self, state: &PortfolioState, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let f = self.scaler.features(state);
        AgentPolicy::act(self, &f, false, rng).expect("feature dimension fixed by scaler")
    }
}

/// SplitMix64 step; derives independent per-agent seeds from a run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
