use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::a2c::{a2c_update, OnPolicyOptimizers};
use super::ddpg::{ddpg_update, DdpgOptimizers};
use super::gaussian::{diag_gaussian_log_prob, gae};
use super::ppo::{ppo_update, PpoSample};
use super::td3::{td3_update, Td3Optimizers};
use super::{AgentError, AgentPolicy, Algorithm, FeatureScaler, Hyperparams, ReplayBuffer, Transition};
use crate::env::{reset, step, EnvConfig, MarketFrame, PortfolioState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedAgent {
    pub policy: AgentPolicy,
    /// Undiscounted currency return of every completed training episode.
    pub episode_returns: Vec<f64>,
}

enum Learner {
    Ddpg(DdpgOptimizers, ReplayBuffer),
    Td3(Td3Optimizers, ReplayBuffer, u64),
    OnPolicy(OnPolicyOptimizers, Vec<(Transition, f64)>),
}

/// Trains one agent on `data` for `hyper.total_timesteps` environment steps,
/// restarting from a fresh portfolio each time the window is exhausted.
/// Deterministic given `seed`.
pub fn train_agent(
    algorithm: Algorithm,
    env: &EnvConfig,
    data: &[MarketFrame],
    hyper: Hyperparams,
    seed: u64,
) -> Result<TrainedAgent, AgentError> {
    hyper.validate()?;
    env.validate()?;
    if data.len() < 2 {
        return Err(AgentError::InsufficientData {
            needed: 2,
            got: data.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scaler = FeatureScaler::new(env, &data[0]);
    let mut policy = AgentPolicy::new(algorithm, hyper.clone(), scaler, seed, &mut rng);
    let mut learner = match algorithm {
        Algorithm::Ddpg => Learner::Ddpg(DdpgOptimizers::new(&policy), ReplayBuffer::new(hyper.buffer_capacity)),
        Algorithm::Td3 => Learner::Td3(Td3Optimizers::new(&policy), ReplayBuffer::new(hyper.buffer_capacity), 0),
        Algorithm::Ppo | Algorithm::A2c => Learner::OnPolicy(OnPolicyOptimizers::new(&policy), Vec::new()),
    };

    let mut state = reset(env, data)?;
    let mut episode_return = 0.0;
    let mut episode_returns = Vec::new();
    for _ in 0..hyper.total_timesteps {
        let features = policy.scaler.features(&state);
        let (env_action, stored_action, log_prob) = choose_action(&policy, &features, &mut rng)?;
        let out = step(env, &state, &env_action, data)?;
        let done = out.state.day_index + 1 >= data.len();
        episode_return += out.reward;
        let transition = Transition {
            state: features,
            action: stored_action,
            reward: out.reward * hyper.reward_scale,
            next_state: policy.scaler.features(&out.state),
            done,
        };
        learn(&mut policy, &mut learner, transition, log_prob, &mut rng)?;
        state = if done {
            episode_returns.push(episode_return);
            episode_return = 0.0;
            fresh(env, data)?
        } else {
            out.state
        };
    }
    Ok(TrainedAgent {
        policy,
        episode_returns,
    })
}

fn fresh(env: &EnvConfig, data: &[MarketFrame]) -> Result<PortfolioState, AgentError> {
    Ok(reset(env, data)?)
}

/// Returns the action sent to the environment, the action stored for
/// learning (the raw Gaussian sample for PPO/A2C) and its log density.
fn choose_action(
    policy: &AgentPolicy,
    features: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<f64>, f64), AgentError> {
    if policy.algorithm.is_stochastic() {
        let mean = policy.actor.forward(features)?;
        let raw = policy.sample_raw(&mean, rng);
        let logp = diag_gaussian_log_prob(&raw, &mean, &policy.log_std);
        let clamped = raw.iter().map(|a| a.clamp(-1.0, 1.0)).collect();
        Ok((clamped, raw, logp))
    } else {
        let a = policy.act(features, true, rng)?;
        Ok((a.clone(), a, 0.0))
    }
}

fn learn(
    policy: &mut AgentPolicy,
    learner: &mut Learner,
    transition: Transition,
    log_prob: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(), AgentError> {
    let h = policy.hyper.clone();
    let ready = |buf: &ReplayBuffer| buf.len() >= h.learning_starts.max(h.batch_size);
    match learner {
        Learner::Ddpg(opt, buf) => {
            buf.push(transition);
            if ready(buf) {
                let batch = buf.sample(h.batch_size, rng);
                ddpg_update(policy, opt, &batch)?;
            }
        }
        Learner::Td3(opt, buf, counter) => {
            buf.push(transition);
            if ready(buf) {
                *counter += 1;
                let batch = buf.sample(h.batch_size, rng);
                td3_update(policy, opt, &batch, *counter, rng)?;
            }
        }
        Learner::OnPolicy(opt, rollout) => {
            rollout.push((transition, log_prob));
            if rollout.len() >= h.n_steps {
                let steps = std::mem::take(rollout);
                match policy.algorithm {
                    Algorithm::A2c => {
                        let batch: Vec<Transition> = steps.into_iter().map(|(t, _)| t).collect();
                        a2c_update(policy, opt, &batch)?;
                    }
                    _ => {
                        let samples = prepare_ppo(policy, steps, &h)?;
                        ppo_update(policy, opt, samples, rng)?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn prepare_ppo(policy: &AgentPolicy, steps: Vec<(Transition, f64)>, h: &Hyperparams) -> Result<Vec<PpoSample>, AgentError> {
    let critic = &policy.critics[0];
    let mut values = Vec::with_capacity(steps.len());
    let mut next_values = Vec::with_capacity(steps.len());
    for (t, _) in &steps {
        values.push(critic.forward(&t.state)?[0]);
        next_values.push(critic.forward(&t.next_state)?[0]);
    }
    let rewards: Vec<f64> = steps.iter().map(|(t, _)| t.reward).collect();
    let dones: Vec<bool> = steps.iter().map(|(t, _)| t.done).collect();
    let adv = gae(&rewards, &values, &next_values, &dones, h.gamma, h.gae_lambda);
    Ok(steps
        .into_iter()
        .zip(adv)
        .zip(values)
        .map(|(((transition, log_prob_old), advantage), v)| PpoSample {
            transition,
            log_prob_old,
            advantage,
            value_target: advantage + v,
        })
        .collect())
}
