//! Twin critics, target policy smoothing and delayed actor updates.

use rand::Rng;
use rand_distr::StandardNormal;

use super::ddpg::{critic_input, ddpg_actor_gradient, ddpg_target, regression_gradient};
use super::{AgentError, AgentPolicy, Transition};
use crate::nn::{optimizer_step, polyak_update, Adam};

/// Backup using the smaller of the two target critics.
pub fn td3_backup(reward: f64, gamma: f64, done: bool, q1_next: f64, q2_next: f64) -> f64 {
    ddpg_target(reward, gamma, done, q1_next.min(q2_next))
}

#[derive(Debug, Clone)]
pub struct Td3Optimizers {
    actor: Adam,
    critics: [Adam; 2],
}

impl Td3Optimizers {
    pub fn new(policy: &AgentPolicy) -> Self {
        Self {
            actor: Adam::for_mlp(&policy.actor),
            critics: [Adam::for_mlp(&policy.critics[0]), Adam::for_mlp(&policy.critics[1])],
        }
    }
}

/// Smoothed target action `clamp(mu'(s') + clip(noise), -1, 1)`.
fn target_action<R: Rng + ?Sized>(policy: &AgentPolicy, next_state: &[f64], rng: &mut R) -> Result<Vec<f64>, AgentError> {
    let h = &policy.hyper;
    let mu = policy.target_actor.as_ref().expect("td3 keeps a target actor").forward(next_state)?;
    Ok(mu
        .into_iter()
        .map(|m| {
            let noise = if h.target_noise > 0.0 {
                (h.target_noise * rng.sample::<f64, _>(StandardNormal)).clamp(-h.target_noise_clip, h.target_noise_clip)
            } else {
                0.0
            };
            (m + noise).clamp(-1.0, 1.0)
        })
        .collect())
}

/// Regression targets for both critics.
pub(crate) fn td3_targets<R: Rng + ?Sized>(policy: &AgentPolicy, batch: &[Transition], rng: &mut R) -> Result<Vec<f64>, AgentError> {
    batch
        .iter()
        .map(|t| {
            let a = target_action(policy, &t.next_state, rng)?;
            let x = critic_input(&t.next_state, &a);
            let q1 = policy.target_critics[0].forward(&x)?[0];
            let q2 = policy.target_critics[1].forward(&x)?[0];
            Ok(td3_backup(t.reward, policy.hyper.gamma, t.done, q1, q2))
        })
        .collect()
}

/// Trains both critics; on every `policy_delay`-th call (counted by
/// `step_counter`) also steps the actor and soft-updates all targets.
pub fn td3_update<R: Rng + ?Sized>(
    policy: &mut AgentPolicy,
    opt: &mut Td3Optimizers,
    batch: &[Transition],
    step_counter: u64,
    rng: &mut R,
) -> Result<(), AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let h = policy.hyper.clone();
    let ys = td3_targets(policy, batch, rng)?;
    for k in 0..2 {
        let (_, g) = regression_gradient(batch, &policy.critics[k], &ys)?;
        optimizer_step(&mut policy.critics[k], &g, &mut opt.critics[k], h.critic_lr);
    }
    if step_counter.is_multiple_of(h.policy_delay) {
        let (_, mut g) = ddpg_actor_gradient(batch, &policy.actor, &policy.critics[0])?;
        g.scale(-1.0);
        optimizer_step(&mut policy.actor, &g, &mut opt.actor, h.actor_lr);
        for k in 0..2 {
            polyak_update(&mut policy.target_critics[k], &policy.critics[k], h.tau)?;
        }
        polyak_update(policy.target_actor.as_mut().unwrap(), &policy.actor, h.tau)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{Algorithm, FeatureScaler, Hyperparams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn policy(seed: u64) -> AgentPolicy {
        let scaler = FeatureScaler {
            initial_balance: 1.0,
            reference_prices: vec![1.0, 1.0],
            h_max: 1.0,
        };
        let mut hyper = Hyperparams::defaults_for(Algorithm::Td3);
        hyper.hidden = vec![8];
        AgentPolicy::new(Algorithm::Td3, hyper, scaler, seed, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn batch(rng: &mut ChaCha8Rng) -> Vec<Transition> {
        (0..6)
            .map(|_| Transition {
                state: (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
                reward: rng.random_range(-1.0..1.0),
                next_state: (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
                done: false,
            })
            .collect()
    }

    #[test]
    fn backup_takes_minimum() {
        assert_eq!(td3_backup(0.0, 1.0, false, 2.0, 3.0), 2.0);
        assert_eq!(td3_backup(0.0, 1.0, false, 3.0, 2.0), 2.0);
        assert_eq!(td3_backup(1.0, 0.5, true, 3.0, 2.0), 1.0);
    }

    #[test]
    fn actor_only_moves_on_delayed_steps() {
        let mut p = policy(1);
        let mut opt = Td3Optimizers::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = batch(&mut rng);
        let actor0 = p.actor.clone();
        let critic0 = p.critics[0].clone();
        td3_update(&mut p, &mut opt, &b, 1, &mut rng).unwrap();
        assert_eq!(p.actor, actor0);
        assert_ne!(p.critics[0], critic0);
        td3_update(&mut p, &mut opt, &b, 2, &mut rng).unwrap();
        assert_ne!(p.actor, actor0);
    }

    #[test]
    fn identical_twins_without_noise_reduce_to_ddpg_backup() {
        let mut p = policy(3);
        p.hyper.target_noise = 0.0;
        p.target_critics[1] = p.target_critics[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = batch(&mut rng);
        let ys = td3_targets(&p, &b, &mut rng).unwrap();
        let ta = p.target_actor.as_ref().unwrap();
        for (t, y) in b.iter().zip(ys) {
            let a = ta.forward(&t.next_state).unwrap();
            let q = p.target_critics[0].forward(&critic_input(&t.next_state, &a)).unwrap()[0];
            assert_eq!(y, ddpg_target(t.reward, p.hyper.gamma, t.done, q));
        }
    }

    #[test]
    fn empty_batch_rejected() {
        let mut p = policy(1);
        let mut opt = Td3Optimizers::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(td3_update(&mut p, &mut opt, &[], 0, &mut rng), Err(AgentError::EmptyBatch));
    }
}
