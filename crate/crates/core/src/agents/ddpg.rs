use super::{AgentError, AgentPolicy, Transition};
use crate::nn::{optimizer_step, polyak_update, Adam, Gradients, Mlp};

/// Bellman backup `r + gamma * (1 - done) * q_next`.
pub fn ddpg_target(reward: f64, gamma: f64, done: bool, q_target_next: f64) -> f64 {
    let not_done = if done { 0.0 } else { 1.0 };
    reward + gamma * not_done * q_target_next
}

pub(crate) fn critic_input(state: &[f64], action: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(state.len() + action.len());
    x.extend_from_slice(state);
    x.extend_from_slice(action);
    x
}

fn q_value(critic: &Mlp, state: &[f64], action: &[f64]) -> Result<f64, AgentError> {
    Ok(critic.forward(&critic_input(state, action))?[0])
}

fn backups(batch: &[Transition], target_actor: &Mlp, target_critic: &Mlp, gamma: f64) -> Result<Vec<f64>, AgentError> {
    batch
        .iter()
        .map(|t| {
            let next_action = target_actor.forward(&t.next_state)?;
            let q_next = q_value(target_critic, &t.next_state, &next_action)?;
            Ok(ddpg_target(t.reward, gamma, t.done, q_next))
        })
        .collect()
}

/// Mean squared error between `Q(s, a)` and fixed regression targets, with
/// its gradient for the critic.
pub(crate) fn regression_gradient(batch: &[Transition], critic: &Mlp, targets: &[f64]) -> Result<(f64, Gradients), AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(critic);
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(targets) {
        let trace = critic.forward_trace(&critic_input(&t.state, &t.action))?;
        let err = trace.output()[0] - y;
        loss += err * err;
        critic.backward_into(&trace, &[2.0 * err / n], &mut grads)?;
    }
    Ok((loss / n, grads))
}

/// Mean squared Bellman error of the online critic against the target
/// networks' backup.
pub fn ddpg_critic_loss(
    batch: &[Transition],
    critic: &Mlp,
    target_actor: &Mlp,
    target_critic: &Mlp,
    gamma: f64,
) -> Result<f64, AgentError> {
    Ok(ddpg_critic_gradient(batch, critic, target_actor, target_critic, gamma)?.0)
}

/// Loss and its critic gradient; targets are treated as constants.
pub fn ddpg_critic_gradient(
    batch: &[Transition],
    critic: &Mlp,
    target_actor: &Mlp,
    target_critic: &Mlp,
    gamma: f64,
) -> Result<(f64, Gradients), AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let ys = backups(batch, target_actor, target_critic, gamma)?;
    regression_gradient(batch, critic, &ys)
}

/// Mean of `Q(s, mu(s))` over the batch states.
pub fn ddpg_actor_objective(batch: &[Transition], actor: &Mlp, critic: &Mlp) -> Result<f64, AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let mut total = 0.0;
    for t in batch {
        let a = actor.forward(&t.state)?;
        total += q_value(critic, &t.state, &a)?;
    }
    Ok(total / batch.len() as f64)
}

/// Objective and its gradient with respect to the actor only (ascent
/// direction); the critic is held fixed.
pub fn ddpg_actor_gradient(batch: &[Transition], actor: &Mlp, critic: &Mlp) -> Result<(f64, Gradients), AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let state_dim = actor.input_dim();
    let mut grads = Gradients::zeros_like(actor);
    let mut critic_scratch = Gradients::zeros_like(critic);
    let mut total = 0.0;
    for t in batch {
        let actor_trace = actor.forward_trace(&t.state)?;
        let q_trace = critic.forward_trace(&critic_input(&t.state, actor_trace.output()))?;
        total += q_trace.output()[0];
        let d_input = critic.backward_into(&q_trace, &[1.0 / n], &mut critic_scratch)?;
        actor.backward_into(&actor_trace, &d_input[state_dim..], &mut grads)?;
    }
    Ok((total / n, grads))
}

#[derive(Debug, Clone)]
pub(crate) struct DdpgOptimizers {
    actor: Adam,
    critic: Adam,
}

impl DdpgOptimizers {
    pub(crate) fn new(policy: &AgentPolicy) -> Self {
        Self {
            actor: Adam::for_mlp(&policy.actor),
            critic: Adam::for_mlp(&policy.critics[0]),
        }
    }
}

/// One critic step, one actor step, then soft target updates.
pub(crate) fn ddpg_update(policy: &mut AgentPolicy, opt: &mut DdpgOptimizers, batch: &[Transition]) -> Result<(), AgentError> {
    let h = policy.hyper.clone();
    let target_actor = policy.target_actor.as_ref().expect("ddpg keeps a target actor");
    let (_, critic_grads) =
        ddpg_critic_gradient(batch, &policy.critics[0], target_actor, &policy.target_critics[0], h.gamma)?;
    optimizer_step(&mut policy.critics[0], &critic_grads, &mut opt.critic, h.critic_lr);

    let (_, mut actor_grads) = ddpg_actor_gradient(batch, &policy.actor, &policy.critics[0])?;
    actor_grads.scale(-1.0);
    optimizer_step(&mut policy.actor, &actor_grads, &mut opt.actor, h.actor_lr);

    polyak_update(&mut policy.target_critics[0], &policy.critics[0], h.tau)?;
    polyak_update(policy.target_actor.as_mut().unwrap(), &policy.actor, h.tau)?;
    Ok(())
}
