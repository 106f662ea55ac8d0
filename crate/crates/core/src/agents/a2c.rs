use super::ddpg::regression_gradient;
use super::gaussian::{diag_gaussian_log_prob, log_prob_grads};
use super::{AgentError, AgentPolicy, Transition};
use crate::nn::{optimizer_step, Adam, Gradients, Mlp};

/// One-step advantage `r + gamma * (1 - done) * V(s') - V(s)`.
pub fn a2c_advantage(reward: f64, gamma: f64, v_next: f64, v_now: f64, done: bool) -> f64 {
    let not_done = if done { 0.0 } else { 1.0 };
    reward + gamma * not_done * v_next - v_now
}

/// Gradient of a policy objective with respect to the actor and the
/// log standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGradient {
    pub actor: Gradients,
    pub log_std: Vec<f64>,
}

impl PolicyGradient {
    pub fn zeros(actor: &Mlp, action_dim: usize) -> Self {
        Self {
            actor: Gradients::zeros_like(actor),
            log_std: vec![0.0; action_dim],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.actor.is_zero() && self.log_std.iter().all(|g| *g == 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.actor.iter().chain(self.log_std.iter().copied())
    }
}

/// Mean of `log pi(a|s) * A` over the batch; `action` holds the raw
/// (pre-clamp) Gaussian sample.
pub fn a2c_objective(batch: &[Transition], advantages: &[f64], actor: &Mlp, log_std: &[f64]) -> Result<f64, AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let mut total = 0.0;
    for (t, a) in batch.iter().zip(advantages) {
        let mean = actor.forward(&t.state)?;
        total += diag_gaussian_log_prob(&t.action, &mean, log_std) * a;
    }
    Ok(total / batch.len() as f64)
}

/// Ascent gradient of [`a2c_objective`]; advantages are constants.
pub fn a2c_policy_gradient(
    batch: &[Transition],
    advantages: &[f64],
    actor: &Mlp,
    log_std: &[f64],
) -> Result<PolicyGradient, AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut g = PolicyGradient::zeros(actor, log_std.len());
    for (t, &adv) in batch.iter().zip(advantages) {
        let trace = actor.forward_trace(&t.state)?;
        let (d_mean, d_ls) = log_prob_grads(&t.action, trace.output(), log_std);
        let upstream: Vec<f64> = d_mean.iter().map(|d| d * adv / n).collect();
        actor.backward_into(&trace, &upstream, &mut g.actor)?;
        for (gl, d) in g.log_std.iter_mut().zip(d_ls) {
            *gl += d * adv / n;
        }
    }
    Ok(g)
}

/// One-step advantages under the current value network.
pub(crate) fn one_step_advantages(batch: &[Transition], critic: &Mlp, gamma: f64) -> Result<Vec<f64>, AgentError> {
    batch
        .iter()
        .map(|t| {
            let v_now = critic.forward(&t.state)?[0];
            let v_next = critic.forward(&t.next_state)?[0];
            Ok(a2c_advantage(t.reward, gamma, v_next, v_now, t.done))
        })
        .collect()
}

/// Squared one-step TD error of the value network, bootstrapped target held
/// fixed.
pub fn a2c_value_loss(batch: &[Transition], critic: &Mlp, gamma: f64) -> Result<f64, AgentError> {
    Ok(value_gradient(batch, critic, gamma)?.0)
}

fn value_gradient(batch: &[Transition], critic: &Mlp, gamma: f64) -> Result<(f64, Gradients), AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(critic);
    let mut loss = 0.0;
    for t in batch {
        let v_next = critic.forward(&t.next_state)?[0];
        let y = a2c_advantage(t.reward, gamma, v_next, 0.0, t.done);
        let trace = critic.forward_trace(&t.state)?;
        let err = trace.output()[0] - y;
        loss += err * err;
        critic.backward_into(&trace, &[2.0 * err / n], &mut grads)?;
    }
    Ok((loss / n, grads))
}

/// Adam state shared by the on-policy learners.
#[derive(Debug, Clone)]
pub(crate) struct OnPolicyOptimizers {
    pub(crate) actor: Adam,
    pub(crate) log_std: Adam,
    pub(crate) critic: Adam,
}

impl OnPolicyOptimizers {
    pub(crate) fn new(policy: &AgentPolicy) -> Self {
        Self {
            actor: Adam::for_mlp(&policy.actor),
            log_std: Adam::new(&[policy.log_std.len()]),
            critic: Adam::for_mlp(&policy.critics[0]),
        }
    }

    /// Descends on the negated policy objective.
    pub(crate) fn ascend(&mut self, policy: &mut AgentPolicy, mut g: PolicyGradient, lr: f64) {
        g.actor.scale(-1.0);
        optimizer_step(&mut policy.actor, &g.actor, &mut self.actor, lr);
        let neg: Vec<f64> = g.log_std.iter().map(|x| -x).collect();
        self.log_std.update(vec![policy.log_std.as_mut_slice()], vec![neg.as_slice()], lr);
    }
}

/// Policy step on one-step advantages followed by a value step.
pub(crate) fn a2c_update(policy: &mut AgentPolicy, opt: &mut OnPolicyOptimizers, batch: &[Transition]) -> Result<(), AgentError> {
    let h = policy.hyper.clone();
    let mut adv = one_step_advantages(batch, &policy.critics[0], h.gamma)?;
    if h.normalize_advantage {
        normalize(&mut adv);
    }
    let g = a2c_policy_gradient(batch, &adv, &policy.actor, &policy.log_std)?;
    opt.ascend(policy, g, h.actor_lr);
    let (_, vg) = value_gradient(batch, &policy.critics[0], h.gamma)?;
    optimizer_step(&mut policy.critics[0], &vg, &mut opt.critic, h.critic_lr);
    Ok(())
}

pub(crate) fn normalize(xs: &mut [f64]) {
    if xs.len() < 2 {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    for x in xs.iter_mut() {
        *x = (*x - mean) / (sd + 1e-8);
    }
}

/// Regression of a value network toward fixed targets, shared with PPO.
pub(crate) fn value_regression(
    states: &[Transition],
    critic: &Mlp,
    targets: &[f64],
) -> Result<(f64, Gradients), AgentError> {
    // Critic input is the state only; reuse the Q-regression helper with an
    // empty action.
    let stripped: Vec<Transition> = states
        .iter()
        .map(|t| Transition {
            action: Vec::new(),
            ..t.clone()
        })
        .collect();
    regression_gradient(&stripped, critic, targets)
}
