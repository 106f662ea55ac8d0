//! Clipped-surrogate policy optimization. No KL penalty term.

use rand::seq::SliceRandom;
use rand::Rng;

use super::a2c::{normalize, value_regression, OnPolicyOptimizers, PolicyGradient};
use super::gaussian::{diag_gaussian_log_prob, log_prob_grads};
use super::{AgentError, AgentPolicy, Transition};
use crate::nn::{optimizer_step, Mlp};

/// `pi_new(a|s) / pi_old(a|s)` from log densities.
pub fn probability_ratio(logp_new: f64, logp_old: f64) -> f64 {
    (logp_new - logp_old).exp()
}

/// `min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)`.
pub fn ppo_surrogate(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    unclipped.min(clipped)
}

/// d surrogate / d log pi_new. Zero whenever the clipped branch is selected.
fn surrogate_slope(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    if unclipped <= clipped {
        unclipped
    } else {
        0.0
    }
}

/// A rollout step prepared for the clipped update.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PpoSample {
    pub transition: Transition,
    pub log_prob_old: f64,
    pub advantage: f64,
    pub value_target: f64,
}

/// Mean clipped surrogate over a set of samples.
pub fn ppo_objective(
    states: &[Vec<f64>],
    actions: &[Vec<f64>],
    log_probs_old: &[f64],
    advantages: &[f64],
    actor: &Mlp,
    log_std: &[f64],
    epsilon: f64,
) -> Result<f64, AgentError> {
    if states.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let mut total = 0.0;
    for i in 0..states.len() {
        let mean = actor.forward(&states[i])?;
        let r = probability_ratio(diag_gaussian_log_prob(&actions[i], &mean, log_std), log_probs_old[i]);
        total += ppo_surrogate(r, advantages[i], epsilon);
    }
    Ok(total / states.len() as f64)
}

fn surrogate_gradient(samples: &[&PpoSample], actor: &Mlp, log_std: &[f64], epsilon: f64) -> Result<PolicyGradient, AgentError> {
    let n = samples.len() as f64;
    let mut g = PolicyGradient::zeros(actor, log_std.len());
    for s in samples {
        let trace = actor.forward_trace(&s.transition.state)?;
        let logp = diag_gaussian_log_prob(&s.transition.action, trace.output(), log_std);
        let slope = surrogate_slope(probability_ratio(logp, s.log_prob_old), s.advantage, epsilon);
        if slope == 0.0 {
            continue;
        }
        let (d_mean, d_ls) = log_prob_grads(&s.transition.action, trace.output(), log_std);
        let upstream: Vec<f64> = d_mean.iter().map(|d| d * slope / n).collect();
        actor.backward_into(&trace, &upstream, &mut g.actor)?;
        for (gl, d) in g.log_std.iter_mut().zip(d_ls) {
            *gl += d * slope / n;
        }
    }
    Ok(g)
}

/// Several epochs of minibatch ascent on the clipped surrogate plus value
/// regression toward the GAE returns.
pub(crate) fn ppo_update<R: Rng + ?Sized>(
    policy: &mut AgentPolicy,
    opt: &mut OnPolicyOptimizers,
    mut samples: Vec<PpoSample>,
    rng: &mut R,
) -> Result<(), AgentError> {
    if samples.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let h = policy.hyper.clone();
    if h.normalize_advantage {
        let mut adv: Vec<f64> = samples.iter().map(|s| s.advantage).collect();
        normalize(&mut adv);
        for (s, a) in samples.iter_mut().zip(adv) {
            s.advantage = a;
        }
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..h.n_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(h.minibatch_size) {
            let mb: Vec<&PpoSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let g = surrogate_gradient(&mb, &policy.actor, &policy.log_std, h.clip_epsilon)?;
            opt.ascend(policy, g, h.actor_lr);
            let ts: Vec<Transition> = mb.iter().map(|s| s.transition.clone()).collect();
            let ys: Vec<f64> = mb.iter().map(|s| s.value_target).collect();
            let (_, vg) = value_regression(&ts, &policy.critics[0], &ys)?;
            optimizer_step(&mut policy.critics[0], &vg, &mut opt.critic, h.critic_lr);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn surrogate_examples() {
        assert_eq!(ppo_surrogate(1.0, 0.37, 0.2), 0.37);
        assert!((ppo_surrogate(2.0, 1.0, 0.2) - 1.2).abs() < 1e-15);
        assert!((ppo_surrogate(0.5, -1.0, 0.2) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(probability_ratio(-1.3, -1.3), 1.0);
        assert!((probability_ratio(2f64.ln(), 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_matches_density_ratio() {
        let a = [0.3, -0.2];
        let (m_old, m_new) = ([0.1, 0.0], [0.25, -0.1]);
        let ls = [-0.6, -0.9];
        let density = |m: &[f64; 2]| -> f64 {
            (0..2)
                .map(|i| {
                    let s = f64::exp(ls[i]);
                    (-(a[i] - m[i]).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
                })
                .product()
        };
        let r = probability_ratio(
            diag_gaussian_log_prob(&a, &m_new, &ls),
            diag_gaussian_log_prob(&a, &m_old, &ls),
        );
        assert!((r - density(&m_new) / density(&m_old)).abs() < 1e-12);
    }

    #[test]
    fn surrogate_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let actor = Mlp::new(&[3, 6, 2], Activation::Tanh, Activation::Tanh, &mut rng);
        let log_std = vec![-0.5, -0.8];
        let mut samples = Vec::new();
        for i in 0..4 {
            let state: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let action: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean = actor.forward(&state).unwrap();
            // Old log-probs offset so some ratios sit inside and some outside the clip range.
            let offset = [0.0, 0.05, -0.6, 0.7][i];
            samples.push(PpoSample {
                log_prob_old: diag_gaussian_log_prob(&action, &mean, &log_std) + offset,
                transition: Transition {
                    state,
                    action,
                    reward: 0.0,
                    next_state: vec![0.0; 3],
                    done: false,
                },
                advantage: [1.0, -0.5, 0.8, -1.2][i],
                value_target: 0.0,
            });
        }
        let refs: Vec<&PpoSample> = samples.iter().collect();
        let g = surrogate_gradient(&refs, &actor, &log_std, 0.2).unwrap();
        let states: Vec<Vec<f64>> = samples.iter().map(|s| s.transition.state.clone()).collect();
        let actions: Vec<Vec<f64>> = samples.iter().map(|s| s.transition.action.clone()).collect();
        let old: Vec<f64> = samples.iter().map(|s| s.log_prob_old).collect();
        let adv: Vec<f64> = samples.iter().map(|s| s.advantage).collect();
        let obj = |a: &Mlp, ls: &[f64]| ppo_objective(&states, &actions, &old, &adv, a, ls, 0.2).unwrap();
        let h = 1e-6;
        for li in 0..actor.layers.len() {
            for wi in 0..actor.layers[li].bias.len() {
                let mut p = actor.clone();
                p.layers[li].bias[wi] += h;
                let mut m = actor.clone();
                m.layers[li].bias[wi] -= h;
                let fd = (obj(&p, &log_std) - obj(&m, &log_std)) / (2.0 * h);
                assert!((fd - g.actor.layers[li].1[wi]).abs() < 1e-6, "{fd} vs {}", g.actor.layers[li].1[wi]);
            }
        }
    }
}
