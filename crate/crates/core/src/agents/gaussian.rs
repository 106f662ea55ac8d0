use std::f64::consts::PI;

/// Log density of a diagonal Gaussian at `action`.
pub fn diag_gaussian_log_prob(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((a, m), ls)| {
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

/// Gradients of the log density with respect to the mean and the log
/// standard deviations.
pub(crate) fn log_prob_grads(action: &[f64], mean: &[f64], log_std: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(mean.len());
    let mut d_log_std = Vec::with_capacity(mean.len());
    for ((a, m), ls) in action.iter().zip(mean).zip(log_std) {
        let var = (2.0 * ls).exp();
        let diff = a - m;
        d_mean.push(diff / var);
        d_log_std.push(diff * diff / var - 1.0);
    }
    (d_mean, d_log_std)
}

/// Generalized advantage estimation over one rollout.
///
/// `values[t]` is V(s_t) and `next_values[t]` is V(s_{t+1}); with
/// `lambda = 0` every advantage is the one-step TD error.
pub fn gae(rewards: &[f64], values: &[f64], next_values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * not_done * next_values[t] - values[t];
        running = delta + gamma * lambda * not_done * running;
        adv[t] = running;
    }
    adv
}
