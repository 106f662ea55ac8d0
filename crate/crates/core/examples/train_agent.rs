//! Trains each algorithm on a synthetic uptrend and compares its greedy
//! training-window return with a uniform-random policy's.
//!
//! cargo run --release --example train_agent -- [timesteps] [seed] [drift] [volatility]

use std::time::Instant;

use sentiment_ensemble::agents::{train_agent, Algorithm, Hyperparams};
use sentiment_ensemble::data::{generate_synthetic, SyntheticSpec};
use sentiment_ensemble::env::{run_episode, EnvConfig, UniformRandomPolicy};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let drift: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.001);
    let volatility: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.01);

    let spec = SyntheticSpec::single(3, 1500, drift, volatility, 1.0, seed);
    let (dataset, _) = generate_synthetic(&spec).expect("valid spec");
    let frames = dataset.frames();
    let env = EnvConfig::new(dataset.n_tickers());

    let random: f64 = (0..10)
        .map(|k| run_episode(&UniformRandomPolicy(3), &env, &frames, 1000 + k).unwrap().total_return())
        .sum::<f64>()
        / 10.0;
    println!("uniform random mean return: {random:.0}");

    for alg in Algorithm::ALL {
        let mut h = Hyperparams::defaults_for(alg);
        h.hidden = vec![32, 32];
        h.total_timesteps = if alg.is_stochastic() { 4 * steps } else { steps };
        let t = Instant::now();
        let trained = train_agent(alg, &env, &frames, h, seed).expect("training succeeds");
        let greedy = run_episode(&trained.policy, &env, &frames, seed).unwrap().total_return();
        println!(
            "{alg:>5}: greedy return {greedy:>10.0} ({}) in {:.1}s",
            if greedy > random { "beats random" } else { "below random" },
            t.elapsed().as_secs_f64()
        );
    }
}
