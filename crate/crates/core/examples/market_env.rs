//! Steps the trading environment by hand, then runs whole episodes with the
//! built-in hold and uniform-random policies.
//!
//! cargo run --example market_env

use chrono::NaiveDate;
use sentiment_ensemble::env::{
    portfolio_value, reset, run_episode, step, EnvConfig, HoldPolicy, MarketFrame, UniformRandomPolicy,
};

fn main() {
    let start = NaiveDate::from_ymd_opt(2017, 1, 2).unwrap();
    let data: Vec<MarketFrame> = (0..30)
        .map(|i| MarketFrame {
            day_index: i,
            date: start + chrono::Days::new(i as u64),
            close_prices: vec![100.0 + i as f64, 50.0 - 0.5 * i as f64],
        })
        .collect();
    let config = EnvConfig::new(2);

    let mut state = reset(&config, &data).unwrap();
    println!("start: balance {:.2}, value {:.2}", state.balance, portfolio_value(&state));
    for action in [[1.0, 0.0], [0.5, 0.25], [-0.3, -1.0]] {
        let out = step(&config, &state, &action, &data).unwrap();
        for t in &out.trades {
            println!("  {} ticker {} {:+} @ {:.2} cost {:.4}", t.date, t.ticker, t.shares, t.price, t.cost);
        }
        println!(
            "action {action:?}: holdings {:?}, balance {:.2}, reward {:+.2}",
            out.state.holdings, out.state.balance, out.reward
        );
        state = out.state;
    }

    let hold = run_episode(&HoldPolicy(2), &config, &data, 0).unwrap();
    println!("hold: return {:.2}", hold.total_return());
    for seed in 0..3 {
        let log = run_episode(&UniformRandomPolicy(2), &config, &data, seed).unwrap();
        println!("random seed {seed}: return {:+.2} over {} trades", log.total_return(), log.trades.len());
    }
}
