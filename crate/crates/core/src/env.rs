//! Daily stock-trading environment.
//!
//! State is `[prices, holdings, balance]`. An action is a vector in
//! `[-1, 1]^D` that is scaled by `h_max` and truncated to whole shares. Sells
//! settle before buys, buys fill in ticker order until cash runs out, and the
//! reward is the change in portfolio value after prices advance one day.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("market data is empty")]
    EmptyData,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no market frame after day {0}")]
    EndOfData(usize),
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

/// One trading day of close prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketFrame {
    pub day_index: usize,
    pub date: NaiveDate,
    pub close_prices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub initial_balance: f64,
    /// Maximum shares traded per ticker per step.
    pub h_max: u32,
    /// Fraction of traded notional paid as cost.
    pub transaction_cost_rate: f64,
    pub n_tickers: usize,
}

impl EnvConfig {
    pub fn new(n_tickers: usize) -> Self {
        Self {
            initial_balance: 1e6,
            h_max: 100,
            transaction_cost_rate: 0.001,
            n_tickers,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.initial_balance > 0.0 && self.initial_balance.is_finite()) {
            return Err(EnvError::InvalidConfig("initial_balance must be positive".into()));
        }
        if self.h_max < 1 {
            return Err(EnvError::InvalidConfig("h_max must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.transaction_cost_rate) {
            return Err(EnvError::InvalidConfig(
                "transaction_cost_rate must lie in [0, 1)".into(),
            ));
        }
        if self.n_tickers == 0 {
            return Err(EnvError::InvalidConfig("n_tickers must be positive".into()));
        }
        Ok(())
    }
}

/// `day_index` is the cursor into the frame slice the episode runs over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioState {
    pub prices: Vec<f64>,
    pub holdings: Vec<u64>,
    pub balance: f64,
    pub day_index: usize,
}

impl PortfolioState {
    pub fn value(&self) -> f64 {
        portfolio_value(self)
    }
}

/// Whole-share deltas; negative sells, positive buys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeAction {
    pub shares_delta: Vec<i64>,
}

impl TradeAction {
    /// Clamps each component to `[-1, 1]`, scales by `h_max` and truncates
    /// toward zero.
    pub fn from_raw(raw: &[f64], h_max: u32) -> Self {
        let shares_delta = raw
            .iter()
            .map(|&a| {
                let a = if a.is_nan() { 0.0 } else { a.clamp(-1.0, 1.0) };
                (a * h_max as f64).trunc() as i64
            })
            .collect();
        Self { shares_delta }
    }
}

/// One executed fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub date: NaiveDate,
    pub ticker: usize,
    /// Signed executed shares.
    pub shares: i64,
    pub price: f64,
    pub cost: f64,
}

pub fn portfolio_value(state: &PortfolioState) -> f64 {
    state
        .prices
        .iter()
        .zip(&state.holdings)
        .map(|(p, &h)| p * h as f64)
        .sum::<f64>()
        + state.balance
}

fn check_frames(config: &EnvConfig, data: &[MarketFrame]) -> Result<(), EnvError> {
    if data.is_empty() {
        return Err(EnvError::EmptyData);
    }
    for f in data {
        if f.close_prices.len() != config.n_tickers {
            return Err(EnvError::DimensionMismatch {
                expected: config.n_tickers,
                found: f.close_prices.len(),
            });
        }
    }
    Ok(())
}

pub fn reset(config: &EnvConfig, data: &[MarketFrame]) -> Result<PortfolioState, EnvError> {
    config.validate()?;
    check_frames(config, data)?;
    Ok(PortfolioState {
        prices: data[0].close_prices.clone(),
        holdings: vec![0; config.n_tickers],
        balance: config.initial_balance,
        day_index: 0,
    })
}

/// Executes share deltas at the state's current prices, without the per-step
/// `h_max` limit. Sells first, then buys in ticker order, each clipped so that
/// holdings and balance stay non-negative.
pub fn execute_trades(
    state: &mut PortfolioState,
    deltas: &[i64],
    cost_rate: f64,
    date: NaiveDate,
    log: &mut Vec<TradeRecord>,
) {
    for (ticker, &delta) in deltas.iter().enumerate() {
        if delta >= 0 {
            continue;
        }
        let qty = (delta.unsigned_abs()).min(state.holdings[ticker]);
        if qty == 0 {
            continue;
        }
        let price = state.prices[ticker];
        let notional = price * qty as f64;
        let cost = notional * cost_rate;
        state.balance += notional - cost;
        state.holdings[ticker] -= qty;
        log.push(TradeRecord {
            date,
            ticker,
            shares: -(qty as i64),
            price,
            cost,
        });
    }
    for (ticker, &delta) in deltas.iter().enumerate() {
        if delta <= 0 {
            continue;
        }
        let price = state.prices[ticker];
        let unit = price * (1.0 + cost_rate);
        let affordable = (state.balance / unit).floor().max(0.0) as u64;
        let mut qty = (delta as u64).min(affordable);
        while qty > 0 && state.balance - price * qty as f64 * (1.0 + cost_rate) < 0.0 {
            qty -= 1;
        }
        if qty == 0 {
            continue;
        }
        let notional = price * qty as f64;
        let cost = notional * cost_rate;
        state.balance = (state.balance - notional - cost).max(0.0);
        state.holdings[ticker] += qty;
        log.push(TradeRecord {
            date,
            ticker,
            shares: qty as i64,
            price,
            cost,
        });
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: PortfolioState,
    pub reward: f64,
    pub trades: Vec<TradeRecord>,
}

pub fn step(
    config: &EnvConfig,
    state: &PortfolioState,
    raw_action: &[f64],
    data: &[MarketFrame],
) -> Result<Step, EnvError> {
    if raw_action.len() != config.n_tickers {
        return Err(EnvError::DimensionMismatch {
            expected: config.n_tickers,
            found: raw_action.len(),
        });
    }
    let next = data
        .get(state.day_index + 1)
        .ok_or(EnvError::EndOfData(state.day_index))?;
    if next.close_prices.len() != config.n_tickers {
        return Err(EnvError::DimensionMismatch {
            expected: config.n_tickers,
            found: next.close_prices.len(),
        });
    }
    let before = portfolio_value(state);
    let date = data[state.day_index].date;
    let action = TradeAction::from_raw(raw_action, config.h_max);
    let mut s = state.clone();
    let mut trades = Vec::new();
    execute_trades(&mut s, &action.shares_delta, config.transaction_cost_rate, date, &mut trades);
    s.prices.clone_from(&next.close_prices);
    s.day_index += 1;
    let reward = portfolio_value(&s) - before;
    Ok(Step {
        state: s,
        reward,
        trades,
    })
}

/// Anything that maps a portfolio state to a raw action in `[-1, 1]^D`.
pub trait Policy {
    fn action_dim(&self) -> usize;

    fn act(&self, state: &PortfolioState, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn action_dim(&self) -> usize {
        (**self).action_dim()
    }

    fn act(&self, state: &PortfolioState, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (**self).act(state, rng)
    }
}

/// Always holds.
#[derive(Debug, Clone, Copy)]
pub struct HoldPolicy(pub usize);

impl Policy for HoldPolicy {
    fn action_dim(&self) -> usize {
        self.0
    }

    fn act(&self, _state: &PortfolioState, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![0.0; self.0]
    }
}

/// Draws every action component uniformly from `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct UniformRandomPolicy(pub usize);

impl Policy for UniformRandomPolicy {
    fn action_dim(&self) -> usize {
        self.0
    }

    fn act(&self, _state: &PortfolioState, rng: &mut ChaCha8Rng) -> Vec<f64> {
        use rand::Rng;
        (0..self.0).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeLog {
    /// One entry per frame, starting with the initial portfolio value.
    pub account_values: Vec<f64>,
    pub trades: Vec<TradeRecord>,
    pub rewards: Vec<f64>,
}

impl EpisodeLog {
    pub fn total_return(&self) -> f64 {
        match (self.account_values.first(), self.account_values.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// Runs `policy` over every frame of `data` from a fresh portfolio.
pub fn run_episode<P: Policy + ?Sized>(
    policy: &P,
    config: &EnvConfig,
    data: &[MarketFrame],
    seed: u64,
) -> Result<EpisodeLog, EnvError> {
    let state = reset(config, data)?;
    run_from(policy, config, data, state, seed)
}

/// Continues an episode from an arbitrary state.
pub fn run_from<P: Policy + ?Sized>(
    policy: &P,
    config: &EnvConfig,
    data: &[MarketFrame],
    mut state: PortfolioState,
    seed: u64,
) -> Result<EpisodeLog, EnvError> {
    if policy.action_dim() != config.n_tickers {
        return Err(EnvError::DimensionMismatch {
            expected: config.n_tickers,
            found: policy.action_dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = EpisodeLog {
        account_values: vec![portfolio_value(&state)],
        ..Default::default()
    };
    while state.day_index + 1 < data.len() {
        let action = policy.act(&state, &mut rng);
        let out = step(config, &state, &action, data)?;
        log.rewards.push(out.reward);
        log.trades.extend(out.trades);
        state = out.state;
        log.account_values.push(portfolio_value(&state));
    }
    Ok(log)
}
