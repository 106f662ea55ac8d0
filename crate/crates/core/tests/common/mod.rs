//! Independent reference implementations and cheap stand-in agents shared by
//! the integration tests. Nothing here calls the library's own versions of
//! the quantities it checks.

#![allow(dead_code)]

use std::collections::HashMap;

use chrono::NaiveDate;
use rand_chacha::ChaCha8Rng;
use sentiment_ensemble::data::{generate_synthetic, Regime, SyntheticSpec};
use sentiment_ensemble::env::{MarketFrame, Policy, PortfolioState};
use sentiment_ensemble::lexicon::Headline;

/// Mean-of-means sentiment with its own tokenizer: lowercase, split on
/// anything that is not an ASCII letter. Valid for lexicons of single
/// alphabetic words.
pub fn naive_period_sentiment(
    headlines: &[Headline],
    start: NaiveDate,
    end: NaiveDate,
    valences: &HashMap<String, i32>,
) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for h in headlines {
        if h.date < start || h.date > end {
            continue;
        }
        let lower = h.text.to_lowercase();
        let tokens: Vec<&str> = lower.split(|c: char| !c.is_ascii_alphabetic()).filter(|t| !t.is_empty()).collect();
        if tokens.is_empty() {
            continue;
        }
        let mut sum = 0i64;
        for t in &tokens {
            sum += *valences.get(*t).unwrap_or(&0) as i64;
        }
        total += sum as f64 / tokens.len() as f64;
        count += 1;
    }
    (count > 0).then(|| total / count as f64)
}

/// The eleven report metrics, recomputed the slow way.
#[derive(Debug, Clone)]
pub struct OracleMetrics {
    pub values: [Option<f64>; 11],
}

fn o_mean(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    s / xs.len() as f64
}

fn o_std(xs: &[f64]) -> f64 {
    let m = o_mean(xs);
    let mut s = 0.0;
    for x in xs {
        s += (x - m).powi(2);
    }
    (s / (xs.len() as f64 - 1.0)).sqrt()
}

/// Linear interpolation between closest ranks on a sorted copy.
pub fn o_percentile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = q * (v.len() as f64 - 1.0);
    let below = rank.floor();
    let i = below as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[i] * (1.0 - (rank - below)) + v[i + 1] * (rank - below)
}

pub fn oracle_metrics(values: &[f64], risk_free: f64) -> OracleMetrics {
    let n = values.len() - 1;
    let r: Vec<f64> = (1..values.len()).map(|i| values[i] / values[i - 1] - 1.0).collect();
    let ann = 252f64;
    let cumulative = values[n] / values[0] - 1.0;
    let annual = (values[n] / values[0]).powf(ann / n as f64) - 1.0;

    // O(n^2) drawdown: every earlier peak against every later value.
    let mut mdd = 0.0f64;
    for i in 0..values.len() {
        for j in i..values.len() {
            mdd = mdd.min(values[j] / values[i] - 1.0);
        }
    }

    let sd = o_std(&r);
    let rf = risk_free / ann;
    let excess: Vec<f64> = r.iter().map(|x| x - rf).collect();
    let mean_excess = o_mean(&excess);
    let degenerate_sd = sd <= 1e-15 * (1.0 + o_mean(&r).abs());
    let sharpe = (!degenerate_sd).then(|| mean_excess / sd * ann.sqrt());
    let neg: Vec<f64> = excess.iter().filter(|e| **e < 0.0).copied().collect();
    let sortino = (!neg.is_empty()).then(|| {
        let dd = (neg.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt();
        mean_excess / dd * ann.sqrt()
    });
    let calmar = (mdd < 0.0).then(|| annual / -mdd);
    let gains: f64 = r.iter().map(|x| x.max(0.0)).sum();
    let losses: f64 = r.iter().map(|x| (-x).max(0.0)).sum();
    let omega = (losses > 0.0).then(|| gains / losses);
    let p5 = o_percentile(&r, 0.05);
    let p95 = o_percentile(&r, 0.95);
    let tail = (p5 != 0.0).then(|| p95.abs() / p5.abs());

    // R^2 as the squared Pearson correlation of (t, ln(V_t / V_0)), t = 1..n.
    let ys: Vec<f64> = (1..values.len()).map(|t| (values[t] / values[0]).ln()).collect();
    let xs: Vec<f64> = (1..values.len()).map(|t| t as f64).collect();
    let (mx, my) = (o_mean(&xs), o_mean(&ys));
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let stability = (vy > 1e-30 && n >= 2).then(|| (cov / (vx.sqrt() * vy.sqrt())).powi(2).min(1.0));

    OracleMetrics {
        values: [
            Some(cumulative),
            Some(annual),
            Some(mdd),
            Some(sd * ann.sqrt()),
            sharpe,
            sortino,
            calmar,
            omega,
            tail,
            stability,
            Some(p5),
        ],
    }
}

/// Relative agreement with an absolute floor for values at or near zero.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}

/// Constant target action.
#[derive(Debug, Clone)]
pub struct Constant(pub Vec<f64>);

impl Policy for Constant {
    fn action_dim(&self) -> usize {
        self.0.len()
    }
    fn act(&self, _: &PortfolioState, _: &mut ChaCha8Rng) -> Vec<f64> {
        self.0.clone()
    }
}

/// Buys on even days and sells on odd days.
#[derive(Debug, Clone)]
pub struct Alternating(pub usize);

impl Policy for Alternating {
    fn action_dim(&self) -> usize {
        self.0
    }
    fn act(&self, s: &PortfolioState, _: &mut ChaCha8Rng) -> Vec<f64> {
        let a = if s.day_index.is_multiple_of(2) { 0.8 } else { -0.6 };
        vec![a; self.0]
    }
}

/// Buys below `level` and sells above it.
#[derive(Debug, Clone)]
pub struct Threshold(pub f64);

impl Policy for Threshold {
    fn action_dim(&self) -> usize {
        1
    }
    fn act(&self, s: &PortfolioState, _: &mut ChaCha8Rng) -> Vec<f64> {
        vec![if s.prices[0] < self.0 { 1.0 } else { -1.0 }]
    }
}

/// Object-safe box so heterogeneous stubs fit one ensemble.
pub struct Stub(pub Box<dyn Policy + Send + Sync>);

impl Policy for Stub {
    fn action_dim(&self) -> usize {
        self.0.action_dim()
    }
    fn act(&self, s: &PortfolioState, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.0.act(s, rng)
    }
}

/// Single-ticker synthetic market with sentiment regimes; returns
/// (training frames, evaluation frames, headlines).
pub fn regime_market(
    train_days: usize,
    eval_days: usize,
    regimes: Vec<Regime>,
    seed: u64,
) -> (Vec<MarketFrame>, Vec<MarketFrame>, Vec<Headline>) {
    let spec = SyntheticSpec {
        regimes,
        ..SyntheticSpec::single(1, train_days + eval_days, 0.0, 0.0, 0.0, seed)
    };
    let (ds, hs) = generate_synthetic(&spec).expect("valid spec");
    let frames = ds.frames();
    let eval = frames[train_days..]
        .iter()
        .enumerate()
        .map(|(i, f)| MarketFrame {
            day_index: i,
            ..f.clone()
        })
        .collect();
    (frames[..train_days].to_vec(), eval, hs)
}

pub fn regime(start_day: usize, sentiment: f64) -> Regime {
    Regime {
        start_day,
        drift: 0.0003,
        volatility: 0.012,
        sentiment,
    }
}
