//! Sentiment-gated ensemble of actor-critic trading agents.

pub mod agents;
pub mod backtest;
pub mod data;
pub mod ensemble;
pub mod env;
pub mod lexicon;
pub mod metrics;
pub mod nn;
