//! Agent selection by blended validation score and the sentiment-triggered
//! switching loop.
//!
//! Day indices below are global: the training frames followed by the
//! evaluation frames form one calendar, so trailing windows near the start of
//! evaluation reach back into training data.

use std::fmt;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{portfolio_value, reset, run_episode, step, EnvConfig, EnvError, MarketFrame, Policy, TradeRecord};
use crate::lexicon::{DateRange, Headline, Lexicon, PeriodSentiment, ScoredHeadlines};
use crate::metrics::{full_report, sharpe_ratio, sortino_ratio, MetricsError, MetricsReport, ReturnSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("no agent produced a usable validation score")]
    NoValidScores,
    #[error("invalid switch config: {0}")]
    InvalidConfig(String),
    #[error("not enough data: need at least {needed} frames, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("ensemble has no agents")]
    NoAgents,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// `alpha * sharpe + (1 - alpha) * sortino`.
pub fn chi(sharpe: f64, sortino: f64, alpha: f64) -> f64 {
    alpha * sharpe + (1.0 - alpha) * sortino
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationScore {
    pub agent: usize,
    pub name: String,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    /// Present only when both components are.
    pub chi: Option<f64>,
    pub window: DateRange,
}

impl ValidationScore {
    pub fn new(agent: usize, name: impl Into<String>, sharpe: Option<f64>, sortino: Option<f64>, alpha: f64, window: DateRange) -> Self {
        let chi = match (sharpe, sortino) {
            (Some(a), Some(b)) => Some(chi(a, b, alpha)),
            _ => None,
        };
        Self {
            agent,
            name: name.into(),
            sharpe,
            sortino,
            chi,
            window,
        }
    }
}

/// Index (into `scores`) of the best agent.
///
/// Needs at least one score with `chi` present. An agent missing exactly one
/// component is ranked with that component replaced by the worst value any
/// peer reported for it. Ties go to the lowest index.
pub fn select_agent(scores: &[ValidationScore], alpha: f64) -> Result<usize, EnsembleError> {
    if scores.iter().all(|s| s.chi.is_none()) {
        return Err(EnsembleError::NoValidScores);
    }
    let worst = |f: fn(&ValidationScore) -> Option<f64>| scores.iter().filter_map(f).reduce(f64::min);
    let worst_sharpe = worst(|s| s.sharpe);
    let worst_sortino = worst(|s| s.sortino);
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        let effective = match (s.sharpe, s.sortino) {
            (Some(a), Some(b)) => Some(chi(a, b, alpha)),
            (Some(a), None) => worst_sortino.map(|b| chi(a, b, alpha)),
            (None, Some(b)) => worst_sharpe.map(|a| chi(a, b, alpha)),
            (None, None) => None,
        };
        if let Some(x) = effective {
            if best.is_none_or(|(_, b)| x > b) {
                best = Some((i, x));
            }
        }
    }
    best.map(|(i, _)| i).ok_or(EnsembleError::NoValidScores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerMode {
    /// Period-to-period change in sentiment.
    Delta,
    /// Level of the current period's sentiment.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckCadence {
    /// Every evaluation day, with trailing windows.
    Daily,
    /// The last day of each consecutive evaluation period.
    PeriodBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchConfig {
    pub alpha: f64,
    pub beta: f64,
    pub period_days: usize,
    pub trigger_mode: TriggerMode,
    pub sentiment_scale: f64,
    pub check_cadence: CheckCadence,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            beta: 15.0,
            period_days: 62,
            trigger_mode: TriggerMode::Delta,
            sentiment_scale: 1.0,
            check_cadence: CheckCadence::Daily,
        }
    }
}

impl SwitchConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |m: &str| Err(EnsembleError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.beta >= 0.0) {
            return bad("beta must be non-negative");
        }
        if self.period_days < 2 {
            return bad("period_days must be at least 2 so a period has a return");
        }
        if !(self.sentiment_scale > 0.0 && self.sentiment_scale.is_finite()) {
            return bad("sentiment_scale must be positive");
        }
        Ok(())
    }
}

/// Whether two consecutive period sentiments should trigger re-validation.
/// Absent scores never trigger; the comparison with `beta` is inclusive.
pub fn should_switch(previous: &PeriodSentiment, current: &PeriodSentiment, config: &SwitchConfig) -> bool {
    match config.trigger_mode {
        TriggerMode::Delta => match (previous.score, current.score) {
            (Some(p), Some(c)) => (c - p).abs() * config.sentiment_scale >= config.beta,
            _ => false,
        },
        TriggerMode::Absolute => current.score.is_some_and(|c| c.abs() * config.sentiment_scale >= config.beta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchReason {
    Initial,
    SentimentSwitch,
    ScheduledReevaluation,
}

impl SwitchReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SwitchReason::Initial => "initial",
            SwitchReason::SentimentSwitch => "sentiment_switch",
            SwitchReason::ScheduledReevaluation => "scheduled_reevaluation",
        }
    }
}

impl fmt::Display for SwitchReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SwitchReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "initial" => Ok(SwitchReason::Initial),
            "sentiment_switch" => Ok(SwitchReason::SentimentSwitch),
            "scheduled_reevaluation" => Ok(SwitchReason::ScheduledReevaluation),
            other => Err(format!("unknown switch reason `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub date: NaiveDate,
    pub agent: usize,
    pub name: String,
    pub reason: SwitchReason,
    /// Sentiment pair that fired a sentiment switch.
    pub previous_sentiment: Option<f64>,
    pub current_sentiment: Option<f64>,
}

/// Which agent was active from which date. From each entry's date the named
/// agent trades until the next entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentTimeline {
    entries: Vec<TimelineEntry>,
}

impl AgentTimeline {
    pub fn entries(&self) -> &[TimelineEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Panics if dates stop increasing or the first entry is not `Initial`;
    /// both would be controller bugs.
    pub fn push(&mut self, entry: TimelineEntry) {
        match self.entries.last() {
            None => assert_eq!(entry.reason, SwitchReason::Initial, "timeline must open with the initial selection"),
            Some(last) => assert!(entry.date > last.date, "timeline dates must increase"),
        }
        self.entries.push(entry);
    }

    /// Agent active on `date`, if the timeline has started by then.
    pub fn active_on(&self, date: NaiveDate) -> Option<usize> {
        self.entries.iter().take_while(|e| e.date <= date).last().map(|e| e.agent)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,agent,reason\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.date, e.name, e.reason));
        }
        out
    }
}

/// A trained policy with a display name.
#[derive(Debug, Clone)]
pub struct Member<P> {
    pub name: String,
    pub policy: P,
}

impl<P> Member<P> {
    pub fn new(name: impl Into<String>, policy: P) -> Self {
        Self {
            name: name.into(),
            policy,
        }
    }
}

/// One re-validation of the whole agent set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEvent {
    pub date: NaiveDate,
    pub reason: SwitchReason,
    pub scores: Vec<ValidationScore>,
    /// `None` when nobody scored and the active agent was kept.
    pub selected: Option<usize>,
}

/// A sentiment check point and whether it fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentCheck {
    pub date: NaiveDate,
    pub previous: PeriodSentiment,
    pub current: PeriodSentiment,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun {
    /// One value per evaluation frame.
    pub account_values: Vec<f64>,
    pub trades: Vec<TradeRecord>,
    pub timeline: AgentTimeline,
    pub validations: Vec<ValidationEvent>,
    pub checks: Vec<SentimentCheck>,
    pub metrics: MetricsReport,
}

struct Calendar<'a> {
    training: &'a [MarketFrame],
    evaluation: &'a [MarketFrame],
}

impl Calendar<'_> {
    fn frame(&self, g: usize) -> &MarketFrame {
        if g < self.training.len() {
            &self.training[g]
        } else {
            &self.evaluation[g - self.training.len()]
        }
    }

    fn date(&self, g: usize) -> NaiveDate {
        self.frame(g).date
    }

    /// Frames `g + 1 - n ..= g`, clipped at the start of the calendar.
    fn trailing(&self, g: usize, n: usize) -> Vec<MarketFrame> {
        let lo = (g + 1).saturating_sub(n);
        (lo..=g)
            .enumerate()
            .map(|(i, k)| MarketFrame {
                day_index: i,
                ..self.frame(k).clone()
            })
            .collect()
    }

    /// Calendar days after trading day `g - n` through trading day `g`; the
    /// first trading day bounds windows that would start earlier.
    fn window(&self, g: usize, n: usize) -> DateRange {
        let start = if g >= n {
            self.date(g - n).checked_add_days(Days::new(1)).expect("date in range")
        } else {
            self.date(0)
        };
        DateRange::new(start, self.date(g)).expect("calendar dates increase")
    }
}

fn sentiment_pair(cal: &Calendar, scored: &ScoredHeadlines, g: usize, p: usize) -> (PeriodSentiment, PeriodSentiment) {
    let current = scored.period(cal.window(g, p));
    let previous = if g >= p {
        scored.period(cal.window(g - p, p))
    } else {
        // No complete previous period: an empty window scores as absent.
        PeriodSentiment {
            start_date: cal.date(0),
            end_date: cal.date(0),
            score: None,
            headline_count: 0,
        }
    };
    (previous, current)
}

/// Runs every agent from a fresh portfolio over `frames`, acting
/// deterministically, and scores the resulting equity curve. Agents run on
/// scoped threads; results come back in agent order.
pub fn validate_agents<P: Policy + Sync>(
    agents: &[Member<P>],
    frames: &[MarketFrame],
    env: &EnvConfig,
    alpha: f64,
    seed: u64,
) -> Result<Vec<ValidationScore>, EnsembleError> {
    let window = DateRange::new(frames[0].date, frames[frames.len() - 1].date).expect("frames sorted");
    let results: Vec<Result<ValidationScore, EnsembleError>> = std::thread::scope(|s| {
        let handles: Vec<_> = agents
            .iter()
            .enumerate()
            .map(|(i, m)| {
                s.spawn(move || -> Result<ValidationScore, EnsembleError> {
                    let log = run_episode(&m.policy, env, frames, seed)?;
                    let r = ReturnSeries::from_values(&log.account_values)?;
                    Ok(ValidationScore::new(
                        i,
                        m.name.clone(),
                        sharpe_ratio(&r, 0.0)?,
                        sortino_ratio(&r, 0.0)?,
                        alpha,
                        window,
                    ))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("validation thread panicked")).collect()
    });
    results.into_iter().collect()
}

/// Shared trading loop. `check` decides, for evaluation day `t`, whether to
/// re-validate and with what reason and sentiment annotation.
fn trade<P, F>(
    agents: &[Member<P>],
    training: &[MarketFrame],
    evaluation: &[MarketFrame],
    config: &SwitchConfig,
    env: &EnvConfig,
    seed: u64,
    mut check: F,
) -> Result<EnsembleRun, EnsembleError>
where
    P: Policy + Sync,
    F: FnMut(usize, &Calendar) -> (Option<(SwitchReason, Option<f64>, Option<f64>)>, Option<SentimentCheck>),
{
    config.validate()?;
    if agents.is_empty() {
        return Err(EnsembleError::NoAgents);
    }
    let p = config.period_days;
    if training.len() < p {
        return Err(EnsembleError::InsufficientData {
            needed: p,
            got: training.len(),
        });
    }
    if evaluation.len() < 3 {
        return Err(EnsembleError::InsufficientData {
            needed: 3,
            got: evaluation.len(),
        });
    }
    let cal = Calendar { training, evaluation };
    let t0 = training.len();

    let mut timeline = AgentTimeline::default();
    let mut validations = Vec::new();
    let mut checks = Vec::new();

    let scores = validate_agents(agents, &cal.trailing(t0 - 1, p), env, config.alpha, seed)?;
    let mut active = select_agent(&scores, config.alpha)?;
    validations.push(ValidationEvent {
        date: evaluation[0].date,
        reason: SwitchReason::Initial,
        scores,
        selected: Some(active),
    });
    timeline.push(TimelineEntry {
        date: evaluation[0].date,
        agent: active,
        name: agents[active].name.clone(),
        reason: SwitchReason::Initial,
        previous_sentiment: None,
        current_sentiment: None,
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = reset(env, evaluation)?;
    let mut account_values = vec![portfolio_value(&state)];
    let mut trades = Vec::new();
    for t in 0..evaluation.len() - 1 {
        if t >= 1 {
            let (decision, record) = check(t, &cal);
            checks.extend(record);
            if let Some((reason, prev, cur)) = decision {
                let g = t0 + t;
                let scores = validate_agents(agents, &cal.trailing(g, p), env, config.alpha, seed)?;
                let selected = select_agent(&scores, config.alpha).ok();
                if let Some(s) = selected {
                    active = s;
                }
                validations.push(ValidationEvent {
                    date: evaluation[t].date,
                    reason,
                    scores,
                    selected,
                });
                timeline.push(TimelineEntry {
                    date: evaluation[t].date,
                    agent: active,
                    name: agents[active].name.clone(),
                    reason,
                    previous_sentiment: prev,
                    current_sentiment: cur,
                });
            }
        }
        let action = agents[active].policy.act(&state, &mut rng);
        let out = step(env, &state, &action, evaluation)?;
        trades.extend(out.trades);
        state = out.state;
        account_values.push(portfolio_value(&state));
    }
    let metrics = full_report(&account_values, 0.0)?;
    Ok(EnsembleRun {
        account_values,
        trades,
        timeline,
        validations,
        checks,
        metrics,
    })
}

fn is_check_day(t: usize, config: &SwitchConfig) -> bool {
    match config.check_cadence {
        CheckCadence::Daily => true,
        CheckCadence::PeriodBoundary => (t + 1).is_multiple_of(config.period_days),
    }
}

/// Sentiment-gated ensemble over pre-trained agents.
///
/// The initial agent is chosen by validating on the last `period_days`
/// training frames. At each check point the trailing-period sentiment is
/// compared with the period before it; when [`should_switch`] fires, every
/// agent is re-validated on the trailing `period_days` frames and the best is
/// activated. The portfolio carries over across switches.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble<P: Policy + Sync>(
    agents: &[Member<P>],
    training: &[MarketFrame],
    evaluation: &[MarketFrame],
    headlines: &[Headline],
    lexicon: &Lexicon,
    config: &SwitchConfig,
    env: &EnvConfig,
    seed: u64,
) -> Result<EnsembleRun, EnsembleError> {
    let scored = ScoredHeadlines::new(headlines, lexicon);
    run_ensemble_scored(agents, training, evaluation, &scored, config, env, seed)
}

/// [`run_ensemble`] with headlines already scored.
pub fn run_ensemble_scored<P: Policy + Sync>(
    agents: &[Member<P>],
    training: &[MarketFrame],
    evaluation: &[MarketFrame],
    scored: &ScoredHeadlines,
    config: &SwitchConfig,
    env: &EnvConfig,
    seed: u64,
) -> Result<EnsembleRun, EnsembleError> {
    let t0 = training.len();
    trade(agents, training, evaluation, config, env, seed, |t, cal| {
        if !is_check_day(t, config) {
            return (None, None);
        }
        let (previous, current) = sentiment_pair(cal, scored, t0 + t, config.period_days);
        let fired = should_switch(&previous, &current, config);
        let decision = fired.then_some((SwitchReason::SentimentSwitch, previous.score, current.score));
        (
            decision,
            Some(SentimentCheck {
                date: cal.date(t0 + t),
                previous,
                current,
                fired,
            }),
        )
    })
}

/// Conventional ensemble: re-validates at the end of every evaluation period
/// regardless of sentiment. Cadence in `config` is ignored.
pub fn run_fixed_period_ensemble<P: Policy + Sync>(
    agents: &[Member<P>],
    training: &[MarketFrame],
    evaluation: &[MarketFrame],
    config: &SwitchConfig,
    env: &EnvConfig,
    seed: u64,
) -> Result<EnsembleRun, EnsembleError> {
    let p = config.period_days;
    trade(agents, training, evaluation, config, env, seed, |t, _| {
        let due = (t + 1) % p == 0;
        (due.then_some((SwitchReason::ScheduledReevaluation, None, None)), None)
    })
}

/// Recomputes the timeline from recorded check points and validation scores.
/// Matches the run's timeline whenever the run was sentiment-gated.
pub fn replay_timeline(run: &EnsembleRun, config: &SwitchConfig) -> Result<AgentTimeline, EnsembleError> {
    let mut events = run.validations.iter();
    let first = events.next().ok_or(EnsembleError::NoValidScores)?;
    let mut active = select_agent(&first.scores, config.alpha)?;
    let name = |i: usize, ev: &ValidationEvent| ev.scores[i].name.clone();
    let mut timeline = AgentTimeline::default();
    timeline.push(TimelineEntry {
        date: first.date,
        agent: active,
        name: name(active, first),
        reason: SwitchReason::Initial,
        previous_sentiment: None,
        current_sentiment: None,
    });
    for c in &run.checks {
        if !should_switch(&c.previous, &c.current, config) {
            continue;
        }
        let ev = events
            .next()
            .filter(|e| e.date == c.date)
            .ok_or_else(|| EnsembleError::InvalidConfig(format!("no validation recorded for trigger on {}", c.date)))?;
        if let Ok(s) = select_agent(&ev.scores, config.alpha) {
            active = s;
        }
        timeline.push(TimelineEntry {
            date: c.date,
            agent: active,
            name: name(active, ev),
            reason: SwitchReason::SentimentSwitch,
            previous_sentiment: c.previous.score,
            current_sentiment: c.current.score,
        });
    }
    Ok(timeline)
}
