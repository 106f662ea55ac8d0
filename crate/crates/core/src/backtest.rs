//! Configuration, the train / validate / trade pipeline, baselines, ablations
//! and report files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{derive_seed, train_agent, AgentError, AgentPolicy, Algorithm, Hyperparams};
use crate::data::{generate_synthetic, load_headlines, load_market_csv, DataError, Dataset, SyntheticSpec};
use crate::ensemble::{
    run_ensemble_scored, run_fixed_period_ensemble, AgentTimeline, EnsembleError, EnsembleRun, Member, SentimentCheck,
    SwitchConfig, SwitchReason, TimelineEntry, ValidationEvent,
};
use crate::env::{execute_trades, portfolio_value, reset, run_episode, EnvConfig, EnvError, MarketFrame, TradeRecord};
use crate::lexicon::{load_lexicon, DateRange, Headline, Lexicon, ScoredHeadlines};
use crate::metrics::{full_report, MetricsError, MetricsReport};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("cannot read {path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl BacktestError {
    /// 1 for configuration problems, 2 for bad or missing input data, 3 for
    /// failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            BacktestError::Config(_) => 1,
            BacktestError::Data(_) | BacktestError::Input { .. } => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    SentimentEnsemble,
    FixedEnsemble,
    Single(Algorithm),
    BuyAndHold,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::SentimentEnsemble => f.write_str("sentiment_ensemble"),
            Strategy::FixedEnsemble => f.write_str("fixed_ensemble"),
            Strategy::Single(a) => write!(f, "single:{a}"),
            Strategy::BuyAndHold => f.write_str("buy_and_hold"),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sentiment_ensemble" => Ok(Strategy::SentimentEnsemble),
            "fixed_ensemble" => Ok(Strategy::FixedEnsemble),
            "buy_and_hold" => Ok(Strategy::BuyAndHold),
            other => match other.strip_prefix("single:") {
                Some(alg) => alg.parse().map(Strategy::Single).map_err(|e: AgentError| e.to_string()),
                None => Err(format!(
                    "unknown strategy `{other}` (expected sentiment_ensemble, fixed_ensemble, single:<algo> or buy_and_hold)"
                )),
            },
        }
    }
}

impl TryFrom<String> for Strategy {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

/// Input files, resolved relative to the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub market: PathBuf,
    pub headlines: Option<PathBuf>,
    /// Defaults to the bundled AFINN-en-165 list.
    pub lexicon: Option<PathBuf>,
}

/// Either explicit inclusive date ranges, or day counts taken from the start
/// of the dataset with evaluation directly after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Windows {
    Dates {
        train_start: NaiveDate,
        train_end: NaiveDate,
        eval_start: NaiveDate,
        eval_end: NaiveDate,
    },
    Days {
        train_days: usize,
        eval_days: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub initial_balance: f64,
    pub h_max: u32,
    pub transaction_cost_rate: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        let e = EnvConfig::new(1);
        Self {
            initial_balance: e.initial_balance,
            h_max: e.h_max,
            transaction_cost_rate: e.transaction_cost_rate,
        }
    }
}

impl EnvSection {
    pub fn for_tickers(&self, n_tickers: usize) -> EnvConfig {
        EnvConfig {
            initial_balance: self.initial_balance,
            h_max: self.h_max,
            transaction_cost_rate: self.transaction_cost_rate,
            n_tickers,
        }
    }
}

fn default_agents() -> Vec<Algorithm> {
    vec![Algorithm::Ppo, Algorithm::A2c, Algorithm::Ddpg]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: Strategy,
    /// Ensemble members, in tie-break order.
    #[serde(default = "default_agents")]
    pub agents: Vec<Algorithm>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Annual rate used for the reported metrics; validation always uses 0.
    #[serde(default)]
    pub risk_free_rate: f64,
    pub data: Option<DataPaths>,
    pub synthetic: Option<SyntheticSpec>,
    pub windows: Windows,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default)]
    pub switch: SwitchConfig,
    /// Per-algorithm overrides on top of the built-in defaults.
    #[serde(default)]
    pub hyperparams: BTreeMap<String, toml::Table>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, BacktestError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| BacktestError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, BacktestError> {
        let text = fs::read_to_string(path).map_err(|e| BacktestError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    /// Makes relative data and output paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.data {
            fix(&mut d.market);
            d.headlines.as_mut().map(fix);
            d.lexicon.as_mut().map(fix);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), BacktestError> {
        let bad = |m: String| Err(BacktestError::Config(m));
        match (&self.data, &self.synthetic) {
            (Some(_), Some(_)) => return bad("give either [data] or [synthetic], not both".into()),
            (None, None) => return bad("one of [data] or [synthetic] is required".into()),
            _ => {}
        }
        if let Some(spec) = &self.synthetic {
            spec.validate().map_err(|e| BacktestError::Config(e.to_string()))?;
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.agents.is_empty() {
            return bad("the ensemble needs at least one agent".into());
        }
        match &self.windows {
            Windows::Dates {
                train_start,
                train_end,
                eval_start,
                eval_end,
            } => {
                if !(train_start <= train_end && train_end < eval_start && eval_start <= eval_end) {
                    return bad("windows must be ordered: train_start <= train_end < eval_start <= eval_end".into());
                }
            }
            Windows::Days { train_days, eval_days } => {
                if *train_days < 2 || *eval_days < 2 {
                    return bad("train_days and eval_days must be at least 2".into());
                }
            }
        }
        self.switch.validate().map_err(|e| BacktestError::Config(e.to_string()))?;
        self.env.for_tickers(1).validate().map_err(|e| BacktestError::Config(e.to_string()))?;
        for key in self.hyperparams.keys() {
            key.parse::<Algorithm>()
                .map_err(|e| BacktestError::Config(format!("[hyperparams.{key}]: {e}")))?;
        }
        for alg in Algorithm::ALL {
            self.hyperparams_for(alg)?;
        }
        Ok(())
    }

    /// Defaults for `alg` with any `[hyperparams.<alg>]` keys applied.
    pub fn hyperparams_for(&self, alg: Algorithm) -> Result<Hyperparams, BacktestError> {
        let defaults = Hyperparams::defaults_for(alg);
        let Some(overrides) = self.hyperparams.get(alg.name()) else {
            return Ok(defaults);
        };
        let mut table = toml::Table::try_from(&defaults).expect("hyperparameters serialize");
        for (k, v) in overrides {
            table.insert(k.clone(), v.clone());
        }
        let h: Hyperparams = table
            .try_into()
            .map_err(|e: toml::de::Error| BacktestError::Config(format!("[hyperparams.{alg}]: {e}")))?;
        h.validate().map_err(|e| BacktestError::Config(format!("[hyperparams.{alg}]: {e}")))?;
        Ok(h)
    }
}

/// Everything a run reads: prices, headlines and the lexicon.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub dataset: Dataset,
    pub headlines: Vec<Headline>,
    pub lexicon: Lexicon,
}

fn read(path: &Path) -> Result<String, BacktestError> {
    fs::read_to_string(path).map_err(|e| BacktestError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_inputs(config: &RunConfig) -> Result<Inputs, BacktestError> {
    if let Some(spec) = &config.synthetic {
        let (dataset, headlines) = generate_synthetic(spec)?;
        return Ok(Inputs {
            dataset,
            headlines,
            lexicon: Lexicon::afinn(),
        });
    }
    let paths = config.data.as_ref().expect("validated config has data paths");
    let dataset = load_market_csv(&read(&paths.market)?)?;
    let headlines = match &paths.headlines {
        Some(p) => load_headlines(&read(p)?)?,
        None => Vec::new(),
    };
    let lexicon = match &paths.lexicon {
        Some(p) => load_lexicon(&read(p)?).map_err(|e| {
            BacktestError::Data(DataError::Parse {
                line: 0,
                message: format!("{}: {e}", p.display()),
            })
        })?,
        None => Lexicon::afinn(),
    };
    Ok(Inputs {
        dataset,
        headlines,
        lexicon,
    })
}

/// Training and evaluation frames, each indexed from 0.
pub fn split_windows(dataset: &Dataset, windows: &Windows) -> Result<(Vec<MarketFrame>, Vec<MarketFrame>), BacktestError> {
    match windows {
        Windows::Dates {
            train_start,
            train_end,
            eval_start,
            eval_end,
        } => {
            let dates = dataset.dates();
            let (first, last) = (dates[0], dates[dates.len() - 1]);
            if *train_start < first || *eval_end > last {
                return Err(BacktestError::Config(format!(
                    "windows {train_start}..{eval_end} fall outside the data ({first}..{last})"
                )));
            }
            let range = |a, b| DateRange::new(a, b).expect("ordered by validation");
            Ok((
                dataset.window(range(*train_start, *train_end))?,
                dataset.window(range(*eval_start, *eval_end))?,
            ))
        }
        Windows::Days { train_days, eval_days } => {
            let need = train_days + eval_days;
            if dataset.n_days() < need {
                return Err(BacktestError::Config(format!(
                    "windows need {need} trading days, data has {}",
                    dataset.n_days()
                )));
            }
            let all = dataset.frames();
            let reindex = |fs: &[MarketFrame]| {
                fs.iter()
                    .enumerate()
                    .map(|(i, f)| MarketFrame {
                        day_index: i,
                        ..f.clone()
                    })
                    .collect::<Vec<_>>()
            };
            Ok((reindex(&all[..*train_days]), reindex(&all[*train_days..need])))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub agent: String,
    pub seed: u64,
    pub episodes: usize,
    pub mean_episode_return: Option<f64>,
}

/// Trains each algorithm on its own thread. The per-agent seed depends only
/// on the run seed and the algorithm, so the same algorithm trains
/// identically whatever else is in the ensemble.
pub fn train_agents(
    config: &RunConfig,
    algorithms: &[Algorithm],
    env: &EnvConfig,
    training: &[MarketFrame],
    seed: u64,
) -> Result<(Vec<Member<AgentPolicy>>, Vec<TrainingSummary>), BacktestError> {
    let jobs: Vec<(Algorithm, Hyperparams, u64)> = algorithms
        .iter()
        .map(|&a| {
            let stream = Algorithm::ALL.iter().position(|&x| x == a).expect("listed") as u64;
            Ok((a, config.hyperparams_for(a)?, derive_seed(seed, stream)))
        })
        .collect::<Result<_, BacktestError>>()?;
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(a, h, agent_seed)| s.spawn(move || (a, agent_seed, train_agent(a, env, training, h, agent_seed))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });
    let mut members = Vec::new();
    let mut summaries = Vec::new();
    for (a, agent_seed, r) in results {
        let trained = r?;
        let n = trained.episode_returns.len();
        summaries.push(TrainingSummary {
            agent: a.name().to_string(),
            seed: agent_seed,
            episodes: n,
            mean_episode_return: (n > 0).then(|| trained.episode_returns.iter().sum::<f64>() / n as f64),
        });
        members.push(Member::new(a.name(), trained.policy));
    }
    Ok((members, summaries))
}

/// Invests the balance equally across tickers on the first day (whole shares,
/// costs charged) and holds to the end.
pub fn buy_and_hold(frames: &[MarketFrame], env: &EnvConfig) -> Result<EnsembleRun, BacktestError> {
    let mut state = reset(env, frames)?;
    let budget = env.initial_balance / env.n_tickers as f64;
    let deltas: Vec<i64> = state
        .prices
        .iter()
        .map(|p| (budget / (p * (1.0 + env.transaction_cost_rate))).floor() as i64)
        .collect();
    let mut trades = Vec::new();
    execute_trades(&mut state, &deltas, env.transaction_cost_rate, frames[0].date, &mut trades);
    let mut account_values = Vec::with_capacity(frames.len());
    for f in frames {
        state.prices.clone_from(&f.close_prices);
        account_values.push(portfolio_value(&state));
    }
    let mut timeline = AgentTimeline::default();
    timeline.push(TimelineEntry {
        date: frames[0].date,
        agent: 0,
        name: "buy_and_hold".into(),
        reason: SwitchReason::Initial,
        previous_sentiment: None,
        current_sentiment: None,
    });
    let metrics = full_report(&account_values, 0.0)?;
    Ok(EnsembleRun {
        account_values,
        trades,
        timeline,
        validations: Vec::new(),
        checks: Vec::new(),
        metrics,
    })
}

fn single_agent(member: &Member<AgentPolicy>, evaluation: &[MarketFrame], env: &EnvConfig, seed: u64) -> Result<EnsembleRun, BacktestError> {
    let log = run_episode(&member.policy, env, evaluation, seed)?;
    let mut timeline = AgentTimeline::default();
    timeline.push(TimelineEntry {
        date: evaluation[0].date,
        agent: 0,
        name: member.name.clone(),
        reason: SwitchReason::Initial,
        previous_sentiment: None,
        current_sentiment: None,
    });
    let metrics = full_report(&log.account_values, 0.0)?;
    Ok(EnsembleRun {
        account_values: log.account_values,
        trades: log.trades,
        timeline,
        validations: Vec::new(),
        checks: Vec::new(),
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    /// Run label, also the output directory name.
    pub label: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub config: RunConfig,
    pub switch: SwitchConfig,
    pub hyperparams: BTreeMap<String, Hyperparams>,
    pub dates: Vec<NaiveDate>,
    /// One value per evaluation day.
    pub account_values: Vec<f64>,
    pub trades: Vec<TradeRecord>,
    pub timeline: AgentTimeline,
    pub metrics: MetricsReport,
    pub validations: Vec<ValidationEvent>,
    pub sentiment_checks: Vec<SentimentCheck>,
    pub training: Vec<TrainingSummary>,
}

impl BacktestReport {
    pub fn equity_csv(&self) -> String {
        let mut out = String::from("date,account_value\n");
        for (d, v) in self.dates.iter().zip(&self.account_values) {
            out.push_str(&format!("{d},{v}\n"));
        }
        out
    }

    pub fn trades_csv(&self) -> String {
        let mut out = String::from("date,ticker,shares,price,cost\n");
        for t in &self.trades {
            out.push_str(&format!("{},{},{},{},{}\n", t.date, t.ticker, t.shares, t.price, t.cost));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `report.json`, `equity.csv`, `timeline.csv`, `metrics.csv` and
    /// `trades.csv` under `root/<label>`; returns that directory.
    pub fn write(&self, root: &Path) -> Result<PathBuf, BacktestError> {
        let dir = root.join(&self.label);
        let out_err = |path: &Path, e: std::io::Error| BacktestError::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        fs::create_dir_all(&dir).map_err(|e| out_err(&dir, e))?;
        for (name, body) in [
            ("report.json", self.to_json()),
            ("equity.csv", self.equity_csv()),
            ("timeline.csv", self.timeline.to_csv()),
            ("metrics.csv", self.metrics.to_csv()),
            ("trades.csv", self.trades_csv()),
        ] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| out_err(&p, e))?;
        }
        Ok(dir)
    }
}

fn label_for(strategy: Strategy, seed: u64) -> String {
    format!("{}-seed{seed}", strategy.to_string().replace(':', "-"))
}

/// Trained members plus the frames and sentiment they were trained against,
/// shared across strategies and ablation arms of one seed.
pub struct Prepared {
    pub env: EnvConfig,
    pub training: Vec<MarketFrame>,
    pub evaluation: Vec<MarketFrame>,
    pub scored: ScoredHeadlines,
    pub members: Vec<Member<AgentPolicy>>,
    pub summaries: Vec<TrainingSummary>,
    pub seed: u64,
}

/// Splits the data and trains `algorithms` for one seed.
pub fn prepare(config: &RunConfig, inputs: &Inputs, algorithms: &[Algorithm], seed: u64) -> Result<Prepared, BacktestError> {
    let env = config.env.for_tickers(inputs.dataset.n_tickers());
    let (training, evaluation) = split_windows(&inputs.dataset, &config.windows)?;
    let (members, summaries) = train_agents(config, algorithms, &env, &training, seed)?;
    Ok(Prepared {
        env,
        training,
        evaluation,
        scored: ScoredHeadlines::new(&inputs.headlines, &inputs.lexicon),
        members,
        summaries,
        seed,
    })
}

/// Runs `strategy` with already trained members. `label` names the output.
pub fn run_prepared(
    config: &RunConfig,
    prepared: &Prepared,
    strategy: Strategy,
    switch: &SwitchConfig,
    label: String,
) -> Result<BacktestReport, BacktestError> {
    let p = prepared;
    let outcome = match strategy {
        Strategy::SentimentEnsemble => {
            run_ensemble_scored(&p.members, &p.training, &p.evaluation, &p.scored, switch, &p.env, p.seed)?
        }
        Strategy::FixedEnsemble => run_fixed_period_ensemble(&p.members, &p.training, &p.evaluation, switch, &p.env, p.seed)?,
        Strategy::Single(alg) => {
            let m = p
                .members
                .iter()
                .find(|m| m.name == alg.name())
                .ok_or_else(|| BacktestError::Config(format!("{alg} was not trained")))?;
            single_agent(m, &p.evaluation, &p.env, p.seed)?
        }
        Strategy::BuyAndHold => buy_and_hold(&p.evaluation, &p.env)?,
    };
    let metrics = full_report(&outcome.account_values, config.risk_free_rate)?;
    let hyperparams = p
        .members
        .iter()
        .map(|m| (m.name.clone(), m.policy.hyper.clone()))
        .collect();
    Ok(BacktestReport {
        label,
        strategy,
        seed: p.seed,
        config: config.clone(),
        switch: switch.clone(),
        hyperparams,
        dates: p.evaluation.iter().map(|f| f.date).collect(),
        account_values: outcome.account_values,
        trades: outcome.trades,
        timeline: outcome.timeline,
        metrics,
        validations: outcome.validations,
        sentiment_checks: outcome.checks,
        training: p.summaries.clone(),
    })
}

fn algorithms_for(config: &RunConfig, strategy: Strategy) -> Vec<Algorithm> {
    match strategy {
        Strategy::SentimentEnsemble | Strategy::FixedEnsemble => config.agents.clone(),
        Strategy::Single(a) => vec![a],
        Strategy::BuyAndHold => Vec::new(),
    }
}

/// The configured strategy for one seed. Writes nothing.
pub fn run_seed(config: &RunConfig, inputs: &Inputs, seed: u64) -> Result<BacktestReport, BacktestError> {
    let prepared = prepare(config, inputs, &algorithms_for(config, config.strategy), seed)?;
    run_prepared(config, &prepared, config.strategy, &config.switch, label_for(config.strategy, seed))
}

/// Loads inputs, runs every configured seed and writes each report under
/// `output_dir`.
pub fn run(config: &RunConfig) -> Result<Vec<BacktestReport>, BacktestError> {
    let inputs = load_inputs(config)?;
    let mut reports = Vec::new();
    for &seed in &config.seeds {
        let report = run_seed(config, &inputs, seed)?;
        report.write(&config.output_dir)?;
        reports.push(report);
    }
    Ok(reports)
}

/// The three ablation arms for one seed, sharing trained agents: the
/// configured sentiment ensemble, the same with `alpha = 1` (no Sortino), and
/// the fixed-period ensemble (no sentiment switching).
pub fn run_ablations(config: &RunConfig, inputs: &Inputs, seed: u64) -> Result<Vec<BacktestReport>, BacktestError> {
    let prepared = prepare(config, inputs, &config.agents, seed)?;
    let no_sortino = SwitchConfig {
        alpha: 1.0,
        ..config.switch.clone()
    };
    Ok(vec![
        run_prepared(config, &prepared, Strategy::SentimentEnsemble, &config.switch, format!("full-seed{seed}"))?,
        run_prepared(config, &prepared, Strategy::SentimentEnsemble, &no_sortino, format!("wo-sortino-seed{seed}"))?,
        run_prepared(config, &prepared, Strategy::FixedEnsemble, &config.switch, format!("wo-ds-seed{seed}"))?,
    ])
}

/// Metrics as rows and reports as columns.
pub fn comparison_table(reports: &[BacktestReport]) -> String {
    let mut out = String::from("metric");
    for r in reports {
        out.push(',');
        out.push_str(&r.label);
    }
    out.push('\n');
    for (i, label) in MetricsReport::LABELS.iter().enumerate() {
        out.push_str(label);
        for r in reports {
            out.push(',');
            if let Some(v) = r.metrics.values()[i] {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Cumulative return `v_t / v_0 - 1` per report, one column each in report
/// order, rows aligned by date. Cells are empty where a report has no value.
pub fn emit_plot_data(reports: &[BacktestReport]) -> String {
    let mut rows: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    for (k, r) in reports.iter().enumerate() {
        let v0 = r.account_values[0];
        for (d, v) in r.dates.iter().zip(&r.account_values) {
            rows.entry(*d).or_insert_with(|| vec![None; reports.len()])[k] = Some(v / v0 - 1.0);
        }
    }
    let mut out = String::from("date");
    for r in reports {
        out.push(',');
        out.push_str(&r.label);
    }
    out.push('\n');
    for (d, cells) in rows {
        out.push_str(&d.to_string());
        for c in cells {
            out.push(',');
            if let Some(v) = c {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}
