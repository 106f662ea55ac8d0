//! Ensemble and backtest pipeline behaviour, including the command-line tool.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use chrono::Days;
use sentiment_ensemble::backtest::{
    buy_and_hold, comparison_table, emit_plot_data, load_inputs, run, run_ablations, RunConfig, Strategy,
};
use sentiment_ensemble::ensemble::{
    run_ensemble, run_fixed_period_ensemble, CheckCadence, Member, SwitchConfig, SwitchReason, TriggerMode,
};
use sentiment_ensemble::env::EnvConfig;
use sentiment_ensemble::lexicon::Lexicon;
use sentiment_ensemble::metrics::{full_report, MetricsReport};

use common::*;

fn stubs() -> Vec<Member<Stub>> {
    vec![
        Member::new("steady", Stub(Box::new(Constant(vec![0.3])))),
        Member::new("alternating", Stub(Box::new(Alternating(1)))),
        Member::new("contrarian", Stub(Box::new(Threshold(60.0)))),
    ]
}

const SMALL: &str = r#"
strategy = "sentiment_ensemble"
agents = ["ppo", "a2c", "ddpg"]
seeds = [1]
[synthetic]
tickers = 2
days = 300
seed = 5
regimes = [
  { start_day = 0, drift = 0.0006, volatility = 0.012, sentiment = 2.0 },
  { start_day = 230, drift = -0.0004, volatility = 0.014, sentiment = -2.0 },
]
[windows]
train_days = 180
eval_days = 120
[switch]
period_days = 30
sentiment_scale = 5.0
[hyperparams.ppo]
hidden = [8]
total_timesteps = 600
[hyperparams.a2c]
hidden = [8]
total_timesteps = 600
[hyperparams.ddpg]
hidden = [8]
total_timesteps = 300
"#;

#[test]
fn daily_checks_fire_only_after_the_jump() {
    let (p, jump) = (40, 150);
    let (training, evaluation, headlines) =
        regime_market(120, 300, vec![regime(0, 3.0), regime(120 + jump, -3.0)], 3);
    let config = SwitchConfig {
        period_days: p,
        beta: 15.0,
        sentiment_scale: 5.0,
        trigger_mode: TriggerMode::Delta,
        check_cadence: CheckCadence::Daily,
        ..SwitchConfig::default()
    };
    let run = run_ensemble(&stubs(), &training, &evaluation, &headlines, &Lexicon::afinn(), &config, &EnvConfig::new(1), 0)
        .unwrap();
    let fired: Vec<_> = run.checks.iter().filter(|c| c.fired).map(|c| c.date).collect();
    assert!(!fired.is_empty());
    let (lo, hi) = (evaluation[jump].date, evaluation[jump + 2 * p].date);
    assert!(fired.iter().all(|d| (lo..=hi).contains(d)), "{fired:?} outside {lo}..={hi}");
    assert_eq!(run.timeline.entries()[1].date, fired[0]);
    assert_eq!(run.timeline.len(), fired.len() + 1);
}

#[test]
fn absolute_mode_fires_on_level_not_change() {
    let (training, evaluation, headlines) = regime_market(100, 200, vec![regime(0, 4.0)], 9);
    let config = SwitchConfig {
        period_days: 30,
        beta: 15.0,
        sentiment_scale: 5.0,
        trigger_mode: TriggerMode::Absolute,
        check_cadence: CheckCadence::PeriodBoundary,
        ..SwitchConfig::default()
    };
    let run = run_ensemble(&stubs(), &training, &evaluation, &headlines, &Lexicon::afinn(), &config, &EnvConfig::new(1), 0)
        .unwrap();
    // A steady level of 4 scores 20 against beta 15 at every boundary.
    let boundaries = (1..evaluation.len() - 1).filter(|t| (t + 1) % 30 == 0).count();
    assert_eq!(run.checks.len(), boundaries);
    assert!(run.checks.iter().all(|c| c.fired));

    let delta = SwitchConfig {
        trigger_mode: TriggerMode::Delta,
        ..config
    };
    let run = run_ensemble(&stubs(), &training, &evaluation, &headlines, &Lexicon::afinn(), &delta, &EnvConfig::new(1), 0)
        .unwrap();
    assert_eq!(run.timeline.len(), 1);
}

#[test]
fn fixed_ensemble_revalidates_on_every_period_boundary() {
    let (training, evaluation, _) = regime_market(80, 190, vec![regime(0, 0.0)], 4);
    let config = SwitchConfig {
        period_days: 25,
        ..SwitchConfig::default()
    };
    let run = run_fixed_period_ensemble(&stubs(), &training, &evaluation, &config, &EnvConfig::new(1), 0).unwrap();
    let expected: Vec<_> = (1..evaluation.len() - 1)
        .filter(|t| (t + 1) % 25 == 0)
        .map(|t| evaluation[t].date)
        .collect();
    let got: Vec<_> = run.validations[1..].iter().map(|v| v.date).collect();
    assert_eq!(got, expected);
    assert!(run.validations[1..].iter().all(|v| v.reason == SwitchReason::ScheduledReevaluation));
    assert!(run.checks.is_empty());
    assert_eq!(run.account_values.len(), evaluation.len());
}

#[test]
fn validation_windows_trail_the_check_day() {
    let (training, evaluation, _) = regime_market(80, 120, vec![regime(0, 0.0)], 8);
    let config = SwitchConfig {
        period_days: 20,
        ..SwitchConfig::default()
    };
    let run = run_fixed_period_ensemble(&stubs(), &training, &evaluation, &config, &EnvConfig::new(1), 0).unwrap();
    let first = &run.validations[0];
    assert_eq!(first.scores[0].window.start, training[60].date);
    assert_eq!(first.scores[0].window.end, training[79].date);
    for v in &run.validations[1..] {
        let t = evaluation.iter().position(|f| f.date == v.date).unwrap();
        assert_eq!(v.scores[0].window.end, evaluation[t].date);
        assert!(v.scores[0].window.start > v.scores[0].window.end - Days::new(40));
    }
}

#[test]
fn ablation_arms_share_agents_and_differ_only_where_intended() {
    let config = RunConfig::from_toml(SMALL).unwrap();
    let inputs = load_inputs(&config).unwrap();
    let arms = run_ablations(&config, &inputs, 1).unwrap();
    let labels: Vec<&str> = arms.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["full-seed1", "wo-sortino-seed1", "wo-ds-seed1"]);
    assert_eq!(arms[1].switch.alpha, 1.0);
    assert_eq!(arms[0].training, arms[1].training);
    assert_eq!(arms[0].training, arms[2].training);
    assert_eq!(arms[2].strategy, Strategy::FixedEnsemble);
    assert!(arms[2].sentiment_checks.is_empty());

    let table = comparison_table(&arms);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "metric,full-seed1,wo-sortino-seed1,wo-ds-seed1");
    assert_eq!(lines.len(), 12);

    let plot = emit_plot_data(&arms);
    assert_eq!(plot.lines().count(), 121);
    assert!(plot.lines().nth(1).unwrap().ends_with(",0,0,0"));
}

#[test]
fn written_outputs_reproduce_their_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = RunConfig::from_toml(SMALL).unwrap();
    config.output_dir = tmp.path().to_path_buf();
    let reports = run(&config).unwrap();
    let dir = tmp.path().join("sentiment_ensemble-seed1");

    let equity = std::fs::read_to_string(dir.join("equity.csv")).unwrap();
    let values: Vec<f64> = equity.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values, reports[0].account_values);
    let recomputed = oracle_metrics(&values, config.risk_free_rate);
    for ((name, got), want) in reports[0].metrics.iter().zip(recomputed.values) {
        match (got, want) {
            (Some(a), Some(b)) => assert!(close(a, b, 1e-9), "{name}: {a} vs {b}"),
            (a, b) => assert_eq!(a.is_some(), b.is_some(), "{name}"),
        }
    }
    assert_eq!(full_report(&values, config.risk_free_rate).unwrap(), reports[0].metrics);

    let metrics_csv = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics_csv.lines().next().unwrap(), MetricsReport::FIELDS.join(","));

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let keys: BTreeSet<&str> = json["metrics"].as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys, MetricsReport::FIELDS.iter().copied().collect());

    let timeline = std::fs::read_to_string(dir.join("timeline.csv")).unwrap();
    assert_eq!(timeline.lines().next().unwrap(), "date,agent,reason");
    assert!(timeline.lines().nth(1).unwrap().ends_with(",initial"));
}

#[test]
fn buy_and_hold_trades_once() {
    let (_, evaluation, _) = regime_market(10, 60, vec![regime(0, 0.0)], 2);
    let env = EnvConfig::new(1);
    let run = buy_and_hold(&evaluation, &env).unwrap();
    assert!(run.trades.iter().all(|t| t.date == evaluation[0].date && t.shares > 0));
    let shares = run.trades[0].shares as f64;
    let last = evaluation.last().unwrap().close_prices[0];
    let cash = run.account_values[0] - shares * evaluation[0].close_prices[0];
    assert!((run.account_values.last().unwrap() - (cash + shares * last)).abs() < 1e-6);
}

fn cli(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sentensemble"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();

    assert_eq!(cli(&["--help"], root).0, 0);
    assert_eq!(cli(&["frobnicate"], root).0, 1);

    std::fs::write(root.join("broken.toml"), "strategy = \"nope\"\n").unwrap();
    let (code, _, err) = cli(&["run", "broken.toml"], root);
    assert_eq!(code, 1, "{err}");
    assert_eq!(cli(&["run", "missing.toml"], root).0, 1);

    let (code, out, err) = cli(&["synth", "--tickers", "2", "--days", "300", "--seed", "4", "--out", "data"], root);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("300 days x 2 tickers"));
    let market = std::fs::read_to_string(root.join("data/market.csv")).unwrap();

    let (code, out, _) = cli(&["score-headlines", "data/headlines.jsonl"], root);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next().unwrap(), "date,headline_count,score");
    assert_eq!(out.lines().count(), 301);
    assert_eq!(cli(&["score-headlines", "nowhere.jsonl"], root).0, 2);

    let config = "strategy = \"buy_and_hold\"\n[data]\nmarket = \"data/market.csv\"\nheadlines = \"data/headlines.jsonl\"\n[windows]\ntrain_days = 200\neval_days = 100\n";
    std::fs::write(root.join("bh.toml"), config).unwrap();
    let (code, out, err) = cli(&["run", "bh.toml", "--output", "out"], root);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("buy_and_hold-seed0"));
    assert!(root.join("out/buy_and_hold-seed0/equity.csv").exists());
    assert!(root.join("out/plot.csv").exists());

    // A non-positive close is a data error.
    let mut lines: Vec<String> = market.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[5].split(',').map(String::from).collect();
    cells[5] = "-1".into();
    lines[5] = cells.join(",");
    std::fs::write(root.join("data/market.csv"), lines.join("\n")).unwrap();
    let (code, _, err) = cli(&["run", "bh.toml"], root);
    assert_eq!(code, 2, "{err}");
    std::fs::write(root.join("data/market.csv"), &market).unwrap();

    // Output that cannot be written is a runtime failure.
    std::fs::write(root.join("blocked"), "").unwrap();
    let (code, _, err) = cli(&["run", "bh.toml", "--output", "blocked"], root);
    assert_eq!(code, 3, "{err}");
}
