//! Command-line front end. Exit codes: 0 success, 1 config error, 2 data
//! error, 3 runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sentiment_ensemble::backtest::{
    comparison_table, emit_plot_data, load_inputs, run_ablations, run_seed, BacktestError, RunConfig, Strategy,
};
use sentiment_ensemble::data::{generate_synthetic, headlines_to_jsonl, load_headlines, SyntheticSpec};
use sentiment_ensemble::lexicon::{load_lexicon, Lexicon, ScoredHeadlines, DateRange};

#[derive(Parser)]
#[command(name = "sentensemble", version, about = "Sentiment-gated ensemble trading backtests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, select and trade per a TOML run config.
    Run {
        config: PathBuf,
        /// Overrides the config's seeds; repeatable.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Full ensemble, without Sortino (alpha = 1) and without sentiment switching.
    Ablate {
        config: PathBuf,
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic market.csv and headlines.jsonl.
    Synth {
        /// TOML synthetic spec; when absent a single regime is built from the flags.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        tickers: usize,
        #[arg(long, default_value_t = 2000)]
        days: usize,
        #[arg(long, default_value_t = 0.0005)]
        drift: f64,
        #[arg(long, default_value_t = 0.015)]
        volatility: f64,
        #[arg(long, default_value_t = 0.0)]
        sentiment: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Score a headline file and print per-day sentiment as CSV.
    ScoreHeadlines {
        headlines: PathBuf,
        /// Lexicon file (`term<TAB>score`); defaults to AFINN-en-165.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
}

fn read_input(path: &Path) -> Result<String, BacktestError> {
    fs::read_to_string(path).map_err(|e| BacktestError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_output(path: &Path, body: &str) -> Result<(), BacktestError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| BacktestError::Output {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    fs::write(path, body).map_err(|e| BacktestError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_config(path: &Path, seeds: Vec<u64>, output: Option<PathBuf>) -> Result<RunConfig, BacktestError> {
    let mut config = RunConfig::load(path)?;
    if !seeds.is_empty() {
        config.seeds = seeds;
    }
    if let Some(o) = output {
        config.output_dir = o;
    }
    Ok(config)
}

fn summary_line(label: &str, cumulative: Option<f64>, sharpe: Option<f64>) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    format!("{label}: cumulative_return={} sharpe={}", fmt(cumulative), fmt(sharpe))
}

fn execute(cli: Cli) -> Result<(), BacktestError> {
    match cli.command {
        Command::Run {
            config,
            seeds,
            strategy,
            output,
        } => {
            let mut config = load_config(&config, seeds, output)?;
            if let Some(s) = strategy {
                config.strategy = s;
            }
            let inputs = load_inputs(&config)?;
            let mut reports = Vec::new();
            for &seed in &config.seeds {
                let report = run_seed(&config, &inputs, seed)?;
                let dir = report.write(&config.output_dir)?;
                println!(
                    "{} -> {}",
                    summary_line(&report.label, report.metrics.cumulative_return, report.metrics.sharpe),
                    dir.display()
                );
                reports.push(report);
            }
            write_output(&config.output_dir.join("plot.csv"), &emit_plot_data(&reports))
        }
        Command::Ablate { config, seeds, output } => {
            let config = load_config(&config, seeds, output)?;
            let inputs = load_inputs(&config)?;
            let mut all = Vec::new();
            for &seed in &config.seeds {
                let arms = run_ablations(&config, &inputs, seed)?;
                for r in &arms {
                    r.write(&config.output_dir)?;
                    println!("{}", summary_line(&r.label, r.metrics.cumulative_return, r.metrics.sharpe));
                }
                write_output(&config.output_dir.join(format!("ablation-seed{seed}.csv")), &comparison_table(&arms))?;
                all.extend(arms);
            }
            write_output(&config.output_dir.join("plot.csv"), &emit_plot_data(&all))
        }
        Command::Synth {
            spec,
            tickers,
            days,
            drift,
            volatility,
            sentiment,
            seed,
            out,
        } => {
            let spec = match spec {
                Some(p) => toml::from_str::<SyntheticSpec>(&read_input(&p)?)
                    .map_err(|e| BacktestError::Config(format!("{}: {e}", p.display())))?,
                None => SyntheticSpec::single(tickers, days, drift, volatility, sentiment, seed),
            };
            spec.validate().map_err(|e| BacktestError::Config(e.to_string()))?;
            let (dataset, headlines) = generate_synthetic(&spec)?;
            write_output(&out.join("market.csv"), &dataset.to_csv())?;
            write_output(&out.join("headlines.jsonl"), &headlines_to_jsonl(&headlines))?;
            println!("wrote {} days x {} tickers and {} headlines to {}", dataset.n_days(), dataset.n_tickers(), headlines.len(), out.display());
            Ok(())
        }
        Command::ScoreHeadlines { headlines, lexicon } => {
            let lexicon = match lexicon {
                Some(p) => load_lexicon(&read_input(&p)?).map_err(|e| BacktestError::Input {
                    path: p.clone(),
                    message: e.to_string(),
                })?,
                None => Lexicon::afinn(),
            };
            let hs = load_headlines(&read_input(&headlines)?)?;
            let scored = ScoredHeadlines::new(&hs, &lexicon);
            let mut dates: Vec<_> = hs.iter().map(|h| h.date).collect();
            dates.dedup();
            println!("date,headline_count,score");
            for d in dates {
                let p = scored.period(DateRange::new(d, d).expect("single day"));
                println!("{d},{},{}", p.headline_count, p.score.map_or(String::new(), |s| s.to_string()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
