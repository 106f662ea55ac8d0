//! Runs a backtest from a TOML config and writes report.json, equity.csv,
//! timeline.csv, metrics.csv and trades.csv.
//!
//! cargo run --release --example ensemble_backtest -- [config.toml]

use std::path::PathBuf;

use sentiment_ensemble::backtest::{run, RunConfig};

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/desk.toml")
    });
    let config = RunConfig::load(&path).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    });
    let reports = run(&config).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    });
    for r in &reports {
        println!("{} -> {}", r.label, config.output_dir.join(&r.label).display());
        print!("{}", r.timeline.to_csv());
        for (name, v) in r.metrics.iter() {
            println!("  {name:<18} {}", v.map_or("-".into(), |x| format!("{x:.4}")));
        }
    }
}
