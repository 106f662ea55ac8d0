//! Runs the three ablation arms (full, without Sortino, without sentiment
//! switching) on shared trained agents and prints the comparison table.
//!
//! cargo run --release --example ablations -- [config.toml] [seed]

use std::path::PathBuf;

use sentiment_ensemble::backtest::{comparison_table, emit_plot_data, load_inputs, run_ablations, RunConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let path = args.get(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/desk.toml")
    });
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let config = RunConfig::load(&path).expect("valid config");
    let inputs = load_inputs(&config).expect("inputs load");
    let arms = run_ablations(&config, &inputs, seed).expect("ablation runs");
    for arm in &arms {
        let reasons: Vec<String> = arm.timeline.entries().iter().map(|e| format!("{}:{}", e.name, e.reason)).collect();
        println!("{}: {}", arm.label, reasons.join(" "));
    }
    println!("\n{}", comparison_table(&arms));
    let plot = emit_plot_data(&arms);
    println!("plot data: {} rows", plot.lines().count() - 1);
}
