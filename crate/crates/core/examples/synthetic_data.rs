//! Generates a two-regime synthetic market, writes it in the loader formats,
//! reads it back and tracks trailing sentiment across the regime change.
//!
//! cargo run --example synthetic_data -- [output dir]

use std::path::PathBuf;

use sentiment_ensemble::data::{generate_synthetic, headlines_to_jsonl, load_headlines, load_market_csv, Regime, SyntheticSpec};
use sentiment_ensemble::lexicon::{DateRange, Lexicon, ScoredHeadlines};

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let spec = SyntheticSpec {
        regimes: vec![
            Regime { start_day: 0, drift: 0.0008, volatility: 0.01, sentiment: 2.0 },
            Regime { start_day: 250, drift: -0.001, volatility: 0.02, sentiment: -2.5 },
        ],
        ..SyntheticSpec::single(3, 500, 0.0, 0.0, 0.0, 42)
    };
    let (dataset, headlines) = generate_synthetic(&spec).unwrap();

    let market_path = out.join("market.csv");
    let headline_path = out.join("headlines.jsonl");
    std::fs::write(&market_path, dataset.to_csv()).unwrap();
    std::fs::write(&headline_path, headlines_to_jsonl(&headlines)).unwrap();
    let reloaded = load_market_csv(&std::fs::read_to_string(&market_path).unwrap()).unwrap();
    let reloaded_headlines = load_headlines(&std::fs::read_to_string(&headline_path).unwrap()).unwrap();
    assert_eq!(reloaded, dataset);
    assert_eq!(reloaded_headlines, headlines);
    println!("wrote and reloaded {} and {}", market_path.display(), headline_path.display());
    println!("first headline: {}", headlines[0].text);

    let scored = ScoredHeadlines::new(&headlines, &Lexicon::afinn());
    let dates = dataset.dates();
    for t in (61..500).step_by(31) {
        let p = scored.period(DateRange::new(dates[t - 61], dates[t]).unwrap());
        let closes: Vec<String> = dataset.bars()[t].iter().map(|b| format!("{:.2}", b.close)).collect();
        println!("day {t:>3} {}: trailing sentiment {:+.3}, closes [{}]", dates[t], p.score.unwrap(), closes.join(", "));
    }
}
