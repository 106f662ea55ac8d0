//! Computes the full metrics battery for a simulated equity curve and for a
//! flat one, whose ratio metrics are absent.
//!
//! cargo run --example metrics_report

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sentiment_ensemble::metrics::{full_report, MetricsReport};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let daily = Normal::new(0.0006, 0.012).unwrap();
    let mut values = vec![1e6];
    for _ in 0..504 {
        let last = *values.last().unwrap();
        values.push(last * (1.0 + daily.sample(&mut rng)));
    }
    let report = full_report(&values, 0.02).unwrap();
    for (label, (_, v)) in MetricsReport::LABELS.iter().zip(report.iter()) {
        match v {
            Some(x) => println!("{label:<18} {x:>10.4}"),
            None => println!("{label:<18} {:>10}", "-"),
        }
    }
    println!("\n{}", report.to_csv());

    let flat = full_report(&[1e6; 30], 0.0).unwrap();
    println!("flat curve:\n{}", flat.to_csv());
}
