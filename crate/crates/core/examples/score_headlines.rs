//! Scores a few headlines with the bundled AFINN list and aggregates them
//! into per-period sentiment.
//!
//! cargo run --example score_headlines

use chrono::NaiveDate;
use sentiment_ensemble::lexicon::{period_sentiment, score_headline, tokenize, DateRange, Headline, Lexicon};

fn main() {
    let lexicon = Lexicon::afinn();
    println!("{} ({} terms)", lexicon.name(), lexicon.len());

    let day = |d| NaiveDate::from_ymd_opt(2017, 3, d).unwrap();
    let headlines = vec![
        Headline::new(day(1), "wire", "Stocks rally as investors cheer strong earnings"),
        Headline::new(day(1), "wire", "Oil prices slump amid fears of oversupply"),
        Headline::new(day(2), "wire", "Banks fined over fraud scandal"),
        Headline::new(day(3), "wire", "Quarterly report due Thursday"),
        Headline::new(day(6), "wire", "Tech shares win big, analysts thrilled"),
    ];
    for h in &headlines {
        let tokens = tokenize(&h.text, &lexicon);
        let scored: Vec<String> = tokens
            .iter()
            .filter_map(|t| lexicon.get(t).map(|v| format!("{t}={v}")))
            .collect();
        println!(
            "{} {:+.3}  {:<50} [{}]",
            h.date,
            score_headline(h, &lexicon).unwrap(),
            h.text,
            scored.join(" ")
        );
    }

    for (a, b) in [(1, 2), (3, 6), (7, 9)] {
        let window = DateRange::new(day(a), day(b)).unwrap();
        let p = period_sentiment(&headlines, window, &lexicon);
        match p.score {
            Some(s) => println!("{}..{}: {s:+.4} over {} headlines", p.start_date, p.end_date, p.headline_count),
            None => println!("{}..{}: no headlines", p.start_date, p.end_date),
        }
    }
}
