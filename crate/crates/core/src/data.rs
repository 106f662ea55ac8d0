//! Market CSV and headline ingestion, plus a seeded synthetic market with
//! regime-linked headlines.
//!
//! Synthetic data uses `ChaCha8Rng::seed_from_u64`, whose output stream is
//! specified independently of platform.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::MarketFrame;
use crate::lexicon::{DateRange, Headline, Lexicon};

pub const MARKET_HEADER: &str = "date,ticker,open,high,low,close,volume";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("missing row for {ticker} on {date}")]
    DataGap { date: NaiveDate, ticker: String },
    #[error("line {line}: non-positive close {value} for {ticker} on {date}")]
    NonPositivePrice {
        line: u64,
        date: NaiveDate,
        ticker: String,
        value: f64,
    },
    #[error("no market data")]
    Empty,
    #[error("no trading days between {0} and {1}")]
    EmptyWindow(NaiveDate, NaiveDate),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

/// Rectangular daily bars: every ticker on every date, dates increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    /// `bars[day][ticker]`.
    bars: Vec<Vec<Bar>>,
}

impl Dataset {
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn bars(&self) -> &[Vec<Bar>] {
        &self.bars
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    /// Close-price frames, indexed from 0.
    pub fn frames(&self) -> Vec<MarketFrame> {
        self.frames_between(0, self.n_days())
    }

    fn frames_between(&self, lo: usize, hi: usize) -> Vec<MarketFrame> {
        (lo..hi)
            .enumerate()
            .map(|(i, d)| MarketFrame {
                day_index: i,
                date: self.dates[d],
                close_prices: self.bars[d].iter().map(|b| b.close).collect(),
            })
            .collect()
    }

    /// Frames whose dates fall in `window`, re-indexed from 0.
    pub fn window(&self, window: DateRange) -> Result<Vec<MarketFrame>, DataError> {
        let lo = self.dates.partition_point(|d| *d < window.start);
        let hi = self.dates.partition_point(|d| *d <= window.end);
        if lo >= hi {
            return Err(DataError::EmptyWindow(window.start, window.end));
        }
        Ok(self.frames_between(lo, hi))
    }

    /// CSV in the loader's format, rows sorted by (date, ticker).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MARKET_HEADER);
        out.push('\n');
        for (d, row) in self.dates.iter().zip(&self.bars) {
            for (t, b) in self.tickers.iter().zip(row) {
                out.push_str(&format!("{d},{t},{},{},{},{},{}\n", b.open, b.high, b.low, b.close, b.volume));
            }
        }
        out
    }
}

#[derive(Deserialize)]
struct MarketRow {
    date: String,
    ticker: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    volume: f64,
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))
}

/// Parses `date,ticker,open,high,low,close,volume` rows into a rectangular
/// dataset. Tickers are ordered alphabetically.
pub fn load_market_csv(raw_text: &str) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(raw_text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| DataError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().collect::<Vec<_>>().join(",") != MARKET_HEADER {
        return Err(DataError::Parse {
            line: 1,
            message: format!("header must be exactly `{MARKET_HEADER}`"),
        });
    }
    let mut cells: BTreeMap<(NaiveDate, String), Bar> = BTreeMap::new();
    for result in reader.records() {
        let record = result.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: MarketRow = record.deserialize(Some(&header)).map_err(|e| DataError::Parse {
            line,
            message: e.to_string(),
        })?;
        let date = parse_date(&row.date).map_err(|message| DataError::Parse { line, message })?;
        if !(row.close > 0.0) || !row.close.is_finite() {
            return Err(DataError::NonPositivePrice {
                line,
                date,
                ticker: row.ticker,
                value: row.close,
            });
        }
        let bar = Bar {
            open: row.open,
            high: row.high,
            low: row.low,
            close: row.close,
            volume: row.volume,
        };
        if cells.insert((date, row.ticker.clone()), bar).is_some() {
            return Err(DataError::Parse {
                line,
                message: format!("duplicate row for {} on {date}", row.ticker),
            });
        }
    }
    if cells.is_empty() {
        return Err(DataError::Empty);
    }
    let tickers: Vec<String> = cells.keys().map(|(_, t)| t.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let dates: Vec<NaiveDate> = cells.keys().map(|(d, _)| *d).collect::<BTreeSet<_>>().into_iter().collect();
    let mut bars = Vec::with_capacity(dates.len());
    for d in &dates {
        let mut row = Vec::with_capacity(tickers.len());
        for t in &tickers {
            match cells.get(&(*d, t.clone())) {
                Some(b) => row.push(*b),
                None => {
                    return Err(DataError::DataGap {
                        date: *d,
                        ticker: t.clone(),
                    })
                }
            }
        }
        bars.push(row);
    }
    Ok(Dataset { tickers, dates, bars })
}

/// One JSON object per line: `{"date": "YYYY-MM-DD", "source": ..., "headline": ...}`.
/// Blank lines are skipped. The result is sorted by date, stable within a day.
pub fn load_headlines(raw_text: &str) -> Result<Vec<Headline>, DataError> {
    let mut out = Vec::new();
    for (i, line) in raw_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let h: Headline = serde_json::from_str(line).map_err(|e| DataError::Parse {
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        out.push(h);
    }
    out.sort_by_key(|h| h.date);
    Ok(out)
}

pub fn headlines_to_jsonl(headlines: &[Headline]) -> String {
    let mut out = String::new();
    for h in headlines {
        out.push_str(&serde_json::to_string(h).expect("headline serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regime {
    pub start_day: usize,
    pub drift: f64,
    pub volatility: f64,
    /// Target mean headline valence, in `[-5, 5]`.
    pub sentiment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub tickers: usize,
    pub days: usize,
    pub regimes: Vec<Regime>,
    pub seed: u64,
    #[serde(default = "default_headlines_per_day")]
    pub headlines_per_day: usize,
    #[serde(default = "default_start_date")]
    pub start_date: NaiveDate,
}

fn default_headlines_per_day() -> usize {
    15
}

fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date")
}

impl SyntheticSpec {
    /// One regime over `days` business days.
    pub fn single(tickers: usize, days: usize, drift: f64, volatility: f64, sentiment: f64, seed: u64) -> Self {
        Self {
            tickers,
            days,
            regimes: vec![Regime {
                start_day: 0,
                drift,
                volatility,
                sentiment,
            }],
            seed,
            headlines_per_day: default_headlines_per_day(),
            start_date: default_start_date(),
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::InvalidSpec(m));
        if self.tickers == 0 || self.days == 0 {
            return bad("tickers and days must be positive".into());
        }
        match self.regimes.first() {
            None => return bad("at least one regime is required".into()),
            Some(r) if r.start_day != 0 => return bad("the first regime must start on day 0".into()),
            _ => {}
        }
        for w in self.regimes.windows(2) {
            if w[1].start_day <= w[0].start_day {
                return bad("regime start days must increase".into());
            }
        }
        for r in &self.regimes {
            if !(r.volatility >= 0.0) || !r.drift.is_finite() || !r.volatility.is_finite() {
                return bad(format!("regime at day {}: volatility must be non-negative and finite", r.start_day));
            }
            if !(-5.0..=5.0).contains(&r.sentiment) {
                return bad(format!("regime at day {}: sentiment must lie in [-5, 5]", r.start_day));
            }
        }
        Ok(())
    }

    fn regime_at(&self, day: usize) -> &Regime {
        let i = self.regimes.partition_point(|r| r.start_day <= day);
        &self.regimes[i - 1]
    }
}

/// Monday-to-Friday dates starting at (or after) `start`.
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

const NEUTRAL_WORDS: [&str; 12] = [
    "market", "shares", "index", "quarter", "report", "trading", "investors", "session", "sector", "futures", "earnings",
    "outlook",
];

/// Single alphabetic lexicon words grouped by valence `-5..=5` (index `v + 5`).
/// Words that begin a multi-word phrase are left out so tokenization cannot
/// merge neighbours. Valence 0 uses words absent from the lexicon.
fn words_by_valence(lexicon: &Lexicon) -> Vec<Vec<String>> {
    let phrase_heads: BTreeSet<&str> = lexicon
        .entries()
        .filter_map(|(t, _)| t.split_once(' ').map(|(head, _)| head))
        .collect();
    let mut groups: Vec<BTreeSet<String>> = vec![BTreeSet::new(); 11];
    for (term, v) in lexicon.entries() {
        if term.chars().all(|c| c.is_ascii_lowercase()) && !phrase_heads.contains(term) && v != 0 {
            groups[(v + 5) as usize].insert(term.to_string());
        }
    }
    groups[5] = NEUTRAL_WORDS.iter().filter(|w| lexicon.get(w).is_none()).map(|w| w.to_string()).collect();
    groups.into_iter().map(|g| g.into_iter().collect()).collect()
}

/// Geometric random-walk closes per regime and, every business day,
/// `headlines_per_day` three-word headlines built from AFINN words.
///
/// Each headline's words share one valence: the floor or ceiling of the
/// regime's sentiment level, picked with probabilities that make the expected
/// headline score equal the level.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Vec<Headline>), DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dates = business_days(spec.start_date, spec.days);
    let tickers: Vec<String> = (0..spec.tickers).map(|i| format!("SYN{i:02}")).collect();
    let mut closes: Vec<f64> = (0..spec.tickers).map(|_| rng.random_range(20.0..200.0)).collect();
    let mut bars = Vec::with_capacity(spec.days);
    for day in 0..spec.days {
        let regime = spec.regime_at(day);
        let row: Vec<Bar> = closes
            .iter_mut()
            .map(|close| {
                let open = *close;
                if day > 0 {
                    let z: f64 = rng.sample(StandardNormal);
                    *close *= (regime.drift + regime.volatility * z).exp();
                }
                Bar {
                    open,
                    high: open.max(*close),
                    low: open.min(*close),
                    close: *close,
                    volume: rng.random_range(100_000u32..1_000_000) as f64,
                }
            })
            .collect();
        bars.push(row);
    }

    let lexicon = Lexicon::afinn();
    let words = words_by_valence(&lexicon);
    let mut headlines = Vec::with_capacity(spec.days * spec.headlines_per_day);
    for (day, date) in dates.iter().enumerate() {
        let level = spec.regime_at(day).sentiment;
        let lo = level.floor();
        for _ in 0..spec.headlines_per_day {
            let v = if rng.random::<f64>() < level - lo { lo + 1.0 } else { lo };
            let pool = &words[(v as i32 + 5) as usize];
            let text: Vec<&str> = (0..3).map(|_| pool[rng.random_range(0..pool.len())].as_str()).collect();
            headlines.push(Headline::new(*date, "synthetic", text.join(" ")));
        }
    }
    Ok((Dataset { tickers, dates, bars }, headlines))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{score_headline, ScoredHeadlines};

    const TWO_BY_THREE: &str = "date,ticker,open,high,low,close,volume
2017-01-03,MSFT,1,1,1,62.5,100
2017-01-03,AAPL,1,1,1,116.1,200
2017-01-04,AAPL,1,1,1,116.0,200
2017-01-04,MSFT,1,1,1,62.3,100
2017-01-05,AAPL,1,1,1,116.6,200
2017-01-05,MSFT,1,1,1,62.3,100
";

    #[test]
    fn loads_rectangular_csv() {
        let ds = load_market_csv(TWO_BY_THREE).unwrap();
        assert_eq!(ds.n_days(), 3);
        assert_eq!(ds.tickers(), ["AAPL", "MSFT"]);
        let f = ds.frames();
        assert_eq!(f[0].close_prices, vec![116.1, 62.5]);
        assert_eq!(f[2].day_index, 2);
    }

    #[test]
    fn missing_row_is_a_gap() {
        let text: String = TWO_BY_THREE.lines().filter(|l| !l.starts_with("2017-01-04,MSFT")).map(|l| format!("{l}\n")).collect();
        assert_eq!(
            load_market_csv(&text),
            Err(DataError::DataGap {
                date: NaiveDate::from_ymd_opt(2017, 1, 4).unwrap(),
                ticker: "MSFT".into()
            })
        );
    }

    #[test]
    fn zero_close_rejected() {
        let text = TWO_BY_THREE.replace("116.0", "0");
        assert!(matches!(load_market_csv(&text), Err(DataError::NonPositivePrice { line: 4, .. })));
    }

    #[test]
    fn header_and_field_errors() {
        assert!(matches!(load_market_csv("date,ticker,close\n"), Err(DataError::Parse { line: 1, .. })));
        let text = TWO_BY_THREE.replace("2017-01-05,AAPL", "2017-13-05,AAPL");
        assert!(matches!(load_market_csv(&text), Err(DataError::Parse { line: 6, .. })));
        let text = TWO_BY_THREE.replace("62.3,100\n2017-01-05", "abc,100\n2017-01-05");
        assert!(matches!(load_market_csv(&text), Err(DataError::Parse { line: 5, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let ds = load_market_csv(TWO_BY_THREE).unwrap();
        assert_eq!(load_market_csv(&ds.to_csv()).unwrap(), ds);
    }

    #[test]
    fn headline_loading() {
        let line = r#"{"date":"2017-01-03","source":"newswire","headline":"Stocks rally"}"#;
        let many: String = std::iter::repeat_n(format!("{line}\n"), 15).collect();
        let hs = load_headlines(&many).unwrap();
        assert_eq!(hs.len(), 15);
        assert!(hs.iter().all(|h| h.date == NaiveDate::from_ymd_opt(2017, 1, 3).unwrap()));
        assert_eq!(load_headlines("").unwrap(), vec![]);
        let bad = format!("{line}\n{}\n", line.replace("2017-01-03", "03/01/2017"));
        assert!(matches!(load_headlines(&bad), Err(DataError::Parse { line: 2, .. })));
        assert_eq!(load_headlines(&headlines_to_jsonl(&hs)).unwrap(), hs);
    }

    #[test]
    fn flat_spec_gives_constant_prices() {
        let (ds, _) = generate_synthetic(&SyntheticSpec::single(2, 30, 0.0, 0.0, 0.0, 1)).unwrap();
        for f in ds.frames() {
            assert_eq!(f.close_prices, ds.frames()[0].close_prices);
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticSpec::single(3, 50, 0.001, 0.02, 1.5, 9);
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 10, ..spec.clone() };
        assert_ne!(generate_synthetic(&spec).unwrap().0, generate_synthetic(&other).unwrap().0);
    }

    #[test]
    fn integer_levels_are_exact_per_headline() {
        let lex = Lexicon::afinn();
        for level in -5..=5 {
            let (_, hs) = generate_synthetic(&SyntheticSpec::single(1, 3, 0.0, 0.0, level as f64, 2)).unwrap();
            for h in &hs {
                assert_eq!(score_headline(h, &lex).unwrap(), level as f64, "{}", h.text);
            }
        }
    }

    #[test]
    fn business_days_skip_weekends() {
        let d = business_days(NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), 6);
        assert_eq!(d[4], NaiveDate::from_ymd_opt(2010, 1, 8).unwrap());
        assert_eq!(d[5], NaiveDate::from_ymd_opt(2010, 1, 11).unwrap());
    }

    #[test]
    fn regime_sentiment_crosses_within_a_period() {
        let spec = SyntheticSpec {
            regimes: vec![
                Regime { start_day: 0, drift: 0.0, volatility: 0.01, sentiment: -3.0 },
                Regime { start_day: 200, drift: 0.0, volatility: 0.01, sentiment: 3.0 },
            ],
            ..SyntheticSpec::single(1, 400, 0.0, 0.0, 0.0, 4)
        };
        let (ds, hs) = generate_synthetic(&spec).unwrap();
        let scored = ScoredHeadlines::new(&hs, &Lexicon::afinn());
        let dates = ds.dates();
        let trailing = |t: usize| scored.period(DateRange::new(dates[t - 61], dates[t]).unwrap()).score.unwrap();
        let crossing = (61..400).find(|&t| trailing(t) > 0.0).unwrap();
        assert!((200..200 + 62).contains(&crossing), "{crossing}");
    }

    #[test]
    fn spec_validation() {
        let mut s = SyntheticSpec::single(1, 10, 0.0, 0.1, 0.0, 0);
        s.regimes[0].start_day = 1;
        assert!(s.validate().is_err());
        let mut s = SyntheticSpec::single(1, 10, 0.0, -0.1, 0.0, 0);
        assert!(s.validate().is_err());
        s.regimes[0].volatility = 0.1;
        s.regimes[0].sentiment = 6.0;
        assert!(s.validate().is_err());
    }
}
