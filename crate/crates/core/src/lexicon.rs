//! Valence lexicon loading, headline tokenization and headline/period scoring.
//!
//! A headline's score is the mean valence over all of its tokens. Tokens that
//! are not in the lexicon contribute zero but still count toward the length.
//! A period's score is the mean of its headline scores.

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The AFINN-en-165 word list shipped with the crate.
pub const AFINN_EN_165: &str = include_str!("../data/AFINN-en-165.txt");

const MIN_VALENCE: i32 = -5;
const MAX_VALENCE: i32 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SentimentError {
    #[error("lexicon contains no valid entries")]
    EmptyLexicon,
    #[error("lexicon line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("headline has no scorable tokens")]
    EmptyHeadline,
}

/// Mapping from lowercase term (word or multiword phrase) to integer valence.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    name: String,
    entries: HashMap<String, i32>,
    max_phrase_words: usize,
}

impl Lexicon {
    /// Parses `term<TAB>score` lines. Blank lines are skipped; later
    /// duplicates override earlier ones.
    pub fn parse(raw_text: &str) -> Result<Self, SentimentError> {
        Self::parse_named("custom", raw_text)
    }

    pub fn parse_named(name: &str, raw_text: &str) -> Result<Self, SentimentError> {
        let mut entries = HashMap::new();
        for (idx, line) in raw_text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (term, score) = line.rsplit_once('\t').ok_or_else(|| SentimentError::ParseError {
                line: line_no,
                message: "expected `term<TAB>score`".into(),
            })?;
            let term = term.trim().to_lowercase();
            if term.is_empty() {
                return Err(SentimentError::ParseError {
                    line: line_no,
                    message: "empty term".into(),
                });
            }
            let score: i32 = score.trim().parse().map_err(|_| SentimentError::ParseError {
                line: line_no,
                message: format!("score `{}` is not an integer", score.trim()),
            })?;
            if !(MIN_VALENCE..=MAX_VALENCE).contains(&score) {
                return Err(SentimentError::ParseError {
                    line: line_no,
                    message: format!("score {score} outside [-5, 5]"),
                });
            }
            entries.insert(term, score);
        }
        if entries.is_empty() {
            return Err(SentimentError::EmptyLexicon);
        }
        let max_phrase_words = entries
            .keys()
            .map(|t| t.split_whitespace().count())
            .max()
            .unwrap_or(1);
        Ok(Self {
            name: name.to_string(),
            entries,
            max_phrase_words,
        })
    }

    /// The bundled AFINN-en-165 lexicon.
    pub fn afinn() -> Self {
        Self::parse_named("AFINN-en-165", AFINN_EN_165).expect("bundled lexicon is well formed")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<i32> {
        self.entries.get(term).copied()
    }

    /// Valence of a term; zero when the term is unknown.
    pub fn score(&self, term: &str) -> i32 {
        self.get(term).unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, i32)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn max_phrase_words(&self) -> usize {
        self.max_phrase_words
    }
}

/// Alias matching the loader operation name.
pub fn load_lexicon(raw_text: &str) -> Result<Lexicon, SentimentError> {
    Lexicon::parse(raw_text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub date: NaiveDate,
    pub source: String,
    #[serde(rename = "headline")]
    pub text: String,
}

impl Headline {
    pub fn new(date: NaiveDate, source: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            date,
            source: source.into(),
            text: text.into(),
        }
    }
}

/// Inclusive calendar date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    /// Returns `None` when `start > end`.
    pub fn new(start: NaiveDate, end: NaiveDate) -> Option<Self> {
        (start <= end).then_some(Self { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodSentiment {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Absent when no headline fell inside the window.
    pub score: Option<f64>,
    pub headline_count: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn normalize(text: &str) -> String {
    let lowered: Vec<char> = text
        .to_lowercase()
        .chars()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' | '\u{02bc}' => '\'',
            '\u{2010}' | '\u{2011}' => '-',
            other => other,
        })
        .collect();
    let mut out = String::with_capacity(lowered.len());
    for (i, &c) in lowered.iter().enumerate() {
        if is_word_char(c) {
            out.push(c);
        } else if c == '\'' || c == '-' {
            let inner = i > 0
                && i + 1 < lowered.len()
                && is_word_char(lowered[i - 1])
                && is_word_char(lowered[i + 1]);
            out.push(if inner { c } else { ' ' });
        } else {
            out.push(' ');
        }
    }
    out
}

/// Lowercases, strips punctuation (keeping intra-word apostrophes and
/// hyphens), splits on whitespace, then merges runs of adjacent words into the
/// longest phrase the lexicon contains, scanning left to right.
pub fn tokenize(text: &str, lexicon: &Lexicon) -> Vec<String> {
    let normalized = normalize(text);
    let words: Vec<&str> = normalized.split_whitespace().collect();
    let mut tokens = Vec::with_capacity(words.len());
    let mut i = 0;
    while i < words.len() {
        let longest = lexicon.max_phrase_words().min(words.len() - i);
        let mut taken = 1;
        for n in (2..=longest).rev() {
            let phrase = words[i..i + n].join(" ");
            if lexicon.get(&phrase).is_some() {
                tokens.push(phrase);
                taken = n;
                break;
            }
        }
        if taken == 1 {
            tokens.push(words[i].to_string());
        }
        i += taken;
    }
    tokens
}

/// Mean valence over the headline's tokens.
pub fn score_text(text: &str, lexicon: &Lexicon) -> Result<f64, SentimentError> {
    let tokens = tokenize(text, lexicon);
    if tokens.is_empty() {
        return Err(SentimentError::EmptyHeadline);
    }
    let total: i64 = tokens.iter().map(|t| lexicon.score(t) as i64).sum();
    Ok(total as f64 / tokens.len() as f64)
}

pub fn score_headline(headline: &Headline, lexicon: &Lexicon) -> Result<f64, SentimentError> {
    score_text(&headline.text, lexicon)
}

/// Running mean of headline scores.
#[derive(Debug, Clone, Copy, Default)]
pub struct SentimentAccumulator {
    sum: f64,
    count: usize,
}

impl SentimentAccumulator {
    pub fn push(&mut self, headline_score: f64) {
        self.sum += headline_score;
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    pub fn finish(self, window: DateRange) -> PeriodSentiment {
        PeriodSentiment {
            start_date: window.start,
            end_date: window.end,
            score: self.mean(),
            headline_count: self.count,
        }
    }
}

/// Mean headline score over the headlines dated inside `window`.
///
/// Headlines with no tokens at all are skipped and not counted.
pub fn period_sentiment(headlines: &[Headline], window: DateRange, lexicon: &Lexicon) -> PeriodSentiment {
    let mut acc = SentimentAccumulator::default();
    for h in headlines.iter().filter(|h| window.contains(h.date)) {
        if let Ok(score) = score_headline(h, lexicon) {
            acc.push(score);
        }
    }
    acc.finish(window)
}

/// Headline scores computed once and queried by date window.
///
/// Backtests check trailing-window sentiment every day; scoring each headline
/// once keeps that cheap.
#[derive(Debug, Clone, Default)]
pub struct ScoredHeadlines {
    /// Sorted by date; unscorable headlines dropped.
    scored: Vec<(NaiveDate, f64)>,
}

impl ScoredHeadlines {
    pub fn new(headlines: &[Headline], lexicon: &Lexicon) -> Self {
        let mut scored: Vec<(NaiveDate, f64)> = headlines
            .iter()
            .filter_map(|h| score_headline(h, lexicon).ok().map(|s| (h.date, s)))
            .collect();
        scored.sort_by_key(|(d, _)| *d);
        Self { scored }
    }

    pub fn len(&self) -> usize {
        self.scored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scored.is_empty()
    }

    /// Same result as [`period_sentiment`] over the original headlines.
    pub fn period(&self, window: DateRange) -> PeriodSentiment {
        let lo = self.scored.partition_point(|(d, _)| *d < window.start);
        let hi = self.scored.partition_point(|(d, _)| *d <= window.end);
        let mut acc = SentimentAccumulator::default();
        for &(_, s) in &self.scored[lo..hi.max(lo)] {
            acc.push(s);
        }
        acc.finish(window)
    }
}
