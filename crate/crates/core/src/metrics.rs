//! Return-series analytics.
//!
//! Conventions: 252 trading days per year, sample standard deviation, the
//! risk-free rate is an annual rate converted to a daily one by dividing by
//! 252, percentiles interpolate linearly between order statistics. Degenerate
//! inputs yield `None` rather than infinities or NaN.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TRADING_DAYS: f64 = 252.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("empty series")]
    Empty,
    #[error("account value {0} at index {1} is not positive")]
    NonPositiveValue(f64, usize),
}

/// Daily simple returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries(pub Vec<f64>);

impl ReturnSeries {
    pub fn from_values(values: &[f64]) -> Result<Self, MetricsError> {
        check_values(values)?;
        Ok(Self(values.windows(2).map(|w| w[1] / w[0] - 1.0).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_values(values: &[f64]) -> Result<(), MetricsError> {
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(MetricsError::NonPositiveValue(v, i));
        }
    }
    Ok(())
}

fn need(series: &[f64], n: usize) -> Result<(), MetricsError> {
    if series.len() < n {
        Err(MetricsError::TooShort {
            needed: n,
            got: series.len(),
        })
    } else {
        Ok(())
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn daily_rate(risk_free: f64) -> f64 {
    risk_free / TRADING_DAYS
}

/// Annualized mean excess return over the sample standard deviation.
pub fn sharpe_ratio(series: &ReturnSeries, risk_free: f64) -> Result<Option<f64>, MetricsError> {
    let r = &series.0;
    need(r, 2)?;
    let sd = sample_std(r);
    if !(sd > 1e-15 * (1.0 + mean(r).abs())) {
        return Ok(None);
    }
    let rf = daily_rate(risk_free);
    let excess = r.iter().map(|x| x - rf).sum::<f64>() / r.len() as f64;
    Ok(Some(excess / sd * TRADING_DAYS.sqrt()))
}

/// Annualized mean excess return over downside deviation, where the downside
/// deviation averages squared negative excess returns over all days.
pub fn sortino_ratio(series: &ReturnSeries, risk_free: f64) -> Result<Option<f64>, MetricsError> {
    let r = &series.0;
    need(r, 2)?;
    let rf = daily_rate(risk_free);
    let mut downside = 0.0;
    let mut any = false;
    for x in r {
        let e = x - rf;
        if e < 0.0 {
            downside += e * e;
            any = true;
        }
    }
    if !any {
        return Ok(None);
    }
    let dd = (downside / r.len() as f64).sqrt();
    let excess = r.iter().map(|x| x - rf).sum::<f64>() / r.len() as f64;
    Ok(Some(excess / dd * TRADING_DAYS.sqrt()))
}

/// Worst `value / running_peak - 1`, in `[-1, 0]`.
pub fn max_drawdown(account_values: &[f64]) -> Result<f64, MetricsError> {
    if account_values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut peak = f64::MIN;
    let mut worst = 0.0f64;
    for &v in account_values {
        peak = peak.max(v);
        worst = worst.min(v / peak - 1.0);
    }
    Ok(worst.clamp(-1.0, 0.0))
}

/// Linearly interpolated percentile, `q` in `[0, 1]`.
pub fn percentile(xs: &[f64], q: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Sum of gains over sum of absolute losses at threshold zero.
pub fn omega_ratio(series: &ReturnSeries) -> Option<f64> {
    let gains: f64 = series.0.iter().filter(|&&x| x > 0.0).sum();
    let losses: f64 = series.0.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
    (losses > 0.0).then(|| gains / losses)
}

pub fn tail_ratio(series: &ReturnSeries) -> Option<f64> {
    let lo = percentile(&series.0, 0.05).abs();
    (lo > 0.0).then(|| percentile(&series.0, 0.95).abs() / lo)
}

/// R² of a least-squares line through cumulative log returns.
pub fn stability(series: &ReturnSeries) -> Option<f64> {
    let mut acc = 0.0;
    let ys: Vec<f64> = series
        .0
        .iter()
        .map(|r| {
            acc += r.ln_1p();
            acc
        })
        .collect();
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return None;
    }
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = mean(&ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - x_mean;
        let dy = y - y_mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(syy > 1e-30) {
        return None;
    }
    Some((sxy * sxy / (sxx * syy)).clamp(0.0, 1.0))
}

/// The full battery reported for every backtest, one field per reported row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cumulative_return: Option<f64>,
    pub annual_return: Option<f64>,
    pub max_drawdown: Option<f64>,
    pub annual_volatility: Option<f64>,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    pub calmar: Option<f64>,
    pub omega: Option<f64>,
    pub tail_ratio: Option<f64>,
    pub stability: Option<f64>,
    pub value_at_risk: Option<f64>,
}

impl MetricsReport {
    pub const FIELDS: [&'static str; 11] = [
        "cumulative_return",
        "annual_return",
        "max_drawdown",
        "annual_volatility",
        "sharpe",
        "sortino",
        "calmar",
        "omega",
        "tail_ratio",
        "stability",
        "value_at_risk",
    ];

    pub const LABELS: [&'static str; 11] = [
        "Cumulative Return",
        "Annual Return",
        "Maximum Drawdown",
        "Annual Volatility",
        "Sharpe Ratio",
        "Sortino Ratio",
        "Calmar Ratio",
        "Omega Ratio",
        "Tail Ratio",
        "Stability",
        "Value at Risk",
    ];

    pub fn values(&self) -> [Option<f64>; 11] {
        [
            self.cumulative_return,
            self.annual_return,
            self.max_drawdown,
            self.annual_volatility,
            self.sharpe,
            self.sortino,
            self.calmar,
            self.omega,
            self.tail_ratio,
            self.stability,
            self.value_at_risk,
        ]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, Option<f64>)> {
        Self::FIELDS.into_iter().zip(self.values())
    }

    pub fn csv_header() -> String {
        Self::FIELDS.join(",")
    }

    /// Absent values become empty cells.
    pub fn csv_row(&self) -> String {
        self.values()
            .iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or_default())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::csv_header(), self.csv_row())
    }
}

/// Computes every metric from an account-value curve.
pub fn full_report(account_values: &[f64], risk_free: f64) -> Result<MetricsReport, MetricsError> {
    need(account_values, 3)?;
    let series = ReturnSeries::from_values(account_values)?;
    let r = &series.0;
    let n = r.len() as f64;
    let first = account_values[0];
    let last = *account_values.last().unwrap();
    let cumulative = last / first - 1.0;
    let annual = (1.0 + cumulative).powf(TRADING_DAYS / n) - 1.0;
    let mdd = max_drawdown(account_values)?;
    let vol = sample_std(r) * TRADING_DAYS.sqrt();
    let calmar = (mdd < 0.0).then(|| annual / mdd.abs());
    Ok(MetricsReport {
        cumulative_return: Some(cumulative),
        annual_return: Some(annual),
        max_drawdown: Some(mdd),
        annual_volatility: Some(vol),
        sharpe: sharpe_ratio(&series, risk_free)?,
        sortino: sortino_ratio(&series, risk_free)?,
        calmar,
        omega: omega_ratio(&series),
        tail_ratio: tail_ratio(&series),
        stability: stability(&series),
        value_at_risk: Some(percentile(r, 0.05)),
    })
}
