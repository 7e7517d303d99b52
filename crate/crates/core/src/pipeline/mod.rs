//! Complaint rates per 100,000 consumers and their 28-day moving average.
//!
//! Subscriber counts are monthly, complaints daily. Every day in the store's
//! span gets a rate for every (municipality, operator) key: a day without a
//! complaint record counts as zero complaints, a month without a subscriber
//! count (or with zero subscribers) makes the rate missing.

mod tables;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{GraphSignal, InfluenceGraph, VertexId};

pub use tables::{
    read_complaints, read_consumers, write_complaints, write_consumers, COMPLAINTS_HEADER, CONSUMERS_HEADER,
};

/// Days in the smoothing window.
pub const WINDOW_DAYS: usize = 28;

/// Rates are expressed per this many consumers.
pub const RATE_BASE: f64 = 100_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, 1).map(|_| Self { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("validated on construction")
    }

    pub fn last_day(self) -> NaiveDate {
        self.next().first_day().pred_opt().expect("not the first representable day")
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("`{s}` is not a YYYY-MM month");
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).ok_or_else(bad)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsumerCount {
    pub municipality: VertexId,
    pub operator: String,
    pub month: YearMonth,
    pub consumers: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplaintRecord {
    pub municipality: VertexId,
    pub operator: String,
    pub date: NaiveDate,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub date: NaiveDate,
    pub daily_rate: Option<f64>,
    pub ma28: Option<f64>,
}

/// Gap-free daily series for one (municipality, operator).
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    pub municipality: VertexId,
    pub operator: String,
    pub points: Vec<RatePoint>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("duplicate consumer count for {municipality}/{operator} in {month}")]
    DuplicateConsumerCount {
        municipality: VertexId,
        operator: String,
        month: YearMonth,
    },
    #[error("no consumer or complaint records")]
    NoData,
    #[error("unknown operator `{operator}`; known operators: {}", .known.join(", "))]
    UnknownOperator { operator: String, known: Vec<String> },
    #[error("{date} has no complete {WINDOW_DAYS}-day window; the first computable date is {first_computable}")]
    IncompleteWindow {
        date: NaiveDate,
        first_computable: NaiveDate,
    },
    #[error("{date} is after the last day of data ({last})")]
    AfterSpan { date: NaiveDate, last: NaiveDate },
}

/// Complaints per 100,000 consumers; missing without a subscriber base.
pub fn daily_rate(count: u64, consumers: u64) -> Option<f64> {
    (consumers > 0).then(|| count as f64 * RATE_BASE / consumers as f64)
}

/// Mean of the `window` values ending at `index`, missing if the window
/// reaches before the start or holds a missing value.
pub fn trailing_mean(rates: &[Option<f64>], index: usize, window: usize) -> Option<f64> {
    if window == 0 || index >= rates.len() || index + 1 < window {
        return None;
    }
    let mut sum = 0.0;
    for r in &rates[index + 1 - window..=index] {
        sum += (*r)?;
    }
    Some(sum / window as f64)
}

/// 28-day trailing mean of daily rates, see [`trailing_mean`].
pub fn moving_average_28(rates: &[Option<f64>], index: usize) -> Option<f64> {
    trailing_mean(rates, index, WINDOW_DAYS)
}

type Key = (VertexId, String);

/// Immutable, ingested complaint data with precomputed rate series.
#[derive(Debug, Clone)]
pub struct ComplaintStore {
    start: NaiveDate,
    end: NaiveDate,
    /// operator -> municipality -> series
    series: BTreeMap<String, BTreeMap<VertexId, RateSeries>>,
}

impl ComplaintStore {
    /// Ingests records. Complaint records on the same key and day are summed.
    ///
    /// The span runs from the earliest complaint day or first day of the
    /// earliest subscriber month to the latest complaint day or last day of
    /// the latest subscriber month.
    pub fn from_records(consumers: &[ConsumerCount], complaints: &[ComplaintRecord]) -> Result<Self, PipelineError> {
        let mut subscribers: BTreeMap<Key, BTreeMap<YearMonth, u64>> = BTreeMap::new();
        for c in consumers {
            let months = subscribers
                .entry((c.municipality.clone(), c.operator.clone()))
                .or_default();
            if months.insert(c.month, c.consumers).is_some() {
                return Err(PipelineError::DuplicateConsumerCount {
                    municipality: c.municipality.clone(),
                    operator: c.operator.clone(),
                    month: c.month,
                });
            }
        }
        let mut counts: BTreeMap<Key, BTreeMap<NaiveDate, u64>> = BTreeMap::new();
        for r in complaints {
            *counts
                .entry((r.municipality.clone(), r.operator.clone()))
                .or_default()
                .entry(r.date)
                .or_insert(0) += r.count;
        }

        let starts = consumers
            .iter()
            .map(|c| c.month.first_day())
            .chain(complaints.iter().map(|r| r.date));
        let ends = consumers
            .iter()
            .map(|c| c.month.last_day())
            .chain(complaints.iter().map(|r| r.date));
        let (Some(start), Some(end)) = (starts.min(), ends.max()) else {
            return Err(PipelineError::NoData);
        };
        let days = (end - start).num_days() as usize + 1;

        let keys: BTreeSet<&Key> = subscribers.keys().chain(counts.keys()).collect();
        let empty_months = BTreeMap::new();
        let empty_counts = BTreeMap::new();
        let mut series: BTreeMap<String, BTreeMap<VertexId, RateSeries>> = BTreeMap::new();
        for key in keys {
            let months = subscribers.get(key).unwrap_or(&empty_months);
            let per_day = counts.get(key).unwrap_or(&empty_counts);
            let mut rates = Vec::with_capacity(days);
            let mut date = start;
            for _ in 0..days {
                let rate = months
                    .get(&YearMonth::of(date))
                    .and_then(|&c| daily_rate(per_day.get(&date).copied().unwrap_or(0), c));
                rates.push(rate);
                date = date + Days::new(1);
            }
            let points = (0..days)
                .map(|i| RatePoint {
                    date: start + Days::new(i as u64),
                    daily_rate: rates[i],
                    ma28: moving_average_28(&rates, i),
                })
                .collect();
            series.entry(key.1.clone()).or_default().insert(
                key.0.clone(),
                RateSeries {
                    municipality: key.0.clone(),
                    operator: key.1.clone(),
                    points,
                },
            );
        }
        Ok(Self { start, end, series })
    }

    pub fn span(&self) -> (NaiveDate, NaiveDate) {
        (self.start, self.end)
    }

    /// First date whose trailing window lies inside the span.
    pub fn first_complete_date(&self) -> NaiveDate {
        self.start + Days::new(WINDOW_DAYS as u64 - 1)
    }

    pub fn operators(&self) -> Vec<String> {
        self.series.keys().cloned().collect()
    }

    pub fn series(&self, municipality: &VertexId, operator: &str) -> Option<&RateSeries> {
        self.series.get(operator)?.get(municipality)
    }

    /// Every series for `operator`, ordered by municipality.
    pub fn series_for(&self, operator: &str) -> Result<impl Iterator<Item = &RateSeries>, PipelineError> {
        Ok(self.operator_series(operator)?.values())
    }

    /// Errors unless `date` has a complete window inside the span.
    pub fn require_complete_window(&self, date: NaiveDate) -> Result<(), PipelineError> {
        if date < self.first_complete_date() {
            return Err(PipelineError::IncompleteWindow {
                date,
                first_computable: self.first_complete_date(),
            });
        }
        if date > self.end {
            return Err(PipelineError::AfterSpan { date, last: self.end });
        }
        Ok(())
    }

    /// The smoothed rate at every graph vertex on `date`; vertices without
    /// data, and dates outside the span, are missing.
    pub fn signal_at(
        &self,
        date: NaiveDate,
        operator: &str,
        graph: &InfluenceGraph<f64>,
    ) -> Result<GraphSignal<f64>, PipelineError> {
        let by_muni = self.operator_series(operator)?;
        let offset = self.offset(date);
        let values = graph
            .vertices()
            .iter()
            .map(|v| {
                let s = by_muni.get(v)?;
                s.points.get(offset?)?.ma28
            })
            .collect();
        Ok(GraphSignal::from_values(graph, values).expect("rates are finite and non-negative"))
    }

    fn operator_series(&self, operator: &str) -> Result<&BTreeMap<VertexId, RateSeries>, PipelineError> {
        self.series
            .get(operator)
            .ok_or_else(|| PipelineError::UnknownOperator {
                operator: operator.to_owned(),
                known: self.operators(),
            })
    }

    fn offset(&self, date: NaiveDate) -> Option<usize> {
        (date >= self.start && date <= self.end).then(|| (date - self.start).num_days() as usize)
    }
}
