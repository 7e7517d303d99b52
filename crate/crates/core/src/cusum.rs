//! One-sided CUSUM over discrepancy series.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{discrepancy, Discrepancy, GraphError, InfluenceGraph, VertexId};
use crate::numfmt::format_machine;
use crate::pipeline::{ComplaintStore, PipelineError};
use crate::scalar::Scalar;

pub const TRACE_CSV_HEADER: [&str; 6] = ["municipality_id", "operator", "date", "d", "S", "alarm"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CusumConfig<T> {
    /// In-control mean, `mu0`.
    pub target_mean: T,
    /// Reference allowance, `k >= 0`.
    pub allowance: T,
    /// Decision threshold, `h > 0`.
    pub threshold: T,
    pub reset_on_alarm: bool,
}

impl<T: Scalar> CusumConfig<T> {
    /// `mu0 = 1`, `k = 0.25`, `h = 5`, reset on alarm.
    pub fn standard() -> Self {
        Self {
            target_mean: T::one(),
            allowance: T::ratio(1, 4),
            threshold: T::from_int(5),
            reset_on_alarm: true,
        }
    }

    pub fn validate(&self) -> Result<(), CusumError> {
        if !(self.allowance.is_finite_value() && self.allowance >= T::zero()) {
            return Err(CusumError::InvalidConfig(format!("allowance {} must be >= 0", self.allowance)));
        }
        if !(self.threshold.is_finite_value() && self.threshold > T::zero()) {
            return Err(CusumError::InvalidConfig(format!("threshold {} must be > 0", self.threshold)));
        }
        if !self.target_mean.is_finite_value() {
            return Err(CusumError::InvalidConfig(format!(
                "target mean {} must be finite",
                self.target_mean
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for CusumConfig<T> {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CusumError {
    #[error("invalid CUSUM configuration: {0}")]
    InvalidConfig(String),
    #[error("series is not date-ordered at {0}")]
    Unordered(NaiveDate),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CusumPoint<T> {
    pub date: NaiveDate,
    pub input: Discrepancy<T>,
    pub statistic: T,
    pub alarm: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CusumTrace<T> {
    pub points: Vec<CusumPoint<T>>,
}

impl<T: Scalar> CusumTrace<T> {
    pub fn alarm_dates(&self) -> Vec<NaiveDate> {
        self.points.iter().filter(|p| p.alarm).map(|p| p.date).collect()
    }

    pub fn first_alarm(&self) -> Option<NaiveDate> {
        self.points.iter().find(|p| p.alarm).map(|p| p.date)
    }
}

/// Runs `S_t = max(0, S_{t-1} + d_t - mu0 - k)` with `S_0 = 0`.
///
/// Undefined inputs carry the statistic forward and never alarm. An infinite
/// input alarms at once with `S_t = max(S_{t-1}, h)`. With `reset_on_alarm`
/// the step after an alarm starts again from zero.
pub fn cusum<T: Scalar>(series: &[(NaiveDate, Discrepancy<T>)], config: &CusumConfig<T>) -> Result<CusumTrace<T>, CusumError> {
    config.validate()?;
    if let Some(w) = series.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(CusumError::Unordered(w[1].0));
    }
    let h = config.threshold;
    let mut s = T::zero();
    let mut points = Vec::with_capacity(series.len());
    for &(date, input) in series {
        let (stat, alarm) = match input {
            Discrepancy::Undefined => (s, false),
            Discrepancy::Infinite => (if s > h { s } else { h }, true),
            Discrepancy::Finite(d) => {
                let next = s + d - config.target_mean - config.allowance;
                let next = if next > T::zero() { next } else { T::zero() };
                (next, next >= h)
            }
        };
        points.push(CusumPoint {
            date,
            input,
            statistic: stat,
            alarm,
        });
        s = if alarm && config.reset_on_alarm { T::zero() } else { stat };
    }
    Ok(CusumTrace { points })
}

/// `(municipality, operator)`.
pub type SeriesKey = (VertexId, String);

/// Date-ordered discrepancy series per key.
pub type History<T> = BTreeMap<SeriesKey, Vec<(NaiveDate, Discrepancy<T>)>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyAlarms {
    pub municipality: VertexId,
    pub operator: String,
    pub first_alarm: NaiveDate,
    pub alarm_dates: Vec<NaiveDate>,
}

/// Traces every key and keeps those that alarmed, earliest first.
pub fn scan_all<T: Scalar>(history: &History<T>, config: &CusumConfig<T>) -> Result<Vec<KeyAlarms>, CusumError> {
    let mut out = Vec::new();
    for ((muni, op), series) in history {
        let dates = cusum(series, config)?.alarm_dates();
        if let Some(&first_alarm) = dates.first() {
            out.push(KeyAlarms {
                municipality: muni.clone(),
                operator: op.clone(),
                first_alarm,
                alarm_dates: dates,
            });
        }
    }
    out.sort_by(|a, b| {
        (a.first_alarm, &a.municipality, &a.operator).cmp(&(b.first_alarm, &b.municipality, &b.operator))
    });
    Ok(out)
}

/// Daily discrepancy series for every vertex and operator over `from..=to`.
///
/// The default range runs from the first complete window to the end of the
/// data; an explicit range must lie inside it.
pub fn discrepancy_history(
    graph: &InfluenceGraph<f64>,
    store: &ComplaintStore,
    operators: &[String],
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
) -> Result<History<f64>, CusumError> {
    let from = from.unwrap_or_else(|| store.first_complete_date());
    let to = to.unwrap_or(store.span().1);
    store.require_complete_window(from)?;
    store.require_complete_window(to)?;
    let operators = if operators.is_empty() {
        store.operators()
    } else {
        operators.to_vec()
    };
    let mut history: History<f64> = BTreeMap::new();
    for op in &operators {
        let mut per_vertex: Vec<Vec<(NaiveDate, Discrepancy<f64>)>> = vec![Vec::new(); graph.len()];
        for date in from.iter_days().take_while(|d| *d <= to) {
            let d = discrepancy(graph, &store.signal_at(date, op, graph)?)?;
            for (series, v) in per_vertex.iter_mut().zip(d) {
                series.push((date, v.value));
            }
        }
        for (v, series) in graph.vertices().iter().zip(per_vertex) {
            history.insert((v.clone(), op.clone()), series);
        }
    }
    Ok(history)
}

fn format_input<T: Scalar>(d: Discrepancy<T>) -> String {
    match d {
        Discrepancy::Finite(v) => format_machine(v.to_f64().unwrap_or(f64::NAN)),
        Discrepancy::Infinite => "inf".into(),
        Discrepancy::Undefined => String::new(),
    }
}

/// Writes traces in key order.
pub fn write_trace_csv<'a, T, W, I>(traces: I, writer: W) -> std::io::Result<()>
where
    T: Scalar,
    W: Write,
    I: IntoIterator<Item = (&'a SeriesKey, &'a CusumTrace<T>)>,
{
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_CSV_HEADER)?;
    for ((muni, op), trace) in traces {
        for p in &trace.points {
            w.write_record([
                muni.as_str(),
                op,
                &p.date.format("%Y-%m-%d").to_string(),
                &format_input(p.input),
                &format_machine(p.statistic.to_f64().unwrap_or(f64::NAN)),
                if p.alarm { "true" } else { "false" },
            ])?;
        }
    }
    w.flush()
}
