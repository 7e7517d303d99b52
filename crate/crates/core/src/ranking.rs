//! Stratified inspection-priority rankings.
//!
//! Each (stratum, date) partition is ranked twice: by vertex discrepancy and
//! by the raw smoothed complaint rate. An entry is flagged when the
//! discrepancy puts it in the top K but the raw rate would not.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{discrepancy, Discrepancy, DiscrepancyValue, GraphError, InfluenceGraph, VertexId};
use crate::influence::Municipality;
use crate::numfmt::format_machine;
use crate::pipeline::{ComplaintStore, PipelineError, YearMonth};

/// Default number of inspections per stratum.
pub const DEFAULT_K: usize = 5;

pub const TIE_BREAK_POLICY: &str = "discrepancy-desc/rate-desc/id-asc";

pub const REPORT_CSV_HEADER: [&str; 10] = [
    "stratum",
    "operator",
    "municipality_id",
    "municipality_name",
    "discrepancy",
    "rate_ma28",
    "rank_disc",
    "rank_rate",
    "flagged",
    "rank_disc-rank_rate",
];

/// Population band: `min_population < population <= max_population`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub name: String,
    pub min_population: u64,
    /// `None` is unbounded.
    pub max_population: Option<u64>,
}

impl Stratum {
    pub fn new(name: impl Into<String>, min_population: u64, max_population: Option<u64>) -> Self {
        Self {
            name: name.into(),
            min_population,
            max_population,
        }
    }

    pub fn contains(&self, population: u64) -> bool {
        population > self.min_population && self.max_population.is_none_or(|max| population <= max)
    }

    /// Above 500,000 inhabitants, and above 200,000 up to 500,000.
    pub fn defaults() -> Vec<Stratum> {
        vec![
            Stratum::new("above-500k", 500_000, None),
            Stratum::new("200k-500k", 200_000, Some(500_000)),
        ]
    }

    fn upper(&self) -> u64 {
        self.max_population.unwrap_or(u64::MAX)
    }
}

/// Checks bounds and pairwise disjointness.
pub fn validate_strata(strata: &[Stratum]) -> Result<(), RankingError> {
    for s in strata {
        if s.upper() <= s.min_population {
            return Err(RankingError::InvalidStrata(format!(
                "stratum `{}` needs min_population < max_population",
                s.name
            )));
        }
    }
    for (i, a) in strata.iter().enumerate() {
        for b in &strata[i + 1..] {
            if a.name == b.name {
                return Err(RankingError::InvalidStrata(format!("duplicate stratum name `{}`", a.name)));
            }
            if a.min_population < b.upper() && b.min_population < a.upper() {
                return Err(RankingError::InvalidStrata(format!(
                    "strata `{}` and `{}` overlap",
                    a.name, b.name
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankingMode {
    /// One ranking per stratum pooling every operator.
    #[default]
    Joint,
    /// One ranking per stratum and operator.
    PerOperator,
}

/// A municipality-operator pair offered for ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub municipality: VertexId,
    pub municipality_name: String,
    pub operator: String,
    pub discrepancy: DiscrepancyValue<f64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub municipality: VertexId,
    pub municipality_name: String,
    pub operator: String,
    pub discrepancy: DiscrepancyValue<f64>,
    pub rate_ma28: f64,
    pub rank_by_discrepancy: usize,
    pub rank_by_rate: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    UndefinedDiscrepancy,
    MissingRate,
}

/// A pair left out of the rankings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExcludedEntry {
    pub stratum: String,
    pub municipality: VertexId,
    pub operator: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankingError {
    #[error("K must be at least 1")]
    InvalidK,
    #[error("invalid strata: {0}")]
    InvalidStrata(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn exclusion(c: &Candidate) -> Option<ExclusionReason> {
    if !c.discrepancy.value.is_defined() {
        Some(ExclusionReason::UndefinedDiscrepancy)
    } else if c.rate.is_none() {
        Some(ExclusionReason::MissingRate)
    } else {
        None
    }
}

fn by_key(a: &Candidate, b: &Candidate) -> Ordering {
    a.municipality
        .cmp(&b.municipality)
        .then_with(|| a.operator.cmp(&b.operator))
}

fn by_rate_desc(a: &Candidate, b: &Candidate) -> Ordering {
    let (ra, rb) = (a.rate.unwrap_or(0.0), b.rate.unwrap_or(0.0));
    rb.partial_cmp(&ra).unwrap_or(Ordering::Equal)
}

/// Ranks one partition worst-first.
///
/// Entries with an undefined discrepancy or a missing rate are skipped. The
/// discrepancy order falls back to the rate and then the id; the rate order
/// falls back to the id. Ranks are dense, 1-based.
pub fn rank_stratum(candidates: &[Candidate], k: usize) -> Result<Vec<RankedEntry>, RankingError> {
    if k < 1 {
        return Err(RankingError::InvalidK);
    }
    let eligible: Vec<&Candidate> = candidates.iter().filter(|c| exclusion(c).is_none()).collect();

    let mut by_rate = eligible.clone();
    by_rate.sort_by(|a, b| by_rate_desc(a, b).then_with(|| by_key(a, b)));
    let rate_rank: HashMap<(&VertexId, &str), usize> = by_rate
        .iter()
        .enumerate()
        .map(|(i, c)| ((&c.municipality, c.operator.as_str()), i + 1))
        .collect();

    let mut by_disc = eligible;
    by_disc.sort_by(|a, b| {
        b.discrepancy
            .value
            .severity_cmp(&a.discrepancy.value)
            .then_with(|| by_rate_desc(a, b))
            .then_with(|| by_key(a, b))
    });
    Ok(by_disc
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let rank_by_discrepancy = i + 1;
            let rank_by_rate = rate_rank[&(&c.municipality, c.operator.as_str())];
            RankedEntry {
                municipality: c.municipality.clone(),
                municipality_name: c.municipality_name.clone(),
                operator: c.operator.clone(),
                discrepancy: c.discrepancy,
                rate_ma28: c.rate.expect("eligible entries have a rate"),
                rank_by_discrepancy,
                rank_by_rate,
                flagged: rank_by_discrepancy <= k && rank_by_rate > k,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSection {
    pub stratum: Stratum,
    /// `None` in joint mode.
    pub operator: Option<String>,
    pub entries: Vec<RankedEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportParameters {
    pub k: usize,
    pub operators: Vec<String>,
    pub mode: RankingMode,
    pub tie_break_policy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectionReport {
    pub date: NaiveDate,
    pub strata: Vec<Stratum>,
    pub parameters: ReportParameters,
    pub sections: Vec<ReportSection>,
    /// Pairs without a usable discrepancy or rate, for transparency.
    pub excluded: Vec<ExcludedEntry>,
}

/// Inputs shared by every report built from one data set.
#[derive(Debug, Clone, Copy)]
pub struct ReportContext<'a> {
    pub graph: &'a InfluenceGraph<f64>,
    pub store: &'a ComplaintStore,
    pub municipalities: &'a [Municipality],
}

/// Ranking parameters; empty `operators` means every operator in the data.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingOptions {
    pub operators: Vec<String>,
    pub strata: Vec<Stratum>,
    pub k: usize,
    pub mode: RankingMode,
}

impl Default for RankingOptions {
    fn default() -> Self {
        Self {
            operators: Vec::new(),
            strata: Stratum::defaults(),
            k: DEFAULT_K,
            mode: RankingMode::Joint,
        }
    }
}

/// Report on the last calendar day of `month`.
pub fn month_end_report(
    ctx: ReportContext<'_>,
    options: &RankingOptions,
    month: YearMonth,
) -> Result<InspectionReport, RankingError> {
    report_at(ctx, options, month.last_day())
}

/// Report on an arbitrary date with a complete smoothing window.
pub fn report_at(ctx: ReportContext<'_>, options: &RankingOptions, date: NaiveDate) -> Result<InspectionReport, RankingError> {
    if options.k < 1 {
        return Err(RankingError::InvalidK);
    }
    validate_strata(&options.strata)?;
    ctx.store.require_complete_window(date)?;
    let operators = if options.operators.is_empty() {
        ctx.store.operators()
    } else {
        options.operators.clone()
    };

    let info: HashMap<&VertexId, &Municipality> = ctx.municipalities.iter().map(|m| (&m.id, m)).collect();
    // operator -> candidates in vertex order
    let mut per_operator: Vec<(String, Vec<(u64, Candidate)>)> = Vec::with_capacity(operators.len());
    for op in &operators {
        let x = ctx.store.signal_at(date, op, ctx.graph)?;
        let d = discrepancy(ctx.graph, &x)?;
        let candidates = ctx
            .graph
            .vertices()
            .iter()
            .enumerate()
            .filter_map(|(i, v)| {
                let m = info.get(v)?;
                Some((
                    m.population,
                    Candidate {
                        municipality: v.clone(),
                        municipality_name: m.name.clone(),
                        operator: op.clone(),
                        discrepancy: d[i],
                        rate: x.get(i),
                    },
                ))
            })
            .collect();
        per_operator.push((op.clone(), candidates));
    }

    let mut sections = Vec::new();
    let mut excluded = Vec::new();
    for stratum in &options.strata {
        let members = |cs: &[(u64, Candidate)]| -> Vec<Candidate> {
            cs.iter()
                .filter(|(p, _)| stratum.contains(*p))
                .map(|(_, c)| c.clone())
                .collect()
        };
        let mut pools: Vec<(Option<String>, Vec<Candidate>)> = match options.mode {
            RankingMode::Joint => vec![(None, per_operator.iter().flat_map(|(_, cs)| members(cs)).collect())],
            RankingMode::PerOperator => per_operator
                .iter()
                .map(|(op, cs)| (Some(op.clone()), members(cs)))
                .collect(),
        };
        for (operator, pool) in pools.drain(..) {
            for c in &pool {
                if let Some(reason) = exclusion(c) {
                    excluded.push(ExcludedEntry {
                        stratum: stratum.name.clone(),
                        municipality: c.municipality.clone(),
                        operator: c.operator.clone(),
                        reason,
                    });
                }
            }
            sections.push(ReportSection {
                stratum: stratum.clone(),
                operator,
                entries: rank_stratum(&pool, options.k)?,
            });
        }
    }

    Ok(InspectionReport {
        date,
        strata: options.strata.clone(),
        parameters: ReportParameters {
            k: options.k,
            operators,
            mode: options.mode,
            tie_break_policy: TIE_BREAK_POLICY.to_owned(),
        },
        sections,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceFigure {
    pub top_k: usize,
    pub flagged: usize,
    /// `flagged / top_k`, 0 when the partition is empty.
    pub fraction: f64,
}

impl DivergenceFigure {
    fn new(top_k: usize, flagged: usize) -> Self {
        Self {
            top_k,
            flagged,
            fraction: if top_k == 0 { 0.0 } else { flagged as f64 / top_k as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionDivergence {
    pub stratum: String,
    pub operator: Option<String>,
    #[serde(flatten)]
    pub figure: DivergenceFigure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceSummary {
    pub sections: Vec<SectionDivergence>,
    pub overall: DivergenceFigure,
}

/// Share of the discrepancy top K that the raw rate would not have picked.
pub fn divergence_summary(report: &InspectionReport, k: usize) -> DivergenceSummary {
    let mut total_top = 0;
    let mut total_flagged = 0;
    let sections = report
        .sections
        .iter()
        .map(|s| {
            let top: Vec<&RankedEntry> = s.entries.iter().filter(|e| e.rank_by_discrepancy <= k).collect();
            let flagged = top.iter().filter(|e| e.rank_by_rate > k).count();
            total_top += top.len();
            total_flagged += flagged;
            SectionDivergence {
                stratum: s.stratum.name.clone(),
                operator: s.operator.clone(),
                figure: DivergenceFigure::new(top.len(), flagged),
            }
        })
        .collect();
    DivergenceSummary {
        sections,
        overall: DivergenceFigure::new(total_top, total_flagged),
    }
}

fn format_discrepancy(d: Discrepancy<f64>) -> String {
    match d {
        Discrepancy::Finite(v) => format_machine(v),
        Discrepancy::Infinite => "inf".into(),
        Discrepancy::Undefined => String::new(),
    }
}

/// One row per ranked entry, sections in report order.
pub fn write_report_csv<W: Write>(report: &InspectionReport, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_CSV_HEADER)?;
    for s in &report.sections {
        for e in &s.entries {
            w.write_record([
                s.stratum.name.as_str(),
                &e.operator,
                e.municipality.as_str(),
                &e.municipality_name,
                &format_discrepancy(e.discrepancy.value),
                &format_machine(e.rate_ma28),
                &e.rank_by_discrepancy.to_string(),
                &e.rank_by_rate.to_string(),
                if e.flagged { "true" } else { "false" },
                &format!("{}-{}", e.rank_by_discrepancy, e.rank_by_rate),
            ])?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: &str, d: Discrepancy<f64>, rate: Option<f64>) -> Candidate {
        Candidate {
            municipality: VertexId::new(id).unwrap(),
            municipality_name: id.to_uppercase(),
            operator: "A".into(),
            discrepancy: DiscrepancyValue {
                value: d,
                observed: rate,
                expected: None,
            },
            rate,
        }
    }

    fn order(entries: &[RankedEntry]) -> Vec<&str> {
        entries.iter().map(|e| e.municipality.as_str()).collect()
    }

    use Discrepancy::*;

    #[test]
    fn dual_ranks_and_flags() {
        let cs = [
            cand("a", Finite(2.0), Some(10.0)),
            cand("b", Finite(0.5), Some(50.0)),
            cand("c", Finite(1.5), Some(20.0)),
        ];
        let r = rank_stratum(&cs, 1).unwrap();
        assert_eq!(order(&r), vec!["a", "c", "b"]);
        let rate_ranks: Vec<usize> = r.iter().map(|e| e.rank_by_rate).collect();
        assert_eq!(rate_ranks, vec![3, 2, 1]);
        assert!(r[0].flagged);
        assert!(!r[1].flagged && !r[2].flagged);
    }

    #[test]
    fn equal_discrepancies_follow_rate_then_id() {
        let cs = [
            cand("b", Finite(1.0), Some(3.0)),
            cand("a", Finite(1.0), Some(3.0)),
            cand("c", Finite(1.0), Some(9.0)),
        ];
        let r = rank_stratum(&cs, 2).unwrap();
        assert_eq!(order(&r), vec!["c", "a", "b"]);
        assert!(r.iter().all(|e| e.rank_by_discrepancy == e.rank_by_rate));
    }

    #[test]
    fn infinite_first_and_ineligible_dropped() {
        let cs = [
            cand("a", Finite(9.0), Some(1.0)),
            cand("b", Infinite, Some(0.5)),
            cand("c", Undefined, Some(100.0)),
            cand("d", Finite(3.0), None),
        ];
        let r = rank_stratum(&cs, 5).unwrap();
        assert_eq!(order(&r), vec!["b", "a"]);
    }

    #[test]
    fn single_entry_is_one_one() {
        let r = rank_stratum(&[cand("a", Finite(1.2), Some(4.0))], 1).unwrap();
        assert_eq!((r[0].rank_by_discrepancy, r[0].rank_by_rate, r[0].flagged), (1, 1, false));
        assert_eq!(rank_stratum(&[], 1).unwrap(), vec![]);
        assert_eq!(rank_stratum(&[], 0), Err(RankingError::InvalidK));
    }

    #[test]
    fn strata_bounds() {
        let s = Stratum::defaults();
        assert!(s[0].contains(500_001) && !s[0].contains(500_000));
        assert!(s[1].contains(500_000) && s[1].contains(200_001) && !s[1].contains(200_000));
        assert!(validate_strata(&s).is_ok());
        assert!(validate_strata(&[Stratum::new("x", 10, Some(10))]).is_err());
        assert!(validate_strata(&[Stratum::new("x", 10, Some(30)), Stratum::new("y", 20, None)]).is_err());
        assert!(validate_strata(&[Stratum::new("x", 10, Some(30)), Stratum::new("x", 30, None)]).is_err());
    }

    fn report_of(entries: Vec<RankedEntry>) -> InspectionReport {
        InspectionReport {
            date: NaiveDate::from_ymd_opt(2021, 1, 31).unwrap(),
            strata: Stratum::defaults(),
            parameters: ReportParameters {
                k: 1,
                operators: vec!["A".into()],
                mode: RankingMode::PerOperator,
                tie_break_policy: TIE_BREAK_POLICY.into(),
            },
            sections: vec![ReportSection {
                stratum: Stratum::defaults().remove(0),
                operator: Some("A".into()),
                entries,
            }],
            excluded: vec![],
        }
    }

    #[test]
    fn divergence_fraction() {
        let cs = [
            cand("a", Finite(2.0), Some(10.0)),
            cand("b", Finite(0.5), Some(50.0)),
            cand("c", Finite(1.5), Some(20.0)),
        ];
        let summary = divergence_summary(&report_of(rank_stratum(&cs, 1).unwrap()), 1);
        assert_eq!(summary.overall, DivergenceFigure::new(1, 1));
        assert_eq!(summary.overall.fraction, 1.0);

        let agree = [cand("a", Finite(2.0), Some(10.0)), cand("b", Finite(1.0), Some(5.0))];
        let summary = divergence_summary(&report_of(rank_stratum(&agree, 1).unwrap()), 1);
        assert_eq!(summary.overall.fraction, 0.0);
        assert_eq!(divergence_summary(&report_of(vec![]), 1).overall.fraction, 0.0);
    }

    #[test]
    fn csv_has_dash_column() {
        let cs = [cand("a", Finite(2.0), Some(10.0)), cand("b", Infinite, Some(1.0))];
        let mut out = Vec::new();
        write_report_csv(&report_of(rank_stratum(&cs, 1).unwrap()), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_CSV_HEADER.join(","));
        assert_eq!(lines[1], "above-500k,A,b,B,inf,1.00000000000000,1,2,true,1-2");
        assert_eq!(lines[2], "above-500k,A,a,A,2.00000000000000,10.0000000000000,2,1,false,2-1");
    }
}
