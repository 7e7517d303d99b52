//! Seeded synthetic worlds for demonstrations and end-to-end checks.
//!
//! A world is a set of disconnected regions. Each region has two metropolises,
//! three mid-size cities (one of them a two-municipality center), six towns
//! and one municipality outside every center. Consumers are multiples of
//! 10,000 and the baseline is four complaints per 10,000 consumers a day, so
//! every unaffected rate is exactly 40 per 100,000 before jitter.
//!
//! Jitter scales a pair's complaints by a factor drawn once per pair and
//! spreads the extra complaints over a fixed 28-day cycle, so the smoothed
//! rate is constant in time while still differing between pairs.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::VertexId;
use crate::influence::{write_centers, write_municipalities, write_relations};
use crate::influence::{
    CenterId, Municipality, RelationCategory, RelationOrder, RelationRecord, UrbanCenter, GOODS_SERVICES_AREAS,
    METRO_THEMES,
};
use crate::pipeline::{write_complaints, write_consumers};
use crate::pipeline::{ComplaintRecord, ConsumerCount, YearMonth, WINDOW_DAYS};

pub const REGION_NAMES: [&str; 8] = ["north", "south", "east", "west", "central", "coast", "valley", "highland"];

const CONSUMER_UNIT: u64 = 10_000;
const BASE_PER_UNIT: u64 = 4;
const CYCLE: i64 = WINDOW_DAYS as i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// One municipality's complaints scale by `magnitude` from the onset.
    LocalAnomaly,
    /// Every municipality of one region scales by `magnitude` together.
    RegionalAnomaly,
    /// One municipality's smoothed rate steps up by `magnitude` times its
    /// baseline on the onset day.
    StepChange,
    Flat,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::LocalAnomaly => "local-anomaly",
            ScenarioKind::RegionalAnomaly => "regional-anomaly",
            ScenarioKind::StepChange => "step-change",
            ScenarioKind::Flat => "flat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::LocalAnomaly, Self::RegionalAnomaly, Self::StepChange, Self::Flat]
            .into_iter()
            .find(|k| k.as_str() == s)
    }

    fn default_magnitude(self) -> f64 {
        match self {
            ScenarioKind::LocalAnomaly | ScenarioKind::RegionalAnomaly => 3.0,
            ScenarioKind::StepChange => 1.0,
            ScenarioKind::Flat => 1.0,
        }
    }

    fn default_jitter(self) -> f64 {
        match self {
            ScenarioKind::LocalAnomaly | ScenarioKind::RegionalAnomaly => 0.08,
            ScenarioKind::StepChange | ScenarioKind::Flat => 0.0,
        }
    }

    fn default_target(self) -> &'static str {
        match self {
            ScenarioKind::RegionalAnomaly => "north",
            // a town with a single influencing municipality
            ScenarioKind::StepChange => "north-t1",
            _ => "north-c1",
        }
    }
}

/// Generator parameters; `None` fields take the kind's default.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioParams {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub regions: usize,
    pub start: NaiveDate,
    pub days: usize,
    pub operators: Vec<String>,
    /// Municipality id, or region name for a regional anomaly.
    pub target: Option<String>,
    pub affected_operator: Option<String>,
    pub magnitude: Option<f64>,
    pub onset: Option<NaiveDate>,
    /// Half-width of the per-pair rate factor, in `[0, 0.1]`.
    pub jitter: Option<f64>,
}

impl ScenarioParams {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            regions: 3,
            start: NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date"),
            days: 120,
            operators: vec!["A".into(), "B".into()],
            target: None,
            affected_operator: None,
            magnitude: None,
            onset: None,
            jitter: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario parameter: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

/// Parameters with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedParams {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub regions: Vec<String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub operators: Vec<String>,
    pub target: String,
    pub affected_operator: String,
    pub magnitude: f64,
    pub onset: NaiveDate,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AffectedPair {
    pub municipality: VertexId,
    pub operator: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ResolvedParams,
    pub municipalities: Vec<Municipality>,
    pub centers: Vec<UrbanCenter>,
    pub relations: Vec<RelationRecord>,
    pub consumers: Vec<ConsumerCount>,
    pub complaints: Vec<ComplaintRecord>,
    pub affected: Vec<AffectedPair>,
}

pub const SCENARIO_FILES: [&str; 6] = [
    "municipalities.csv",
    "centers.csv",
    "relations.csv",
    "consumers.csv",
    "complaints.csv",
    "scenario.json",
];

#[derive(Serialize)]
struct Manifest<'a> {
    params: &'a ResolvedParams,
    affected: &'a [AffectedPair],
    municipalities: usize,
    relations: usize,
}

impl Scenario {
    /// Every output file, named as in [`SCENARIO_FILES`].
    pub fn render(&self) -> Vec<(&'static str, Vec<u8>)> {
        fn csv(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
            let mut out = Vec::new();
            f(&mut out).expect("writing to memory");
            out
        }
        let manifest = Manifest {
            params: &self.params,
            affected: &self.affected,
            municipalities: self.municipalities.len(),
            relations: self.relations.len(),
        };
        let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        json.push(b'\n');
        vec![
            (SCENARIO_FILES[0], csv(|w| write_municipalities(&self.municipalities, w))),
            (SCENARIO_FILES[1], csv(|w| write_centers(&self.centers, w))),
            (SCENARIO_FILES[2], csv(|w| write_relations(&self.relations, w))),
            (SCENARIO_FILES[3], csv(|w| write_consumers(&self.consumers, w))),
            (SCENARIO_FILES[4], csv(|w| write_complaints(&self.complaints, w))),
            (SCENARIO_FILES[5], json),
        ]
    }

    pub fn region_members(&self, region: &str) -> Vec<VertexId> {
        let prefix = format!("{region}-");
        self.municipalities
            .iter()
            .filter(|m| m.id.as_str().starts_with(&prefix))
            .map(|m| m.id.clone())
            .collect()
    }
}

fn vid(s: String) -> VertexId {
    VertexId::new(s).expect("generated ids are non-empty")
}

fn is_quarter(x: f64) -> bool {
    (x * 4.0).fract() == 0.0
}

fn resolve(p: &ScenarioParams) -> Result<ResolvedParams, ScenarioError> {
    if p.regions == 0 || p.regions > REGION_NAMES.len() {
        return invalid(format!("regions must be between 1 and {}", REGION_NAMES.len()));
    }
    if p.days < WINDOW_DAYS {
        return invalid(format!("days must be at least {WINDOW_DAYS}"));
    }
    if p.operators.is_empty() {
        return invalid("at least one operator is required");
    }
    let unique: BTreeSet<&String> = p.operators.iter().collect();
    if unique.len() != p.operators.len() || p.operators.iter().any(|o| o.trim().is_empty() || o.contains(',')) {
        return invalid("operators must be distinct, non-empty and comma-free");
    }
    let regions: Vec<String> = REGION_NAMES[..p.regions].iter().map(|s| s.to_string()).collect();
    let end = p.start + Duration::days(p.days as i64 - 1);
    let kind = p.kind;

    let target = p.target.clone().unwrap_or_else(|| kind.default_target().to_owned());
    match kind {
        ScenarioKind::RegionalAnomaly => {
            if !regions.contains(&target) {
                return invalid(format!("target region `{target}` must be one of {}", regions.join(", ")));
            }
        }
        ScenarioKind::LocalAnomaly | ScenarioKind::StepChange => {
            let region = target.split('-').next().unwrap_or("");
            let local = &target[region.len().min(target.len())..];
            let known = ["-m1", "-m2", "-c1", "-c2", "-c3a", "-c3b", "-t1", "-t2", "-t3", "-t4", "-t5", "-t6", "-u"];
            if !regions.iter().any(|r| r == region) || !known.contains(&local) {
                return invalid(format!("target municipality `{target}` is not in the generated world"));
            }
        }
        ScenarioKind::Flat => {}
    }

    let affected_operator = p.affected_operator.clone().unwrap_or_else(|| p.operators[0].clone());
    if !p.operators.contains(&affected_operator) {
        return invalid(format!("affected operator `{affected_operator}` is not one of the operators"));
    }
    let magnitude = p.magnitude.unwrap_or(kind.default_magnitude());
    let magnitude_ok = match kind {
        ScenarioKind::LocalAnomaly | ScenarioKind::RegionalAnomaly => magnitude > 1.0 && magnitude <= 100.0,
        ScenarioKind::StepChange => magnitude > 0.0 && magnitude <= 100.0,
        ScenarioKind::Flat => true,
    };
    if !magnitude.is_finite() || !magnitude_ok || !is_quarter(magnitude) {
        return invalid(format!(
            "magnitude {magnitude} must be a multiple of 0.25, above 1 for anomalies and above 0 for a step"
        ));
    }
    let onset = p.onset.unwrap_or(p.start + Duration::days(p.days as i64 / 2));
    if onset < p.start || onset > end {
        return invalid(format!("onset {onset} must lie between {} and {end}", p.start));
    }
    let jitter = p.jitter.unwrap_or(kind.default_jitter());
    if !(0.0..=0.1).contains(&jitter) {
        return invalid(format!("jitter {jitter} must be between 0 and 0.1"));
    }
    Ok(ResolvedParams {
        kind,
        seed: p.seed,
        regions,
        start: p.start,
        end,
        operators: p.operators.clone(),
        target,
        affected_operator,
        magnitude,
        onset,
        jitter,
    })
}

struct World {
    municipalities: Vec<Municipality>,
    centers: Vec<UrbanCenter>,
    relations: Vec<RelationRecord>,
}

fn relation(
    rng: &mut ChaCha8Rng,
    from: &str,
    to: &str,
    category: RelationCategory,
    pool: &[&str],
    max_dims: usize,
) -> Vec<RelationRecord> {
    let n = rng.gen_range(1..=max_dims);
    let mut dims: Vec<&str> = pool.choose_multiple(rng, n).copied().collect();
    dims.sort_unstable();
    dims.into_iter()
        .map(|d| RelationRecord {
            from_center: CenterId(from.to_owned()),
            to_center: CenterId(to.to_owned()),
            category,
            dimension: d.to_owned(),
            order: RelationOrder::new(rng.gen_range(1..=3)),
        })
        .collect()
}

fn full_link(from: &str, to: &str) -> RelationRecord {
    RelationRecord {
        from_center: CenterId(from.to_owned()),
        to_center: CenterId(to.to_owned()),
        category: RelationCategory::FullLink,
        dimension: String::new(),
        order: None,
    }
}

fn build_world(rng: &mut ChaCha8Rng, regions: &[String]) -> World {
    let mut municipalities = Vec::new();
    let mut centers = Vec::new();
    let mut relations = Vec::new();
    for region in regions {
        let title = {
            let mut c = region.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect::<String>()).unwrap_or_default()
        };
        let mut muni = |local: &str, label: &str, pop: std::ops::RangeInclusive<u64>, center: Option<&str>| {
            let id = vid(format!("{region}-{local}"));
            municipalities.push(Municipality {
                id: id.clone(),
                name: format!("{title} {label}"),
                population: rng.gen_range(pop),
            });
            if let Some(c) = center {
                let c = CenterId(format!("{region}-{c}"));
                match centers.iter_mut().find(|u: &&mut UrbanCenter| u.center_id == c) {
                    Some(u) => u.members.push(id),
                    None => centers.push(UrbanCenter {
                        center_id: c,
                        members: vec![id],
                    }),
                }
            }
        };
        muni("m1", "Metropolis", 1_200_000..=2_500_000, Some("M1"));
        muni("m2", "Capital", 600_000..=1_100_000, Some("M2"));
        muni("c1", "City One", 220_000..=480_000, Some("C1"));
        muni("c2", "City Two", 220_000..=480_000, Some("C2"));
        muni("c3a", "Twin North", 210_000..=450_000, Some("C3"));
        muni("c3b", "Twin South", 210_000..=450_000, Some("C3"));
        for t in 1..=6 {
            muni(&format!("t{t}"), &format!("Town {t}"), 20_000..=180_000, Some(&format!("T{t}")));
        }
        muni("u", "Outpost", 5_000..=50_000, None);

        let c = |local: &str| format!("{region}-{local}");
        let gs = RelationCategory::GoodsServices;
        let metro = RelationCategory::MetroLink;
        let areas = &GOODS_SERVICES_AREAS[..];
        let themes = &METRO_THEMES[..];
        relations.extend(relation(rng, &c("M1"), &c("M2"), metro, themes, 4));
        relations.extend(relation(rng, &c("M2"), &c("M1"), metro, themes, 4));
        for city in ["C1", "C2", "C3"] {
            relations.extend(relation(rng, &c("M1"), &c(city), gs, areas, 10));
            relations.extend(relation(rng, &c("M2"), &c(city), gs, areas, 10));
        }
        relations.extend(relation(rng, &c("C1"), &c("T1"), gs, areas, 10));
        relations.extend(relation(rng, &c("C2"), &c("T2"), gs, areas, 10));
        relations.extend(relation(rng, &c("C3"), &c("T3"), gs, areas, 10));
        relations.extend(relation(rng, &c("C1"), &c("T4"), gs, areas, 10));
        relations.push(full_link(&c("M1"), &c("T4")));
        relations.extend(relation(rng, &c("C2"), &c("T5"), gs, areas, 10));
        relations.extend(relation(rng, &c("M2"), &c("T5"), gs, areas, 10));
        relations.push(full_link(&c("M1"), &c("T6")));
    }
    World {
        municipalities,
        centers,
        relations,
    }
}

/// Complaint counts for one pair over the whole span.
fn daily_counts(units: u64, days: usize, rule: &PairRule) -> Vec<u64> {
    let base = BASE_PER_UNIT * units;
    (0..days as i64)
        .map(|i| match *rule {
            PairRule::Jitter(factor) => {
                let per_cycle = (base as f64 * CYCLE as f64 * factor).round() as u64;
                let (q, r) = (per_cycle / CYCLE as u64, per_cycle % CYCLE as u64);
                q + u64::from(((i % CYCLE) as u64) < r)
            }
            PairRule::Scale { onset, factor } => {
                if i >= onset {
                    (base as f64 * factor) as u64
                } else {
                    base
                }
            }
            PairRule::Step { onset, delta } => {
                let burst = if i >= onset && (i - onset) % CYCLE == 0 {
                    (base as f64 * CYCLE as f64 * delta) as u64
                } else {
                    0
                };
                base + burst
            }
        })
        .collect()
}

enum PairRule {
    Jitter(f64),
    Scale { onset: i64, factor: f64 },
    Step { onset: i64, delta: f64 },
}

/// Builds a world deterministically from `params.seed`.
pub fn generate(params: &ScenarioParams) -> Result<Scenario, ScenarioError> {
    let p = resolve(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let world = build_world(&mut rng, &p.regions);

    let affected_munis: Vec<VertexId> = match p.kind {
        ScenarioKind::Flat => Vec::new(),
        ScenarioKind::RegionalAnomaly => {
            let prefix = format!("{}-", p.target);
            world
                .municipalities
                .iter()
                .filter(|m| m.id.as_str().starts_with(&prefix))
                .map(|m| m.id.clone())
                .collect()
        }
        _ => vec![vid(p.target.clone())],
    };
    let affected: Vec<AffectedPair> = affected_munis
        .iter()
        .map(|m| AffectedPair {
            municipality: m.clone(),
            operator: p.affected_operator.clone(),
        })
        .collect();

    let days = (p.end - p.start).num_days() as usize + 1;
    let onset = (p.onset - p.start).num_days();
    let mut months = vec![YearMonth::of(p.start)];
    while *months.last().expect("non-empty") < YearMonth::of(p.end) {
        months.push(months.last().expect("non-empty").next());
    }

    let mut consumers = Vec::new();
    let mut complaints = Vec::new();
    for op in &p.operators {
        for m in &world.municipalities {
            let share = rng.gen_range(0.15..0.45);
            let units = ((m.population as f64 * share) / CONSUMER_UNIT as f64).round().max(1.0) as u64;
            let factor = 1.0 + rng.gen_range(-1.0..=1.0) * p.jitter;
            let is_affected = affected.iter().any(|a| a.municipality == m.id && &a.operator == op);
            let rule = match (is_affected, p.kind) {
                (true, ScenarioKind::StepChange) => PairRule::Step {
                    onset,
                    delta: p.magnitude,
                },
                (true, _) => PairRule::Scale {
                    onset,
                    factor: p.magnitude,
                },
                (false, _) => PairRule::Jitter(factor),
            };
            for &month in &months {
                consumers.push(ConsumerCount {
                    municipality: m.id.clone(),
                    operator: op.clone(),
                    month,
                    consumers: units * CONSUMER_UNIT,
                });
            }
            for (i, count) in daily_counts(units, days, &rule).into_iter().enumerate() {
                if count > 0 {
                    complaints.push(ComplaintRecord {
                        municipality: m.id.clone(),
                        operator: op.clone(),
                        date: p.start + Duration::days(i as i64),
                        count,
                    });
                }
            }
        }
    }

    Ok(Scenario {
        params: p,
        municipalities: world.municipalities,
        centers: world.centers,
        relations: world.relations,
        consumers,
        complaints,
        affected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::{build_graph, BuildConfig};
    use crate::pipeline::ComplaintStore;

    fn store(s: &Scenario) -> ComplaintStore {
        ComplaintStore::from_records(&s.consumers, &s.complaints).unwrap()
    }

    #[test]
    fn world_builds_into_a_graph() {
        let s = generate(&ScenarioParams::new(ScenarioKind::Flat, 7)).unwrap();
        assert_eq!(s.municipalities.len(), 3 * 13);
        let out = build_graph::<f64>(&s.municipalities, &s.centers, &s.relations, &BuildConfig::standard()).unwrap();
        assert_eq!(out.graph.len(), 39);
        assert_eq!(out.diagnostics.unassigned_municipalities.len(), 3);
        let t1 = out.graph.index_of(&VertexId::new("north-t1").unwrap()).unwrap();
        assert_eq!(out.graph.incoming(t1).collect::<Vec<_>>().len(), 1);
    }

    #[test]
    fn same_seed_same_bytes() {
        let p = ScenarioParams::new(ScenarioKind::LocalAnomaly, 11);
        assert_eq!(generate(&p).unwrap().render(), generate(&p).unwrap().render());
        let q = ScenarioParams::new(ScenarioKind::LocalAnomaly, 12);
        assert_ne!(generate(&p).unwrap().render(), generate(&q).unwrap().render());
    }

    #[test]
    fn jittered_rates_are_constant_after_warmup() {
        let s = generate(&ScenarioParams::new(ScenarioKind::RegionalAnomaly, 3)).unwrap();
        let st = store(&s);
        let series = st.series(&VertexId::new("south-c2").unwrap(), "A").unwrap();
        let smoothed: Vec<f64> = series.points.iter().filter_map(|p| p.ma28).collect();
        assert_eq!(smoothed.len(), 120 - 27);
        for v in &smoothed {
            assert!((v - smoothed[0]).abs() < 1e-9);
        }
        assert!((smoothed[0] / 40.0 - 1.0).abs() <= 0.08 + 0.02);
    }

    #[test]
    fn local_anomaly_triples_daily_rate() {
        let s = generate(&ScenarioParams::new(ScenarioKind::LocalAnomaly, 5)).unwrap();
        let st = store(&s);
        let series = st.series(&VertexId::new("north-c1").unwrap(), "A").unwrap();
        let onset = (s.params.onset - s.params.start).num_days() as usize;
        for (i, p) in series.points.iter().enumerate() {
            let expected = if i >= onset { 120.0 } else { 40.0 };
            assert_eq!(p.daily_rate, Some(expected));
        }
        let other = st.series(&VertexId::new("north-c1").unwrap(), "B").unwrap();
        assert!(other.points.iter().all(|p| p.daily_rate != Some(120.0)));
    }

    #[test]
    fn regional_anomaly_scales_every_member() {
        let s = generate(&ScenarioParams::new(ScenarioKind::RegionalAnomaly, 5)).unwrap();
        assert_eq!(s.affected.len(), 13);
        let st = store(&s);
        let last = st.span().1;
        for m in s.region_members("north") {
            let p = st.series(&m, "A").unwrap().points.last().unwrap();
            assert_eq!(p.daily_rate, Some(120.0), "{m} on {last}");
        }
    }

    #[test]
    fn step_changes_smoothed_rate_exactly() {
        let s = generate(&ScenarioParams::new(ScenarioKind::StepChange, 1)).unwrap();
        let st = store(&s);
        let series = st.series(&VertexId::new("north-t1").unwrap(), "A").unwrap();
        let onset = (s.params.onset - s.params.start).num_days() as usize;
        for (i, p) in series.points.iter().enumerate().skip(27) {
            assert_eq!(p.ma28, Some(if i >= onset { 80.0 } else { 40.0 }), "day {i}");
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let bad = |f: &dyn Fn(&mut ScenarioParams)| {
            let mut p = ScenarioParams::new(ScenarioKind::LocalAnomaly, 0);
            f(&mut p);
            generate(&p).is_err()
        };
        assert!(bad(&|p| p.regions = 0));
        assert!(bad(&|p| p.days = 10));
        assert!(bad(&|p| p.magnitude = Some(0.5)));
        assert!(bad(&|p| p.magnitude = Some(2.1)));
        assert!(bad(&|p| p.target = Some("nowhere-c1".into())));
        assert!(bad(&|p| p.target = Some("north-zz".into())));
        assert!(bad(&|p| p.jitter = Some(0.5)));
        assert!(bad(&|p| p.affected_operator = Some("Z".into())));
        assert!(bad(&|p| p.onset = NaiveDate::from_ymd_opt(2020, 1, 1)));
        assert!(bad(&|p| p.operators = vec!["A".into(), "A".into()]));
        assert!(!bad(&|p| p.magnitude = Some(2.25)));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [
            ScenarioKind::LocalAnomaly,
            ScenarioKind::RegionalAnomaly,
            ScenarioKind::StepChange,
            ScenarioKind::Flat,
        ] {
            assert_eq!(ScenarioKind::parse(k.as_str()), Some(k));
        }
    }
}
