//! Influence network construction from classified urban relations.
//!
//! Each influencing/influenced center pair gets a score from its relations:
//! an order-discounted average over the ten goods-and-services areas, an
//! order-discounted average over the four metropolis themes, or a full link
//! worth 1. The score is spread over the influencing center's municipalities
//! by population, every member of the influenced center receives the same
//! predecessor set, and the summed weights are normalized per target.

mod tables;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphBuilder, InfluenceGraph, VertexId};
use crate::scalar::Scalar;

pub use tables::{
    read_centers, read_municipalities, read_relations, write_centers, write_municipalities, write_relations,
    CENTERS_HEADER, MUNICIPALITIES_HEADER, RELATIONS_HEADER,
};

/// The ten goods-and-services areas surveyed for proximity relations.
pub const GOODS_SERVICES_AREAS: [&str; 10] = [
    "clothing and footwear",
    "furniture and electronics",
    "low- and medium-complexity healthcare",
    "high-complexity healthcare",
    "higher education",
    "cultural activities",
    "sports activities",
    "airport",
    "newspapers",
    "public transportation",
];

/// The four command-and-control themes linking metropolises.
pub const METRO_THEMES: [&str; 4] = [
    "public management",
    "business management",
    "road and waterway links",
    "airway links",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Municipality {
    pub id: VertexId,
    pub name: String,
    pub population: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CenterId(pub String);

impl fmt::Display for CenterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CenterId {
    fn from(s: &str) -> Self {
        CenterId(s.to_owned())
    }
}

/// One or more municipalities acting as a single urban unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrbanCenter {
    pub center_id: CenterId,
    pub members: Vec<VertexId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationCategory {
    GoodsServices,
    MetroLink,
    FullLink,
}

impl RelationCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationCategory::GoodsServices => "goods_services",
            RelationCategory::MetroLink => "metro_link",
            RelationCategory::FullLink => "full_link",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "goods_services" => Some(RelationCategory::GoodsServices),
            "metro_link" => Some(RelationCategory::MetroLink),
            "full_link" => Some(RelationCategory::FullLink),
            _ => None,
        }
    }
}

/// 1st, 2nd or 3rd order relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationOrder(u8);

impl RelationOrder {
    pub fn new(order: u8) -> Option<Self> {
        (1..=3).contains(&order).then_some(Self(order))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    /// The influencing center.
    pub from_center: CenterId,
    /// The influenced center.
    pub to_center: CenterId,
    pub category: RelationCategory,
    /// Area or theme; empty for full links.
    pub dimension: String,
    /// `None` only for full links.
    pub order: Option<RelationOrder>,
}

impl RelationRecord {
    fn describe(&self) -> String {
        if self.category == RelationCategory::FullLink {
            format!("{} -> {} ({})", self.from_center, self.to_center, self.category.as_str())
        } else {
            format!(
                "{} -> {} ({}/{})",
                self.from_center,
                self.to_center,
                self.category.as_str(),
                self.dimension
            )
        }
    }
}

/// Relation-order discounts and averaging denominators.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig<T> {
    pub goods_services_discounts: [T; 3],
    pub metro_discounts: [T; 3],
    pub goods_services_dimension_count: usize,
    pub metro_dimension_count: usize,
}

impl<T: Scalar> Default for BuildConfig<T> {
    fn default() -> Self {
        Self::standard()
    }
}

impl<T: Scalar> BuildConfig<T> {
    /// 100/95/90% for goods and services, 100/50/33.3% for metropolis links.
    pub fn standard() -> Self {
        Self {
            goods_services_discounts: [T::one(), T::ratio(95, 100), T::ratio(90, 100)],
            metro_discounts: [T::one(), T::ratio(1, 2), T::ratio(1, 3)],
            goods_services_dimension_count: GOODS_SERVICES_AREAS.len(),
            metro_dimension_count: METRO_THEMES.len(),
        }
    }

    /// Every discount multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            goods_services_discounts: self.goods_services_discounts.map(|d| d * factor),
            metro_discounts: self.metro_discounts.map(|d| d * factor),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), InfluenceError> {
        for (name, ds) in [
            ("goods_services_discounts", &self.goods_services_discounts),
            ("metro_discounts", &self.metro_discounts),
        ] {
            let in_range = ds.iter().all(|&d| d > T::zero() && d <= T::one());
            let non_increasing = ds.windows(2).all(|w| w[1] <= w[0]);
            if !in_range || !non_increasing {
                return Err(InfluenceError::InvalidConfig(format!(
                    "{name} must lie in (0, 1] and not increase with order"
                )));
            }
        }
        if self.goods_services_dimension_count == 0 || self.metro_dimension_count == 0 {
            return Err(InfluenceError::InvalidConfig("dimension counts must be positive".into()));
        }
        Ok(())
    }

    fn discount(&self, category: RelationCategory, order: RelationOrder) -> T {
        let i = usize::from(order.get() - 1);
        match category {
            RelationCategory::GoodsServices => self.goods_services_discounts[i],
            RelationCategory::MetroLink => self.metro_discounts[i],
            RelationCategory::FullLink => T::one(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfluenceError {
    #[error("no relations given for the center pair")]
    NoRelations,
    #[error("relations for one score must share a center pair, found {first} and {other}")]
    PairMismatch { first: String, other: String },
    #[error("center pair {from} -> {to} mixes relation categories")]
    MixedCategories { from: CenterId, to: CenterId },
    #[error("center pair {from} -> {to} has more than one full link")]
    MultipleFullLinks { from: CenterId, to: CenterId },
    #[error("center pair {from} -> {to} lists dimension `{dimension}` more than once")]
    DuplicateDimension {
        from: CenterId,
        to: CenterId,
        dimension: String,
    },
    #[error("relation {0}: order is required")]
    MissingOrder(String),
    #[error("relation {0}: dimension is required")]
    MissingDimension(String),
    #[error("center pair {from} -> {to} has {found} dimensions but the average is over {allowed}")]
    TooManyDimensions {
        from: CenterId,
        to: CenterId,
        found: usize,
        allowed: usize,
    },
    #[error("influencing center {0} has zero total population")]
    ZeroSourcePopulation(CenterId),
    #[error("unknown municipality `{0}`")]
    UnknownMunicipality(VertexId),
    #[error("score must be positive and finite")]
    InvalidScore,
    #[error("invalid build configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid influence data:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Strength of `from`'s influence on `to`, from all relations of the pair.
pub fn center_influence_score<T: Scalar>(
    relations: &[RelationRecord],
    config: &BuildConfig<T>,
) -> Result<T, InfluenceError> {
    let first = relations.first().ok_or(InfluenceError::NoRelations)?;
    let (from, to) = (&first.from_center, &first.to_center);
    for r in relations {
        if (&r.from_center, &r.to_center) != (from, to) {
            return Err(InfluenceError::PairMismatch {
                first: format!("{from} -> {to}"),
                other: format!("{} -> {}", r.from_center, r.to_center),
            });
        }
        if r.category != first.category {
            return Err(InfluenceError::MixedCategories {
                from: from.clone(),
                to: to.clone(),
            });
        }
    }
    let denominator = match first.category {
        RelationCategory::FullLink => {
            if relations.len() > 1 {
                return Err(InfluenceError::MultipleFullLinks {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
            return Ok(T::one());
        }
        RelationCategory::GoodsServices => config.goods_services_dimension_count,
        RelationCategory::MetroLink => config.metro_dimension_count,
    };
    let mut by_dimension: BTreeMap<&str, RelationOrder> = BTreeMap::new();
    for r in relations {
        let order = r.order.ok_or_else(|| InfluenceError::MissingOrder(r.describe()))?;
        if r.dimension.trim().is_empty() {
            return Err(InfluenceError::MissingDimension(r.describe()));
        }
        if by_dimension.insert(r.dimension.as_str(), order).is_some() {
            return Err(InfluenceError::DuplicateDimension {
                from: from.clone(),
                to: to.clone(),
                dimension: r.dimension.clone(),
            });
        }
    }
    if by_dimension.len() > denominator {
        return Err(InfluenceError::TooManyDimensions {
            from: from.clone(),
            to: to.clone(),
            found: by_dimension.len(),
            allowed: denominator,
        });
    }
    // Absent dimensions contribute zero to a fixed-denominator mean.
    let total: T = by_dimension
        .values()
        .map(|&o| config.discount(first.category, o))
        .sum();
    Ok(total / T::from_int(denominator as i64))
}

/// Spreads a center-pair score over municipalities.
///
/// Every target member receives the full score, split among the source
/// members in proportion to their populations. A municipality never
/// influences itself. Returns `(source, target, weight)`.
pub fn distribute_to_municipalities<T: Scalar>(
    score: T,
    from: &UrbanCenter,
    to: &UrbanCenter,
    municipalities: &HashMap<VertexId, Municipality>,
) -> Result<Vec<(VertexId, VertexId, T)>, InfluenceError> {
    if !(score > T::zero() && score.is_finite_value()) {
        return Err(InfluenceError::InvalidScore);
    }
    let population = |id: &VertexId| {
        municipalities
            .get(id)
            .map(|m| m.population)
            .ok_or_else(|| InfluenceError::UnknownMunicipality(id.clone()))
    };
    let sources: BTreeSet<&VertexId> = from.members.iter().collect();
    let targets: BTreeSet<&VertexId> = to.members.iter().collect();
    let mut total: u64 = 0;
    for s in &sources {
        total += population(s)?;
    }
    if total == 0 {
        return Err(InfluenceError::ZeroSourcePopulation(from.center_id.clone()));
    }
    let total = T::from_u64(total).expect("population fits the scalar");
    let mut edges = Vec::with_capacity(sources.len() * targets.len());
    for t in &targets {
        population(t)?;
        for s in &sources {
            if s == t {
                continue;
            }
            let share = T::from_u64(population(s)?).expect("population fits the scalar") / total;
            edges.push(((*s).clone(), (*t).clone(), score * share));
        }
    }
    Ok(edges)
}

/// What the build noticed without failing.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BuildDiagnostics {
    pub vertices: usize,
    pub edges: usize,
    /// Vertices without predecessors; they get no expectation.
    pub isolated_vertices: Vec<VertexId>,
    /// Municipalities that belong to no urban center.
    pub unassigned_municipalities: Vec<VertexId>,
    pub dropped_self_loops: usize,
    pub warnings: Vec<String>,
}

impl BuildDiagnostics {
    /// Compact summary: counts only.
    pub fn counts(&self) -> DiagnosticCounts {
        DiagnosticCounts {
            vertices: self.vertices,
            edges: self.edges,
            isolated_vertices: self.isolated_vertices.len(),
            unassigned_municipalities: self.unassigned_municipalities.len(),
            dropped_self_loops: self.dropped_self_loops,
            warnings: self.warnings.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiagnosticCounts {
    pub vertices: usize,
    pub edges: usize,
    pub isolated_vertices: usize,
    pub unassigned_municipalities: usize,
    pub dropped_self_loops: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone)]
pub struct BuildOutput<T> {
    pub graph: InfluenceGraph<T>,
    pub diagnostics: BuildDiagnostics,
}

/// Builds the normalized influence graph, one vertex per municipality.
///
/// Vertices are ordered by id and contributions are accumulated in center-pair
/// order, so the result does not depend on input row order.
pub fn build_graph<T: Scalar>(
    municipalities: &[Municipality],
    centers: &[UrbanCenter],
    relations: &[RelationRecord],
    config: &BuildConfig<T>,
) -> Result<BuildOutput<T>, InfluenceError> {
    config.validate()?;
    let mut problems = Vec::new();

    let mut muni_by_id: HashMap<VertexId, Municipality> = HashMap::new();
    for m in municipalities {
        if m.population == 0 {
            problems.push(format!("municipality {}: population must be at least 1", m.id));
        }
        if muni_by_id.insert(m.id.clone(), m.clone()).is_some() {
            problems.push(format!("municipality {}: duplicate id", m.id));
        }
    }

    let mut center_by_id: BTreeMap<&CenterId, &UrbanCenter> = BTreeMap::new();
    let mut owner: HashMap<&VertexId, &CenterId> = HashMap::new();
    for c in centers {
        if center_by_id.insert(&c.center_id, c).is_some() {
            problems.push(format!("center {}: duplicate id", c.center_id));
        }
        if c.members.is_empty() {
            problems.push(format!("center {}: no members", c.center_id));
        }
        for m in &c.members {
            if !muni_by_id.contains_key(m) {
                problems.push(format!("center {}: unknown municipality `{m}`", c.center_id));
            }
            if let Some(prev) = owner.insert(m, &c.center_id) {
                if prev != &c.center_id {
                    problems.push(format!(
                        "municipality {m} belongs to both center {prev} and center {}",
                        c.center_id
                    ));
                }
            }
        }
    }

    let mut pairs: BTreeMap<(&CenterId, &CenterId), Vec<RelationRecord>> = BTreeMap::new();
    for (i, r) in relations.iter().enumerate() {
        let label = format!("relation #{} {}", i + 1, r.describe());
        let mut ok = true;
        for (role, id) in [("from_center", &r.from_center), ("to_center", &r.to_center)] {
            if !center_by_id.contains_key(id) {
                problems.push(format!("{label}: unknown {role} `{id}`"));
                ok = false;
            }
        }
        if r.from_center == r.to_center {
            problems.push(format!("{label}: a center cannot influence itself"));
            ok = false;
        }
        if ok {
            pairs.entry((&r.from_center, &r.to_center)).or_default().push(r.clone());
        }
    }
    if !problems.is_empty() {
        return Err(InfluenceError::Invalid(problems));
    }

    let mut ids: Vec<VertexId> = municipalities.iter().map(|m| m.id.clone()).collect();
    ids.sort();
    let mut builder = GraphBuilder::<T>::with_vertices(ids.iter().cloned()).expect("ids checked unique");
    let mut diagnostics = BuildDiagnostics::default();

    for ((from, to), records) in &pairs {
        let score = center_influence_score(records, config).map_err(|e| InfluenceError::Invalid(vec![e.to_string()]))?;
        let (from_c, to_c) = (center_by_id[from], center_by_id[to]);
        let edges = distribute_to_municipalities(score, from_c, to_c, &muni_by_id)?;
        diagnostics.dropped_self_loops += to_c.members.iter().filter(|t| from_c.members.contains(t)).count();
        for (s, t, w) in edges {
            builder.accumulate_edge(&t, &s, w).expect("validated vertices and no self-loops");
        }
    }

    let graph = builder.build().normalize();
    diagnostics.vertices = graph.len();
    diagnostics.edges = graph.edge_count();
    diagnostics.isolated_vertices = graph.source_vertices().into_iter().cloned().collect();
    diagnostics.unassigned_municipalities = ids.iter().filter(|id| !owner.contains_key(id)).cloned().collect();
    if relations.is_empty() {
        diagnostics.warnings.push("no relations: every vertex is isolated".into());
    }
    if !diagnostics.unassigned_municipalities.is_empty() {
        diagnostics.warnings.push(format!(
            "{} municipalities belong to no urban center",
            diagnostics.unassigned_municipalities.len()
        ));
    }
    let related: BTreeSet<&CenterId> = pairs.keys().flat_map(|(a, b)| [*a, *b]).collect();
    for c in center_by_id.keys() {
        if !related.contains(c) {
            diagnostics.warnings.push(format!("center {c} takes part in no relation"));
        }
    }
    Ok(BuildOutput { graph, diagnostics })
}
