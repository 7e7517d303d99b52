//! Sparse weighted digraph with incoming-edge (row) storage.
//!
//! Weights follow the adjacency convention `W[i][j] = w_ij`: the weight of
//! the edge from source `j` into target `i`. Rows are stored compressed, one
//! row per target, so both the in-degree and the predictor `y = W x` are a
//! single pass over a row.

mod discrepancy;
mod signal;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use discrepancy::{
    discrepancy, discrepancy_identity_check, group_discrepancy, laplacian_transform, predict,
    Discrepancy, DiscrepancyValue,
};
pub use signal::GraphSignal;

/// Administrative-unit code used as a vertex key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(id: impl Into<String>) -> Result<Self, GraphError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(GraphError::EmptyVertexId);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for VertexId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("vertex id must not be empty")]
    EmptyVertexId,
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(VertexId),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(VertexId),
    #[error("self-loop on `{0}` is not allowed")]
    SelfLoop(VertexId),
    #[error("edge {source_id} -> {target}: weight {weight} must be finite and non-negative")]
    InvalidWeight {
        target: VertexId,
        source_id: VertexId,
        weight: String,
    },
    #[error("duplicate edge {source_id} -> {target}")]
    DuplicateEdge { target: VertexId, source_id: VertexId },
    #[error("operation requires an in-degree normalized graph")]
    NotNormalized,
    #[error("signal has {signal} values but the graph has {graph} vertices")]
    SignalLength { signal: usize, graph: usize },
    #[error("signal value at `{vertex}` must be finite and non-negative, got {value}")]
    InvalidSignalValue { vertex: VertexId, value: String },
    #[error("group must contain at least one vertex")]
    EmptyGroup,
}

/// Immutable weighted digraph over administrative units.
///
/// Stored edges always have strictly positive weight and never form a
/// self-loop. `is_normalized` is true when every vertex with at least one
/// predecessor has in-degree 1 within [`Scalar::normalization_tolerance`].
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceGraph<T> {
    vertices: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    row_ptr: Vec<usize>,
    sources: Vec<usize>,
    weights: Vec<T>,
    normalized: bool,
}

impl<T: Scalar> InfluenceGraph<T> {
    /// Builds a graph from a vertex list and `(target, source, weight)` triples.
    pub fn from_edges<I>(vertices: Vec<VertexId>, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (VertexId, VertexId, T)>,
    {
        let mut builder = GraphBuilder::with_vertices(vertices)?;
        for (target, source, weight) in edges {
            builder.add_edge(&target, &source, weight)?;
        }
        Ok(builder.build())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> &VertexId {
        &self.vertices[index]
    }

    pub fn index_of(&self, id: &VertexId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Predecessors of the vertex at `target` with their weights, ordered by
    /// source index.
    pub fn incoming(&self, target: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[target]..self.row_ptr[target + 1];
        self.sources[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn has_predecessors(&self, target: usize) -> bool {
        self.row_ptr[target + 1] > self.row_ptr[target]
    }

    /// Every stored edge as `(target, source, weight)` in row order.
    pub fn edges(&self) -> impl Iterator<Item = (&VertexId, &VertexId, T)> + '_ {
        (0..self.len()).flat_map(move |t| {
            self.incoming(t)
                .map(move |(s, w)| (&self.vertices[t], &self.vertices[s], w))
        })
    }

    /// `w_ij`, zero when the edge is absent.
    pub fn weight(&self, target: &VertexId, source: &VertexId) -> Result<T, GraphError> {
        let t = self.require(target)?;
        let s = self.require(source)?;
        let row = &self.sources[self.row_ptr[t]..self.row_ptr[t + 1]];
        Ok(match row.binary_search(&s) {
            Ok(k) => self.weights[self.row_ptr[t] + k],
            Err(_) => T::zero(),
        })
    }

    /// Sum of the weights of the edges coming into `v`.
    pub fn in_degree(&self, v: &VertexId) -> Result<T, GraphError> {
        let i = self.require(v)?;
        Ok(self.in_degree_at(i))
    }

    pub fn in_degree_at(&self, index: usize) -> T {
        self.weights[self.row_ptr[index]..self.row_ptr[index + 1]]
            .iter()
            .copied()
            .sum()
    }

    /// Vertices without predecessors. They have no expectation and are left
    /// edge-less by [`normalize`](Self::normalize).
    pub fn source_vertices(&self) -> Vec<&VertexId> {
        (0..self.len())
            .filter(|&i| !self.has_predecessors(i))
            .map(|i| &self.vertices[i])
            .collect()
    }

    /// Divides every incoming weight by the target's in-degree.
    pub fn normalize(&self) -> Self {
        if self.normalized {
            return self.clone();
        }
        let mut weights = self.weights.clone();
        for t in 0..self.len() {
            let range = self.row_ptr[t]..self.row_ptr[t + 1];
            let degree = self.in_degree_at(t);
            for w in &mut weights[range] {
                *w = *w / degree;
            }
        }
        Self {
            weights,
            normalized: true,
            ..self.clone()
        }
    }

    fn require(&self, v: &VertexId) -> Result<usize, GraphError> {
        self.index_of(v)
            .ok_or_else(|| GraphError::UnknownVertex(v.clone()))
    }

    fn rows_are_normalized(&self) -> bool {
        let tol = T::normalization_tolerance();
        (0..self.len())
            .filter(|&i| self.has_predecessors(i))
            .all(|i| (self.in_degree_at(i) - T::one()).abs_value() <= tol)
    }
}

/// Incremental constructor for [`InfluenceGraph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder<T> {
    vertices: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    edges: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> Default for GraphBuilder<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> GraphBuilder<T> {
    pub fn new() -> Self {
        Self {
            vertices: Vec::new(),
            index: HashMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn with_vertices(vertices: impl IntoIterator<Item = VertexId>) -> Result<Self, GraphError> {
        let mut builder = Self::new();
        for v in vertices {
            builder.add_vertex(v)?;
        }
        Ok(builder)
    }

    pub fn add_vertex(&mut self, id: VertexId) -> Result<usize, GraphError> {
        if self.index.contains_key(&id) {
            return Err(GraphError::DuplicateVertex(id));
        }
        let i = self.vertices.len();
        self.index.insert(id.clone(), i);
        self.vertices.push(id);
        Ok(i)
    }

    /// Inserts `source -> target`; a second insertion of the same edge fails.
    pub fn add_edge(&mut self, target: &VertexId, source: &VertexId, weight: T) -> Result<(), GraphError> {
        let key = self.check_edge(target, source, weight)?;
        if weight == T::zero() {
            return Ok(());
        }
        if self.edges.insert(key, weight).is_some() {
            return Err(GraphError::DuplicateEdge {
                target: target.clone(),
                source_id: source.clone(),
            });
        }
        Ok(())
    }

    /// Adds `weight` to the edge `source -> target`, creating it if needed.
    pub fn accumulate_edge(&mut self, target: &VertexId, source: &VertexId, weight: T) -> Result<(), GraphError> {
        let key = self.check_edge(target, source, weight)?;
        if weight == T::zero() {
            return Ok(());
        }
        let slot = self.edges.entry(key).or_insert_with(T::zero);
        *slot = *slot + weight;
        Ok(())
    }

    pub fn build(self) -> InfluenceGraph<T> {
        let n = self.vertices.len();
        let mut row_ptr = vec![0usize; n + 1];
        let mut sources = Vec::with_capacity(self.edges.len());
        let mut weights = Vec::with_capacity(self.edges.len());
        // BTreeMap iteration is ordered by (target, source).
        for (&(t, s), &w) in &self.edges {
            row_ptr[t + 1] += 1;
            sources.push(s);
            weights.push(w);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut graph = InfluenceGraph {
            vertices: self.vertices,
            index: self.index,
            row_ptr,
            sources,
            weights,
            normalized: false,
        };
        graph.normalized = graph.rows_are_normalized();
        graph
    }

    fn check_edge(&self, target: &VertexId, source: &VertexId, weight: T) -> Result<(usize, usize), GraphError> {
        let t = *self
            .index
            .get(target)
            .ok_or_else(|| GraphError::UnknownVertex(target.clone()))?;
        let s = *self
            .index
            .get(source)
            .ok_or_else(|| GraphError::UnknownVertex(source.clone()))?;
        if t == s {
            return Err(GraphError::SelfLoop(target.clone()));
        }
        if !weight.is_finite_value() || weight < T::zero() {
            return Err(GraphError::InvalidWeight {
                target: target.clone(),
                source_id: source.clone(),
                weight: weight.to_string(),
            });
        }
        Ok((t, s))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn vid(s: &str) -> VertexId {
        VertexId::new(s).unwrap()
    }

    /// Three-vertex graph: B->A 1.0; A->B 0.6, C->B 0.4; A->C 1.0.
    pub fn g3() -> InfluenceGraph<f64> {
        InfluenceGraph::from_edges(
            vec![vid("A"), vid("B"), vid("C")],
            vec![
                (vid("A"), vid("B"), 1.0),
                (vid("B"), vid("A"), 0.6),
                (vid("B"), vid("C"), 0.4),
                (vid("C"), vid("A"), 1.0),
            ],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn in_degree_of_sourceless_vertex_is_zero() {
        let g: InfluenceGraph<f64> =
            InfluenceGraph::from_edges(vec![vid("u"), vid("v")], vec![(vid("v"), vid("u"), 0.3)]).unwrap();
        assert_eq!(g.in_degree(&vid("u")).unwrap(), 0.0);
        assert_eq!(g.source_vertices(), vec![&vid("u")]);
    }

    #[test]
    fn in_degree_sums_incoming() {
        let g: InfluenceGraph<f64> = InfluenceGraph::from_edges(
            vec![vid("a"), vid("b"), vid("t")],
            vec![(vid("t"), vid("a"), 0.6), (vid("t"), vid("b"), 0.4)],
        )
        .unwrap();
        assert_eq!(g.in_degree(&vid("t")).unwrap(), 1.0);
        assert_eq!(g3().in_degree(&vid("B")).unwrap(), 1.0);
    }

    #[test]
    fn in_degree_unknown_vertex() {
        assert_eq!(
            g3().in_degree(&vid("Z")),
            Err(GraphError::UnknownVertex(vid("Z")))
        );
    }

    #[test]
    fn construction_rejects_bad_edges() {
        let mut b = GraphBuilder::<f64>::with_vertices([vid("a"), vid("b")]).unwrap();
        assert_eq!(b.add_edge(&vid("a"), &vid("a"), 1.0), Err(GraphError::SelfLoop(vid("a"))));
        assert!(matches!(
            b.add_edge(&vid("a"), &vid("b"), -1.0),
            Err(GraphError::InvalidWeight { .. })
        ));
        assert!(matches!(
            b.add_edge(&vid("a"), &vid("b"), f64::NAN),
            Err(GraphError::InvalidWeight { .. })
        ));
        b.add_edge(&vid("a"), &vid("b"), 1.0).unwrap();
        assert!(matches!(
            b.add_edge(&vid("a"), &vid("b"), 1.0),
            Err(GraphError::DuplicateEdge { .. })
        ));
        assert_eq!(
            b.add_vertex(vid("a")),
            Err(GraphError::DuplicateVertex(vid("a")))
        );
        assert_eq!(VertexId::new("  "), Err(GraphError::EmptyVertexId));
    }

    #[test]
    fn zero_weight_means_absent() {
        let g: InfluenceGraph<f64> =
            InfluenceGraph::from_edges(vec![vid("a"), vid("b")], vec![(vid("a"), vid("b"), 0.0)]).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn accumulate_sums_weights() {
        let mut b = GraphBuilder::<f64>::with_vertices([vid("a"), vid("b")]).unwrap();
        b.accumulate_edge(&vid("a"), &vid("b"), 0.25).unwrap();
        b.accumulate_edge(&vid("a"), &vid("b"), 0.5).unwrap();
        let g = b.build();
        assert_eq!(g.weight(&vid("a"), &vid("b")).unwrap(), 0.75);
        assert!(!g.is_normalized());
    }

    #[test]
    fn normalize_divides_by_in_degree() {
        let g: InfluenceGraph<f64> = InfluenceGraph::from_edges(
            vec![vid("a"), vid("b"), vid("t")],
            vec![(vid("t"), vid("a"), 2.0), (vid("t"), vid("b"), 2.0)],
        )
        .unwrap();
        let n = g.normalize();
        assert!(n.is_normalized());
        assert_eq!(n.weight(&vid("t"), &vid("a")).unwrap(), 0.5);
        assert_eq!(n.weight(&vid("t"), &vid("b")).unwrap(), 0.5);

        let g: InfluenceGraph<f64> = InfluenceGraph::from_edges(
            vec![vid("m1"), vid("m2"), vid("m3")],
            vec![(vid("m3"), vid("m1"), 0.075), (vid("m3"), vid("m2"), 0.025)],
        )
        .unwrap();
        let n = g.normalize();
        assert!((n.weight(&vid("m3"), &vid("m1")).unwrap() - 0.75).abs() < 1e-15);
        assert!((n.weight(&vid("m3"), &vid("m2")).unwrap() - 0.25).abs() < 1e-15);
        // Sourceless vertices stay edge-less.
        assert_eq!(n.source_vertices().len(), 2);
    }

    #[test]
    fn normalize_is_idempotent() {
        let g = g3();
        assert!(g.is_normalized());
        let n = g.normalize();
        assert_eq!(n, g);
        assert_eq!(n.normalize(), n);
    }

    #[test]
    fn edges_iterate_in_row_order() {
        let g = g3();
        let edges: Vec<_> = g.edges().map(|(t, s, w)| (t.as_str(), s.as_str(), w)).collect();
        assert_eq!(
            edges,
            vec![("A", "B", 1.0), ("B", "A", 0.6), ("B", "C", 0.4), ("C", "A", 1.0)]
        );
    }
}
