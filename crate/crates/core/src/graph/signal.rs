use super::{GraphError, InfluenceGraph, VertexId};
use crate::scalar::Scalar;

/// One value per vertex, aligned with [`InfluenceGraph::vertices`].
///
/// `None` marks a missing observation. Present values are finite and
/// non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal<T> {
    values: Vec<Option<T>>,
}

impl<T: Scalar> GraphSignal<T> {
    pub fn from_values(graph: &InfluenceGraph<T>, values: Vec<Option<T>>) -> Result<Self, GraphError> {
        if values.len() != graph.len() {
            return Err(GraphError::SignalLength {
                signal: values.len(),
                graph: graph.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = *v {
                if !v.is_finite_value() || v < T::zero() {
                    return Err(GraphError::InvalidSignalValue {
                        vertex: graph.vertex(i).clone(),
                        value: v.to_string(),
                    });
                }
            }
        }
        Ok(Self { values })
    }

    /// Vertices not mentioned are missing.
    pub fn from_map<I>(graph: &InfluenceGraph<T>, entries: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (VertexId, Option<T>)>,
    {
        let mut values = vec![None; graph.len()];
        for (id, v) in entries {
            let i = graph
                .index_of(&id)
                .ok_or(GraphError::UnknownVertex(id))?;
            values[i] = v;
        }
        Self::from_values(graph, values)
    }

    /// Signal with every vertex at `c`.
    pub fn constant(graph: &InfluenceGraph<T>, c: T) -> Result<Self, GraphError> {
        Self::from_values(graph, vec![Some(c); graph.len()])
    }

    pub(crate) fn from_values_unchecked(values: Vec<Option<T>>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<T> {
        self.values[index]
    }

    pub fn values(&self) -> &[Option<T>] {
        &self.values
    }

    /// Multiplies every present value by `factor` (expected to be positive).
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            values: self.values.iter().map(|v| v.map(|v| v * factor)).collect(),
        }
    }

    pub(crate) fn check_len(&self, graph: &InfluenceGraph<T>) -> Result<(), GraphError> {
        if self.len() != graph.len() {
            return Err(GraphError::SignalLength {
                signal: self.len(),
                graph: graph.len(),
            });
        }
        Ok(())
    }
}
