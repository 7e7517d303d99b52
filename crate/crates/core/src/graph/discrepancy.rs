//! Predictor, Laplacian residual and vertex discrepancy.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Serialize, Serializer};

use super::{GraphError, GraphSignal, InfluenceGraph, VertexId};
use crate::scalar::Scalar;

/// Observed-over-expected ratio at a vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discrepancy<T> {
    Finite(T),
    /// Complaints were observed where none were expected.
    Infinite,
    /// No expectation could be formed, or the observation is missing.
    Undefined,
}

impl<T: Scalar> Discrepancy<T> {
    pub fn finite(&self) -> Option<T> {
        match *self {
            Discrepancy::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        !matches!(self, Discrepancy::Undefined)
    }

    /// Ordering by severity: `Infinite` above every finite value, `Undefined`
    /// below everything.
    pub fn severity_cmp(&self, other: &Self) -> Ordering {
        use Discrepancy::*;
        match (self, other) {
            (Infinite, Infinite) | (Undefined, Undefined) => Ordering::Equal,
            (Infinite, _) | (_, Undefined) => Ordering::Greater,
            (_, Infinite) | (Undefined, _) => Ordering::Less,
            (Finite(a), Finite(b)) => a.partial_cmp(b).unwrap_or(Ordering::Equal),
        }
    }

    /// Ratio with the zero-expectation conventions applied.
    pub fn from_ratio(observed: T, expected: T) -> Self {
        if expected > T::zero() {
            Discrepancy::Finite(observed / expected)
        } else if observed > T::zero() {
            Discrepancy::Infinite
        } else {
            Discrepancy::Finite(T::one())
        }
    }
}

impl<T: Serialize> Serialize for Discrepancy<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Discrepancy::Finite(v) => v.serialize(serializer),
            Discrepancy::Infinite => serializer.serialize_str("inf"),
            Discrepancy::Undefined => serializer.serialize_none(),
        }
    }
}

/// A discrepancy together with the two quantities it was formed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscrepancyValue<T> {
    pub value: Discrepancy<T>,
    pub observed: Option<T>,
    pub expected: Option<T>,
}

impl<T: Scalar> DiscrepancyValue<T> {
    pub fn new(observed: Option<T>, expected: Option<T>) -> Self {
        let value = match (observed, expected) {
            (Some(x), Some(y)) => Discrepancy::from_ratio(x, y),
            _ => Discrepancy::Undefined,
        };
        Self {
            value,
            observed,
            expected,
        }
    }
}

fn require_normalized<T: Scalar>(graph: &InfluenceGraph<T>, x: &GraphSignal<T>) -> Result<(), GraphError> {
    if !graph.is_normalized() {
        return Err(GraphError::NotNormalized);
    }
    x.check_len(graph)
}

/// Expected value at every vertex: `y_i = sum_j w_ij x_j`.
///
/// Missing predecessors are dropped and the remaining weights rescaled to sum
/// to one. `y_i` is missing when no predecessor has a value, and equals the
/// shared value exactly when all present predecessors agree.
pub fn predict<T: Scalar>(graph: &InfluenceGraph<T>, x: &GraphSignal<T>) -> Result<GraphSignal<T>, GraphError> {
    require_normalized(graph, x)?;
    let values = (0..graph.len())
        .map(|i| {
            let mut acc = T::zero();
            let mut present = T::zero();
            let mut dropped = false;
            let mut common: Option<T> = None;
            let mut uniform = true;
            for (j, w) in graph.incoming(i) {
                match x.get(j) {
                    Some(xj) => {
                        acc = acc + w * xj;
                        present = present + w;
                        uniform &= *common.get_or_insert(xj) == xj;
                    }
                    None => dropped = true,
                }
            }
            if present == T::zero() {
                None
            } else if uniform {
                // a weighted mean of equal values, without rounding
                common
            } else if dropped {
                Some(acc / present)
            } else {
                Some(acc)
            }
        })
        .collect();
    Ok(GraphSignal::from_values_unchecked(values))
}

/// `[L x]_i = x_i - y_i` on a normalized graph, indexed like the vertices.
pub fn laplacian_transform<T: Scalar>(
    graph: &InfluenceGraph<T>,
    x: &GraphSignal<T>,
) -> Result<Vec<Option<T>>, GraphError> {
    let y = predict(graph, x)?;
    Ok(x.values()
        .iter()
        .zip(y.values())
        .map(|(&xi, &yi)| Some(xi? - yi?))
        .collect())
}

/// Element-wise `x / y`, indexed like the vertices.
pub fn discrepancy<T: Scalar>(
    graph: &InfluenceGraph<T>,
    x: &GraphSignal<T>,
) -> Result<Vec<DiscrepancyValue<T>>, GraphError> {
    let y = predict(graph, x)?;
    Ok(x.values()
        .iter()
        .zip(y.values())
        .map(|(&xi, &yi)| DiscrepancyValue::new(xi, yi))
        .collect())
}

/// Largest `|d_i - ([L x]_i / y_i + 1)|` over vertices with `y_i > 0`.
pub fn discrepancy_identity_check<T: Scalar>(graph: &InfluenceGraph<T>, x: &GraphSignal<T>) -> Result<T, GraphError> {
    let d = discrepancy(graph, x)?;
    let lx = laplacian_transform(graph, x)?;
    let y = predict(graph, x)?;
    let mut worst = T::zero();
    for i in 0..graph.len() {
        let (Some(yi), Some(li), Discrepancy::Finite(di)) = (y.get(i), lx[i], d[i].value) else {
            continue;
        };
        if yi > T::zero() {
            worst = worst.max_value_of((di - (li / yi + T::one())).abs_value());
        }
    }
    Ok(worst)
}

/// `sum x_i / sum y_i` over the members where both are defined.
pub fn group_discrepancy<T: Scalar>(
    graph: &InfluenceGraph<T>,
    x: &GraphSignal<T>,
    group: &[VertexId],
) -> Result<DiscrepancyValue<T>, GraphError> {
    if group.is_empty() {
        return Err(GraphError::EmptyGroup);
    }
    let members = group
        .iter()
        .map(|v| graph.index_of(v).ok_or_else(|| GraphError::UnknownVertex(v.clone())))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let y = predict(graph, x)?;
    let mut sum_x = T::zero();
    let mut sum_y = T::zero();
    let mut any = false;
    for i in members {
        if let (Some(xi), Some(yi)) = (x.get(i), y.get(i)) {
            sum_x = sum_x + xi;
            sum_y = sum_y + yi;
            any = true;
        }
    }
    Ok(if any {
        DiscrepancyValue::new(Some(sum_x), Some(sum_y))
    } else {
        DiscrepancyValue::new(None, None)
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use num_rational::Rational64;

    fn sig(g: &InfluenceGraph<f64>, v: &[Option<f64>]) -> GraphSignal<f64> {
        GraphSignal::from_values(g, v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn predict_g3() {
        let g = g3();
        let y = predict(&g, &sig(&g, &[Some(2.0), Some(1.0), Some(3.0)])).unwrap();
        let y: Vec<f64> = y.values().iter().map(|v| v.unwrap()).collect();
        assert!(close(y[0], 1.0) && close(y[1], 2.4) && close(y[2], 2.0), "{y:?}");
    }

    #[test]
    fn predict_drops_missing_predecessors() {
        let g = g3();
        let y = predict(&g, &sig(&g, &[Some(2.0), None, Some(3.0)])).unwrap();
        assert_eq!(y.get(0), None);
        assert!(close(y.get(1).unwrap(), 2.4));
        assert!(close(y.get(2).unwrap(), 2.0));

        // One of two predecessors missing: the other gets the full weight.
        let y = predict(&g, &sig(&g, &[Some(2.0), Some(1.0), None])).unwrap();
        assert!(close(y.get(1).unwrap(), 2.0));
    }

    #[test]
    fn predict_requires_normalized_graph() {
        let g: InfluenceGraph<f64> =
            InfluenceGraph::from_edges(vec![vid("a"), vid("b")], vec![(vid("a"), vid("b"), 2.0)]).unwrap();
        let x = GraphSignal::constant(&g, 1.0).unwrap();
        assert_eq!(predict(&g, &x), Err(GraphError::NotNormalized));
        assert_eq!(discrepancy(&g, &x), Err(GraphError::NotNormalized));
    }

    #[test]
    fn constant_signal_is_neutral() {
        let g = g3();
        let x = GraphSignal::constant(&g, 7.5).unwrap();
        for v in predict(&g, &x).unwrap().values() {
            assert!(close(v.unwrap(), 7.5));
        }
        for v in laplacian_transform(&g, &x).unwrap() {
            assert!(v.unwrap().abs() <= 1e-12);
        }
        for v in discrepancy(&g, &x).unwrap() {
            assert!(close(v.value.finite().unwrap(), 1.0));
        }
    }

    #[test]
    fn laplacian_g3() {
        let g = g3();
        let lx = laplacian_transform(&g, &sig(&g, &[Some(2.0), Some(1.0), Some(3.0)])).unwrap();
        assert!(close(lx[0].unwrap(), 1.0));
        assert!(close(lx[1].unwrap(), -1.4));
        assert!(close(lx[2].unwrap(), 1.0));
    }

    #[test]
    fn laplacian_single_edge() {
        let g: InfluenceGraph<f64> =
            InfluenceGraph::from_edges(vec![vid("u"), vid("v")], vec![(vid("v"), vid("u"), 1.0)]).unwrap();
        let lx = laplacian_transform(&g, &sig(&g, &[Some(5.0), Some(7.0)])).unwrap();
        assert_eq!(lx, vec![None, Some(2.0)]);
    }

    #[test]
    fn discrepancy_g3() {
        let g = g3();
        let d = discrepancy(&g, &sig(&g, &[Some(2.0), Some(1.0), Some(3.0)])).unwrap();
        assert!(close(d[0].value.finite().unwrap(), 2.0));
        assert!(close(d[1].value.finite().unwrap(), 1.0 / 2.4));
        assert!(close(d[2].value.finite().unwrap(), 1.5));
        assert_eq!(d[1].observed, Some(1.0));
    }

    #[test]
    fn zero_expectation_conventions() {
        let g: InfluenceGraph<f64> =
            InfluenceGraph::from_edges(vec![vid("u"), vid("v")], vec![(vid("v"), vid("u"), 1.0)]).unwrap();
        let d = discrepancy(&g, &sig(&g, &[Some(0.0), Some(0.0)])).unwrap();
        assert_eq!(d[1].value, Discrepancy::Finite(1.0));
        assert_eq!(d[0].value, Discrepancy::Undefined);
        let d = discrepancy(&g, &sig(&g, &[Some(0.0), Some(4.0)])).unwrap();
        assert_eq!(d[1].value, Discrepancy::Infinite);
        let d = discrepancy(&g, &sig(&g, &[Some(1.0), None])).unwrap();
        assert_eq!(d[1].value, Discrepancy::Undefined);
    }

    #[test]
    fn severity_order() {
        use Discrepancy::*;
        let mut v = vec![Finite(0.5), Undefined, Infinite, Finite(2.0)];
        v.sort_by(|a, b| b.severity_cmp(a));
        assert_eq!(v, vec![Infinite, Finite(2.0), Finite(0.5), Undefined]);
    }

    #[test]
    fn identity_residual_g3() {
        let g = g3();
        let r = discrepancy_identity_check(&g, &sig(&g, &[Some(2.0), Some(1.0), Some(3.0)])).unwrap();
        assert!(r <= 1e-12);
    }

    #[test]
    fn identity_is_exact_in_rationals() {
        let r = |n: i64, d: i64| Rational64::new(n, d);
        let g = InfluenceGraph::from_edges(
            vec![vid("A"), vid("B"), vid("C")],
            vec![
                (vid("A"), vid("B"), r(1, 1)),
                (vid("B"), vid("A"), r(3, 5)),
                (vid("B"), vid("C"), r(2, 5)),
                (vid("C"), vid("A"), r(1, 1)),
            ],
        )
        .unwrap();
        assert!(g.is_normalized());
        let x = GraphSignal::from_values(&g, vec![Some(r(2, 1)), Some(r(1, 1)), Some(r(3, 1))]).unwrap();
        assert_eq!(discrepancy_identity_check(&g, &x).unwrap(), r(0, 1));
        let d = discrepancy(&g, &x).unwrap();
        assert_eq!(d[1].value, Discrepancy::Finite(r(5, 12)));
        let c = GraphSignal::constant(&g, r(9, 4)).unwrap();
        assert_eq!(discrepancy_identity_check(&g, &c).unwrap(), r(0, 1));
        assert!(discrepancy(&g, &c)
            .unwrap()
            .iter()
            .all(|d| d.value == Discrepancy::Finite(r(1, 1))));
    }

    #[test]
    fn group_discrepancy_cases() {
        let g = g3();
        let x = sig(&g, &[Some(2.0), Some(1.0), Some(3.0)]);
        let gd = group_discrepancy(&g, &x, &[vid("A"), vid("C")]).unwrap();
        assert!(close(gd.value.finite().unwrap(), 5.0 / 3.0));

        let single = group_discrepancy(&g, &x, &[vid("B")]).unwrap();
        let d = discrepancy(&g, &x).unwrap();
        assert_eq!(single.value, d[1].value);

        let c = GraphSignal::constant(&g, 4.0).unwrap();
        let all = group_discrepancy(&g, &c, &[vid("A"), vid("B"), vid("C")]).unwrap();
        assert!(close(all.value.finite().unwrap(), 1.0));

        assert_eq!(group_discrepancy(&g, &x, &[]), Err(GraphError::EmptyGroup));
        assert!(matches!(
            group_discrepancy(&g, &x, &[vid("nope")]),
            Err(GraphError::UnknownVertex(_))
        ));
        let none = group_discrepancy(&g, &sig(&g, &[None, None, None]), &[vid("A")]).unwrap();
        assert_eq!(none.value, Discrepancy::Undefined);
    }

    #[test]
    fn f32_path_works() {
        let g: InfluenceGraph<f32> = InfluenceGraph::from_edges(
            vec![vid("a"), vid("b"), vid("t")],
            vec![(vid("t"), vid("a"), 0.5), (vid("t"), vid("b"), 0.5)],
        )
        .unwrap();
        let x = GraphSignal::from_values(&g, vec![Some(1.0), Some(3.0), Some(4.0)]).unwrap();
        let d = discrepancy(&g, &x).unwrap();
        assert_eq!(d[2].value, Discrepancy::Finite(2.0));
    }
}
