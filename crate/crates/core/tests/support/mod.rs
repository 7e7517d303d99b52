#![allow(dead_code)]

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vdisc::{Graph, GraphBuilder, GraphSignal, VertexId};

/// Raw weighted digraph: `edges[t]` lists `(source, weight)`.
pub struct RawGraph {
    pub n: usize,
    pub edges: Vec<Vec<(usize, f64)>>,
}

pub fn id(i: usize) -> VertexId {
    VertexId::new(format!("v{i:05}")).unwrap()
}

/// `n` vertices, each with `min_in..=max_in` distinct non-self predecessors
/// (zero allowed) and weights in `(0, 1]`.
pub fn random_raw(rng: &mut ChaCha8Rng, n: usize, min_in: usize, max_in: usize) -> RawGraph {
    let edges = (0..n)
        .map(|t| {
            if n < 2 {
                return Vec::new();
            }
            let k = rng.gen_range(min_in..=max_in).min(n - 1);
            sample(rng, n - 1, k)
                .into_iter()
                .map(|s| (if s >= t { s + 1 } else { s }, rng.gen_range(1e-3..=1.0)))
                .collect()
        })
        .collect();
    RawGraph { n, edges }
}

pub fn to_graph(raw: &RawGraph) -> Graph {
    let mut b = GraphBuilder::<f64>::with_vertices((0..raw.n).map(id)).unwrap();
    for (t, row) in raw.edges.iter().enumerate() {
        for &(s, w) in row {
            b.add_edge(&id(t), &id(s), w).unwrap();
        }
    }
    b.build().normalize()
}

pub fn random_signal(rng: &mut ChaCha8Rng, n: usize, missing: f64) -> Vec<Option<f64>> {
    (0..n)
        .map(|_| (rng.gen::<f64>() >= missing).then(|| rng.gen_range(0.01..100.0)))
        .collect()
}

/// Signal over `graph`, which orders vertices by id like `id(i)`.
pub fn signal(graph: &Graph, values: &[Option<f64>]) -> GraphSignal<f64> {
    GraphSignal::from_values(graph, values.to_vec()).unwrap()
}

/// Dense row-normalized matrix, missing entries dropped and rows rescaled.
pub struct Dense {
    pub w: Vec<Vec<f64>>,
}

impl Dense {
    pub fn from_raw(raw: &RawGraph) -> Self {
        let mut w = vec![vec![0.0; raw.n]; raw.n];
        for (t, row) in raw.edges.iter().enumerate() {
            let total: f64 = row.iter().map(|e| e.1).sum();
            for &(s, x) in row {
                w[t][s] = x / total;
            }
        }
        Dense { w }
    }

    pub fn predict(&self, x: &[Option<f64>]) -> Vec<Option<f64>> {
        self.w
            .iter()
            .map(|row| {
                let mut num = 0.0;
                let mut den = 0.0;
                for (j, &wij) in row.iter().enumerate() {
                    if wij > 0.0 {
                        if let Some(xj) = x[j] {
                            num += wij * xj;
                            den += wij;
                        }
                    }
                }
                (den > 0.0).then(|| num / den)
            })
            .collect()
    }

    pub fn laplacian(&self, x: &[Option<f64>]) -> Vec<Option<f64>> {
        x.iter()
            .zip(self.predict(x))
            .map(|(xi, yi)| Some(xi.as_ref()? - yi?))
            .collect()
    }

    /// `Some(None)` is infinite, `None` undefined.
    pub fn discrepancy(&self, x: &[Option<f64>]) -> Vec<Option<Option<f64>>> {
        x.iter()
            .zip(self.predict(x))
            .map(|(xi, yi)| {
                let (xi, yi) = (xi.as_ref()?, yi?);
                Some(if yi == 0.0 {
                    if *xi == 0.0 {
                        Some(1.0)
                    } else {
                        None
                    }
                } else {
                    Some(xi / yi)
                })
            })
            .collect()
    }
}
