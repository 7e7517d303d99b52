//! `target_id,source_id,weight` edge lists.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use super::{read_table, Collector, InputError};
use crate::graph::{GraphBuilder, InfluenceGraph, VertexId};
use crate::numfmt::format_machine;

pub const EDGE_LIST_HEADER: [&str; 3] = ["target_id", "source_id", "weight"];

/// Parses an edge list into a graph whose vertices are sorted by id.
///
/// With `vertices` given, the vertex set is exactly that list (so vertices
/// without any edge survive) and edges naming other ids are rejected.
/// Otherwise the vertex set is every id mentioned in the file.
pub fn read_edge_list<R: Read>(
    reader: R,
    file: &str,
    vertices: Option<&[VertexId]>,
) -> Result<InfluenceGraph<f64>, InputError> {
    let rows = read_table(reader, file, &EDGE_LIST_HEADER)?;
    let mut collector = Collector::new(file);
    let mut edges = Vec::with_capacity(rows.len());
    for row in &rows {
        let target = VertexId::new(row.get(0));
        let source = VertexId::new(row.get(1));
        let weight = row.get(2).parse::<f64>();
        match (target, source, weight) {
            (Ok(t), Ok(s), Ok(w)) => edges.push((row.line, t, s, w)),
            (Err(e), _, _) | (_, Err(e), _) => collector.push(row.line, e.to_string()),
            (_, _, Err(_)) => collector.push(row.line, format!("weight `{}` is not a number", row.get(2))),
        }
    }
    let ids: BTreeSet<VertexId> = match vertices {
        Some(v) => v.iter().cloned().collect(),
        None => edges
            .iter()
            .flat_map(|(_, t, s, _)| [t.clone(), s.clone()])
            .collect(),
    };
    let mut builder = GraphBuilder::with_vertices(ids).expect("set has unique ids");
    for (line, t, s, w) in edges {
        if let Err(e) = builder.add_edge(&t, &s, w) {
            collector.push(line, e.to_string());
        }
    }
    collector.finish()?;
    Ok(builder.build())
}

/// Writes every stored edge in row order with round-trip exact weights.
pub fn write_edge_list<W: Write>(graph: &InfluenceGraph<f64>, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(EDGE_LIST_HEADER)?;
    for (t, s, weight) in graph.edges() {
        w.write_record([t.as_str(), s.as_str(), &format_machine(weight)])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vid(s: &str) -> VertexId {
        VertexId::new(s).unwrap()
    }

    #[test]
    fn parses_and_flags_normalization() {
        let text = "target_id,source_id,weight\nB,A,0.6\nB,C,0.4\nA,B,1\nC,A,1\n";
        let g = read_edge_list(text.as_bytes(), "g.csv", None).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edge_count(), 4);
        assert!(g.is_normalized());
    }

    #[test]
    fn known_vertices_keep_isolated_ones() {
        let text = "target_id,source_id,weight\nb,a,1\n";
        let known = [vid("a"), vid("b"), vid("z")];
        let g = read_edge_list(text.as_bytes(), "g.csv", Some(&known)).unwrap();
        assert_eq!(g.len(), 3);
        let err = read_edge_list("target_id,source_id,weight\nq,a,1\n".as_bytes(), "g.csv", Some(&known))
            .unwrap_err();
        let InputError::Validation(v) = err else { panic!() };
        assert_eq!(v.0[0].line, 2);
        assert!(v.0[0].reason.contains("unknown vertex"));
    }

    #[test]
    fn rejects_bad_rows() {
        let text = "target_id,source_id,weight\na,a,1\nb,a,x\nb,a,-1\n,a,1\n";
        let InputError::Validation(v) = read_edge_list(text.as_bytes(), "g.csv", None).unwrap_err() else {
            panic!()
        };
        let lines: Vec<u64> = v.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
    }

    #[test]
    fn canonical_text_round_trips_byte_for_byte() {
        let text = "target_id,source_id,weight\nA,B,1.00000000000000\nB,A,0.600000000000000\nB,C,0.400000000000000\nC,A,1.00000000000000\n";
        let g = read_edge_list(text.as_bytes(), "g.csv", None).unwrap();
        let mut out = Vec::new();
        write_edge_list(&g, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    proptest! {
        #[test]
        fn weights_round_trip_to_fifteen_digits(ws in proptest::collection::vec(1e-300f64..1e300, 1..20)) {
            let n = ws.len() + 1;
            let ids: Vec<VertexId> = (0..n).map(|i| vid(&format!("v{i:03}"))).collect();
            let edges = ws.iter().enumerate().map(|(i, &w)| (ids[0].clone(), ids[i + 1].clone(), w));
            let g = InfluenceGraph::from_edges(ids.clone(), edges).unwrap();
            let mut out = Vec::new();
            write_edge_list(&g, &mut out).unwrap();
            let back = read_edge_list(out.as_slice(), "g.csv", Some(&ids)).unwrap();
            for (a, b) in g.edges().zip(back.edges()) {
                prop_assert!(((a.2 - b.2) / a.2).abs() <= 5e-15 + 2.0 * f64::EPSILON);
            }
            let mut again = Vec::new();
            write_edge_list(&back, &mut again).unwrap();
            prop_assert_eq!(out, again);
        }
    }
}
