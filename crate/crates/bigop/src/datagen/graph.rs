//! Random directed graph generator with guaranteed out-degree >= 1.
//!
//! Construction: first give every node one uniform out-edge to a different
//! node, then add the remaining `m - n` edges uniformly, rejecting
//! self-loops and duplicate (src, dst) pairs. The out-degree guarantee means
//! rank iteration never has to handle dangling nodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use crate::model::{field, DataSet, Element, FieldValue, ScalarValue};

use super::{padded_key, DatagenError, GeneratorSpec};

/// Generates the node set: keys `n<index>`, values
/// `{out_links: idlist, rank: 1/n}`.
pub fn gen_graph(name: &str, spec: &GeneratorSpec) -> Result<DataSet, DatagenError> {
    spec.validate()?;
    let GeneratorSpec::Graph {
        seed,
        node_count,
        edge_count,
    } = spec
    else {
        return Err(DatagenError::InvalidSpec("expected a graph spec".into()));
    };
    let n = *node_count;
    let m = *edge_count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));

    let mut out: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); n as usize];
    let mut edges: u64 = 0;

    // out-degree >= 1: one edge per node first
    for src in 0..n {
        let dst = loop {
            let d = rng.gen_range(0..n);
            if d != src {
                break d;
            }
        };
        out[src as usize].insert(dst);
        edges += 1;
    }
    // remaining edges by rejection
    while edges < m {
        let src = rng.gen_range(0..n);
        let dst = rng.gen_range(0..n);
        if src != dst && out[src as usize].insert(dst) {
            edges += 1;
        }
    }

    let rank = 1.0 / n as f64;
    let mut ds = DataSet::new(name);
    for (src, targets) in out.into_iter().enumerate() {
        let links: Vec<String> = targets.into_iter().map(|d| padded_key('n', d)).collect();
        ds.insert(Element::record(
            padded_key('n', src as u64),
            vec![
                field("out_links", FieldValue::IdList(links)),
                field("rank", ScalarValue::float(rank)?),
            ],
        )?);
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: u64, m: u64) -> GeneratorSpec {
        GeneratorSpec::Graph {
            seed: Some(99),
            node_count: n,
            edge_count: m,
        }
    }

    fn links(e: &Element) -> &[String] {
        e.value.field("out_links").unwrap().as_idlist().unwrap()
    }

    #[test]
    fn every_node_has_out_degree_at_least_one() {
        let g = gen_graph("g", &spec(100, 370)).unwrap();
        assert_eq!(g.len(), 100);
        for e in g.iter() {
            assert!(!links(e).is_empty());
        }
    }

    // full edge-list scan: total = m, no self-loops, no duplicates
    #[test]
    fn edge_list_is_exact() {
        let g = gen_graph("g", &spec(50, 370)).unwrap();
        let mut seen = std::collections::HashSet::new();
        let mut total = 0u64;
        for e in g.iter() {
            for dst in links(e) {
                assert_ne!(dst, &e.key, "self-loop at {}", e.key);
                assert!(g.contains_key(dst), "dangling target {dst}");
                assert!(seen.insert((e.key.clone(), dst.clone())), "duplicate edge");
                total += 1;
            }
        }
        assert_eq!(total, 370);
        drop(seen);
    }

    #[test]
    fn initial_ranks_sum_to_one() {
        let g = gen_graph("g", &spec(64, 200)).unwrap();
        let sum: f64 = g
            .iter()
            .map(|e| {
                e.value
                    .field("rank")
                    .unwrap()
                    .as_scalar()
                    .unwrap()
                    .as_f64()
                    .unwrap()
            })
            .sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn determinism_and_shape_validation() {
        let a = gen_graph("g", &spec(30, 120)).unwrap();
        let b = gen_graph("g", &spec(30, 120)).unwrap();
        assert_eq!(a, b);

        assert!(gen_graph("g", &spec(1, 1)).is_err()); // n >= 2
        assert!(gen_graph("g", &spec(10, 5)).is_err()); // m >= n
        assert!(matches!(
            gen_graph("g", &spec(4, 13)),
            Err(DatagenError::EdgeSpaceExhausted { .. })
        )); // m > n*(n-1)
    }

    #[test]
    fn dense_graph_saturates_edge_space() {
        // m = n*(n-1): the complete digraph, exercising rejection at the limit
        let g = gen_graph("g", &spec(6, 30)).unwrap();
        for e in g.iter() {
            assert_eq!(links(e).len(), 5);
        }
    }
}
