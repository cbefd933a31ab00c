//! Benchmark fixtures: regular point masses and empirical laws of random
//! tree-like marked graphs.

use rand::Rng;

use lwc_core::graph::empirical_dist;
use lwc_core::rng::stream;
use lwc_core::{CanonicalTree, Child, Edge, Mark, MarkedGraph, NeighborhoodDist, Rational};

/// The d-regular unmarked tree truncated at depth `h`, seen from its root.
pub fn regular_tree(d: usize, h: u32) -> CanonicalTree {
    fn below(d: usize, k: u32) -> CanonicalTree {
        if k == 0 {
            return CanonicalTree::leaf(0);
        }
        let sub = below(d, k - 1);
        CanonicalTree::new(0, vec![Child { to_root: 0, to_child: 0, subtree: sub }; d - 1])
    }
    if h == 0 {
        return CanonicalTree::leaf(0);
    }
    let sub = below(d, h - 1);
    CanonicalTree::new(0, vec![Child { to_root: 0, to_child: 0, subtree: sub }; d])
}

pub fn regular(d: usize, h: u32) -> NeighborhoodDist<Rational> {
    NeighborhoodDist::dirac(h, regular_tree(d, h)).expect("regular tree is a valid atom")
}

/// A cycle of length `cycle` with random trees hanging off it, `n` vertices
/// in total. Marks are uniform over `edge_marks` and `vertex_marks` labels.
/// With `cycle > 2h + 1` every depth-h neighborhood is a tree.
pub fn random_treelike_graph(n: usize, cycle: usize, edge_marks: u32, vertex_marks: u32, seed: u64) -> MarkedGraph {
    assert!(cycle == 0 || (3..=n).contains(&cycle));
    let mut rng = stream(seed, &[]);
    let marks: Vec<Mark> = (0..n).map(|_| rng.gen_range(0..vertex_marks)).collect();
    let mut edges = Vec::with_capacity(n);
    let edge = |u: usize, v: usize, rng: &mut rand_chacha::ChaCha8Rng| Edge {
        u,
        v,
        mark_uv: rng.gen_range(0..edge_marks),
        mark_vu: rng.gen_range(0..edge_marks),
    };
    for i in 0..cycle {
        edges.push(edge(i, (i + 1) % cycle, &mut rng));
    }
    for v in cycle.max(1)..n {
        let u = rng.gen_range(0..v);
        edges.push(edge(u, v, &mut rng));
    }
    MarkedGraph::new(marks, &edges).expect("construction yields a simple graph")
}

/// Law of the depth-h neighborhood of a uniform vertex; always admissible.
pub fn empirical_law(g: &MarkedGraph, h: u32) -> NeighborhoodDist<Rational> {
    empirical_dist(g, h).and_then(|e| e.to_tree_dist()).expect("tree-like graph")
}
