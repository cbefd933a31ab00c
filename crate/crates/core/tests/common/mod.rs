//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use lwc_core::graph::empirical_dist;
use lwc_core::rng::stream;
use lwc_core::tree::LabeledTree;
use lwc_core::{CanonicalTree, Child, Edge, Mark, MarkedGraph, NeighborhoodDist, Rational};

/// Every parent array on `n` vertices with `parents[i] < i`.
pub fn parent_arrays(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0usize]];
    for i in 1..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..i).map(move |q| {
                    let mut p = p.clone();
                    p.push(q);
                    p
                })
            })
            .collect();
    }
    out
}

/// All markings of the rooted tree with parent array `parents`, with
/// `nv` vertex marks and `ne` edge marks.
pub fn markings(parents: &[usize], ne: u32, nv: u32) -> impl Iterator<Item = LabeledTree> + '_ {
    let n = parents.len();
    let vertex_total = (nv as u64).pow(n as u32);
    let edge_total = ((ne * ne) as u64).pow(n as u32 - 1);
    (0..vertex_total).flat_map(move |vc| {
        (0..edge_total).map(move |ec| {
            let mut vc = vc;
            let mut ec = ec;
            let marks: Vec<Mark> = (0..n)
                .map(|_| {
                    let m = (vc % nv as u64) as Mark;
                    vc /= nv as u64;
                    m
                })
                .collect();
            let mut edges = vec![(0, 0)];
            for _ in 1..n {
                let x = (ec % (ne * ne) as u64) as u32;
                ec /= (ne * ne) as u64;
                edges.push((x / ne, x % ne));
            }
            LabeledTree::from_parents(parents, &marks, &edges)
        })
    })
}

/// One parent array per unlabeled rooted tree shape on `n` vertices.
pub fn shapes(n: usize) -> Vec<Vec<usize>> {
    // AHU strings, written independently of the library
    fn code(parents: &[usize], v: usize) -> String {
        let mut kids: Vec<String> = (1..parents.len()).filter(|&c| parents[c] == v).map(|c| code(parents, c)).collect();
        kids.sort();
        format!("({})", kids.concat())
    }
    let mut seen = BTreeMap::new();
    for p in parent_arrays(n) {
        seen.entry(code(&p, 0)).or_insert(p);
    }
    seen.into_values().collect()
}

/// Brute-force rooted isomorphism: searches for a root-fixing bijection
/// preserving vertex marks, adjacency and both directional edge marks.
pub fn isomorphic(a: &LabeledTree, b: &LabeledTree) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len();
    // vertices of `a` in an order where parents precede children
    let mut order = vec![0usize];
    let mut i = 0;
    while i < order.len() {
        order.extend_from_slice(a.children(order[i]));
        i += 1;
    }
    let mut f = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(a: &LabeledTree, b: &LabeledTree, order: &[usize], k: usize, f: &mut [usize], used: &mut [bool]) -> bool {
        if k == order.len() {
            return true;
        }
        let v = order[k];
        let candidates: Vec<usize> = match a.parent(v) {
            None => vec![0],
            Some(p) => b.children(f[p]).to_vec(),
        };
        for w in candidates {
            if used[w] || a.mark(v) != b.mark(w) {
                continue;
            }
            if v != 0 && (a.to_parent_mark(v) != b.to_parent_mark(w) || a.from_parent_mark(v) != b.from_parent_mark(w)) {
                continue;
            }
            f[v] = w;
            used[w] = true;
            if extend(a, b, order, k + 1, f, used) {
                return true;
            }
            used[w] = false;
        }
        false
    }
    a.mark(0) == b.mark(0) && extend(a, b, &order, 0, &mut f, &mut used)
}

/// Relabels vertices at random and shuffles every child list.
pub fn relabel<R: Rng>(t: &LabeledTree, rng: &mut R) -> LabeledTree {
    let mut out = LabeledTree::new(t.mark(0));
    let mut queue = std::collections::VecDeque::from([(0usize, 0usize)]);
    while let Some((v, nv)) = queue.pop_front() {
        let mut kids = t.children(v).to_vec();
        kids.shuffle(rng);
        for c in kids {
            let nc = out.add_child(nv, t.mark(c), t.to_parent_mark(c), t.from_parent_mark(c));
            queue.push_back((c, nc));
        }
    }
    out
}

/// Number of isomorphism classes of rooted trees on 1..=max_n vertices with
/// `nv` vertex marks and `np` possible mark pairs per edge (Pólya counting).
pub fn class_counts(max_n: usize, nv: u128, np: u128) -> Vec<u128> {
    fn binom(n: u128, k: u128) -> u128 {
        (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
    }
    let mut a = vec![0u128; max_n + 1];
    for n in 1..=max_n {
        // forests of total size n-1 built from child types of each size
        let mut poly = vec![0u128; n];
        poly[0] = 1;
        for m in 1..n {
            let kinds = np * a[m];
            let mut next = vec![0u128; n];
            for (i, &c) in poly.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let mut j = 0;
                while i + m * j < n {
                    // multisets of size j from `kinds` child types
                    let ways = if j == 0 { 1 } else { binom(kinds + j as u128 - 1, j as u128) };
                    next[i + m * j] += c * ways;
                    j += 1;
                }
            }
            poly = next;
        }
        a[n] = nv * poly[n - 1];
    }
    a
}

/// d-regular unmarked tree truncated at depth h.
pub fn regular_tree(d: usize, h: u32) -> CanonicalTree {
    fn below(d: usize, k: u32) -> CanonicalTree {
        if k == 0 {
            return CanonicalTree::leaf(0);
        }
        CanonicalTree::new(0, vec![Child { to_root: 0, to_child: 0, subtree: below(d, k - 1) }; d - 1])
    }
    if h == 0 {
        return CanonicalTree::leaf(0);
    }
    CanonicalTree::new(0, vec![Child { to_root: 0, to_child: 0, subtree: below(d, h - 1) }; d])
}

pub fn regular(d: usize, h: u32) -> NeighborhoodDist<Rational> {
    NeighborhoodDist::dirac(h, regular_tree(d, h)).unwrap()
}

/// A cycle of length `cycle` (0 for none) with random trees attached, marks uniform.
pub fn random_treelike_graph(n: usize, cycle: usize, ne: u32, nv: u32, seed: u64) -> MarkedGraph {
    bounded_treelike_graph(n, cycle, ne, nv, usize::MAX, seed)
}

/// As [`random_treelike_graph`], attaching tree vertices only below degree `max_degree`.
pub fn bounded_treelike_graph(n: usize, cycle: usize, ne: u32, nv: u32, max_degree: usize, seed: u64) -> MarkedGraph {
    let mut rng = stream(seed, &[]);
    let marks: Vec<Mark> = (0..n).map(|_| rng.gen_range(0..nv)).collect();
    let mut edges = Vec::new();
    let mut push = |u: usize, v: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        edges.push(Edge { u, v, mark_uv: rng.gen_range(0..ne), mark_vu: rng.gen_range(0..ne) })
    };
    for i in 0..cycle {
        push(i, (i + 1) % cycle, &mut rng);
    }
    let mut degree = vec![0usize; n];
    for i in 0..cycle {
        degree[i] = 2;
    }
    for v in cycle.max(1)..n {
        let open: Vec<usize> = (0..v).filter(|&u| degree[u] < max_degree).collect();
        let u = open[rng.gen_range(0..open.len())];
        degree[u] += 1;
        degree[v] += 1;
        push(u, v, &mut rng);
    }
    MarkedGraph::new(marks, &edges).unwrap()
}

pub fn empirical_law(g: &MarkedGraph, h: u32) -> NeighborhoodDist<Rational> {
    empirical_dist(g, h).unwrap().to_tree_dist().unwrap()
}

/// Fifty admissible laws with at most 50 support classes: empirical
/// neighborhood laws of random tree-like graphs of maximum degree 3, depths 1 and 2.
pub fn corpus() -> Vec<NeighborhoodDist<Rational>> {
    (0..50u64)
        .map(|i| {
            let h = 1 + (i % 2) as u32;
            // depth-1 graphs stay small: the second exact extension of their law
            // grows roughly like the cube of the first
            let n = if h == 1 { 5 + (i % 7) as usize } else { 6 + (i % 7) as usize * 3 };
            let cycle = if i % 3 == 0 { 0 } else { (2 * h as usize + 2).min(n) };
            let ne = 1 + (i % 4 >= 2) as u32;
            let nv = 1 + (i % 5 >= 3) as u32;
            let p = empirical_law(&bounded_treelike_graph(n, cycle, ne, nv, 3, 1000 + i), h);
            assert!(p.len() <= 50);
            p
        })
        .collect()
}
