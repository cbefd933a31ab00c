//! Finite simple marked graphs, rooted neighborhoods and the statistics
//! read off them: empirical neighborhood laws, edge types, mark counts,
//! tree-likeness and colored degrees.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rayon::prelude::*;

use crate::canon::LocalGraph;
use crate::colored::ColoredDegreeSequence;
use crate::convert::TypeTable;
use crate::error::{bail, Result};
use crate::marks::Mark;
use crate::tree::{canonical_subtree, CanonicalTree, HalfTree, MarkedAdjacency};
use crate::weight::Weight;
use crate::dist::NeighborhoodDist;

/// Undirected edge `{u, v}` with ξ(u,v) = `mark_uv` (toward v) and ξ(v,u) = `mark_vu` (toward u).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub mark_uv: Mark,
    pub mark_vu: Mark,
}

/// Simple graph on vertices `0..n` with vertex marks and two marks per edge.
/// Adjacency lists are kept sorted, so equality is equality of marked graphs on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedGraph {
    marks: Vec<Mark>,
    adj: Vec<Vec<(usize, Mark, Mark)>>,
}

impl MarkedGraph {
    pub fn empty(marks: Vec<Mark>) -> Self {
        let n = marks.len();
        Self { marks, adj: vec![Vec::new(); n] }
    }

    pub fn new(marks: Vec<Mark>, edges: &[Edge]) -> Result<Self> {
        let mut g = Self::empty(marks);
        for e in edges {
            g.add_edge(*e)?;
        }
        Ok(g)
    }

    /// All marks zero.
    pub fn unmarked(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let edges: Vec<Edge> = pairs.iter().map(|&(u, v)| Edge { u, v, mark_uv: 0, mark_vu: 0 }).collect();
        Self::new(vec![0; n], &edges)
    }

    pub fn n(&self) -> usize {
        self.marks.len()
    }

    pub fn vertex_marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn set_vertex_mark(&mut self, v: usize, m: Mark) {
        self.marks[v] = m;
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, Mark, Mark)] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].iter().any(|&(w, _, _)| w == v)
    }

    /// ξ(u,v), the mark on edge uv toward v.
    pub fn mark_toward(&self, u: usize, v: usize) -> Option<Mark> {
        self.adj[u].iter().find(|&&(w, _, _)| w == v).map(|&(_, a, _)| a)
    }

    pub fn add_edge(&mut self, e: Edge) -> Result<()> {
        let n = self.n();
        if e.u >= n || e.v >= n {
            bail!(Structural, "edge ({}, {}) out of range for {n} vertices", e.u, e.v);
        }
        if e.u == e.v {
            bail!(Structural, "self-loop at {}", e.u);
        }
        if self.has_edge(e.u, e.v) {
            bail!(Structural, "duplicate edge ({}, {})", e.u, e.v);
        }
        let i = self.adj[e.u].partition_point(|&(w, _, _)| w < e.v);
        self.adj[e.u].insert(i, (e.v, e.mark_uv, e.mark_vu));
        let j = self.adj[e.v].partition_point(|&(w, _, _)| w < e.u);
        self.adj[e.v].insert(j, (e.u, e.mark_vu, e.mark_uv));
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> Result<Edge> {
        let Some(i) = self.adj[u].iter().position(|&(w, _, _)| w == v) else {
            bail!(Precondition, "no edge ({u}, {v})");
        };
        let (_, a, b) = self.adj[u].remove(i);
        let j = self.adj[v].iter().position(|&(w, _, _)| w == u).expect("adjacency is symmetric");
        self.adj[v].remove(j);
        Ok(Edge { u, v, mark_uv: a, mark_vu: b })
    }

    /// Edges with `u < v`, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for u in 0..self.n() {
            for &(v, a, b) in &self.adj[u] {
                if u < v {
                    out.push(Edge { u, v, mark_uv: a, mark_vu: b });
                }
            }
        }
        out.sort();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Vertices within distance `k` of `root` and their distances, in BFS
    /// order. `skip` removes one edge from the graph for the search.
    fn ball_region(&self, root: usize, k: u32, skip: Option<(usize, usize)>) -> Vec<usize> {
        let mut dist: BTreeMap<usize, u32> = BTreeMap::new();
        dist.insert(root, 0);
        let mut order = vec![root];
        let mut q = VecDeque::from([root]);
        while let Some(x) = q.pop_front() {
            let d = dist[&x];
            if d == k {
                continue;
            }
            for &(y, _, _) in &self.adj[x] {
                if is_skipped(skip, x, y) || dist.contains_key(&y) {
                    continue;
                }
                dist.insert(y, d + 1);
                order.push(y);
                q.push_back(y);
            }
        }
        order
    }

    /// Induced subgraph on `region` (minus `skip`), reindexed in region order.
    fn local(&self, region: &[usize], skip: Option<(usize, usize)>) -> (LocalGraph, usize) {
        let index: BTreeMap<usize, usize> = region.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut edges = 0;
        let adj = region
            .iter()
            .map(|&x| {
                self.adj[x]
                    .iter()
                    .filter(|&&(y, _, _)| !is_skipped(skip, x, y))
                    .filter_map(|&(y, a, b)| index.get(&y).map(|&j| (j, a, b)))
                    .inspect(|_| edges += 1)
                    .collect()
            })
            .collect();
        let marks = region.iter().map(|&v| self.marks[v]).collect();
        (LocalGraph { marks, adj }, edges / 2)
    }

    fn rooted_class(&self, root: usize, k: u32, skip: Option<(usize, usize)>) -> CanonicalRootedGraph {
        let region = self.ball_region(root, k, skip);
        let (local, edges) = self.local(&region, skip);
        if edges + 1 == region.len() {
            CanonicalRootedGraph::Tree(canonical_subtree(&local, 0, None, None))
        } else {
            CanonicalRootedGraph::Cyclic(CyclicClass { key: local.canonical_key(0).into() })
        }
    }
}

fn is_skipped(skip: Option<(usize, usize)>, x: usize, y: usize) -> bool {
    matches!(skip, Some((a, b)) if (a == x && b == y) || (a == y && b == x))
}

impl MarkedAdjacency for MarkedGraph {
    fn vertex_count(&self) -> usize {
        self.n()
    }

    fn vertex_mark(&self, v: usize) -> Mark {
        self.marks[v]
    }

    fn for_each_neighbor<F: FnMut(usize, Mark, Mark)>(&self, v: usize, mut f: F) {
        for &(w, a, b) in &self.adj[v] {
            f(w, a, b);
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }
}

impl MarkedAdjacency for LocalGraph {
    fn vertex_count(&self) -> usize {
        self.marks.len()
    }

    fn vertex_mark(&self, v: usize) -> Mark {
        self.marks[v]
    }

    fn for_each_neighbor<F: FnMut(usize, Mark, Mark)>(&self, v: usize, mut f: F) {
        for &(w, a, b) in &self.adj[v] {
            f(w, a, b);
        }
    }
}

/// Canonical class of a rooted cyclic graph.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicClass {
    key: Arc<[u8]>,
}

/// Isomorphism class of a finite connected rooted marked graph. Trees use
/// the [`CanonicalTree`] encoding, so acyclic classes compare equal to the
/// tree they represent.
#[derive(Clone)]
pub enum CanonicalRootedGraph {
    Tree(CanonicalTree),
    Cyclic(CyclicClass),
}

impl CanonicalRootedGraph {
    pub fn key(&self) -> &[u8] {
        match self {
            Self::Tree(t) => t.key(),
            Self::Cyclic(c) => &c.key,
        }
    }

    pub fn as_tree(&self) -> Option<&CanonicalTree> {
        match self {
            Self::Tree(t) => Some(t),
            Self::Cyclic(_) => None,
        }
    }

    pub fn is_tree(&self) -> bool {
        matches!(self, Self::Tree(_))
    }
}

impl PartialEq for CanonicalRootedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for CanonicalRootedGraph {}

impl Hash for CanonicalRootedGraph {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl Ord for CanonicalRootedGraph {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(other.key())
    }
}

impl PartialOrd for CanonicalRootedGraph {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for CanonicalRootedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Tree(t) => write!(f, "{t:?}"),
            Self::Cyclic(c) => write!(f, "cyclic#{:02x?}", &c.key[4..c.key.len().min(12)]),
        }
    }
}

/// A mark toward a rooted component, paired with that component's class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfGraph {
    pub mark: Mark,
    pub class: CanonicalRootedGraph,
}

impl HalfGraph {
    pub fn as_half_tree(&self) -> Option<HalfTree> {
        self.class.as_tree().map(|t| HalfTree::new(self.mark, t.clone()))
    }
}

/// [G, v]_h.
pub fn neighborhood(g: &MarkedGraph, v: usize, h: u32) -> Result<CanonicalRootedGraph> {
    if v >= g.n() {
        bail!(Precondition, "vertex {v} out of range");
    }
    Ok(g.rooted_class(v, h, None))
}

/// G[u,v]_k: mark toward `v` and the component of `v` in G minus uv, rooted at `v`, cut at depth `k`.
pub fn half_graph(g: &MarkedGraph, u: usize, v: usize, k: u32) -> Result<HalfGraph> {
    let Some(mark) = g.mark_toward(u, v) else { bail!(Precondition, "{u} and {v} are not adjacent") };
    Ok(HalfGraph { mark, class: g.rooted_class(v, k, Some((u, v))) })
}

/// etype^h(u,v) = (G[v,u]_{h-1}, G[u,v]_{h-1}).
pub fn etype(g: &MarkedGraph, u: usize, v: usize, h: u32) -> Result<(HalfGraph, HalfGraph)> {
    if h == 0 {
        bail!(Precondition, "edge types need h >= 1");
    }
    Ok((half_graph(g, v, u, h - 1)?, half_graph(g, u, v, h - 1)?))
}

/// U(G)_h as integer counts over n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalDist {
    pub h: u32,
    pub n: u64,
    pub counts: BTreeMap<CanonicalRootedGraph, u64>,
}

impl EmpiricalDist {
    pub fn all_trees(&self) -> bool {
        self.counts.keys().all(CanonicalRootedGraph::is_tree)
    }

    /// Probabilities keyed by class.
    pub fn law<W: Weight>(&self) -> BTreeMap<CanonicalRootedGraph, W> {
        self.counts.iter().map(|(k, &c)| (k.clone(), W::from_ratio(c, self.n))).collect()
    }

    /// The same law as a tree distribution; fails on cyclic classes.
    pub fn to_tree_dist<W: Weight>(&self) -> Result<NeighborhoodDist<W>> {
        let mut atoms = BTreeMap::new();
        for (k, &c) in &self.counts {
            let Some(t) = k.as_tree() else { bail!(NonTree, "empirical law has a cyclic class") };
            atoms.insert(t.clone(), W::from_ratio(c, self.n));
        }
        NeighborhoodDist::new(self.h, atoms)
    }
}

pub fn empirical_dist(g: &MarkedGraph, h: u32) -> Result<EmpiricalDist> {
    if g.n() == 0 {
        bail!(Precondition, "empty graph has no empirical neighborhood law");
    }
    let classes: Vec<CanonicalRootedGraph> = (0..g.n()).into_par_iter().map(|v| g.rooted_class(v, h, None)).collect();
    let mut counts = BTreeMap::new();
    for c in classes {
        *counts.entry(c).or_insert(0) += 1;
    }
    Ok(EmpiricalDist { h, n: g.n() as u64, counts })
}

/// Edge-mark pair counts m (keys x ≤ x') and vertex-mark counts u. Zero entries are omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkCounts {
    pub m: BTreeMap<(Mark, Mark), u64>,
    pub u: BTreeMap<Mark, u64>,
}

impl MarkCounts {
    pub fn edge_total(&self) -> u64 {
        self.m.values().sum()
    }

    pub fn vertex_total(&self) -> u64 {
        self.u.values().sum()
    }

    pub fn normalized(mut self) -> Self {
        self.m.retain(|_, c| *c > 0);
        self.u.retain(|_, c| *c > 0);
        self
    }
}

pub fn mark_counts(g: &MarkedGraph) -> MarkCounts {
    let mut mc = MarkCounts::default();
    for e in g.edges() {
        let key = (e.mark_uv.min(e.mark_vu), e.mark_uv.max(e.mark_vu));
        *mc.m.entry(key).or_insert(0) += 1;
    }
    for &m in g.vertex_marks() {
        *mc.u.entry(m).or_insert(0) += 1;
    }
    mc
}

/// Whether some cycle has length at most `len`.
pub fn has_cycle_at_most(g: &MarkedGraph, len: usize) -> bool {
    if len < 3 {
        return false;
    }
    let radius = len.div_ceil(2) as u32;
    (0..g.n()).into_par_iter().any(|r| short_cycle_from(g, r, radius, len))
}

fn short_cycle_from(g: &MarkedGraph, root: usize, radius: u32, len: usize) -> bool {
    let mut dist: BTreeMap<usize, (u32, usize)> = BTreeMap::new();
    dist.insert(root, (0, usize::MAX));
    let mut q = VecDeque::from([root]);
    while let Some(x) = q.pop_front() {
        let (d, p) = dist[&x];
        if d >= radius {
            continue;
        }
        for &(y, _, _) in g.neighbors(x) {
            if y == p {
                continue;
            }
            match dist.get(&y) {
                Some(&(dy, _)) => {
                    if (d + dy + 1) as usize <= len {
                        return true;
                    }
                }
                None => {
                    dist.insert(y, (d + 1, x));
                    q.push_back(y);
                }
            }
        }
    }
    false
}

/// Girth, or `None` for a forest.
pub fn girth(g: &MarkedGraph) -> Option<usize> {
    (0..g.n()).filter_map(|r| shortest_cycle_through_bfs(g, r)).min()
}

/// Shortest closed walk length found by BFS from `root`; the minimum over all
/// roots is the girth.
fn shortest_cycle_through_bfs(g: &MarkedGraph, root: usize) -> Option<usize> {
    let mut dist = vec![u32::MAX; g.n()];
    let mut parent = vec![usize::MAX; g.n()];
    dist[root] = 0;
    let mut q = VecDeque::from([root]);
    let mut best: Option<usize> = None;
    while let Some(x) = q.pop_front() {
        for &(y, _, _) in g.neighbors(x) {
            if y == parent[x] {
                continue;
            }
            if dist[y] == u32::MAX {
                dist[y] = dist[x] + 1;
                parent[y] = x;
                q.push_back(y);
            } else {
                let l = (dist[x] + dist[y] + 1) as usize;
                best = Some(best.map_or(l, |b| b.min(l)));
            }
        }
    }
    best
}

/// Girth greater than 2h+1.
pub fn is_h_treelike(g: &MarkedGraph, h: u32) -> bool {
    !has_cycle_at_most(g, 2 * h as usize + 1)
}

/// Vertex marks and colored degrees under edge types: the edge u→v gets the
/// color (index of G[v,u]_{h-1}, index of G[u,v]_{h-1}) in the returned table.
pub fn colored_degree(g: &MarkedGraph, h: u32) -> Result<(TypeTable, Vec<Mark>, ColoredDegreeSequence)> {
    let (table, colored) = crate::convert::colored_of(g, h)?;
    let d = colored.degree_sequence();
    Ok((table, g.vertex_marks().to_vec(), d))
}
