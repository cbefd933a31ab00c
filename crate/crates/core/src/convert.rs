//! Passing between marked graphs and directed colored graphs, the
//! message-passing type oracle, N_h counting, adapted count sequences and
//! the realization pipeline for a finitely supported admissible law.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::ToPrimitive;

use crate::colored::{
    color, colorblind, conj, enumerate_girth_constrained, estimate_alpha, log_count_girth, sample_girth_constrained,
    ColoredDegreeSequence, DirectedColoredMultigraph,
};
use crate::dist::NeighborhoodDist;
use crate::error::{bail, Result};
use crate::graph::{colored_degree, half_graph, is_h_treelike, mark_counts, Edge, MarkCounts, MarkedGraph};
use crate::marks::Mark;
use crate::tree::{odot, otimes, CanonicalTree, HalfTree};
use crate::weight::{ln_factorial, Rational, Weight};

/// The type set F: sorted distinct half-trees with their indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeTable {
    types: Vec<HalfTree>,
    index: HashMap<HalfTree, usize>,
}

impl TypeTable {
    pub fn new<I: IntoIterator<Item = HalfTree>>(types: I) -> Self {
        let types: Vec<HalfTree> = types.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = types.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { types, index }
    }

    /// Both components of every type pair with positive e_P.
    pub fn of_dist<W: Weight>(p: &NeighborhoodDist<W>) -> Self {
        Self::new(p.e_table().keys().flat_map(|(t, t2)| [t.clone(), t2.clone()]))
    }

    /// L.
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[HalfTree] {
        &self.types
    }

    pub fn get(&self, i: usize) -> Option<&HalfTree> {
        self.types.get(i)
    }

    pub fn index_of(&self, t: &HalfTree) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Color (F[i], F[j]) as its pair of half-trees.
    pub fn color_pair(&self, c: usize) -> (&HalfTree, &HalfTree) {
        let l = self.len();
        (&self.types[c / l], &self.types[c % l])
    }
}

/// G[u,v]_{h-1} for every directed edge, keyed by (u, v).
fn directed_types(g: &MarkedGraph, h: u32) -> Result<BTreeMap<(usize, usize), HalfTree>> {
    if h == 0 {
        bail!(Precondition, "edge types need h >= 1");
    }
    let mut out = BTreeMap::new();
    for u in 0..g.n() {
        for &(v, _, _) in g.neighbors(u) {
            let hg = half_graph(g, u, v, h - 1)?;
            let Some(t) = hg.as_half_tree() else {
                bail!(NonTree, "the component of {v} seen from {u} at depth {} has a cycle", h - 1)
            };
            out.insert((u, v), t);
        }
    }
    Ok(out)
}

/// colored(G): the edge u→v gets color (G[v,u]_{h-1}, G[u,v]_{h-1}).
pub fn colored_of(g: &MarkedGraph, h: u32) -> Result<(TypeTable, DirectedColoredMultigraph)> {
    let types = directed_types(g, h)?;
    let table = TypeTable::new(types.values().cloned());
    let colored = colored_from_types(g.n(), &table, &types)?;
    Ok((table, colored))
}

/// colored(G) against a fixed table; fails if an edge type is missing from it.
pub fn colored_of_with(g: &MarkedGraph, h: u32, table: &TypeTable) -> Result<DirectedColoredMultigraph> {
    colored_from_types(g.n(), table, &directed_types(g, h)?)
}

fn colored_from_types(
    n: usize,
    table: &TypeTable,
    types: &BTreeMap<(usize, usize), HalfTree>,
) -> Result<DirectedColoredMultigraph> {
    let l = table.len();
    let mut edges = Vec::with_capacity(types.len());
    for (&(u, v), fwd) in types {
        let back = &types[&(v, u)];
        let (Some(i), Some(j)) = (table.index_of(back), table.index_of(fwd)) else {
            bail!(Structural, "edge type of ({u}, {v}) is not in the type table")
        };
        edges.push((u as u32, v as u32, color(l, i, j) as u32));
    }
    DirectedColoredMultigraph::from_directed(n, l, edges)
}

/// MCB_β(H): an edge u→v colored (g, g') becomes a marked edge with mark
/// g[m] toward u and g'[m] toward v; vertex v is marked β(v).
pub fn mcb(h: &DirectedColoredMultigraph, table: &TypeTable, beta: &[Mark]) -> Result<MarkedGraph> {
    if beta.len() != h.n() {
        bail!(Precondition, "{} vertex marks for {} vertices", beta.len(), h.n());
    }
    if table.len() != h.l() {
        bail!(Precondition, "type table has {} entries, graph uses L = {}", table.len(), h.l());
    }
    if !colorblind(h).is_simple() {
        bail!(Structural, "colorblind graph has a loop or a multiple edge");
    }
    let edges: Vec<Edge> = h
        .directed_edges()
        .iter()
        .filter(|&&(u, v, _)| u < v)
        .map(|&(u, v, c)| {
            let (g, g2) = table.color_pair(c as usize);
            Edge { u: u as usize, v: v as usize, mark_uv: g2.mark, mark_vu: g.mark }
        })
        .collect();
    MarkedGraph::new(beta.to_vec(), &edges)
}

/// Messages M_{h-1}(v, w) for every directed edge (v, w), computed by the
/// ⊙/⊗ recursion. A vertex of degree one keeps its depth-0 message.
pub fn message_types(g: &MarkedGraph, h: u32) -> Result<BTreeMap<(usize, usize), HalfTree>> {
    if h == 0 {
        bail!(Precondition, "messages need h >= 1");
    }
    let n = g.n();
    // back[v][k]: position of v in the adjacency list of its k-th neighbor
    let back: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            g.neighbors(v)
                .iter()
                .map(|&(w, _, _)| g.neighbors(w).iter().position(|&(x, _, _)| x == v).expect("symmetric adjacency"))
                .collect()
        })
        .collect();
    let level0: Vec<Vec<HalfTree>> = (0..n)
        .map(|v| {
            let leaf = CanonicalTree::leaf(g.vertex_marks()[v]);
            g.neighbors(v).iter().map(|&(_, _, toward_v)| HalfTree::new(toward_v, leaf.clone())).collect()
        })
        .collect();
    let mut cur = level0.clone();
    for _ in 1..h {
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let nbrs = g.neighbors(v);
            if nbrs.len() == 1 {
                next.push(level0[v].clone());
                continue;
            }
            let beta = g.vertex_marks()[v];
            let mut row = Vec::with_capacity(nbrs.len());
            for (k, &(_, _, toward_v)) in nbrs.iter().enumerate() {
                let parts: Vec<CanonicalTree> = nbrs
                    .iter()
                    .enumerate()
                    .filter(|&(k2, _)| k2 != k)
                    .map(|(k2, &(w2, _, toward_v2))| otimes(beta, toward_v2, &cur[w2][back[v][k2]]))
                    .collect();
                let subtree = if parts.is_empty() { CanonicalTree::leaf(beta) } else { odot(&parts)? };
                row.push(HalfTree::new(toward_v, subtree));
            }
            next.push(row);
        }
        cur = next;
    }
    let mut out = BTreeMap::new();
    for v in 0..n {
        for (k, &(w, _, _)) in g.neighbors(v).iter().enumerate() {
            out.insert((v, w), cur[v][k].clone());
        }
    }
    Ok(out)
}

/// log n(D, β): log of the number of distinct relabelings of (D, β).
pub fn n_perm_count(beta: &[Mark], d: &ColoredDegreeSequence) -> f64 {
    let mut mult: BTreeMap<(Mark, &[u32]), u64> = BTreeMap::new();
    for (v, &b) in beta.iter().enumerate() {
        *mult.entry((b, d.matrix(v))).or_insert(0) += 1;
    }
    ln_factorial(beta.len() as u64) - mult.values().map(|&k| ln_factorial(k)).sum::<f64>()
}

/// How |𝒢(D, 2h+1)| is obtained inside [`log_n_h`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CountMode {
    /// Exhaustive enumeration; limited to small half-edge totals.
    Exact,
    /// Counting identity with a known acceptance fraction α.
    Alpha(f64),
    /// Counting identity with α estimated from `trials` configurations.
    MonteCarlo { trials: u64, seed: u64 },
}

/// log N_h(G) = log n(D, β) + log |𝒢(D, 2h+1)| for an h-tree-like G.
pub fn log_n_h(g: &MarkedGraph, h: u32, mode: CountMode) -> Result<f64> {
    if h == 0 {
        bail!(Precondition, "N_h needs h >= 1");
    }
    if !is_h_treelike(g, h) {
        bail!(Precondition, "graph has a cycle of length at most {}", 2 * h + 1);
    }
    let (_, beta, d) = colored_degree(g, h)?;
    let girth = 2 * h as usize + 1;
    let log_g = match mode {
        CountMode::Exact => {
            let e = enumerate_girth_constrained(&d, girth)?;
            (e.graphs.len() as f64).ln()
        }
        CountMode::Alpha(alpha) => log_count_girth(&d, girth, alpha)?,
        CountMode::MonteCarlo { trials, seed } => {
            let (alpha, _) = estimate_alpha(&d, girth, seed, trials)?;
            log_count_girth(&d, girth, alpha)?
        }
    };
    Ok(n_perm_count(&beta, &d) + log_g)
}

/// Average degree vector of P: d_{x,x'} is the expected number of root
/// neighbors whose edge carries mark x toward the root and x' toward the neighbor.
pub fn degree_vector<W: Weight>(p: &NeighborhoodDist<W>) -> BTreeMap<(Mark, Mark), W> {
    let mut parts: BTreeMap<(Mark, Mark), Vec<W>> = BTreeMap::new();
    for (t, w) in p.atoms() {
        let mut k: BTreeMap<(Mark, Mark), u64> = BTreeMap::new();
        for c in t.children() {
            *k.entry((c.to_root, c.to_child)).or_insert(0) += 1;
        }
        for (key, k) in k {
            parts.entry(key).or_default().push(w.mul_u64(k));
        }
    }
    parts.into_iter().map(|(k, v)| (k, W::sum(v))).collect()
}

/// Law Q of the root mark under P.
pub fn root_mark_law<W: Weight>(p: &NeighborhoodDist<W>) -> BTreeMap<Mark, W> {
    let mut parts: BTreeMap<Mark, Vec<W>> = BTreeMap::new();
    for (t, w) in p.atoms() {
        parts.entry(t.mark()).or_default().push(w.clone());
    }
    parts.into_iter().map(|(k, v)| (k, W::sum(v))).collect()
}

/// Largest-remainder apportionment of `n` units over `weights` (which sum to one).
/// Zero weights receive zero; ties in the remainder go to the earlier entry.
pub fn quantize<W: Weight>(weights: &[W], n: u64) -> Vec<u64> {
    let scaled: Vec<Rational> = weights.iter().map(|w| w.to_rational() * Rational::from_integer(n.into())).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|x| x.floor().to_integer().to_u64().unwrap_or(0)).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| !weights[i].is_zero()).collect();
    order.sort_by(|&a, &b| scaled[b].fract().cmp(&scaled[a].fract()).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(n.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

fn floor_scaled<W: Weight>(w: &W, n: u64, halve: bool) -> u64 {
    let mut x = w.to_rational() * Rational::from_integer(n.into());
    if halve {
        x /= Rational::from_integer(2.into());
    }
    x.floor().to_integer().to_u64().unwrap_or(0)
}

/// Count vectors adapted to (d, Q) at size n: ⌊n d_{x,x'}⌋ off the diagonal,
/// ⌊n d_{x,x}/2⌋ on it, and a largest-remainder split of n by Q.
pub fn adapted_counts<W: Weight>(d: &BTreeMap<(Mark, Mark), W>, q: &BTreeMap<Mark, W>, n: u64) -> Result<MarkCounts> {
    if d.values().all(W::is_zero) {
        bail!(Precondition, "average degree vector has zero total");
    }
    for (&(x, x2), v) in d {
        let w = d.get(&(x2, x)).cloned().unwrap_or_else(W::zero);
        if v.is_negative() || !v.approx_eq(&w) {
            bail!(Precondition, "average degree vector is not symmetric at ({x}, {x2})");
        }
    }
    if q.values().any(W::is_negative) || !W::sum(q.values().cloned()).approx_eq(&W::one()) {
        bail!(Precondition, "mark law is not a probability vector");
    }
    let mut mc = MarkCounts::default();
    for (&(x, x2), v) in d {
        if x <= x2 && !v.is_zero() {
            mc.m.insert((x, x2), floor_scaled(v, n, x == x2));
        }
    }
    let marks: Vec<Mark> = q.keys().copied().collect();
    let probs: Vec<W> = q.values().cloned().collect();
    for (m, k) in marks.into_iter().zip(quantize(&probs, n)) {
        mc.u.insert(m, k);
    }
    let pairs = n * n.saturating_sub(1) / 2;
    if mc.edge_total() > pairs {
        bail!(Infeasible, "{} edges exceed C({n}, 2) = {pairs}", mc.edge_total());
    }
    Ok(mc.normalized())
}

/// Count vectors adapted to P's average degree vector and root-mark law.
/// A law without edges gets no edges and a largest-remainder mark split.
pub fn adapted_counts_for<W: Weight>(p: &NeighborhoodDist<W>, n: u64) -> Result<MarkCounts> {
    let d = degree_vector(p);
    let q = root_mark_law(p);
    if d.values().all(W::is_zero) {
        let probs: Vec<W> = q.values().cloned().collect();
        let u = q.keys().copied().zip(quantize(&probs, n)).collect();
        return Ok(MarkCounts { m: BTreeMap::new(), u }.normalized());
    }
    adapted_counts(&d, &q, n)
}

/// One decrement made while balancing color totals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceEdit {
    pub vertex: usize,
    pub color: usize,
    pub from: u32,
    pub to: u32,
}

/// One post-hoc change to hit exact mark counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphEdit {
    VertexMark { vertex: usize, from: Mark, to: Mark },
    RemoveEdge(Edge),
    AddEdge(Edge),
}

/// Audit record of [`realize`].
#[derive(Clone, Debug)]
pub struct RealizationPlan {
    pub n: usize,
    pub h: u32,
    pub target: MarkCounts,
    /// Support atoms and how many vertices each received.
    pub atom_counts: Vec<(CanonicalTree, u64)>,
    /// Atom index of each vertex.
    pub assignment: Vec<usize>,
    pub beta: Vec<Mark>,
    pub table: TypeTable,
    /// Degree sequence after balancing.
    pub degrees: ColoredDegreeSequence,
    pub balance_edits: Vec<BalanceEdit>,
    pub graph_edits: Vec<GraphEdit>,
    pub rejection_attempts: u64,
}

impl RealizationPlan {
    /// Vertices whose colored degree was changed by balancing.
    pub fn rebalanced_vertices(&self) -> BTreeSet<usize> {
        self.balance_edits.iter().map(|e| e.vertex).collect()
    }

    /// Vertices touched by any adjustment.
    pub fn touched_vertices(&self) -> BTreeSet<usize> {
        let mut s = self.rebalanced_vertices();
        for e in &self.graph_edits {
            match e {
                GraphEdit::VertexMark { vertex, .. } => {
                    s.insert(*vertex);
                }
                GraphEdit::RemoveEdge(e) | GraphEdit::AddEdge(e) => {
                    s.insert(e.u);
                    s.insert(e.v);
                }
            }
        }
        s
    }
}

/// Brings S_c and S_c̄ to their minimum and diagonal totals to even values.
/// Each unit comes off the vertex with the largest D_c, preferring vertices
/// already touched.
fn balance(d: &mut ColoredDegreeSequence) -> Vec<BalanceEdit> {
    let l = d.l();
    let mut edits = Vec::new();
    let mut touched: BTreeSet<usize> = BTreeSet::new();
    let totals = d.totals();
    for c in 0..l * l {
        let cb = conj(l, c);
        let excess = if c == cb {
            totals[c] % 2
        } else {
            totals[c].saturating_sub(totals[cb])
        };
        for _ in 0..excess {
            let pick = touched
                .iter()
                .copied()
                .filter(|&v| d.get(v, c) > 0)
                .max_by_key(|&v| (d.get(v, c), std::cmp::Reverse(v)))
                .or_else(|| (0..d.n()).filter(|&v| d.get(v, c) > 0).max_by_key(|&v| (d.get(v, c), std::cmp::Reverse(v))))
                .expect("positive total has a contributing vertex");
            let from = d.get(pick, c);
            d.set(pick, c, from - 1);
            touched.insert(pick);
            edits.push(BalanceEdit { vertex: pick, color: c, from, to: from - 1 });
        }
    }
    edits
}

/// Realizes a graph on n vertices with exactly the mark counts `target`
/// whose neighborhood law approximates P.
pub fn realize<W: Weight>(
    p: &NeighborhoodDist<W>,
    n: usize,
    target: &MarkCounts,
    seed: u64,
    max_attempts: u64,
) -> Result<(MarkedGraph, RealizationPlan)> {
    let report = p.is_admissible();
    if !report.admissible {
        let (t, t2, a, b) = report.violation.expect("violation recorded");
        bail!(Inadmissible, "e_P({t:?}, {t2:?}) = {} but e_P({t2:?}, {t:?}) = {}", a.render(), b.render());
    }
    if target.vertex_total() != n as u64 {
        bail!(Infeasible, "vertex mark counts sum to {} instead of {n}", target.vertex_total());
    }
    let pairs = (n as u64) * (n as u64).saturating_sub(1) / 2;
    if target.edge_total() > pairs {
        bail!(Infeasible, "{} edges exceed C({n}, 2) = {pairs}", target.edge_total());
    }
    let h = p.h();

    // (i) quantize P into n atoms
    let atoms: Vec<(CanonicalTree, W)> = p.atoms().map(|(t, w)| (t.clone(), w.clone())).collect();
    let counts = quantize(&atoms.iter().map(|(_, w)| w.clone()).collect::<Vec<_>>(), n as u64);
    let assignment: Vec<usize> = counts.iter().enumerate().flat_map(|(j, &k)| std::iter::repeat(j).take(k as usize)).collect();

    // (ii) vertex marks and colored degrees from each atom's E_h profile
    let table = TypeTable::of_dist(p);
    let l = table.len();
    let beta: Vec<Mark> = assignment.iter().map(|&j| atoms[j].0.mark()).collect();
    let atom_rows: Vec<Vec<u32>> = atoms
        .iter()
        .map(|(t, _)| {
            let mut row = vec![0u32; l * l];
            for ((a, b), &k) in p.profile(t).expect("support atom") {
                let (i, j) = (table.index_of(a).expect("type in table"), table.index_of(b).expect("type in table"));
                row[color(l, i, j)] = k as u32;
            }
            row
        })
        .collect();
    let mut d = ColoredDegreeSequence::new(l, assignment.iter().map(|&j| atom_rows[j].clone()).collect())?;

    // (iii) balance, (iv) sample without cycles of length <= 2h+1, (v) mcb
    let balance_edits = balance(&mut d);
    let outcome = if d.half_edges() == 0 {
        crate::colored::RejectionOutcome { graph: DirectedColoredMultigraph::from_pairs(n, l, &[]), attempts: 0 }
    } else {
        sample_girth_constrained(&d, 2 * h as usize + 1, crate::rng::derive(seed, &[3]), max_attempts)?
    };
    let mut g = mcb(&outcome.graph, &table, &beta)?;

    // (vi) local edits to hit the target counts exactly
    let mut graph_edits = fix_vertex_marks(&mut g, target, &balance_edits);
    graph_edits.extend(fix_edge_marks(&mut g, target)?);

    let plan = RealizationPlan {
        n,
        h,
        target: target.clone(),
        atom_counts: atoms.into_iter().map(|(t, _)| t).zip(counts).collect(),
        assignment,
        beta,
        table,
        degrees: d,
        balance_edits,
        graph_edits,
        rejection_attempts: outcome.attempts,
    };
    Ok((g, plan))
}

/// Relabels surplus-mark vertices, taking rebalanced vertices first and
/// then the highest indices.
fn fix_vertex_marks(g: &mut MarkedGraph, target: &MarkCounts, balanced: &[BalanceEdit]) -> Vec<GraphEdit> {
    let current = mark_counts(g).u;
    let want = |m: Mark| target.u.get(&m).copied().unwrap_or(0);
    let mut deficit: Vec<Mark> = Vec::new();
    for (&m, &k) in &target.u {
        let have = current.get(&m).copied().unwrap_or(0);
        deficit.extend(std::iter::repeat(m).take(k.saturating_sub(have) as usize));
    }
    if deficit.is_empty() {
        return Vec::new();
    }
    let mut surplus: BTreeMap<Mark, u64> = BTreeMap::new();
    for (&m, &k) in &current {
        if k > want(m) {
            surplus.insert(m, k - want(m));
        }
    }
    let preferred: BTreeSet<usize> = balanced.iter().map(|e| e.vertex).collect();
    let order = preferred.iter().copied().chain((0..g.n()).rev().filter(|v| !preferred.contains(v)));
    let mut edits = Vec::new();
    let mut deficit = deficit.into_iter();
    for v in order {
        let m = g.vertex_marks()[v];
        let Some(left) = surplus.get_mut(&m) else { continue };
        if *left == 0 {
            continue;
        }
        let Some(to) = deficit.next() else { break };
        *left -= 1;
        g.set_vertex_mark(v, to);
        edits.push(GraphEdit::VertexMark { vertex: v, from: m, to });
    }
    edits
}

/// Removes the lexicographically smallest surplus edges, then adds deficit
/// edges between vertices not yet incident to an added edge.
fn fix_edge_marks(g: &mut MarkedGraph, target: &MarkCounts) -> Result<Vec<GraphEdit>> {
    let current = mark_counts(g).m;
    let mut edits = Vec::new();
    let mut surplus: BTreeMap<(Mark, Mark), u64> = BTreeMap::new();
    for (&key, &k) in &current {
        let want = target.m.get(&key).copied().unwrap_or(0);
        if k > want {
            surplus.insert(key, k - want);
        }
    }
    for e in g.edges() {
        let key = (e.mark_uv.min(e.mark_vu), e.mark_uv.max(e.mark_vu));
        if let Some(left) = surplus.get_mut(&key).filter(|k| **k > 0) {
            *left -= 1;
            g.remove_edge(e.u, e.v)?;
            edits.push(GraphEdit::RemoveEdge(e));
        }
    }
    let mut used = vec![false; g.n()];
    let mut cursor = 0usize;
    for (&(x, x2), &k) in &target.m {
        let have = current.get(&(x, x2)).copied().unwrap_or(0);
        for _ in have..k {
            while cursor < g.n() && used[cursor] {
                cursor += 1;
            }
            let u = cursor;
            let v = (u + 1..g.n()).find(|&v| !used[v] && !g.has_edge(u, v));
            let Some(v) = v.filter(|_| u < g.n()) else {
                bail!(Infeasible, "not enough fresh vertex pairs to add an edge with marks ({x}, {x2})")
            };
            used[u] = true;
            used[v] = true;
            let e = Edge { u, v, mark_uv: x2, mark_vu: x };
            g.add_edge(e)?;
            edits.push(GraphEdit::AddEdge(e));
        }
    }
    Ok(edits)
}
