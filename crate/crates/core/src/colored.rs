//! Colored configuration model: colored degree sequences, uniform
//! pairings, colorblind projections, short-cycle rejection and counting.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{bail, Result};
use crate::weight::{ln_double_factorial_odd, ln_factorial};

/// Color index for (i, j) in an L×L palette.
pub fn color(l: usize, i: usize, j: usize) -> usize {
    i * l + j
}

/// Conjugate color: (i, j) ↦ (j, i).
pub fn conj(l: usize, c: usize) -> usize {
    (c % l) * l + c / l
}

/// Per-vertex L×L nonnegative integer matrices, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColoredDegreeSequence {
    l: usize,
    matrices: Vec<Vec<u32>>,
}

impl ColoredDegreeSequence {
    pub fn new(l: usize, matrices: Vec<Vec<u32>>) -> Result<Self> {
        if let Some(v) = matrices.iter().position(|m| m.len() != l * l) {
            bail!(Structural, "matrix of vertex {v} is not {l}×{l}");
        }
        Ok(Self { l, matrices })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, v: usize) -> &[u32] {
        &self.matrices[v]
    }

    pub fn matrices(&self) -> &[Vec<u32>] {
        &self.matrices
    }

    pub fn get(&self, v: usize, c: usize) -> u32 {
        self.matrices[v][c]
    }

    pub fn set(&mut self, v: usize, c: usize, x: u32) {
        self.matrices[v][c] = x;
    }

    /// S = Σ_v D(v), per color.
    pub fn totals(&self) -> Vec<u64> {
        let mut s = vec![0u64; self.l * self.l];
        for m in &self.matrices {
            for (c, &x) in m.iter().enumerate() {
                s[c] += x as u64;
            }
        }
        s
    }

    pub fn degree(&self, v: usize) -> u64 {
        self.matrices[v].iter().map(|&x| x as u64).sum()
    }

    /// Total half-edges.
    pub fn half_edges(&self) -> u64 {
        self.totals().iter().sum()
    }

    /// (c, c̄) with c < c̄ in index order.
    pub fn off_diagonal_colors(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let l = self.l;
        (0..l).flat_map(move |i| (i + 1..l).map(move |j| (color(l, i, j), color(l, j, i))))
    }

    pub fn diagonal_colors(&self) -> impl Iterator<Item = usize> + '_ {
        let l = self.l;
        (0..l).map(move |i| color(l, i, i))
    }

    /// Half-edge list W_c: each vertex repeated D_c(v) times.
    fn half_edge_list(&self, c: usize) -> Vec<u32> {
        let mut w = Vec::new();
        for (v, m) in self.matrices.iter().enumerate() {
            w.extend(std::iter::repeat(v as u32).take(m[c] as usize));
        }
        w
    }
}

/// Checks that S is symmetric with even diagonal.
pub fn validate(d: &ColoredDegreeSequence) -> Result<()> {
    let s = d.totals();
    let l = d.l;
    for i in 0..l {
        let c = color(l, i, i);
        if s[c] % 2 != 0 {
            bail!(Structural, "diagonal color ({i},{i}) has odd total {}", s[c]);
        }
        for j in i + 1..l {
            let (a, b) = (color(l, i, j), color(l, j, i));
            if s[a] != s[b] {
                bail!(Structural, "color ({i},{j}) total {} differs from ({j},{i}) total {}", s[a], s[b]);
            }
        }
    }
    Ok(())
}

/// Directed colored multigraph stored as a sorted list of directed edges
/// (u, v, color); each undirected edge appears once in each direction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectedColoredMultigraph {
    n: usize,
    l: usize,
    edges: Vec<(u32, u32, u32)>,
}

impl DirectedColoredMultigraph {
    /// Builds from matched pairs (u, v, c): u→v gets color c and v→u gets c̄.
    pub fn from_pairs(n: usize, l: usize, pairs: &[(u32, u32, u32)]) -> Self {
        let mut edges = Vec::with_capacity(2 * pairs.len());
        for &(u, v, c) in pairs {
            edges.push((u, v, c));
            edges.push((v, u, conj(l, c as usize) as u32));
        }
        edges.sort_unstable();
        Self { n, l, edges }
    }

    /// Builds from directed edges; the list must be closed under reversal with conjugated colors.
    pub fn from_directed(n: usize, l: usize, mut edges: Vec<(u32, u32, u32)>) -> Result<Self> {
        edges.sort_unstable();
        let mut rev: Vec<(u32, u32, u32)> = edges.iter().map(|&(u, v, c)| (v, u, conj(l, c as usize) as u32)).collect();
        rev.sort_unstable();
        if rev != edges {
            bail!(Structural, "directed edge list is not closed under reversal");
        }
        if edges.iter().any(|&(u, v, c)| u as usize >= n || v as usize >= n || c as usize >= l * l) {
            bail!(Structural, "edge endpoint or color out of range");
        }
        Ok(Self { n, l, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn directed_edges(&self) -> &[(u32, u32, u32)] {
        &self.edges
    }

    /// ω_c(u, v).
    pub fn omega(&self, c: usize, u: usize, v: usize) -> usize {
        self.edges.iter().filter(|&&e| e == (u as u32, v as u32, c as u32)).count()
    }

    /// D^G: out-degree per color.
    pub fn degree_sequence(&self) -> ColoredDegreeSequence {
        let mut m = vec![vec![0u32; self.l * self.l]; self.n];
        for &(u, _, c) in &self.edges {
            m[u as usize][c as usize] += 1;
        }
        ColoredDegreeSequence { l: self.l, matrices: m }
    }

    /// Colored edge list with each undirected edge once, as (u, v, color of u→v) with u ≤ v.
    pub fn undirected(&self) -> Vec<(u32, u32, u32)> {
        let mut out = Vec::new();
        let mut loops: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for &(u, v, c) in &self.edges {
            if u < v {
                out.push((u, v, c));
            } else if u == v {
                *loops.entry((u, c)).or_insert(0) += 1;
            }
        }
        // A loop contributes two directed entries: (c, c̄), or (c, c) on the diagonal.
        for (&(u, c), &k) in &loops {
            let cb = conj(self.l, c as usize) as u32;
            let count = match c.cmp(&cb) {
                std::cmp::Ordering::Less => k,
                std::cmp::Ordering::Equal => k / 2,
                std::cmp::Ordering::Greater => 0,
            };
            out.extend(std::iter::repeat((u, u, c)).take(count as usize));
        }
        out.sort_unstable();
        out
    }
}

/// Undirected multigraph; `pairs[(u, v)]` for u < v is the edge multiplicity
/// and `loops[u]` the number of self-loops at u.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multigraph {
    pub n: usize,
    pub pairs: BTreeMap<(usize, usize), u32>,
    pub loops: Vec<u32>,
}

impl Multigraph {
    /// ω̄(u, v); loops count twice on the diagonal.
    pub fn omega(&self, u: usize, v: usize) -> u32 {
        if u == v {
            2 * self.loops[u]
        } else {
            self.pairs.get(&(u.min(v), u.max(v))).copied().unwrap_or(0)
        }
    }

    pub fn is_simple(&self) -> bool {
        self.loops.iter().all(|&l| l == 0) && self.pairs.values().all(|&k| k <= 1)
    }
}

/// CB(G): sums multiplicities over colors.
pub fn colorblind(g: &DirectedColoredMultigraph) -> Multigraph {
    let mut pairs = BTreeMap::new();
    let mut loop_entries = vec![0u32; g.n];
    for &(u, v, _) in &g.edges {
        if u < v {
            *pairs.entry((u as usize, v as usize)).or_insert(0) += 1;
        } else if u == v {
            loop_entries[u as usize] += 1;
        }
    }
    Multigraph { n: g.n, pairs, loops: loop_entries.into_iter().map(|k| k / 2).collect() }
}

/// Whether `m` has a cycle of length at most `h`; loops have length 1 and
/// parallel edges form cycles of length 2.
pub fn girth_at_most(m: &Multigraph, h: usize) -> bool {
    if h >= 1 && m.loops.iter().any(|&l| l > 0) {
        return true;
    }
    if h >= 2 && m.pairs.values().any(|&k| k >= 2) {
        return true;
    }
    let mut adj = vec![Vec::new(); m.n];
    for &(u, v) in m.pairs.keys() {
        adj[u].push(v as u32);
        adj[v].push(u as u32);
    }
    simple_cycle_at_most(&adj, h)
}

/// Bounded BFS from every vertex of a simple graph.
fn simple_cycle_at_most(adj: &[Vec<u32>], h: usize) -> bool {
    if h < 3 {
        return false;
    }
    let radius = h.div_ceil(2) as u32;
    let n = adj.len();
    let mut dist = vec![u32::MAX; n];
    let mut parent = vec![u32::MAX; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut queue: Vec<u32> = Vec::new();
    for r in 0..n {
        if adj[r].len() < 2 {
            continue;
        }
        for &t in &touched {
            dist[t as usize] = u32::MAX;
            parent[t as usize] = u32::MAX;
        }
        touched.clear();
        queue.clear();
        dist[r] = 0;
        touched.push(r as u32);
        queue.push(r as u32);
        let mut head = 0;
        while head < queue.len() {
            let x = queue[head] as usize;
            head += 1;
            if dist[x] >= radius {
                continue;
            }
            for &y in &adj[x] {
                if y == parent[x] {
                    continue;
                }
                let yu = y as usize;
                if dist[yu] == u32::MAX {
                    dist[yu] = dist[x] + 1;
                    parent[yu] = x as u32;
                    touched.push(y);
                    queue.push(y);
                } else if (dist[x] + dist[yu] + 1) as usize <= h {
                    return true;
                }
            }
        }
    }
    false
}

/// One uniform pairing as matched pairs (u, v, c): a Fisher-Yates shuffle of
/// W_c̄ against W_c for off-diagonal colors and of W_c for diagonal ones.
fn random_pairs<R: Rng>(d: &ColoredDegreeSequence, rng: &mut R) -> Vec<(u32, u32, u32)> {
    let mut pairs = Vec::new();
    for (c, cb) in d.off_diagonal_colors() {
        let w = d.half_edge_list(c);
        let mut wb = d.half_edge_list(cb);
        wb.shuffle(rng);
        pairs.extend(w.into_iter().zip(wb).map(|(u, v)| (u, v, c as u32)));
    }
    for c in d.diagonal_colors() {
        let mut w = d.half_edge_list(c);
        w.shuffle(rng);
        pairs.extend(w.chunks_exact(2).map(|p| (p[0], p[1], c as u32)));
    }
    pairs
}

pub fn sample_cm_with<R: Rng>(d: &ColoredDegreeSequence, rng: &mut R) -> Result<DirectedColoredMultigraph> {
    validate(d)?;
    Ok(DirectedColoredMultigraph::from_pairs(d.n(), d.l(), &random_pairs(d, rng)))
}

/// Γ(σ) for a uniformly random configuration σ.
pub fn sample_cm(d: &ColoredDegreeSequence, seed: u64) -> Result<DirectedColoredMultigraph> {
    sample_cm_with(d, &mut crate::rng::stream(seed, &[0]))
}

/// Short-cycle test directly on matched pairs.
fn pairs_have_cycle_at_most(n: usize, pairs: &[(u32, u32, u32)], h: usize) -> bool {
    let mut seen = HashSet::with_capacity(pairs.len());
    let mut adj = vec![Vec::new(); n];
    for &(u, v, _) in pairs {
        if u == v {
            if h >= 1 {
                return true;
            }
            continue;
        }
        if !seen.insert((u.min(v), u.max(v))) {
            if h >= 2 {
                return true;
            }
            continue;
        }
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    simple_cycle_at_most(&adj, h)
}

/// Outcome of rejection sampling.
#[derive(Clone, Debug)]
pub struct RejectionOutcome {
    pub graph: DirectedColoredMultigraph,
    /// Attempts used, including the accepted one.
    pub attempts: u64,
}

pub const DEFAULT_MAX_ATTEMPTS: u64 = 1_000_000;

/// Uniform sample from 𝒢(D, h) by rejection; attempt i draws from stream (seed, i).
pub fn sample_girth_constrained(d: &ColoredDegreeSequence, h: usize, seed: u64, max_attempts: u64) -> Result<RejectionOutcome> {
    validate(d)?;
    const CHUNK: u64 = 512;
    let mut start = 0u64;
    while start < max_attempts {
        let end = (start + CHUNK).min(max_attempts);
        let hit = (start..end).into_par_iter().find_map_first(|i| {
            let pairs = random_pairs(d, &mut crate::rng::stream(seed, &[1, i]));
            (!pairs_have_cycle_at_most(d.n(), &pairs, h)).then_some((i, pairs))
        });
        if let Some((i, pairs)) = hit {
            return Ok(RejectionOutcome { graph: DirectedColoredMultigraph::from_pairs(d.n(), d.l(), &pairs), attempts: i + 1 });
        }
        start = end;
    }
    let (_, hi) = wilson_interval(0, max_attempts, 1.96);
    bail!(CapExceeded, "no configuration without cycles of length <= {h} in {max_attempts} attempts; acceptance rate below {hi:.3e} (95% Wilson upper bound)")
}

/// Fraction of `trials` configurations with no cycle of length ≤ h, with a 95% Wilson interval.
pub fn estimate_alpha(d: &ColoredDegreeSequence, h: usize, seed: u64, trials: u64) -> Result<(f64, (f64, f64))> {
    validate(d)?;
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&i| !pairs_have_cycle_at_most(d.n(), &random_pairs(d, &mut crate::rng::stream(seed, &[2, i])), h))
        .count() as u64;
    Ok((hits as f64 / trials as f64, wilson_interval(hits, trials, 1.96)))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// log |Σ| = Σ_{c<c̄} log S_c! + Σ_{c=c̄} log (S_c - 1)!!.
pub fn log_config_count(d: &ColoredDegreeSequence) -> Result<f64> {
    validate(d)?;
    let s = d.totals();
    let off: f64 = d.off_diagonal_colors().map(|(c, _)| ln_factorial(s[c])).sum();
    let diag: f64 = d.diagonal_colors().map(|c| ln_double_factorial_odd(s[c])).sum();
    Ok(off + diag)
}

/// log Π_c Π_v D_c(v)!.
pub fn log_label_symmetry(d: &ColoredDegreeSequence) -> f64 {
    d.matrices().iter().flat_map(|m| m.iter()).map(|&x| ln_factorial(x as u64)).sum()
}

/// log |𝒢(D, h)| ≈ log α + log |Σ| - log Π_c Π_v D_c(v)!, for h ≥ 2.
pub fn log_count_girth(d: &ColoredDegreeSequence, h: usize, alpha: f64) -> Result<f64> {
    if h < 2 {
        bail!(Precondition, "the configuration count identity needs h >= 2");
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        bail!(Precondition, "acceptance probability {alpha} outside (0, 1]");
    }
    Ok(alpha.ln() + log_config_count(d)? - log_label_symmetry(d))
}

/// Every configuration σ mapped to Γ(σ), with multiplicity. Fails above `cap` configurations.
pub fn enumerate_configurations(d: &ColoredDegreeSequence, cap: u64) -> Result<Vec<DirectedColoredMultigraph>> {
    validate(d)?;
    let total = log_config_count(d)?.exp().round();
    if total > cap as f64 {
        bail!(CapExceeded, "{total} configurations exceed the enumeration cap {cap}");
    }
    let mut per_color: Vec<Vec<Vec<(u32, u32, u32)>>> = Vec::new();
    for (c, cb) in d.off_diagonal_colors() {
        let w = d.half_edge_list(c);
        let wb = d.half_edge_list(cb);
        let outs = permutations(wb.len())
            .into_iter()
            .map(|p| w.iter().zip(&p).map(|(&u, &j)| (u, wb[j], c as u32)).collect())
            .collect();
        per_color.push(outs);
    }
    for c in d.diagonal_colors() {
        let w = d.half_edge_list(c);
        let outs = matchings(w.len())
            .into_iter()
            .map(|m| m.into_iter().map(|(a, b)| (w[a], w[b], c as u32)).collect())
            .collect();
        per_color.push(outs);
    }
    let mut acc: Vec<Vec<(u32, u32, u32)>> = vec![Vec::new()];
    for outs in per_color {
        let mut next = Vec::with_capacity(acc.len() * outs.len());
        for a in &acc {
            for o in &outs {
                let mut x = a.clone();
                x.extend_from_slice(o);
                next.push(x);
            }
        }
        acc = next;
    }
    Ok(acc.into_iter().map(|p| DirectedColoredMultigraph::from_pairs(d.n(), d.l(), &p)).collect())
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

fn matchings(k: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some((&a, tail)) = rest.split_first() else {
            out.push(cur.clone());
            return;
        };
        for i in 0..tail.len() {
            let b = tail[i];
            let remaining: Vec<usize> = tail.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
            cur.push((a, b));
            rec(&remaining, cur, out);
            cur.pop();
        }
    }
    let idx: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    rec(&idx, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive 𝒢(D, h) with the exact acceptance fraction.
#[derive(Clone, Debug)]
pub struct GirthEnumeration {
    pub graphs: BTreeSet<DirectedColoredMultigraph>,
    pub accepted_configurations: u64,
    pub total_configurations: u64,
}

impl GirthEnumeration {
    pub fn alpha(&self) -> f64 {
        self.accepted_configurations as f64 / self.total_configurations as f64
    }
}

/// Half-edge cap for exhaustive enumeration.
pub const ENUMERATION_HALF_EDGE_CAP: u64 = 12;

pub fn enumerate_girth_constrained(d: &ColoredDegreeSequence, h: usize) -> Result<GirthEnumeration> {
    if d.half_edges() > ENUMERATION_HALF_EDGE_CAP {
        bail!(CapExceeded, "{} half-edges exceed the enumeration cap {ENUMERATION_HALF_EDGE_CAP}", d.half_edges());
    }
    let all = enumerate_configurations(d, u64::MAX)?;
    let total = all.len() as u64;
    let mut graphs = BTreeSet::new();
    let mut accepted = 0;
    for g in all {
        if !girth_at_most(&colorblind(&g), h) {
            accepted += 1;
            graphs.insert(g);
        }
    }
    Ok(GirthEnumeration { graphs, accepted_configurations: accepted, total_configurations: total })
}
