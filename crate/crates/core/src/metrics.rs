//! Distances between neighborhood laws and counts of the graph ensembles
//! with prescribed mark counts.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;

use crate::dist::s_of;
use crate::error::{bail, Result};
use crate::graph::{neighborhood, CanonicalRootedGraph, Edge, MarkedGraph};
use crate::marks::Mark;
use crate::weight::{kahan_sum, ln_factorial, Weight};

/// Total variation (1/2) Σ |μ - ν|; exact in rational mode.
pub fn tv_distance<K: Ord + Clone, W: Weight>(mu: &BTreeMap<K, W>, nu: &BTreeMap<K, W>) -> W {
    let mut terms = Vec::with_capacity(mu.len() + nu.len());
    for (k, a) in mu {
        terms.push(match nu.get(k) {
            Some(b) => a.sub(b).abs(),
            None => a.abs(),
        });
    }
    for (k, b) in nu {
        if !mu.contains_key(k) {
            terms.push(b.abs());
        }
    }
    W::sum(terms).div_u64(2)
}

/// min over h of max(1/(1+h), tv_h) for a TV profile indexed by depth.
/// Upper bound on the Lévy-Prokhorov distance under the local metric via
/// the maximal coupling of the depth-h marginals.
pub fn lp_upper_from_profile(tv: &[f64]) -> f64 {
    tv.iter()
        .enumerate()
        .map(|(h, &t)| (1.0 / (1.0 + h as f64)).max(t))
        .fold(1.0, f64::min)
}

/// [`lp_upper_from_profile`] over depth-indexed marginals `mu[h]`, `nu[h]`.
pub fn lp_upper<K: Ord + Clone, W: Weight>(mu: &[BTreeMap<K, W>], nu: &[BTreeMap<K, W>]) -> f64 {
    lp_upper_from_profile(&tv_profile(mu, nu))
}

fn tv_profile<K: Ord + Clone, W: Weight>(mu: &[BTreeMap<K, W>], nu: &[BTreeMap<K, W>]) -> Vec<f64> {
    mu.iter().zip(nu).map(|(a, b)| tv_distance(a, b).to_f64()).collect()
}

/// TV at the deepest common depth, the LP surrogate (an upper bound), and
/// the per-depth TV profile.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceReport {
    pub tv: f64,
    pub lp_upper: f64,
    pub profile: Vec<f64>,
}

impl DistanceReport {
    pub fn new<K: Ord + Clone, W: Weight>(mu: &[BTreeMap<K, W>], nu: &[BTreeMap<K, W>]) -> Self {
        let profile = tv_profile(mu, nu);
        Self { tv: profile.last().copied().unwrap_or(0.0), lp_upper: lp_upper_from_profile(&profile), profile }
    }
}

/// Depth-h marginals of U(G) for h = 0..=max_depth.
pub fn neighborhood_marginals(g: &MarkedGraph, max_depth: u32) -> Result<Vec<BTreeMap<CanonicalRootedGraph, f64>>> {
    (0..=max_depth)
        .map(|h| {
            let mut counts: BTreeMap<CanonicalRootedGraph, u64> = BTreeMap::new();
            for v in 0..g.n() {
                *counts.entry(neighborhood(g, v, h)?).or_insert(0) += 1;
            }
            Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / g.n() as f64)).collect())
        })
        .collect()
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

fn feasible(n: u64, m: &BTreeMap<(Mark, Mark), u64>, u: &BTreeMap<Mark, u64>) -> bool {
    m.values().sum::<u64>() <= pairs(n) && u.values().sum::<u64>() == n
}

/// log |𝒢^(n)_{m,u}| from the closed-form product, or -∞ when empty.
/// `m` is keyed by unordered pairs (x, x') with x ≤ x'.
pub fn exact_log_count(n: u64, m: &BTreeMap<(Mark, Mark), u64>, u: &BTreeMap<Mark, u64>) -> f64 {
    if !feasible(n, m, u) {
        return f64::NEG_INFINITY;
    }
    let big_n = pairs(n);
    let total: u64 = m.values().sum();
    let off: u64 = m.iter().filter(|((x, y), _)| x != y).map(|(_, &k)| k).sum();
    kahan_sum(
        [ln_factorial(n), ln_factorial(big_n), -ln_factorial(big_n - total), off as f64 * std::f64::consts::LN_2]
            .into_iter()
            .chain(u.values().map(|&k| -ln_factorial(k)))
            .chain(m.values().map(|&k| -ln_factorial(k))),
    )
}

/// |𝒢^(n)_{m,u}| as an exact integer (zero when empty).
pub fn exact_count(n: u64, m: &BTreeMap<(Mark, Mark), u64>, u: &BTreeMap<Mark, u64>) -> BigUint {
    if !feasible(n, m, u) {
        return BigUint::ZERO;
    }
    let fact = |k: u64| (1..=k).fold(BigUint::one(), |a, i| a * i);
    let big_n = pairs(n);
    let total: u64 = m.values().sum();
    let off: u64 = m.iter().filter(|((x, y), _)| x != y).map(|(_, &k)| k).sum();
    let mut den = fact(big_n - total);
    for &k in u.values().chain(m.values()) {
        den *= fact(k);
    }
    fact(n) * fact(big_n) * (BigUint::one() << off) / den
}

/// ‖m‖₁ log n + n H(Q) + n Σ_{x,x'} s(d_{x,x'}); the o(n) term is dropped.
/// `d` is keyed by ordered pairs and should list both orientations.
pub fn stirling_log_count(n: u64, m: &BTreeMap<(Mark, Mark), u64>, d: &BTreeMap<(Mark, Mark), f64>, q: &BTreeMap<Mark, f64>) -> f64 {
    let nf = n as f64;
    let total: u64 = m.values().sum();
    let h_q = -kahan_sum(q.values().filter(|&&p| p > 0.0).map(|&p| p * p.ln()));
    let s = kahan_sum(d.values().map(|&x| s_of(x)));
    total as f64 * nf.ln() + nf * h_q + nf * s
}

/// Hard cap on n for [`brute_force_ball_count`].
pub const BALL_COUNT_MAX_N: u64 = 5;
/// Hard cap on the ensemble size enumerated by [`brute_force_ball_count`].
pub const BALL_COUNT_MAX_GRAPHS: u64 = 2_000_000;

/// Outcome of [`brute_force_ball_count`].
#[derive(Clone, Debug, PartialEq)]
pub struct BallCount {
    pub count: u64,
    pub total: u64,
    /// (log count - ‖m‖₁ log n) / n, -∞ for an empty ball.
    pub statistic: f64,
    /// Smallest surrogate distance over the ensemble.
    pub min_distance: f64,
}

/// All graphs in 𝒢^(n)_{m,u}, as a callback over each member.
pub fn for_each_graph<F>(n: usize, m: &BTreeMap<(Mark, Mark), u64>, u: &BTreeMap<Mark, u64>, f: F)
where
    F: Fn(&MarkedGraph) + Sync,
{
    if !feasible(n as u64, m, u) {
        return;
    }
    let vertex_labelings = multiset_sequences(&u.iter().map(|(&k, &c)| (k, c)).collect::<Vec<_>>());
    let all_pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    // Each unordered mark key gives one or two oriented mark assignments.
    let edge_kinds: Vec<((Mark, Mark), u64)> = m.iter().map(|(&key, &k)| (key, k)).collect();
    let edge_total: u64 = m.values().sum();
    let edge_sets = combinations(all_pairs.len(), edge_total as usize);
    let kinds = multiset_sequences(&edge_kinds);
    vertex_labelings.par_iter().for_each(|marks| {
        for set in &edge_sets {
            for kind in &kinds {
                let flips: Vec<usize> = kind.iter().enumerate().filter(|(_, (x, y))| x != y).map(|(i, _)| i).collect();
                for mask in 0u64..(1u64 << flips.len()) {
                    let mut edges = Vec::with_capacity(set.len());
                    for (i, &pi) in set.iter().enumerate() {
                        let (a, b) = all_pairs[pi];
                        let (x, y) = kind[i];
                        let flip = flips.iter().position(|&j| j == i).is_some_and(|bit| mask >> bit & 1 == 1);
                        let (mark_uv, mark_vu) = if flip { (y, x) } else { (x, y) };
                        edges.push(Edge { u: a, v: b, mark_uv, mark_vu });
                    }
                    let g = MarkedGraph::new(marks.clone(), &edges).expect("distinct pairs");
                    f(&g);
                }
            }
        }
    });
}

/// Number of graphs in 𝒢^(n)_{m,u} whose LP surrogate to `target` is
/// strictly below `eps`. `target[h]` is the depth-h marginal for h = 0..=H.
pub fn brute_force_ball_count(
    n: u64,
    m: &BTreeMap<(Mark, Mark), u64>,
    u: &BTreeMap<Mark, u64>,
    target: &[BTreeMap<CanonicalRootedGraph, f64>],
    eps: f64,
) -> Result<BallCount> {
    if n > BALL_COUNT_MAX_N {
        bail!(CapExceeded, "brute-force ball counting is limited to n <= {BALL_COUNT_MAX_N}");
    }
    let size = exact_count(n, m, u);
    if size > BigUint::from(BALL_COUNT_MAX_GRAPHS) {
        bail!(CapExceeded, "ensemble of {size} graphs exceeds the cap {BALL_COUNT_MAX_GRAPHS}");
    }
    if target.is_empty() {
        bail!(Precondition, "target needs at least the depth-0 marginal");
    }
    let depth = target.len() as u32 - 1;
    let hits = std::sync::atomic::AtomicU64::new(0);
    let total = std::sync::atomic::AtomicU64::new(0);
    let best = std::sync::Mutex::new(f64::INFINITY);
    for_each_graph(n as usize, m, u, |g| {
        let marg = neighborhood_marginals(g, depth).expect("vertices in range");
        let dist = lp_upper(&marg, target);
        total.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        if dist < eps {
            hits.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        let mut b = best.lock().expect("no poisoning");
        *b = b.min(dist);
    });
    let count = hits.into_inner();
    let edges: u64 = m.values().sum();
    let statistic = if count == 0 || n == 0 {
        f64::NEG_INFINITY
    } else {
        ((count as f64).ln() - edges as f64 * (n as f64).ln()) / n as f64
    };
    Ok(BallCount { count, total: total.into_inner(), statistic, min_distance: best.into_inner().expect("no poisoning") })
}

/// Distinct sequences using each item exactly its multiplicity times.
fn multiset_sequences<T: Clone>(items: &[(T, u64)]) -> Vec<Vec<T>> {
    fn rec<T: Clone>(items: &[(T, u64)], left: &mut Vec<u64>, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if left.iter().all(|&k| k == 0) {
            out.push(cur.clone());
            return;
        }
        for i in 0..items.len() {
            if left[i] > 0 {
                left[i] -= 1;
                cur.push(items[i].0.clone());
                rec(items, left, cur, out);
                cur.pop();
                left[i] += 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(items, &mut items.iter().map(|(_, k)| *k).collect(), &mut Vec::new(), &mut out);
    out
}

/// k-subsets of 0..n in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}
