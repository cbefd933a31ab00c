//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

mod common;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::OnceLock;
use std::time::Instant;

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;

use lwc_core::colored::{enumerate_configurations, sample_cm, sample_girth_constrained, DEFAULT_MAX_ATTEMPTS};
use lwc_core::convert::{adapted_counts, adapted_counts_for, colored_of, colored_of_with, log_n_h, mcb, message_types, realize, CountMode};
use lwc_core::graph::{colored_degree, etype, half_graph, is_h_treelike, neighborhood};
use lwc_core::metrics::{exact_count, exact_log_count, neighborhood_marginals, stirling_log_count, tv_distance};
use lwc_core::rng::{derive, stream};
use lwc_core::tree::{eh_profile, oplus, LabeledTree, MarkedAdjacency};
use lwc_core::ugwt::involution_check_with;
use lwc_core::{
    CanonicalRootedGraph, CanonicalTree, ColoredDegreeSequence, DirectedColoredMultigraph, Edge, HalfTree, Mark, MarkedGraph,
    NeighborhoodDist, Rational, TypeTable, UgwtSampler, Weight,
};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Every marked rooted tree class on at most six vertices, |Ξ| = |Θ| = 2.
fn small_classes() -> &'static Vec<CanonicalTree> {
    static CLASSES: OnceLock<Vec<CanonicalTree>> = OnceLock::new();
    CLASSES.get_or_init(|| {
        (1..=6)
            .flat_map(|n| {
                let classes: HashSet<CanonicalTree> = shapes(n).par_iter().flat_map_iter(|p| markings(p, 2, 2).map(|t| t.canonical())).collect();
                classes
            })
            .collect()
    })
}

/// Vertex-level invariant used only to skip oracle calls that must fail.
fn invariant(t: &LabeledTree) -> Vec<(u32, usize, Mark, Mark, Mark)> {
    let mut v: Vec<_> = (0..t.len())
        .map(|v| {
            let (a, b) = if v == 0 { (u32::MAX, u32::MAX) } else { (t.to_parent_mark(v), t.from_parent_mark(v)) };
            (t.depth(v), t.children(v).len(), t.mark(v), a, b)
        })
        .collect();
    v.sort_unstable();
    v
}

fn criterion_1() -> Outcome {
    let expected = class_counts(6, 2, 4);
    let mut details = Vec::new();
    let mut pass = true;
    for n in 1..=6usize {
        // all labelings up to five vertices; one labeling per shape at six
        let arrays = if n <= 5 { parent_arrays(n) } else { shapes(n) };
        let trees: Vec<LabeledTree> = arrays.iter().flat_map(|p| markings(p, 2, 2)).collect();
        let keys: Vec<Vec<u8>> = trees.par_iter().map(|t| t.canonical().key().to_vec()).collect();
        let relabel_bad = trees
            .par_iter()
            .enumerate()
            .filter(|(i, t)| {
                let mut rng = stream(11, &[n as u64, *i as u64]);
                relabel(t, &mut rng).canonical().key() != keys[*i].as_slice()
            })
            .count();
        let mut reps: HashMap<&[u8], usize> = HashMap::new();
        for (i, k) in keys.iter().enumerate() {
            reps.entry(k.as_slice()).or_insert(i);
        }
        let mut oracle_bad = 0usize;
        if n <= 5 {
            // same key implies isomorphic
            oracle_bad += (0..trees.len()).into_par_iter().filter(|&i| !isomorphic(&trees[i], &trees[reps[keys[i].as_slice()]])).count();
            // different keys imply non-isomorphic
            let mut buckets: HashMap<Vec<(u32, usize, Mark, Mark, Mark)>, Vec<usize>> = HashMap::new();
            for &i in reps.values() {
                buckets.entry(invariant(&trees[i])).or_default().push(i);
            }
            let buckets: Vec<Vec<usize>> = buckets.into_values().collect();
            oracle_bad += buckets
                .par_iter()
                .map(|b| {
                    let mut bad = 0;
                    for x in 0..b.len() {
                        for y in x + 1..b.len() {
                            bad += usize::from(isomorphic(&trees[b[x]], &trees[b[y]]));
                        }
                    }
                    bad
                })
                .sum::<usize>();
        }
        let classes = reps.len() as u128;
        let ok = classes == expected[n] && relabel_bad == 0 && oracle_bad == 0;
        pass &= ok;
        details.push(format!("n={n}: {classes}/{} classes", expected[n]));
        if relabel_bad + oracle_bad > 0 {
            details.push(format!("n={n}: {relabel_bad} relabel and {oracle_bad} oracle disagreements"));
        }
    }
    outcome(pass, details.join(", "))
}

fn criterion_2() -> Outcome {
    let classes = small_classes();
    const FULL: u32 = 8;

    // root children with equal T(o,v) and ξ(v,o) have equal T(v,o)
    let swap_bad: usize = classes
        .par_iter()
        .map(|t| {
            let lt = LabeledTree::from_canonical(t);
            let kids = lt.children(0);
            let mut bad = 0;
            for (i, &v) in kids.iter().enumerate() {
                for &w in &kids[i + 1..] {
                    if lt.cut(0, v, FULL) == lt.cut(0, w, FULL) && lt.to_parent_mark(v) == lt.to_parent_mark(w) && lt.cut(v, 0, FULL) != lt.cut(w, 0, FULL) {
                        bad += 1;
                    }
                }
            }
            bad
        })
        .sum();

    // t ⊕ t' determines t among half-trees with the same mark
    let halves: Vec<HalfTree> = classes
        .iter()
        .filter(|t| t.size() <= 3)
        .flat_map(|t| (0..2).map(move |x| HalfTree::new(x, t.clone())))
        .collect();
    let oplus_bad: usize = halves
        .par_iter()
        .map(|t2| {
            let mut seen: HashMap<(Mark, CanonicalTree), &HalfTree> = HashMap::new();
            let mut bad = 0;
            for t in &halves {
                if let Some(prev) = seen.insert((t.mark, oplus(t, t2)), t) {
                    bad += usize::from(prev != t);
                }
            }
            bad
        })
        .sum();

    // E_{l+1,k}(t,t') > 0 equals the count of children matching t' and t[m]
    let eh_bad: usize = classes
        .par_iter()
        .map(|t| {
            let lt = LabeledTree::from_canonical(t);
            let k = t.depth().max(1);
            let kids = lt.children(0);
            let mut bad = 0;
            for l in 1..=3 {
                for &v in kids {
                    let a = lt.cut(v, 0, l);
                    let b = lt.cut(0, v, k - 1);
                    let e = lwc_core::tree::eh_count(t, &a, &b, l + 1, k).unwrap();
                    let scan = kids.iter().filter(|&&w| lt.cut(w, 0, l) == a && lt.cut(0, w, k - 1) == b).count() as u64;
                    let by_mark = kids.iter().filter(|&&w| lt.cut(0, w, k - 1) == b && lt.to_parent_mark(w) == a.mark).count() as u64;
                    bad += usize::from(e != scan || e != by_mark);
                }
            }
            bad
        })
        .sum();

    // root mark plus E_h profile determine a depth-h tree
    let mut unique_bad = 0usize;
    for h in 1..=5u32 {
        let mut seen: HashMap<(Mark, Vec<(HalfTree, HalfTree, u64)>), &CanonicalTree> = HashMap::new();
        for t in classes.iter().filter(|t| t.depth() <= h) {
            let profile = eh_profile(t, h).into_iter().map(|((a, b), c)| (a, b, c)).collect();
            if let Some(prev) = seen.insert((t.mark(), profile), t) {
                unique_bad += usize::from(prev != t);
            }
        }
    }
    let total = swap_bad + oplus_bad + eh_bad + unique_bad;
    outcome(
        total == 0,
        format!(
            "{} trees, {} half-trees; counterexamples: swap {swap_bad}, oplus {oplus_bad}, E_(l+1,k) {eh_bad}, uniqueness {unique_bad}",
            classes.len(),
            halves.len()
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut kernels = 0;
    let mut bad = 0;
    for p in corpus() {
        assert!(p.is_admissible().admissible);
        for k in p.all_kernels().values() {
            kernels += 1;
            let total: Rational = Rational::sum(k.values().cloned());
            bad += usize::from(total != Rational::one());
        }
    }
    outcome(bad == 0, format!("{kernels} kernels over 50 laws, {bad} not summing to 1"))
}

/// Empirical law of depth-k balls of UGWT samples.
fn sampled_law<W: Weight>(p: &NeighborhoodDist<W>, k: u32, n: usize, seed: u64) -> BTreeMap<CanonicalTree, f64> {
    let s = UgwtSampler::new(p).unwrap();
    let mut counts: BTreeMap<CanonicalTree, u64> = BTreeMap::new();
    for x in s.sample_batch(k, seed, n).unwrap() {
        *counts.entry(x.tree.ball(0, k)).or_insert(0) += 1;
    }
    counts.into_iter().map(|(t, c)| (t, c as f64 / n as f64)).collect()
}

fn criterion_4() -> Outcome {
    let corpus = corpus();
    let mut bad = 0;
    let mut pairs = 0;
    for p in &corpus {
        match p.markov_consistency() {
            Ok(r) => {
                pairs += r.pairs_checked;
                bad += usize::from(!r.marginal_deviation.is_zero() || !r.kernel_deviation.is_zero());
            }
            Err(_) => bad += 1,
        }
    }
    // sampled check on the three laws with the smallest support
    let mut small: Vec<&NeighborhoodDist<Rational>> = corpus.iter().collect();
    small.sort_by_key(|p| p.len());
    let mut worst: f64 = 0.0;
    for (i, p) in small.iter().take(3).enumerate() {
        let q = p.extend_exact().unwrap();
        let k = p.h() + 2;
        let a = sampled_law(*p, k, 100_000, derive(40, &[i as u64, 0]));
        let b = sampled_law(&q, k, 100_000, derive(40, &[i as u64, 1]));
        worst = worst.max(tv_distance(&a, &b));
    }
    outcome(
        bad == 0 && worst <= 0.03,
        format!("exact identity on 50 laws ({pairs} kernel pairs, {bad} failures); sampled TV max {worst:.4} <= 0.03"),
    )
}

fn mark_toward(t: &LabeledTree, u: usize, v: usize) -> Mark {
    let mut x = 0;
    t.for_each_neighbor(u, |w, toward_w, _| {
        if w == v {
            x = toward_w;
        }
    });
    x
}

fn criterion_5() -> Outcome {
    let f = |t: &LabeledTree, u: usize, v: usize| t.degree(v) as f64 * (1.0 + t.mark(u) as f64) + 2.0 * mark_toward(t, u, v) as f64;
    let mut zs = Vec::new();
    for (i, p) in corpus().iter().take(10).enumerate() {
        let s = UgwtSampler::new(p).unwrap();
        let depth = p.h() + 2;
        let r = involution_check_with(|seed| s.sample(depth, seed).map(|x| x.tree), f, 100_000, derive(50, &[i as u64])).unwrap();
        zs.push(r.z_score());
    }
    // Galton-Watson tree with 0 or 2 children everywhere, root included
    let gw = |seed: u64| -> lwc_core::Result<LabeledTree> {
        let mut rng = stream(seed, &[]);
        let mut t = LabeledTree::new(0);
        let mut frontier = vec![0usize];
        for _ in 0..3 {
            let mut next = Vec::new();
            for v in frontier {
                if rng.gen_bool(0.5) {
                    for _ in 0..2 {
                        next.push(t.add_child(v, 0, 0, 0));
                    }
                }
            }
            frontier = next;
        }
        Ok(t)
    };
    let leaf_neighbor = |t: &LabeledTree, _u: usize, v: usize| f64::from(u8::from(t.degree(v) == 1));
    let control = involution_check_with(gw, leaf_neighbor, 100_000, 51).unwrap();
    let max_z = zs.iter().cloned().fold(0.0, f64::max);
    outcome(
        max_z <= 3.0 && control.z_score() >= 5.0,
        format!("max |z| over 10 laws {max_z:.2} <= 3; negative control z {:.1} >= 5", control.z_score()),
    )
}

fn criterion_6() -> Outcome {
    let mut bad = 0;
    let mut errors = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for p in corpus() {
        let ladder: lwc_core::Result<Vec<f64>> = (|| {
            if p.h() == 1 {
                let q = p.extend_exact()?;
                let r = q.extend_exact()?;
                Ok(vec![p.j_h()?, q.j_h()?, r.j_h()?])
            } else {
                Ok(vec![p.marginal(1)?.j_h()?, p.j_h()?, p.extend_exact()?.j_h()?])
            }
        })();
        match ladder {
            Ok(j) => {
                let gap = (j[1] - j[0]).max(j[2] - j[1]);
                worst_gap = worst_gap.max(gap);
                bad += usize::from(gap > 1e-9);
            }
            Err(e) => {
                eprintln!("ladder error (h={}, {} atoms): {e}", p.h(), p.len());
                errors += 1
            }
        }
    }
    outcome(
        bad == 0 && errors == 0,
        format!("J_1 >= J_2 >= J_3 on 50 laws: {bad} violations, {errors} errors, largest increase {worst_gap:.3e}"),
    )
}

fn criterion_7() -> Outcome {
    let j2 = regular(2, 1).j_h().unwrap();
    let mut worst: f64 = 0.0;
    for d in 1..=8usize {
        let df = d as f64;
        let closed = -df / 2.0 + df / 2.0 * df.ln() - (1..=d).map(|k| (k as f64).ln()).sum::<f64>();
        for h in 1..=2 {
            worst = worst.max((regular(d, h).j_h().unwrap() - closed).abs());
        }
    }
    outcome(j2 == -1.0 && worst <= 1e-12, format!("J_1(2-regular) = {j2}; max closed-form error {worst:.2e} for d <= 8, h = 1, 2"))
}

type Counts = (BTreeMap<(Mark, Mark), u64>, BTreeMap<Mark, u64>);

fn criterion_8() -> Outcome {
    let mut checked = 0;
    let mut bad = 0;
    for n in 1..=4usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        // tally every marked graph by its count vectors
        let mut edge_tally: HashMap<BTreeMap<(Mark, Mark), u64>, u64> = HashMap::new();
        for subset in 0u32..1 << pairs.len() {
            let k = subset.count_ones();
            for marks in 0u32..4u32.pow(k) {
                let mut m = BTreeMap::new();
                let mut x = marks;
                for _ in 0..k {
                    let (a, b) = (x % 2, (x / 2) % 2);
                    x /= 4;
                    *m.entry((a.min(b), a.max(b))).or_insert(0u64) += 1;
                }
                *edge_tally.entry(m).or_insert(0) += 1;
            }
        }
        let mut vertex_tally: HashMap<BTreeMap<Mark, u64>, u64> = HashMap::new();
        for marks in 0u32..1 << n {
            let mut u = BTreeMap::new();
            for i in 0..n {
                *u.entry((marks >> i) & 1).or_insert(0u64) += 1;
            }
            *vertex_tally.entry(u).or_insert(0) += 1;
        }
        let max_e = pairs.len() as u64;
        for e00 in 0..=max_e {
            for e01 in 0..=max_e - e00 {
                for e11 in 0..=max_e - e00 - e01 {
                    for u0 in 0..=n as u64 {
                        let (m, u): Counts = (
                            [((0, 0), e00), ((0, 1), e01), ((1, 1), e11)].into_iter().filter(|x| x.1 > 0).collect(),
                            [(0, u0), (1, n as u64 - u0)].into_iter().filter(|x| x.1 > 0).collect(),
                        );
                        let brute = edge_tally.get(&m).copied().unwrap_or(0) * vertex_tally.get(&u).copied().unwrap_or(0);
                        checked += 1;
                        bad += usize::from(exact_count(n as u64, &m, &u) != BigUint::from(brute));
                    }
                }
            }
        }
    }
    outcome(bad == 0, format!("{checked} (m, u) pairs for n <= 4, {bad} deviations"))
}

/// Every configuration of `d` by direct matching, as multigraphs with multiplicity.
fn configurations(d: &ColoredDegreeSequence) -> Vec<DirectedColoredMultigraph> {
    fn half_edges(d: &ColoredDegreeSequence, c: usize) -> Vec<u32> {
        (0..d.n()).flat_map(|v| std::iter::repeat(v as u32).take(d.get(v, c) as usize)).collect()
    }
    fn perfect_matchings(w: &[u32]) -> Vec<Vec<(u32, u32)>> {
        if w.is_empty() {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for j in 1..w.len() {
            let rest: Vec<u32> = w[1..].iter().enumerate().filter(|&(i, _)| i + 1 != j).map(|(_, &x)| x).collect();
            for mut m in perfect_matchings(&rest) {
                m.push((w[0], w[j]));
                out.push(m);
            }
        }
        out
    }
    fn bijections(a: &[u32], b: &[u32]) -> Vec<Vec<(u32, u32)>> {
        if a.is_empty() {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for j in 0..b.len() {
            let rest: Vec<u32> = b.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &x)| x).collect();
            for mut m in bijections(&a[1..], &rest) {
                m.push((a[0], b[j]));
                out.push(m);
            }
        }
        out
    }
    let l = d.l();
    let mut per_color: Vec<Vec<Vec<(u32, u32, u32)>>> = Vec::new();
    for i in 0..l {
        for j in i..l {
            let c = i * l + j;
            let choices = if i == j {
                perfect_matchings(&half_edges(d, c))
            } else {
                bijections(&half_edges(d, c), &half_edges(d, j * l + i))
            };
            per_color.push(choices.into_iter().map(|m| m.into_iter().map(|(u, v)| (u, v, c as u32)).collect()).collect());
        }
    }
    let mut out: Vec<Vec<(u32, u32, u32)>> = vec![Vec::new()];
    for choices in per_color {
        out = out
            .into_iter()
            .flat_map(|base| {
                choices.iter().map(move |c| {
                    let mut x = base.clone();
                    x.extend_from_slice(c);
                    x
                })
            })
            .collect();
    }
    out.into_iter().map(|pairs| DirectedColoredMultigraph::from_pairs(d.n(), l, &pairs)).collect()
}

fn criterion_9() -> Outcome {
    let cases = vec![
        ColoredDegreeSequence::new(1, vec![vec![2], vec![2], vec![2]]).unwrap(),
        ColoredDegreeSequence::new(1, vec![vec![3], vec![1]]).unwrap(),
        ColoredDegreeSequence::new(2, vec![vec![1, 2, 0, 0], vec![1, 0, 1, 0], vec![0, 0, 1, 0]]).unwrap(),
        ColoredDegreeSequence::new(2, vec![vec![0, 1, 0, 1], vec![0, 0, 1, 1], vec![0, 1, 1, 0]]).unwrap(),
    ];
    let draws = 100_000u64;
    let mut pass = true;
    let mut worst_sigma: f64 = 0.0;
    let mut sizes = Vec::new();
    for (ci, d) in cases.iter().enumerate() {
        let configs = configurations(d);
        // Π_{c<c̄} S_c! Π_{c=c̄} (S_c - 1)!!
        let l = d.l();
        let s = d.totals();
        let mut formula = 1u64;
        for i in 0..l {
            for j in i..l {
                let c = (i * l + j) as usize;
                formula *= if i == j { (1..s[c]).rev().step_by(2).product::<u64>() } else { (1..=s[c]).product::<u64>() };
            }
        }
        let mut lib = enumerate_configurations(d, 1_000_000).unwrap();
        let mut mine = configurations(d);
        lib.sort();
        mine.sort();
        pass &= configs.len() as u64 == formula && lib == mine;
        sizes.push(formula);

        let mut exact: BTreeMap<DirectedColoredMultigraph, u64> = BTreeMap::new();
        for g in configs {
            *exact.entry(g).or_insert(0) += 1;
        }
        let observed: BTreeMap<DirectedColoredMultigraph, u64> = (0..draws)
            .into_par_iter()
            .map(|i| sample_cm(d, derive(90, &[ci as u64, i])).unwrap())
            .fold(BTreeMap::new, |mut acc, g| {
                *acc.entry(g).or_insert(0u64) += 1;
                acc
            })
            .reduce(BTreeMap::new, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
                a
            });
        pass &= observed.keys().all(|g| exact.contains_key(g));
        for (g, &c) in &exact {
            let p = c as f64 / formula as f64;
            let freq = observed.get(g).copied().unwrap_or(0) as f64 / draws as f64;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            if sigma > 0.0 {
                worst_sigma = worst_sigma.max((freq - p).abs() / sigma);
            }
        }
    }
    pass &= worst_sigma <= 4.0;
    outcome(pass, format!("|Σ| = {sizes:?} match the product formula and the library enumeration; worst deviation {worst_sigma:.2}σ <= 4σ"))
}

/// Twenty tree-like graphs, n <= 40, alternating h = 1, 2.
fn treelike_corpus() -> Vec<(MarkedGraph, u32)> {
    (0..20u64)
        .map(|i| {
            let h = 1 + (i % 2) as u32;
            let n = 10 + (i as usize * 7) % 31;
            let cycle = match i % 3 {
                0 => 0,
                1 => 2 * h as usize + 2,
                _ => (2 * h as usize + 5).min(n),
            };
            let g = random_treelike_graph(n, cycle, 2, 2, 2000 + i);
            assert!(is_h_treelike(&g, h));
            (g, h)
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let mut bad = 0;
    let mut samples = 0;
    for (i, (g, h)) in treelike_corpus().into_iter().enumerate() {
        let (table, beta, d) = colored_degree(&g, h).unwrap();
        let (_, colored) = colored_of(&g, h).unwrap();
        bad += usize::from(mcb(&colored, &table, &beta).unwrap() != g);
        let hoods: Vec<CanonicalRootedGraph> = (0..g.n()).map(|v| neighborhood(&g, v, h).unwrap()).collect();
        for s in 0..5u64 {
            let out = match sample_girth_constrained(&d, 2 * h as usize + 1, derive(100, &[i as u64, s]), DEFAULT_MAX_ATTEMPTS) {
                Ok(o) => o,
                Err(_) => {
                    bad += 1;
                    continue;
                }
            };
            samples += 1;
            let g2 = mcb(&out.graph, &table, &beta).unwrap();
            bad += usize::from((0..g.n()).any(|v| neighborhood(&g2, v, h).unwrap() != hoods[v]));
            bad += usize::from(colored_of_with(&g2, h, &table).unwrap() != out.graph);
        }
    }
    outcome(bad == 0, format!("20 graphs, {samples} sampled H; {bad} failures"))
}

fn criterion_11() -> Outcome {
    let mut edges = 0;
    let mut bad = 0;
    for (g, h) in treelike_corpus() {
        for (&(v, w), m) in &message_types(&g, h).unwrap() {
            edges += 1;
            bad += usize::from(half_graph(&g, w, v, h - 1).unwrap().as_half_tree().as_ref() != Some(m));
        }
    }
    // triangle: every directed edge colored (g, g), g = (O, blue path of two B,B edges)
    const B: Mark = 0;
    const O: Mark = 1;
    let g = HalfTree::new(O, LabeledTree::from_parents(&[0, 0, 1], &[B, B, B], &[(B, B), (B, B), (B, B)]).canonical());
    let table = TypeTable::new([g.clone()]);
    let h = DirectedColoredMultigraph::from_pairs(3, 1, &[(0, 1, 0), (1, 2, 0), (0, 2, 0)]);
    let tri = mcb(&h, &table, &[B; 3]).unwrap();
    let orange = |u, v| Edge { u, v, mark_uv: O, mark_vu: O };
    let expected = MarkedGraph::new(vec![B; 3], &[orange(0, 1), orange(1, 2), orange(0, 2)]).unwrap();
    let mut mismatch = tri == expected;
    for (u, v) in [(0, 1), (0, 2), (1, 2)] {
        let (a, b) = etype(&tri, u, v, 2).unwrap();
        mismatch &= a.as_half_tree() != Some(g.clone()) && b.as_half_tree() != Some(g.clone());
    }
    mismatch &= message_types(&tri, 2).unwrap().values().all(|m| *m != g);
    outcome(
        bad == 0 && mismatch,
        format!("{edges} directed edges, {bad} message/cut disagreements; triangle mismatch reproduced: {mismatch}"),
    )
}

fn law_of<W: Weight>(p: &NeighborhoodDist<W>) -> BTreeMap<CanonicalRootedGraph, f64> {
    p.atoms().map(|(t, w)| (CanonicalRootedGraph::Tree(t.clone()), w.to_f64())).collect()
}

fn criterion_12() -> Outcome {
    // small depth-(h+1) supports keep the sampled reference sharp; probabilities
    // are not multiples of 1/200, so rounding is exercised at every size
    let laws: Vec<NeighborhoodDist<Rational>> = vec![
        empirical_law(&bounded_treelike_graph(7, 0, 2, 1, 3, 3004), 1),
        empirical_law(&bounded_treelike_graph(12, 6, 2, 1, 3, 3003), 2),
        empirical_law(&bounded_treelike_graph(11, 6, 1, 2, 3, 3007), 2),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (i, p) in laws.iter().enumerate() {
        let h = p.h();
        let target = law_of(p);
        let deeper: BTreeMap<CanonicalRootedGraph, f64> = sampled_law(p, h + 1, 100_000, derive(120, &[i as u64]))
            .into_iter()
            .map(|(t, x)| (CanonicalRootedGraph::Tree(t), x))
            .collect();
        let mut tv_h = Vec::new();
        let mut tv_deep = 0.0;
        for (j, n) in [200usize, 800, 3200].into_iter().enumerate() {
            let m = adapted_counts_for(p, n as u64).unwrap();
            let (g, _) = realize(p, n, &m, derive(121, &[i as u64, j as u64]), DEFAULT_MAX_ATTEMPTS).unwrap();
            let marg = neighborhood_marginals(&g, h + 1).unwrap();
            tv_h.push(tv_distance(&marg[h as usize], &target));
            tv_deep = tv_distance(&marg[h as usize + 1], &deeper);
        }
        let ok = tv_h.windows(2).all(|w| w[1] <= w[0]) && tv_h[2] <= 0.05 && tv_deep <= 0.08;
        pass &= ok;
        details.push(format!(
            "P{} (h={h}, {} atoms): TV_h {:.4}/{:.4}/{:.4}, TV_(h+1) {tv_deep:.4}",
            i + 1,
            p.len(),
            tv_h[0],
            tv_h[1],
            tv_h[2]
        ));
    }
    outcome(pass, details.join("; "))
}

/// Depth-1 signature of v: its mark and the sorted (mark toward w, mark toward v, mark of w)
/// over neighbors; `None` when two neighbors are adjacent.
fn depth1_signature(n: usize, adj: &[Vec<(usize, Mark, Mark)>], marks: &[Mark], v: usize) -> Option<(Mark, Vec<(Mark, Mark, Mark)>)> {
    let nb: Vec<usize> = adj[v].iter().map(|x| x.0).collect();
    for &a in &nb {
        if adj[a].iter().any(|x| nb.contains(&x.0)) {
            return None;
        }
    }
    let _ = n;
    let mut s: Vec<_> = adj[v].iter().map(|&(w, tw, tv)| (tw, tv, marks[w])).collect();
    s.sort_unstable();
    Some((marks[v], s))
}

fn brute_count_same_depth1(g: &MarkedGraph) -> u64 {
    let n = g.n();
    let adj_of = |g: &MarkedGraph| -> Vec<Vec<(usize, Mark, Mark)>> { (0..n).map(|v| g.neighbors(v).to_vec()).collect() };
    let profile = |adj: &[Vec<(usize, Mark, Mark)>], marks: &[Mark]| {
        let mut p: Vec<_> = (0..n).map(|v| depth1_signature(n, adj, marks, v)).collect();
        p.sort();
        p
    };
    let target = profile(&adj_of(g), g.vertex_marks());
    let k = g.edge_count();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut count = 0u64;
    for subset in 0u32..1 << pairs.len() {
        if subset.count_ones() as usize != k {
            continue;
        }
        let chosen: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|&(i, _)| subset >> i & 1 == 1).map(|(_, &p)| p).collect();
        for em in 0u32..4u32.pow(k as u32) {
            let mut adj = vec![Vec::new(); n];
            let mut x = em;
            for &(u, v) in &chosen {
                let (a, b) = (x % 2, (x / 2) % 2);
                x /= 4;
                adj[u].push((v, a, b));
                adj[v].push((u, b, a));
            }
            for vm in 0u32..1 << n {
                let marks: Vec<Mark> = (0..n).map(|i| (vm >> i) & 1).collect();
                if profile(&adj, &marks) == target {
                    count += 1;
                }
            }
        }
    }
    count
}

fn criterion_13() -> Outcome {
    let mut rng = stream(130, &[]);
    // even-indexed shapes stay unmarked so that automorphisms show up in the counts
    let mut edges_for = |i: usize, pairs: &[(usize, usize)]| -> Vec<Edge> {
        let k = if i % 2 == 0 { 1 } else { 2 };
        pairs.iter().map(|&(u, v)| Edge { u, v, mark_uv: rng.gen_range(0..k), mark_vu: rng.gen_range(0..k) }).collect()
    };
    let shapes: Vec<(usize, Vec<(usize, usize)>)> = vec![
        (2, vec![(0, 1)]),
        (3, vec![(0, 1), (1, 2)]),
        (4, vec![(0, 1), (1, 2), (2, 3)]),
        (4, vec![(0, 1), (0, 2), (0, 3)]),
        (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
        (4, vec![(0, 1), (2, 3)]),
        (5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]),
        (5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]),
        (5, vec![(0, 1), (0, 2), (0, 3), (3, 4)]),
        (5, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
    ];
    let graphs: Vec<MarkedGraph> = shapes
        .iter()
        .enumerate()
        .map(|(i, (n, pairs))| {
            let marks: Vec<Mark> = (0..*n).map(|v| (i % 2 == 1 && (i + v) % 3 == 0) as Mark).collect();
            MarkedGraph::new(marks, &edges_for(i, pairs)).unwrap()
        })
        .collect();
    let results: Vec<(u64, f64)> = graphs
        .par_iter()
        .map(|g| {
            let brute = brute_count_same_depth1(g);
            (brute, log_n_h(g, 1, CountMode::Exact).unwrap())
        })
        .collect();
    let bad = results.iter().filter(|(b, l)| l.exp().round() as u64 != *b).count();
    let counts: Vec<u64> = results.iter().map(|r| r.0).collect();
    outcome(bad == 0, format!("{} graphs on n <= 5, brute counts {counts:?}; {bad} deviations", graphs.len()))
}

fn criterion_14() -> Outcome {
    let targets: Vec<(BTreeMap<(Mark, Mark), f64>, BTreeMap<Mark, f64>)> = vec![
        ([((0, 0), 2.0)].into(), [(0, 1.0)].into()),
        ([((0, 0), 1.0), ((0, 1), 0.5), ((1, 0), 0.5), ((1, 1), 1.5)].into(), [(0, 0.3), (1, 0.7)].into()),
        ([((0, 1), 3.0), ((1, 0), 3.0)].into(), [(0, 0.5), (1, 0.5)].into()),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (d, q) in &targets {
        let errs: Vec<f64> = [50u64, 100, 200, 400]
            .iter()
            .map(|&n| {
                let c = adapted_counts(d, q, n).unwrap();
                (exact_log_count(n, &c.m, &c.u) - stirling_log_count(n, &c.m, d, q)).abs() / n as f64
            })
            .collect();
        pass &= errs.windows(2).all(|w| w[1] < w[0]);
        details.push(errs.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>().join("/"));
    }
    outcome(pass, format!("|exact - stirling|/n at n = 50/100/200/400: {}", details.join("; ")))
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "canonical form vs isomorphism oracle", criterion_1),
        (2, "tree-algebra lemmas", criterion_2),
        (3, "size-biased kernel normalization", criterion_3),
        (4, "Markov consistency", criterion_4),
        (5, "unimodularity", criterion_5),
        (6, "J_h monotonicity", criterion_6),
        (7, "J_h closed forms", criterion_7),
        (8, "exact ensemble count", criterion_8),
        (9, "configuration model uniformity", criterion_9),
        (10, "conversion round trip", criterion_10),
        (11, "message passing", criterion_11),
        (12, "realization convergence", criterion_12),
        (13, "N_h counting", criterion_13),
        (14, "Stirling consistency", criterion_14),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {name}: {verdict} ({}; {:.1}s)", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
