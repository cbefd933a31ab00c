//! Unimodular Galton-Watson trees with given neighborhood law, their
//! colored variant, likelihood weights, the involution-invariance check
//! and degree truncation.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;

use crate::colored::conj;
use crate::dist::{NeighborhoodDist, TypePair};
use crate::error::{bail, Result};
use crate::rng::{derive, stream};
use crate::tree::{truncate, CanonicalTree, HalfTree, LabeledTree, MarkedAdjacency};
use crate::weight::Weight;

/// A finite-depth realization of UGWT_h(P) with per-vertex log likelihood factors.
#[derive(Clone, Debug)]
pub struct SampledTree {
    pub tree: LabeledTree,
    /// log γ(v): root ball probability at the root, kernel probability of the
    /// sampled extension elsewhere; `None` where nothing was sampled.
    pub gamma: Vec<Option<f64>>,
    pub seed: u64,
    pub h: u32,
    pub depth_cap: u32,
}

impl SampledTree {
    pub fn gamma_sum(&self) -> f64 {
        self.gamma.iter().flatten().sum()
    }
}

/// Picks an index given weights that sum to one. `key` identifies the
/// vertex being decided so random choosers can use per-vertex streams.
pub trait Chooser {
    fn choose(&mut self, key: u64, weights: &[f64]) -> usize;
}

/// Seeded chooser drawing each decision from the stream keyed by the vertex.
pub struct SeededChooser {
    pub seed: u64,
}

impl Chooser for SeededChooser {
    fn choose(&mut self, key: u64, weights: &[f64]) -> usize {
        let mut rng = stream(self.seed, &[key]);
        pick(&mut rng, weights)
    }
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Precomputed root law and extension kernels of an admissible P.
#[derive(Clone, Debug)]
pub struct UgwtSampler {
    h: u32,
    roots: Vec<CanonicalTree>,
    root_probs: Vec<f64>,
    root_index: HashMap<CanonicalTree, usize>,
    kernels: HashMap<TypePair, (Vec<HalfTree>, Vec<f64>)>,
}

const ROOT_KEY: u64 = 0;

impl UgwtSampler {
    pub fn new<W: Weight>(p: &NeighborhoodDist<W>) -> Result<Self> {
        let rep = p.is_admissible();
        if let Some((t, t2, a, b)) = rep.violation {
            bail!(Inadmissible, "e_P({t:?}, {t2:?}) = {} but the transpose is {}", a.render(), b.render());
        }
        let (roots, root_probs): (Vec<_>, Vec<_>) = p.atoms().map(|(t, w)| (t.clone(), w.to_f64())).unzip();
        let root_index = roots.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let kernels = p
            .all_kernels()
            .into_iter()
            .map(|(k, law)| {
                let (ts, ws): (Vec<_>, Vec<_>) = law.into_iter().map(|(t, w)| (t, w.to_f64())).unzip();
                (k, (ts, ws))
            })
            .collect();
        Ok(Self { h: p.h(), roots, root_probs, root_index, kernels })
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    /// Grows a tree to `depth_cap`, asking `chooser` for every random decision.
    pub fn generate<C: Chooser>(&self, depth_cap: u32, chooser: &mut C) -> Result<(LabeledTree, Vec<Option<f64>>)> {
        let h = self.h;
        if depth_cap < h {
            bail!(Precondition, "depth cap {depth_cap} below h = {h}");
        }
        let r = chooser.choose(ROOT_KEY, &self.root_probs);
        let mut tree = LabeledTree::from_canonical(&self.roots[r]);
        let mut keys = vec![ROOT_KEY];
        for v in 1..tree.len() {
            keys.push(child_key(&tree, &keys, v));
        }
        let mut gamma = vec![None; tree.len()];
        gamma[0] = Some(self.root_probs[r].ln());
        for k in 1..=depth_cap - h {
            let layer: Vec<usize> = tree.vertices_at_depth(k).collect();
            if layer.is_empty() {
                break;
            }
            for v in layer {
                let p = tree.parent(v).expect("non-root vertex");
                let key = (tree.cut(p, v, h - 1), tree.cut(v, p, h - 1));
                let Some((support, probs)) = self.kernels.get(&key) else {
                    bail!(Degenerate, "no extension kernel for an edge type met during sampling");
                };
                let j = chooser.choose(keys[v], probs);
                let before = tree.len();
                graft(&mut tree, v, &support[j].subtree, h - 1)?;
                for w in before..tree.len() {
                    keys.push(child_key(&tree, &keys, w));
                }
                gamma.resize(tree.len(), None);
                gamma[v] = Some(probs[j].ln());
            }
        }
        Ok((tree, gamma))
    }

    pub fn sample(&self, depth_cap: u32, seed: u64) -> Result<SampledTree> {
        let (tree, gamma) = self.generate(depth_cap, &mut SeededChooser { seed })?;
        Ok(SampledTree { tree, gamma, seed, h: self.h, depth_cap })
    }

    /// `count` samples; sample i uses the seed derived from (seed, i).
    pub fn sample_batch(&self, depth_cap: u32, seed: u64, count: usize) -> Result<Vec<SampledTree>> {
        (0..count as u64).into_par_iter().map(|i| self.sample(depth_cap, derive(seed, &[i]))).collect()
    }

    /// Log-likelihood of the depth-k ball of `sample`: the root term plus
    /// log γ(v) over vertices at depths 1..=k-h.
    pub fn log_weight(&self, sample: &LabeledTree, k: u32) -> Result<LogWeight> {
        let h = self.h;
        if sample.max_depth() < k.min(h) {
            bail!(Precondition, "sample shallower than the requested depth {k}");
        }
        let root_ball = sample.ball(0, h);
        let Some(&r) = self.root_index.get(&root_ball) else {
            return Ok(LogWeight { value: f64::NEG_INFINITY, impossible_at: Some(0) });
        };
        let mut value = self.root_probs[r].ln();
        for v in 1..sample.len() {
            let dv = sample.depth(v);
            if dv == 0 || dv + h > k {
                continue;
            }
            let p = sample.parent(v).expect("non-root vertex");
            let key = (sample.cut(p, v, h - 1), sample.cut(v, p, h - 1));
            let ext = sample.cut(p, v, h);
            let prob = self
                .kernels
                .get(&key)
                .and_then(|(s, w)| s.iter().position(|x| *x == ext).map(|i| w[i]))
                .unwrap_or(0.0);
            if prob == 0.0 {
                return Ok(LogWeight { value: f64::NEG_INFINITY, impossible_at: Some(v) });
            }
            value += prob.ln();
        }
        Ok(LogWeight { value, impossible_at: None })
    }
}

fn child_key(tree: &LabeledTree, keys: &[u64], v: usize) -> u64 {
    let p = tree.parent(v).expect("non-root vertex");
    let rank = tree.children(p).iter().position(|&c| c == v).expect("child listed") as u64;
    derive(keys[p], &[rank])
}

/// Adds the layer at relative depth `remaining + 1` below `x` so that the
/// subtree of `x` matches `target`. Existing children are matched to target
/// children with equal marks and equal truncations.
fn graft(tree: &mut LabeledTree, x: usize, target: &CanonicalTree, remaining: u32) -> Result<()> {
    if remaining == 0 {
        if !tree.children(x).is_empty() {
            bail!(Structural, "graft target layer already present");
        }
        for c in target.children() {
            tree.add_child(x, c.subtree.mark(), c.to_root, c.to_child);
        }
        return Ok(());
    }
    let mut pool: BTreeMap<(u32, u32, CanonicalTree), Vec<&CanonicalTree>> = BTreeMap::new();
    for c in target.children() {
        pool.entry((c.to_root, c.to_child, truncate(&c.subtree, remaining - 1))).or_default().push(&c.subtree);
    }
    let existing: Vec<usize> = tree.children(x).to_vec();
    let mut plan = Vec::with_capacity(existing.len());
    for y in existing {
        let key = (tree.to_parent_mark(y), tree.from_parent_mark(y), crate::tree::canonical_subtree(tree, y, Some(x), Some(remaining - 1)));
        let Some(sub) = pool.get_mut(&key).and_then(Vec::pop) else {
            bail!(Structural, "sampled extension does not refine the current subtree");
        };
        plan.push((y, sub.clone()));
    }
    if pool.values().any(|v| !v.is_empty()) {
        bail!(Structural, "sampled extension has more children than the current subtree");
    }
    for (y, sub) in plan {
        graft(tree, y, &sub, remaining - 1)?;
    }
    Ok(())
}

/// Log-likelihood of a sample under P; `impossible_at` names a vertex whose
/// observed extension has zero probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogWeight {
    pub value: f64,
    pub impossible_at: Option<usize>,
}

/// One UGWT_h(P) sample grown to `depth_cap`.
pub fn sample_ugwt<W: Weight>(p: &NeighborhoodDist<W>, depth_cap: u32, seed: u64) -> Result<SampledTree> {
    UgwtSampler::new(p)?.sample(depth_cap, seed)
}

pub fn log_weight<W: Weight>(sample: &SampledTree, p: &NeighborhoodDist<W>, k: u32) -> Result<LogWeight> {
    UgwtSampler::new(p)?.log_weight(&sample.tree, k)
}

/// Law on L×L colored degree matrices with finite support.
#[derive(Clone, Debug, PartialEq)]
pub struct ColoredDegreeLaw {
    l: usize,
    atoms: Vec<(Vec<u32>, f64)>,
}

impl ColoredDegreeLaw {
    /// Validates shapes, total mass, and E[D_c] = E[D_c̄].
    pub fn new(l: usize, atoms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if atoms.iter().any(|(m, p)| m.len() != l * l || !(*p >= 0.0)) {
            bail!(Precondition, "malformed atom in colored degree law");
        }
        let atoms: Vec<_> = atoms.into_iter().filter(|(_, p)| *p > 0.0).collect();
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            bail!(Precondition, "colored degree law has mass {total}");
        }
        let law = Self { l, atoms };
        let mean = law.mean();
        for c in 0..l * l {
            if (mean[c] - mean[conj(l, c)]).abs() > 1e-9 {
                bail!(Inadmissible, "E[D_c] differs from E[D_c̄] for color {c}");
            }
        }
        Ok(law)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn atoms(&self) -> &[(Vec<u32>, f64)] {
        &self.atoms
    }

    /// E[D_c] per color.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.l * self.l];
        for (a, p) in &self.atoms {
            for (c, &x) in a.iter().enumerate() {
                m[c] += p * x as f64;
            }
        }
        m
    }

    /// P̂^c: offspring law of a child reached along color c, as (M, prob).
    /// With E[D_c] = 0 this is the point mass at the zero matrix.
    pub fn offspring_law(&self, c: usize) -> Vec<(Vec<u32>, f64)> {
        let cb = conj(self.l, c);
        let mean = self.mean()[cb];
        if mean == 0.0 {
            return vec![(vec![0; self.l * self.l], 1.0)];
        }
        self.atoms
            .iter()
            .filter(|(a, _)| a[cb] >= 1)
            .map(|(a, p)| {
                let mut m = a.clone();
                m[cb] -= 1;
                (m, a[cb] as f64 * p / mean)
            })
            .collect()
    }
}

/// A CUGWT sample: each vertex stores its parent, the color of the edge
/// from its parent, and its full degree matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredTreeSample {
    pub parent: Vec<Option<usize>>,
    pub color_from_parent: Vec<Option<usize>>,
    pub degree: Vec<Vec<u32>>,
    pub depth: Vec<u32>,
    pub seed: u64,
}

pub fn sample_cugwt(r: &ColoredDegreeLaw, depth_cap: u32, seed: u64) -> Result<ColoredTreeSample> {
    let l = r.l;
    let laws: Vec<Vec<(Vec<u32>, f64)>> = (0..l * l).map(|c| r.offspring_law(c)).collect();
    let root_w: Vec<f64> = r.atoms.iter().map(|(_, p)| *p).collect();
    let root = r.atoms[pick(&mut stream(seed, &[ROOT_KEY]), &root_w)].0.clone();
    let mut s = ColoredTreeSample { parent: vec![None], color_from_parent: vec![None], degree: vec![root.clone()], depth: vec![0], seed };
    // offspring still to expand: (vertex, matrix of children counts, stream key)
    let mut frontier = vec![(0usize, root, ROOT_KEY)];
    while let Some((v, m, key)) = frontier.pop() {
        if s.depth[v] >= depth_cap {
            continue;
        }
        let mut rank = 0u64;
        for (c, &k) in m.iter().enumerate() {
            for _ in 0..k {
                let ck = derive(key, &[rank]);
                rank += 1;
                let law = &laws[c];
                let w: Vec<f64> = law.iter().map(|(_, p)| *p).collect();
                let off = law[pick(&mut stream(seed, &[ck]), &w)].0.clone();
                let mut full = off.clone();
                full[conj(l, c)] += 1;
                let id = s.parent.len();
                s.parent.push(Some(v));
                s.color_from_parent.push(Some(c));
                s.degree.push(full);
                s.depth.push(s.depth[v] + 1);
                frontier.push((id, off, ck));
            }
        }
    }
    Ok(s)
}

/// Summary of an involution-invariance check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvolutionReport {
    /// Mean of Σ_{v∼o} f(T, o, v).
    pub mean_forward: f64,
    /// Mean of Σ_{v∼o} f(T, v, o).
    pub mean_backward: f64,
    /// 95% half-widths of the two means.
    pub half_width_forward: f64,
    pub half_width_backward: f64,
    /// Paired difference and its standard error.
    pub diff: f64,
    pub diff_se: f64,
    pub samples: usize,
}

impl InvolutionReport {
    /// |diff| in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.diff_se == 0.0 {
            if self.diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.diff.abs() / self.diff_se
        }
    }

    pub fn passes(&self, sigmas: f64) -> bool {
        self.z_score() <= sigmas
    }
}

/// Estimates both sides of the involution identity for samples produced by `sampler`.
pub fn involution_check_with<S, F>(sampler: S, f: F, samples: usize, seed: u64) -> Result<InvolutionReport>
where
    S: Fn(u64) -> Result<LabeledTree> + Sync,
    F: Fn(&LabeledTree, usize, usize) -> f64 + Sync,
{
    if samples < 2 {
        bail!(Precondition, "need at least two samples");
    }
    let pairs: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let t = sampler(derive(seed, &[i]))?;
            let mut a = 0.0;
            let mut b = 0.0;
            t.for_each_neighbor(0, |v, _, _| {
                a += f(&t, 0, v);
                b += f(&t, v, 0);
            });
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let stats = |xs: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = xs.collect();
        let m = crate::weight::kahan_sum(v.iter().copied()) / n;
        let var = crate::weight::kahan_sum(v.iter().map(|x| (x - m) * (x - m))) / (n - 1.0);
        (m, (var / n).sqrt())
    };
    let (ma, sa) = stats(&mut pairs.iter().map(|p| p.0));
    let (mb, sb) = stats(&mut pairs.iter().map(|p| p.1));
    let (md, sd) = stats(&mut pairs.iter().map(|p| p.0 - p.1));
    Ok(InvolutionReport {
        mean_forward: ma,
        mean_backward: mb,
        half_width_forward: 1.96 * sa,
        half_width_backward: 1.96 * sb,
        diff: md,
        diff_se: sd,
        samples,
    })
}

/// Involution check for UGWT_h(P) grown to `depth`; `f` must only look
/// within distance `depth - 1` of its first argument.
pub fn involution_check<W: Weight, F>(p: &NeighborhoodDist<W>, depth: u32, f: F, samples: usize, seed: u64) -> Result<InvolutionReport>
where
    F: Fn(&LabeledTree, usize, usize) -> f64 + Sync,
{
    let sampler = UgwtSampler::new(p)?;
    let depth = depth.max(p.h());
    involution_check_with(|s| sampler.sample(depth, s).map(|x| x.tree), f, samples, seed)
}

/// Threshold convention for degree truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncationRule {
    /// Remove edges at vertices with degree ≥ k.
    AtLeast,
    /// Remove edges at vertices with degree > k.
    MoreThan,
}

impl TruncationRule {
    fn hits(self, deg: usize, k: usize) -> bool {
        match self {
            Self::AtLeast => deg >= k,
            Self::MoreThan => deg > k,
        }
    }
}

/// T^(k): delete every edge at a high-degree vertex and keep the root's
/// component. Degrees are those inside the sample, so vertices at the depth
/// cap count only their parent edge. Likelihood factors are dropped.
pub fn degree_truncate(sample: &SampledTree, k: usize, rule: TruncationRule) -> SampledTree {
    let t = &sample.tree;
    let high: Vec<bool> = (0..t.len()).map(|v| rule.hits(t.degree(v), k)).collect();
    let mut out = LabeledTree::new(t.mark(0));
    let mut queue = std::collections::VecDeque::from([(0usize, 0usize)]);
    while let Some((v, nv)) = queue.pop_front() {
        if high[v] {
            continue;
        }
        for &c in t.children(v) {
            if !high[c] {
                let nc = out.add_child(nv, t.mark(c), t.to_parent_mark(c), t.from_parent_mark(c));
                queue.push_back((c, nc));
            }
        }
    }
    let len = out.len();
    SampledTree { tree: out, gamma: vec![None; len], seed: sample.seed, h: sample.h, depth_cap: sample.depth_cap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::Rational;

    fn star(d: usize) -> CanonicalTree {
        let parents = vec![0; d + 1];
        LabeledTree::from_parents(&parents, &vec![0; d + 1], &vec![(0, 0); d + 1]).canonical()
    }

    #[test]
    fn regular_tree_sample() {
        let p = NeighborhoodDist::<Rational>::dirac(1, star(3)).unwrap();
        let s = sample_ugwt(&p, 4, 11).unwrap();
        assert_eq!(s.tree.len(), 1 + 3 + 6 + 12 + 24);
        for v in 0..s.tree.len() {
            if s.tree.depth(v) < 4 {
                assert_eq!(s.tree.degree(v), 3);
            }
        }
        assert_eq!(s.gamma_sum(), 0.0);
    }

    #[test]
    fn depth_cap_below_h_rejected() {
        let p = NeighborhoodDist::<Rational>::dirac(1, star(2)).unwrap();
        let q = p.extend_exact().unwrap();
        assert!(sample_ugwt(&q, 1, 0).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut atoms = BTreeMap::new();
        atoms.insert(star(1), Rational::from_ratio(2, 3));
        atoms.insert(star(2), Rational::from_ratio(1, 3));
        // a path-like law: leaves and degree-2 vertices
        let p = NeighborhoodDist::new(1, atoms).unwrap();
        let a = sample_ugwt(&p, 6, 5).unwrap();
        let b = sample_ugwt(&p, 6, 5).unwrap();
        assert_eq!(a.tree, b.tree);
        assert_eq!(a.gamma, b.gamma);
    }

    #[test]
    fn truncation_rules() {
        let p = NeighborhoodDist::<Rational>::dirac(1, star(3)).unwrap();
        let s = sample_ugwt(&p, 3, 1).unwrap();
        assert_eq!(degree_truncate(&s, 1, TruncationRule::AtLeast).tree.len(), 1);
        assert_eq!(degree_truncate(&s, 3, TruncationRule::MoreThan).tree, s.tree);
        assert_eq!(degree_truncate(&s, 3, TruncationRule::AtLeast).tree.len(), 1);
    }

    #[test]
    fn single_color_cugwt_children_have_one_offspring() {
        // R(0) = R(2) = 1/2: P̂(M = 1) = 2 · (1/2) / 1 = 1
        let r = ColoredDegreeLaw::new(1, vec![(vec![0], 0.5), (vec![2], 0.5)]).unwrap();
        assert_eq!(r.offspring_law(0), vec![(vec![1], 1.0)]);
        for seed in 0..20 {
            let s = sample_cugwt(&r, 5, seed).unwrap();
            for v in 1..s.parent.len() {
                assert_eq!(s.degree[v], vec![2]);
            }
        }
    }
}
