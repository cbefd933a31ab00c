//! Finitely supported laws on depth-h marked rooted trees and the
//! quantities built from them: edge-type expectations, admissibility,
//! size-biased kernels, the entropy functional and exact extension.

use std::collections::BTreeMap;

use crate::error::{bail, Result};
use crate::tree::{child_cut, eh_profile, truncate, CanonicalTree, Child, HalfTree};
use crate::weight::{ln_factorial, Weight};

pub type TypePair = (HalfTree, HalfTree);

/// Default cap on the support size produced by [`NeighborhoodDist::extend_exact`].
pub const DEFAULT_EXTENSION_CAP: usize = 200_000;

#[derive(Clone, Debug)]
struct Atom<W> {
    prob: W,
    profile: BTreeMap<TypePair, u64>,
}

/// A probability law on trees of depth at most `h`, `h >= 1`.
#[derive(Clone, Debug)]
pub struct NeighborhoodDist<W: Weight> {
    h: u32,
    atoms: BTreeMap<CanonicalTree, Atom<W>>,
    mean_degree: W,
    e_table: BTreeMap<TypePair, W>,
}

/// Result of the admissibility test.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport<W> {
    pub admissible: bool,
    /// For finite support strong admissibility coincides with admissibility.
    pub strongly_admissible: bool,
    /// First asymmetric entry: (t, t', e_P(t,t'), e_P(t',t)).
    pub violation: Option<(HalfTree, HalfTree, W, W)>,
}

/// Outcome of [`NeighborhoodDist::markov_consistency`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport<W> {
    pub marginal_deviation: W,
    pub kernel_deviation: W,
    pub pairs_checked: usize,
    pub extended_support: usize,
}

/// Law of the depth-h extension of one side of an edge.
pub type Kernel<W> = BTreeMap<HalfTree, W>;

impl<W: Weight> NeighborhoodDist<W> {
    /// Validates depths, nonnegativity and total mass; zero atoms are dropped.
    pub fn new(h: u32, atoms: BTreeMap<CanonicalTree, W>) -> Result<Self> {
        if h == 0 {
            bail!(Precondition, "distributions need h >= 1");
        }
        let mut total = Vec::with_capacity(atoms.len());
        let mut out = BTreeMap::new();
        for (t, p) in atoms {
            if p.is_negative() {
                bail!(Precondition, "negative mass {} on {t:?}", p.render());
            }
            if t.depth() > h {
                bail!(Precondition, "atom of depth {} in a depth-{h} law", t.depth());
            }
            if p.is_zero() {
                continue;
            }
            total.push(p.clone());
            let profile = if t.degree() == 0 { BTreeMap::new() } else { eh_profile(&t, h) };
            out.insert(t, Atom { prob: p, profile });
        }
        let total = W::sum(total);
        if !total.approx_eq(&W::one()) {
            bail!(Precondition, "masses sum to {}", total.render());
        }
        let mean_degree = W::sum(out.iter().map(|(t, a)| a.prob.mul_u64(t.degree() as u64)));
        let mut e_parts: BTreeMap<TypePair, Vec<W>> = BTreeMap::new();
        for a in out.values() {
            for (pair, &k) in &a.profile {
                e_parts.entry(pair.clone()).or_default().push(a.prob.mul_u64(k));
            }
        }
        let e_table = e_parts.into_iter().map(|(k, v)| (k, W::sum(v))).collect();
        Ok(Self { h, atoms: out, mean_degree, e_table })
    }

    /// Point mass on one tree.
    pub fn dirac(h: u32, t: CanonicalTree) -> Result<Self> {
        Self::new(h, BTreeMap::from([(t, W::one())]))
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&CanonicalTree, &W)> {
        self.atoms.iter().map(|(t, a)| (t, &a.prob))
    }

    pub fn prob(&self, t: &CanonicalTree) -> W {
        self.atoms.get(t).map_or_else(W::zero, |a| a.prob.clone())
    }

    /// E_h profile of a support atom.
    pub fn profile(&self, t: &CanonicalTree) -> Option<&BTreeMap<TypePair, u64>> {
        self.atoms.get(t).map(|a| &a.profile)
    }

    /// d = E_P[deg(o)].
    pub fn mean_degree(&self) -> &W {
        &self.mean_degree
    }

    /// e_P(t,t') = E_P[E_h(t,t')].
    pub fn e_p(&self, t: &HalfTree, t2: &HalfTree) -> W {
        self.e_table.get(&(t.clone(), t2.clone())).cloned().unwrap_or_else(W::zero)
    }

    /// Nonzero entries of e_P.
    pub fn e_table(&self) -> &BTreeMap<TypePair, W> {
        &self.e_table
    }

    pub fn is_admissible(&self) -> AdmissibilityReport<W> {
        for ((t, t2), v) in &self.e_table {
            let w = self.e_p(t2, t);
            if !v.approx_eq(&w) {
                return AdmissibilityReport {
                    admissible: false,
                    strongly_admissible: false,
                    violation: Some((t.clone(), t2.clone(), v.clone(), w)),
                };
            }
        }
        AdmissibilityReport { admissible: true, strongly_admissible: true, violation: None }
    }

    fn require_admissible(&self) -> Result<()> {
        let rep = self.is_admissible();
        if let Some((t, t2, a, b)) = rep.violation {
            bail!(Inadmissible, "e_P({t:?}, {t2:?}) = {} but the transpose is {}", a.render(), b.render());
        }
        Ok(())
    }

    /// π_P = e_P / d.
    pub fn pi_p(&self) -> Result<BTreeMap<TypePair, W>> {
        if self.mean_degree.is_zero() {
            bail!(Degenerate, "mean degree is zero");
        }
        Ok(self.e_table.iter().map(|(k, v)| (k.clone(), v.div(&self.mean_degree))).collect())
    }

    /// H(P) in nats.
    pub fn shannon_entropy(&self) -> f64 {
        entropy_of(self.atoms.values().map(|a| a.prob.to_f64()))
    }

    fn check_pair_depths(&self, t: &HalfTree, t2: &HalfTree) -> Result<()> {
        if t.depth() > self.h - 1 || t2.depth() > self.h - 1 {
            bail!(Precondition, "type pair deeper than {}", self.h - 1);
        }
        Ok(())
    }

    /// P̂_{t,t'}: law of the depth-h extension of `t` given the opposite side `t'`.
    /// A pair with e_P(t,t') = 0 yields the point mass at `t`.
    pub fn size_biased(&self, t: &HalfTree, t2: &HalfTree) -> Result<Kernel<W>> {
        self.check_pair_depths(t, t2)?;
        let e = self.e_p(t, t2);
        if e.is_zero() {
            return Ok(BTreeMap::from([(t.clone(), W::one())]));
        }
        let mut out = BTreeMap::new();
        for (s, a) in &self.atoms {
            for g in s.child_groups() {
                let (back, fwd) = child_cut(s, g.start);
                if fwd != *t2 || back.truncate(self.h - 1) != *t {
                    continue;
                }
                let k = a.profile[&(t.clone(), t2.clone())];
                out.insert(back, a.prob.mul_u64(k).div(&e));
            }
        }
        Ok(out)
    }

    /// Every nondegenerate kernel at once, keyed by (t, t').
    pub fn all_kernels(&self) -> BTreeMap<TypePair, Kernel<W>> {
        let mut out: BTreeMap<TypePair, Kernel<W>> = BTreeMap::new();
        for (s, a) in &self.atoms {
            for g in s.child_groups() {
                let (back, fwd) = child_cut(s, g.start);
                let key = (back.truncate(self.h - 1), fwd);
                let k = a.profile[&key];
                let e = &self.e_table[&key];
                let p = a.prob.mul_u64(k).div(e);
                out.entry(key).or_default().insert(back, p);
            }
        }
        out
    }

    /// J_h(P) = -s(d) + H(P) - (d/2) H(π_P) - Σ_{t,t'} E_P[log E_h(t,t')!].
    pub fn j_h(&self) -> Result<f64> {
        self.require_admissible()?;
        if self.mean_degree.is_zero() {
            bail!(Degenerate, "J_h needs positive mean degree");
        }
        let d = self.mean_degree.to_f64();
        let pi = self.pi_p()?;
        let h_pi = entropy_of(pi.values().map(W::to_f64));
        let mut by_count: BTreeMap<u64, Vec<W>> = BTreeMap::new();
        for a in self.atoms.values() {
            for &k in a.profile.values() {
                if k > 1 {
                    by_count.entry(k).or_default().push(a.prob.clone());
                }
            }
        }
        let log_fact = if W::EXACT {
            by_count.into_iter().map(|(k, ps)| W::sum(ps).to_f64() * ln_factorial(k)).sum::<f64>()
        } else {
            crate::weight::kahan_sum(by_count.into_iter().flat_map(|(k, ps)| {
                let lf = ln_factorial(k);
                ps.into_iter().map(move |p| p.to_f64() * lf)
            }))
        };
        Ok(((-s_of(d) + self.shannon_entropy()) - (d / 2.0) * h_pi) - log_fact)
    }

    /// The depth-(h+1) marginal of UGWT_h(P), exactly.
    pub fn extend_exact(&self) -> Result<NeighborhoodDist<W>> {
        self.extend_exact_capped(DEFAULT_EXTENSION_CAP)
    }

    pub fn extend_exact_capped(&self, cap: usize) -> Result<NeighborhoodDist<W>> {
        self.require_admissible()?;
        let kernels = self.all_kernels();
        let mut out: BTreeMap<CanonicalTree, Vec<W>> = BTreeMap::new();
        for (s, a) in &self.atoms {
            for (children, p) in self.extend_vertex(&kernels, s, None, cap)? {
                out.entry(CanonicalTree::new(s.mark(), children)).or_default().push(a.prob.mul(&p));
                if out.len() > cap {
                    bail!(CapExceeded, "extension support exceeds {cap} classes");
                }
            }
        }
        NeighborhoodDist::new(self.h + 1, out.into_iter().map(|(t, ps)| (t, W::sum(ps))).collect())
    }

    /// Conditional law of T[o,v]_{h+1} given T[o,v]_h = `s` and T[v,o]_h = `s2`
    /// under UGWT_h(P), computed layer by layer from the kernels of P.
    pub fn extension_law(&self, s: &HalfTree, s2: &HalfTree) -> Result<Kernel<W>> {
        if s.depth() > self.h || s2.depth() > self.h {
            bail!(Precondition, "conditioning half-trees deeper than {}", self.h);
        }
        let ball = crate::tree::oplus(s, s2);
        let up = Child { to_root: s.mark, to_child: s2.mark, subtree: s2.subtree.clone() };
        let skip = ball.children().iter().position(|c| *c == up).expect("⊕ adds this child");
        let kernels = self.all_kernels();
        let mut out: BTreeMap<HalfTree, Vec<W>> = BTreeMap::new();
        for (children, p) in self.extend_vertex(&kernels, &ball, Some(skip), DEFAULT_EXTENSION_CAP)? {
            out.entry(HalfTree::new(s.mark, CanonicalTree::new(ball.mark(), children))).or_default().push(p);
        }
        Ok(out.into_iter().map(|(t, ps)| (t, W::sum(ps))).collect())
    }

    /// Law of the depth-`k` truncation, `k <= h`.
    pub fn marginal(&self, k: u32) -> Result<NeighborhoodDist<W>> {
        if k == 0 || k > self.h {
            bail!(Precondition, "marginal depth {k} outside 1..={}", self.h);
        }
        let mut out: BTreeMap<CanonicalTree, Vec<W>> = BTreeMap::new();
        for (t, a) in &self.atoms {
            out.entry(truncate(t, k)).or_default().push(a.prob.clone());
        }
        NeighborhoodDist::new(k, out.into_iter().map(|(t, ps)| (t, W::sum(ps))).collect())
    }

    /// Checks the Markov property of UGWT_h(P) one level up: with
    /// Q = extend_exact(P), the depth-h marginal of Q is P and every kernel
    /// of Q equals the corresponding extension law of P. Deviations are
    /// exact zeros in rational mode.
    pub fn markov_consistency(&self) -> Result<ConsistencyReport<W>> {
        let q = self.extend_exact()?;
        let back = q.marginal(self.h)?;
        let mut marginal_deviation = W::zero();
        for (t, a) in &self.atoms {
            let d = a.prob.sub(&back.prob(t)).abs();
            if d > marginal_deviation {
                marginal_deviation = d;
            }
        }
        for (t, w) in back.atoms() {
            if !self.atoms.contains_key(t) && *w > marginal_deviation {
                marginal_deviation = w.clone();
            }
        }
        let mut kernel_deviation = W::zero();
        let kernels = q.all_kernels();
        for ((s, s2), kq) in &kernels {
            let kp = self.extension_law(s, s2)?;
            for key in kq.keys().chain(kp.keys()) {
                let a = kq.get(key).cloned().unwrap_or_else(W::zero);
                let b = kp.get(key).cloned().unwrap_or_else(W::zero);
                let d = a.sub(&b).abs();
                if d > kernel_deviation {
                    kernel_deviation = d;
                }
            }
        }
        Ok(ConsistencyReport { marginal_deviation, kernel_deviation, pairs_checked: kernels.len(), extended_support: q.len() })
    }

    /// Joint law of the extended children of the root of `ball`, each child
    /// drawn independently from its kernel. `skip` excludes one child.
    fn extend_vertex(
        &self,
        kernels: &BTreeMap<TypePair, Kernel<W>>,
        ball: &CanonicalTree,
        skip: Option<usize>,
        cap: usize,
    ) -> Result<Vec<(Vec<Child>, W)>> {
        let h = self.h;
        let mut outcomes: Vec<(Vec<Child>, W)> = vec![(Vec::new(), W::one())];
        for g in ball.child_groups() {
            let count = g.len() - usize::from(skip.is_some_and(|i| g.contains(&i)));
            if count == 0 {
                continue;
            }
            let c = &ball.children()[g.start];
            let t = HalfTree::new(c.to_child, truncate(&c.subtree, h - 1));
            let t2 = HalfTree::new(c.to_root, truncate(&ball.without_child(g.start), h - 1));
            let Some(kernel) = kernels.get(&(t.clone(), t2.clone())) else {
                bail!(Precondition, "no kernel for pair ({t:?}, {t2:?}): e_P vanishes");
            };
            let support: Vec<(&HalfTree, &W)> = kernel.iter().collect();
            let mut next = Vec::new();
            for (counts, p) in multisets(&support, count) {
                for (prev, q) in &outcomes {
                    let mut ch = prev.clone();
                    for (j, &k) in counts.iter().enumerate() {
                        for _ in 0..k {
                            ch.push(Child { to_root: c.to_root, to_child: support[j].0.mark, subtree: support[j].0.subtree.clone() });
                        }
                    }
                    next.push((ch, q.mul(&p)));
                }
                if next.len() > cap {
                    bail!(CapExceeded, "extension of one vertex exceeds {cap} outcomes");
                }
            }
            outcomes = next;
        }
        Ok(outcomes)
    }
}

/// All ways to place `k` identical draws on the support, with multinomial probabilities.
fn multisets<W: Weight>(support: &[(&HalfTree, &W)], k: usize) -> Vec<(Vec<usize>, W)> {
    fn rec<W: Weight>(support: &[(&HalfTree, &W)], j: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if j + 1 == support.len() {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for take in 0..=left {
            cur.push(take);
            rec(support, j + 1, left - take, cur, out);
            cur.pop();
        }
    }
    let mut shapes = Vec::new();
    rec(support, 0, k, &mut Vec::new(), &mut shapes);
    shapes
        .into_iter()
        .map(|counts| {
            let mut p = W::one();
            let mut coef_num = W::one();
            let mut placed = 0u64;
            for (j, &c) in counts.iter().enumerate() {
                for i in 1..=c as u64 {
                    placed += 1;
                    coef_num = coef_num.mul_u64(placed).div_u64(i);
                    p = p.mul(support[j].1);
                }
            }
            (counts, p.mul(&coef_num))
        })
        .collect()
}

/// s(d) = d/2 - (d/2) log d, with s(0) = 0.
pub fn s_of(d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d / 2.0 - (d / 2.0) * d.ln()
    }
}

fn entropy_of<I: IntoIterator<Item = f64>>(ps: I) -> f64 {
    -crate::weight::kahan_sum(ps.into_iter().filter(|&p| p > 0.0).map(|p| p * p.ln()))
}

pub fn e_p<W: Weight>(p: &NeighborhoodDist<W>, t: &HalfTree, t2: &HalfTree) -> W {
    p.e_p(t, t2)
}

pub fn is_admissible<W: Weight>(p: &NeighborhoodDist<W>) -> AdmissibilityReport<W> {
    p.is_admissible()
}

pub fn pi_p<W: Weight>(p: &NeighborhoodDist<W>) -> Result<BTreeMap<TypePair, W>> {
    p.pi_p()
}

pub fn shannon_entropy<W: Weight>(p: &NeighborhoodDist<W>) -> f64 {
    p.shannon_entropy()
}

pub fn size_biased<W: Weight>(p: &NeighborhoodDist<W>, t: &HalfTree, t2: &HalfTree) -> Result<Kernel<W>> {
    p.size_biased(t, t2)
}

pub fn j_h<W: Weight>(p: &NeighborhoodDist<W>) -> Result<f64> {
    p.j_h()
}

pub fn extend_exact<W: Weight>(p: &NeighborhoodDist<W>) -> Result<NeighborhoodDist<W>> {
    p.extend_exact()
}

/// Converts between arithmetic modes. Float masses become exact binary
/// rationals, renormalized so they sum to one.
pub fn convert<A: Weight, B: Weight>(p: &NeighborhoodDist<A>) -> Result<NeighborhoodDist<B>> {
    let mut atoms: BTreeMap<CanonicalTree, B> = p.atoms().map(|(t, w)| (t.clone(), B::from_rational(&w.to_rational()))).collect();
    if B::EXACT && !A::EXACT {
        let total = B::sum(atoms.values().cloned());
        for w in atoms.values_mut() {
            *w = w.div(&total);
        }
    }
    NeighborhoodDist::new(p.h(), atoms)
}
