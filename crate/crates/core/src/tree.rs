//! Canonical marked rooted trees, half-trees and the tree algebra
//! (truncation, ⊕, ⊗, ⊙, E-counts, graphical pairs).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{bail, Result};
use crate::marks::Mark;

/// Read access to a marked graph given by adjacency lists.
pub trait MarkedAdjacency {
    fn vertex_count(&self) -> usize;
    fn vertex_mark(&self, v: usize) -> Mark;
    /// Calls `f(w, mark toward w, mark toward v)` for every neighbor `w` of `v`.
    fn for_each_neighbor<F: FnMut(usize, Mark, Mark)>(&self, v: usize, f: F);

    fn degree(&self, v: usize) -> usize {
        let mut d = 0;
        self.for_each_neighbor(v, |_, _, _| d += 1);
        d
    }
}

/// Isomorphism class of a finite marked rooted tree.
///
/// Equality, hashing and ordering go through the canonical key, a
/// length-prefixed byte encoding in which children appear sorted by
/// (subtree key, mark toward root, mark toward child).
#[derive(Clone)]
pub struct CanonicalTree(Arc<Node>);

struct Node {
    mark: Mark,
    children: Vec<Child>,
    depth: u32,
    size: u32,
    key: Box<[u8]>,
}

/// Edge from the root to a child together with the child's subtree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Child {
    /// Mark on the edge toward the root.
    pub to_root: Mark,
    /// Mark on the edge toward the child.
    pub to_child: Mark,
    pub subtree: CanonicalTree,
}

impl Ord for Child {
    fn cmp(&self, other: &Self) -> Ordering {
        self.subtree
            .cmp(&other.subtree)
            .then(self.to_root.cmp(&other.to_root))
            .then(self.to_child.cmp(&other.to_child))
    }
}

impl PartialOrd for Child {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl CanonicalTree {
    pub fn leaf(mark: Mark) -> Self {
        Self::new(mark, Vec::new())
    }

    /// Builds the class of a root with the given children; order is irrelevant.
    pub fn new(mark: Mark, mut children: Vec<Child>) -> Self {
        children.sort();
        let depth = children.iter().map(|c| c.subtree.depth() + 1).max().unwrap_or(0);
        let size = 1 + children.iter().map(|c| c.subtree.size()).sum::<u32>();
        let len = 8 + children.iter().map(|c| 12 + c.subtree.key().len()).sum::<usize>();
        let mut key = Vec::with_capacity(len);
        key.extend_from_slice(&mark.to_be_bytes());
        key.extend_from_slice(&(children.len() as u32).to_be_bytes());
        for c in &children {
            key.extend_from_slice(&c.to_root.to_be_bytes());
            key.extend_from_slice(&c.to_child.to_be_bytes());
            key.extend_from_slice(&(c.subtree.key().len() as u32).to_be_bytes());
            key.extend_from_slice(c.subtree.key());
        }
        CanonicalTree(Arc::new(Node { mark, children, depth, size, key: key.into_boxed_slice() }))
    }

    /// Root mark.
    pub fn mark(&self) -> Mark {
        self.0.mark
    }

    /// Children in canonical order.
    pub fn children(&self) -> &[Child] {
        &self.0.children
    }

    pub fn degree(&self) -> usize {
        self.0.children.len()
    }

    /// Height of the tree; a single vertex has depth 0.
    pub fn depth(&self) -> u32 {
        self.0.depth
    }

    /// Number of vertices.
    pub fn size(&self) -> u32 {
        self.0.size
    }

    pub fn key(&self) -> &[u8] {
        &self.0.key
    }

    /// Inverse of [`key`](Self::key).
    pub fn from_key(bytes: &[u8]) -> Result<Self> {
        fn read_u32(b: &[u8], pos: &mut usize) -> Result<u32> {
            let Some(s) = b.get(*pos..*pos + 4) else { bail!(Parse, "truncated tree key") };
            *pos += 4;
            Ok(u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
        }
        fn parse(b: &[u8], pos: &mut usize) -> Result<CanonicalTree> {
            let mark = read_u32(b, pos)?;
            let k = read_u32(b, pos)?;
            let mut children = Vec::with_capacity(k as usize);
            for _ in 0..k {
                let to_root = read_u32(b, pos)?;
                let to_child = read_u32(b, pos)?;
                let len = read_u32(b, pos)? as usize;
                let end = *pos + len;
                let subtree = parse(b, pos)?;
                if *pos != end {
                    bail!(Parse, "inconsistent subtree length in tree key");
                }
                children.push(Child { to_root, to_child, subtree });
            }
            Ok(CanonicalTree::new(mark, children))
        }
        let mut pos = 0;
        let t = parse(bytes, &mut pos)?;
        if pos != bytes.len() || t.key() != bytes {
            bail!(Parse, "not a canonical tree key");
        }
        Ok(t)
    }

    /// Copy of this tree with the child at `index` removed.
    pub fn without_child(&self, index: usize) -> Self {
        let mut children = self.children().to_vec();
        children.remove(index);
        Self::new(self.mark(), children)
    }

    /// Ranges of identical children in canonical order.
    pub fn child_groups(&self) -> Vec<std::ops::Range<usize>> {
        let ch = self.children();
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=ch.len() {
            if i == ch.len() || ch[i] != ch[start] {
                out.push(start..i);
                start = i;
            }
        }
        out
    }
}

impl PartialEq for CanonicalTree {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.key() == other.key()
    }
}

impl Eq for CanonicalTree {}

impl Hash for CanonicalTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl Ord for CanonicalTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(other.key())
    }
}

impl PartialOrd for CanonicalTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for CanonicalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mark())?;
        if !self.children().is_empty() {
            write!(f, "[")?;
            for (i, c) in self.children().iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "<{},{}>{:?}", c.to_root, c.to_child, c.subtree)?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

/// A mark on the edge toward a subtree root, paired with that subtree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfTree {
    pub mark: Mark,
    pub subtree: CanonicalTree,
}

impl HalfTree {
    pub fn new(mark: Mark, subtree: CanonicalTree) -> Self {
        Self { mark, subtree }
    }

    pub fn depth(&self) -> u32 {
        self.subtree.depth()
    }

    pub fn truncate(&self, k: u32) -> Self {
        Self::new(self.mark, truncate(&self.subtree, k))
    }
}

impl fmt::Debug for HalfTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; {:?})", self.mark, self.subtree)
    }
}

/// Truncation t_k: the subtree spanned by vertices within distance `k` of the root.
pub fn truncate(t: &CanonicalTree, k: u32) -> CanonicalTree {
    if t.depth() <= k {
        return t.clone();
    }
    if k == 0 {
        return CanonicalTree::leaf(t.mark());
    }
    let children = t
        .children()
        .iter()
        .map(|c| Child { to_root: c.to_root, to_child: c.to_child, subtree: truncate(&c.subtree, k - 1) })
        .collect();
    CanonicalTree::new(t.mark(), children)
}

/// t ⊕ t': the root of `t` gains an extra child carrying `t'`, with
/// mark `t.mark` toward the root and `t'.mark` toward the child.
pub fn oplus(t: &HalfTree, t2: &HalfTree) -> CanonicalTree {
    let mut children = t.subtree.children().to_vec();
    children.push(Child { to_root: t.mark, to_child: t2.mark, subtree: t2.subtree.clone() });
    CanonicalTree::new(t.subtree.mark(), children)
}

/// (θ, x) ⊗ t: a root marked θ whose single child carries `t`, with mark `x`
/// toward the root and `t.mark` toward the child.
pub fn otimes(theta: Mark, x: Mark, t: &HalfTree) -> CanonicalTree {
    CanonicalTree::new(theta, vec![Child { to_root: x, to_child: t.mark, subtree: t.subtree.clone() }])
}

/// Joins trees sharing a root mark at a common root.
pub fn odot(trees: &[CanonicalTree]) -> Result<CanonicalTree> {
    let Some(first) = trees.first() else { bail!(Precondition, "⊙ of an empty family") };
    let mark = first.mark();
    let mut children = Vec::new();
    for t in trees {
        if t.mark() != mark {
            bail!(Precondition, "⊙ of trees with root marks {} and {}", mark, t.mark());
        }
        children.extend_from_slice(t.children());
    }
    Ok(CanonicalTree::new(mark, children))
}

/// The pair (T[v,o], T[o,v]) for the child at `index`: the view back toward
/// the root from the child, and the child's own half-tree.
pub fn child_cut(t: &CanonicalTree, index: usize) -> (HalfTree, HalfTree) {
    let c = &t.children()[index];
    (HalfTree::new(c.to_root, t.without_child(index)), HalfTree::new(c.to_child, c.subtree.clone()))
}

/// E_{k,l}(t,t')(T,o): children v with T[v,o]_{k-1} ≡ t and T[o,v]_{l-1} ≡ t'.
pub fn eh_count(tree: &CanonicalTree, t: &HalfTree, t2: &HalfTree, k: u32, l: u32) -> Result<u64> {
    if k == 0 || l == 0 {
        bail!(Precondition, "E_{{k,l}} needs k, l >= 1");
    }
    if t.depth() > k - 1 || t2.depth() > l - 1 {
        bail!(Precondition, "argument half-trees exceed depths {} and {}", k - 1, l - 1);
    }
    let mut n = 0;
    for g in tree.child_groups() {
        let c = &tree.children()[g.start];
        if c.to_root != t.mark || c.to_child != t2.mark {
            continue;
        }
        if truncate(&c.subtree, l - 1) != t2.subtree {
            continue;
        }
        let (back, _) = child_cut(tree, g.start);
        if back.truncate(k - 1) == *t {
            n += g.len() as u64;
        }
    }
    Ok(n)
}

/// Sparse E_h profile: nonzero E_h(t,t')(T,o) keyed by (t,t'). Sums to deg(o).
pub fn eh_profile(tree: &CanonicalTree, h: u32) -> BTreeMap<(HalfTree, HalfTree), u64> {
    assert!(h >= 1, "E_h needs h >= 1");
    let mut out = BTreeMap::new();
    for g in tree.child_groups() {
        let (back, fwd) = child_cut(tree, g.start);
        *out.entry((back.truncate(h - 1), fwd.truncate(h - 1))).or_insert(0) += g.len() as u64;
    }
    out
}

/// A candidate root neighborhood: root mark plus a sparse nonnegative matrix
/// over pairs of depth-(h-1) half-trees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphicalPair {
    pub root_mark: Mark,
    pub counts: BTreeMap<(HalfTree, HalfTree), u64>,
}

impl GraphicalPair {
    pub fn of_tree(tree: &CanonicalTree, h: u32) -> Self {
        Self { root_mark: tree.mark(), counts: eh_profile(tree, h) }
    }
}

/// Rebuilds the unique depth-h tree with the given root mark and E_h profile,
/// or reports why none exists.
pub fn tree_from_graphical(pair: &GraphicalPair, h: u32) -> Result<CanonicalTree> {
    if h == 0 {
        bail!(Precondition, "graphical pairs need h >= 1");
    }
    let mut children = Vec::new();
    for ((t, t2), &k) in &pair.counts {
        if t.depth() > h - 1 || t2.depth() > h - 1 {
            bail!(Precondition, "half-tree pair {t:?}, {t2:?} deeper than {}", h - 1);
        }
        for _ in 0..k {
            children.push(Child { to_root: t.mark, to_child: t2.mark, subtree: t2.subtree.clone() });
        }
    }
    let tree = CanonicalTree::new(pair.root_mark, children);
    let back = eh_profile_or_empty(&tree, h);
    let zero_free: BTreeMap<_, _> = pair.counts.iter().filter(|(_, &k)| k > 0).map(|(p, &k)| (p.clone(), k)).collect();
    if back != zero_free {
        let bad = zero_free
            .iter()
            .find(|(p, k)| back.get(*p) != Some(k))
            .map(|(p, k)| (p.clone(), *k))
            .or_else(|| back.iter().find(|(p, _)| !zero_free.contains_key(*p)).map(|(p, _)| (p.clone(), 0)));
        match bad {
            Some(((t, t2), k)) => {
                let got = back.get(&(t.clone(), t2.clone())).copied().unwrap_or(0);
                bail!(NotGraphical, "entry ({t:?}, {t2:?}) asks for {k} but the reconstruction has {got}")
            }
            None => bail!(NotGraphical, "profile mismatch"),
        }
    }
    Ok(tree)
}

fn eh_profile_or_empty(tree: &CanonicalTree, h: u32) -> BTreeMap<(HalfTree, HalfTree), u64> {
    if tree.degree() == 0 {
        BTreeMap::new()
    } else {
        eh_profile(tree, h)
    }
}

/// Counts of (ξ(v,o), ξ(o,v), τ(o), τ(v)) over root children v.
pub fn depth1_type_counts(tree: &CanonicalTree) -> BTreeMap<(Mark, Mark, Mark, Mark), u64> {
    let mut out = BTreeMap::new();
    for c in tree.children() {
        *out.entry((c.to_root, c.to_child, tree.mark(), c.subtree.mark())).or_insert(0) += 1;
    }
    out
}

/// Canonical form of the region reachable from `root` without passing
/// through `exclude`, cut at `depth`. The region must be acyclic.
pub fn canonical_subtree<A: MarkedAdjacency + ?Sized>(
    adj: &A,
    root: usize,
    exclude: Option<usize>,
    depth: Option<u32>,
) -> CanonicalTree {
    struct Item {
        vertex: usize,
        parent_vertex: Option<usize>,
        parent_slot: usize,
        to_root: Mark,
        to_child: Mark,
        depth: u32,
    }
    let mut order: Vec<Item> = Vec::new();
    let mut stack = vec![Item { vertex: root, parent_vertex: exclude, parent_slot: usize::MAX, to_root: 0, to_child: 0, depth: 0 }];
    while let Some(item) = stack.pop() {
        let slot = order.len();
        let (v, pv, d) = (item.vertex, item.parent_vertex, item.depth);
        order.push(item);
        if depth.is_some_and(|lim| d >= lim) {
            continue;
        }
        adj.for_each_neighbor(v, |w, toward_w, toward_v| {
            if Some(w) != pv {
                stack.push(Item { vertex: w, parent_vertex: Some(v), parent_slot: slot, to_root: toward_v, to_child: toward_w, depth: d + 1 });
            }
        });
    }
    let mut pending: Vec<Vec<Child>> = (0..order.len()).map(|_| Vec::new()).collect();
    let mut result = None;
    for i in (0..order.len()).rev() {
        let node = CanonicalTree::new(adj.vertex_mark(order[i].vertex), std::mem::take(&mut pending[i]));
        let it = &order[i];
        if it.parent_slot == usize::MAX {
            result = Some(node);
        } else {
            pending[it.parent_slot].push(Child { to_root: it.to_root, to_child: it.to_child, subtree: node });
        }
    }
    result.expect("root is always visited")
}

/// Canonical form of a finite tree rooted at `root`; rejects cyclic or
/// disconnected input.
pub fn canonicalize<A: MarkedAdjacency + ?Sized>(adj: &A, root: usize) -> Result<CanonicalTree> {
    let n = adj.vertex_count();
    if root >= n {
        bail!(Structural, "root {root} out of range for {n} vertices");
    }
    let mut seen = vec![false; n];
    let mut parent = vec![usize::MAX; n];
    let mut stack = vec![root];
    seen[root] = true;
    let mut edges_seen = 0usize;
    let mut visited = 1usize;
    let mut cyclic = false;
    while let Some(v) = stack.pop() {
        adj.for_each_neighbor(v, |w, _, _| {
            edges_seen += 1;
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                visited += 1;
                stack.push(w);
            } else if parent[v] != w {
                cyclic = true;
            }
        });
    }
    if visited != n {
        bail!(Structural, "input is disconnected ({visited} of {n} vertices reachable)");
    }
    if cyclic || edges_seen != 2 * (n - 1) {
        bail!(Structural, "input contains a cycle");
    }
    Ok(canonical_subtree(adj, root, None, None))
}

/// T[u,v]_k in a tree: mark toward `v` and the component of `v` after
/// deleting the edge uv, rooted at `v` and cut at depth `k`.
pub fn half_tree_cut<A: MarkedAdjacency + ?Sized>(adj: &A, u: usize, v: usize, k: u32) -> Result<HalfTree> {
    let mut mark = None;
    adj.for_each_neighbor(u, |w, toward_w, _| {
        if w == v {
            mark = Some(toward_w);
        }
    });
    let Some(mark) = mark else { bail!(Precondition, "{u} and {v} are not adjacent") };
    Ok(HalfTree::new(mark, canonical_subtree(adj, v, Some(u), Some(k))))
}

/// A growable rooted marked tree with explicit vertex ids; vertex 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledTree {
    marks: Vec<Mark>,
    parent: Vec<usize>,
    to_parent: Vec<Mark>,
    from_parent: Vec<Mark>,
    children: Vec<Vec<usize>>,
    depth: Vec<u32>,
}

pub const NO_PARENT: usize = usize::MAX;

impl LabeledTree {
    pub fn new(root_mark: Mark) -> Self {
        Self {
            marks: vec![root_mark],
            parent: vec![NO_PARENT],
            to_parent: vec![0],
            from_parent: vec![0],
            children: vec![Vec::new()],
            depth: vec![0],
        }
    }

    /// Adds a child of `p`; `to_parent` marks the edge toward `p`, `from_parent` the edge toward the child.
    pub fn add_child(&mut self, p: usize, mark: Mark, to_parent: Mark, from_parent: Mark) -> usize {
        let id = self.marks.len();
        self.marks.push(mark);
        self.parent.push(p);
        self.to_parent.push(to_parent);
        self.from_parent.push(from_parent);
        self.children.push(Vec::new());
        self.depth.push(self.depth[p] + 1);
        self.children[p].push(id);
        id
    }

    /// Builds a tree from a parent array (`parents[0]` ignored, `parents[i] < i`).
    pub fn from_parents(parents: &[usize], marks: &[Mark], edge_marks: &[(Mark, Mark)]) -> Self {
        let mut t = Self::new(marks[0]);
        for i in 1..parents.len() {
            t.add_child(parents[i], marks[i], edge_marks[i].0, edge_marks[i].1);
        }
        t
    }

    /// Instantiates a canonical tree, children in canonical order.
    pub fn from_canonical(tree: &CanonicalTree) -> Self {
        let mut t = Self::new(tree.mark());
        let mut stack = vec![(0usize, tree.clone())];
        while let Some((v, sub)) = stack.pop() {
            for c in sub.children() {
                let w = t.add_child(v, c.subtree.mark(), c.to_root, c.to_child);
                stack.push((w, c.subtree.clone()));
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn mark(&self, v: usize) -> Mark {
        self.marks[v]
    }

    pub fn set_mark(&mut self, v: usize, m: Mark) {
        self.marks[v] = m;
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (self.parent[v] != NO_PARENT).then_some(self.parent[v])
    }

    pub fn to_parent_mark(&self, v: usize) -> Mark {
        self.to_parent[v]
    }

    pub fn from_parent_mark(&self, v: usize) -> Mark {
        self.from_parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn depth(&self, v: usize) -> u32 {
        self.depth[v]
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// [T, v]_k.
    pub fn ball(&self, v: usize, k: u32) -> CanonicalTree {
        canonical_subtree(self, v, None, Some(k))
    }

    /// The whole tree seen from the root.
    pub fn canonical(&self) -> CanonicalTree {
        canonical_subtree(self, 0, None, None)
    }

    /// T[u,v]_k for adjacent `u`, `v`.
    pub fn cut(&self, u: usize, v: usize, k: u32) -> HalfTree {
        let mark = if self.parent[v] == u { self.from_parent[v] } else { self.to_parent[u] };
        HalfTree::new(mark, canonical_subtree(self, v, Some(u), Some(k)))
    }

    pub fn vertices_at_depth(&self, d: u32) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| self.depth[v] == d)
    }
}

impl MarkedAdjacency for LabeledTree {
    fn vertex_count(&self) -> usize {
        self.marks.len()
    }

    fn vertex_mark(&self, v: usize) -> Mark {
        self.marks[v]
    }

    fn for_each_neighbor<F: FnMut(usize, Mark, Mark)>(&self, v: usize, mut f: F) {
        if self.parent[v] != NO_PARENT {
            f(self.parent[v], self.to_parent[v], self.from_parent[v]);
        }
        for &c in &self.children[v] {
            f(c, self.from_parent[c], self.to_parent[c]);
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.children[v].len() + usize::from(self.parent[v] != NO_PARENT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(marks: &[Mark]) -> CanonicalTree {
        let parents: Vec<usize> = (0..marks.len()).map(|i| i.saturating_sub(1)).collect();
        let em = vec![(0, 0); marks.len()];
        LabeledTree::from_parents(&parents, marks, &em).canonical()
    }

    #[test]
    fn relabeling_invariance() {
        // star with children in two orders
        let a = LabeledTree::from_parents(&[0, 0, 0], &[0, 1, 2], &[(0, 0), (0, 1), (1, 0)]);
        let b = LabeledTree::from_parents(&[0, 0, 0], &[0, 2, 1], &[(0, 0), (1, 0), (0, 1)]);
        assert_eq!(a.canonical(), b.canonical());
        let c = LabeledTree::from_parents(&[0, 0, 0], &[0, 2, 1], &[(0, 0), (0, 1), (1, 0)]);
        assert_ne!(a.canonical(), c.canonical());
    }

    #[test]
    fn path_truncation() {
        let p = path(&[0, 0, 0, 0, 0]);
        assert_eq!(p.depth(), 4);
        assert_eq!(truncate(&p, 2), path(&[0, 0, 0]));
        assert_eq!(truncate(&p, 0), CanonicalTree::leaf(0));
        assert_eq!(truncate(&p, 9), p);
    }

    #[test]
    fn key_round_trip() {
        let t = LabeledTree::from_parents(&[0, 0, 1, 1, 0], &[1, 0, 1, 0, 1], &[(0, 0), (1, 0), (0, 1), (1, 1), (0, 1)]).canonical();
        assert_eq!(CanonicalTree::from_key(t.key()).unwrap(), t);
        assert!(CanonicalTree::from_key(&t.key()[..t.key().len() - 1]).is_err());
    }

    #[test]
    fn oplus_depth_and_counts() {
        let t = HalfTree::new(1, path(&[0, 0]));
        let t2 = HalfTree::new(0, path(&[0, 0, 0]));
        let s = oplus(&t, &t2);
        assert_eq!(s.depth(), 3);
        assert_eq!(s.degree(), 2);
        let ch = s.children().iter().find(|c| c.subtree.depth() == 2).unwrap();
        assert_eq!((ch.to_root, ch.to_child), (1, 0));
    }

    #[test]
    fn otimes_odot() {
        let leaf = HalfTree::new(1, CanonicalTree::leaf(0));
        let a = otimes(0, 0, &leaf);
        let star = odot(&[a.clone(), a.clone(), a]).unwrap();
        assert_eq!(star.degree(), 3);
        assert!(odot(&[CanonicalTree::leaf(0), CanonicalTree::leaf(1)]).is_err());
    }

    #[test]
    fn eh_profile_sums_to_degree() {
        let t = LabeledTree::from_parents(&[0, 0, 0, 1, 1, 2], &[0, 1, 1, 0, 0, 1], &[(0, 0), (0, 1), (0, 1), (1, 0), (1, 0), (0, 0)]).canonical();
        for h in 1..4 {
            let prof = eh_profile(&t, h);
            assert_eq!(prof.values().sum::<u64>(), t.degree() as u64);
            for ((a, b), &k) in &prof {
                assert_eq!(eh_count(&t, a, b, h, h).unwrap(), k);
            }
        }
    }

    #[test]
    fn graphical_round_trip_and_rejection() {
        let t = LabeledTree::from_parents(&[0, 0, 0, 1], &[0, 1, 1, 0], &[(0, 0), (0, 1), (0, 1), (1, 0)]).canonical();
        let pair = GraphicalPair::of_tree(&t, 2);
        assert_eq!(tree_from_graphical(&pair, 2).unwrap(), t);
        // a view-back that disagrees with the root is not graphical
        let bogus_back = HalfTree::new(0, CanonicalTree::leaf(1));
        let fwd = HalfTree::new(0, CanonicalTree::leaf(0));
        let mut counts = BTreeMap::new();
        counts.insert((bogus_back, fwd), 1);
        let err = tree_from_graphical(&GraphicalPair { root_mark: 0, counts }, 1).unwrap_err();
        assert!(matches!(err, crate::Error::NotGraphical(_)));
    }

    #[test]
    fn canonicalize_rejects_bad_input() {
        use crate::graph::MarkedGraph;
        let tri = MarkedGraph::unmarked(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(canonicalize(&tri, 0).is_err());
        let two = MarkedGraph::unmarked(3, &[(0, 1)]).unwrap();
        assert!(canonicalize(&two, 0).is_err());
        let p = MarkedGraph::unmarked(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(canonicalize(&p, 0).unwrap(), path(&[0, 0, 0]));
    }

    #[test]
    fn depth1_counts() {
        let t = LabeledTree::from_parents(&[0, 0, 0], &[1, 0, 0], &[(0, 0), (1, 0), (1, 0)]).canonical();
        let c = depth1_type_counts(&t);
        assert_eq!(c.get(&(1, 0, 1, 0)), Some(&2));
    }
}
