//! Canonical labeling of small rooted marked graphs that may contain
//! cycles: mark-aware color refinement with individualization and
//! exhaustive backtracking. Exact but exponential on highly symmetric input.

use crate::marks::Mark;

/// Minimal local graph used by the labeler. `adj[v]` holds
/// (neighbor, mark toward neighbor, mark toward v).
pub(crate) struct LocalGraph {
    pub marks: Vec<Mark>,
    pub adj: Vec<Vec<(usize, Mark, Mark)>>,
}

/// Tag prefix that keeps cyclic keys disjoint from tree keys.
pub(crate) const CYCLIC_TAG: [u8; 4] = [0xFF; 4];

impl LocalGraph {
    fn refine(&self, colors: &mut Vec<u32>) {
        let n = self.marks.len();
        loop {
            let mut sigs: Vec<(u32, Vec<(u32, Mark, Mark)>, usize)> = (0..n)
                .map(|v| {
                    let mut nb: Vec<(u32, Mark, Mark)> = self.adj[v].iter().map(|&(w, a, b)| (colors[w], a, b)).collect();
                    nb.sort_unstable();
                    (colors[v], nb, v)
                })
                .collect();
            sigs.sort();
            let mut next = vec![0u32; n];
            let mut c = 0u32;
            for i in 0..n {
                if i > 0 && (sigs[i].0 != sigs[i - 1].0 || sigs[i].1 != sigs[i - 1].1) {
                    c += 1;
                }
                next[sigs[i].2] = c;
            }
            let before = colors.iter().copied().max().map_or(0, |m| m + 1);
            let after = c + 1;
            *colors = next;
            if after == before {
                return;
            }
        }
    }

    fn encode(&self, colors: &[u32]) -> Vec<u8> {
        let n = self.marks.len();
        let mut order = vec![0usize; n];
        for v in 0..n {
            order[colors[v] as usize] = v;
        }
        let mut out = Vec::with_capacity(8 + n * 16);
        out.extend_from_slice(&(n as u32).to_be_bytes());
        for &v in &order {
            out.extend_from_slice(&self.marks[v].to_be_bytes());
            let mut nb: Vec<(u32, Mark, Mark)> = self.adj[v].iter().map(|&(w, a, b)| (colors[w], a, b)).collect();
            nb.sort_unstable();
            out.extend_from_slice(&(nb.len() as u32).to_be_bytes());
            for (c, a, b) in nb {
                out.extend_from_slice(&c.to_be_bytes());
                out.extend_from_slice(&a.to_be_bytes());
                out.extend_from_slice(&b.to_be_bytes());
            }
        }
        out
    }

    fn search(&self, colors: Vec<u32>, best: &mut Option<Vec<u8>>) {
        let n = self.marks.len();
        let mut counts = vec![0usize; n];
        for &c in &colors {
            counts[c as usize] += 1;
        }
        let Some(target) = (0..n).find(|&c| counts[c] > 1) else {
            let code = self.encode(&colors);
            if best.as_ref().is_none_or(|b| code < *b) {
                *best = Some(code);
            }
            return;
        };
        for v in (0..n).filter(|&v| colors[v] as usize == target) {
            // individualize v: it sorts before the rest of its cell
            let mut c2: Vec<u32> = colors.iter().map(|&c| 2 * c + 1).collect();
            c2[v] -= 1;
            let mut ranks: Vec<u32> = c2.clone();
            ranks.sort_unstable();
            ranks.dedup();
            let mut c3: Vec<u32> = c2.iter().map(|c| ranks.binary_search(c).unwrap() as u32).collect();
            self.refine(&mut c3);
            self.search(c3, best);
        }
    }

    /// Canonical key of the graph rooted at `root`.
    pub fn canonical_key(&self, root: usize) -> Vec<u8> {
        let n = self.marks.len();
        let mut init: Vec<(u8, Mark, usize)> = (0..n).map(|v| (u8::from(v != root), self.marks[v], v)).collect();
        init.sort();
        let mut colors = vec![0u32; n];
        let mut c = 0u32;
        for i in 0..n {
            if i > 0 && (init[i].0, init[i].1) != (init[i - 1].0, init[i - 1].1) {
                c += 1;
            }
            colors[init[i].2] = c;
        }
        self.refine(&mut colors);
        let mut best = None;
        self.search(colors, &mut best);
        let mut key = CYCLIC_TAG.to_vec();
        key.extend(best.expect("search reaches a discrete coloring"));
        key
    }
}
