//! JSON and CSV formats. Marks appear in files as labels (strings or
//! integers) and are mapped to ids through a [`MarkRegistry`].

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::colored::{ColoredDegreeSequence, DirectedColoredMultigraph};
use crate::dist::NeighborhoodDist;
use crate::error::{bail, Result};
use crate::graph::{Edge, MarkedGraph};
use crate::marks::{Alphabet, Mark, MarkRegistry};
use crate::tree::{CanonicalTree, Child, HalfTree};
use crate::ugwt::SampledTree;
use crate::weight::{parse_weight, Weight};

/// A mark label as written in a file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Num(u64),
    Name(String),
}

impl Label {
    pub fn intern(&self, a: &mut Alphabet) -> Mark {
        match self {
            Label::Num(k) => a.intern(&k.to_string()),
            Label::Name(s) => a.intern(s),
        }
    }

    pub fn of(a: &Alphabet, m: Mark) -> Self {
        let s = a.label(m);
        match s.parse::<u64>() {
            Ok(k) if k.to_string() == s => Label::Num(k),
            _ => Label::Name(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub mark: Label,
    #[serde(default)]
    pub children: Vec<ChildJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildJson {
    pub to_root: Label,
    pub to_child: Label,
    pub subtree: TreeJson,
}

pub fn tree_to_json(t: &CanonicalTree, reg: &MarkRegistry) -> TreeJson {
    TreeJson {
        mark: Label::of(&reg.vertex, t.mark()),
        children: t
            .children()
            .iter()
            .map(|c| ChildJson {
                to_root: Label::of(&reg.edge, c.to_root),
                to_child: Label::of(&reg.edge, c.to_child),
                subtree: tree_to_json(&c.subtree, reg),
            })
            .collect(),
    }
}

pub fn tree_from_json(j: &TreeJson, reg: &mut MarkRegistry) -> CanonicalTree {
    let mark = j.mark.intern(&mut reg.vertex);
    let children = j
        .children
        .iter()
        .map(|c| Child {
            to_root: c.to_root.intern(&mut reg.edge),
            to_child: c.to_child.intern(&mut reg.edge),
            subtree: tree_from_json(&c.subtree, reg),
        })
        .collect();
    CanonicalTree::new(mark, children)
}

/// A half-tree: the mark on the edge toward its root, then the subtree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfTreeJson {
    pub mark: Label,
    pub subtree: TreeJson,
}

pub fn half_tree_to_json(t: &HalfTree, reg: &MarkRegistry) -> HalfTreeJson {
    HalfTreeJson { mark: Label::of(&reg.edge, t.mark), subtree: tree_to_json(&t.subtree, reg) }
}

/// Probability as `"num/den"` or a number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbJson {
    Text(String),
    Number(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub tree: TreeJson,
    pub prob: ProbJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistJson {
    pub h: u32,
    pub atoms: Vec<AtomJson>,
    /// Optional label lists fixing the mark order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marks: Option<MarksJson>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarksJson {
    #[serde(default)]
    pub edge: Vec<Label>,
    #[serde(default)]
    pub vertex: Vec<Label>,
}

impl MarksJson {
    fn preload(&self, reg: &mut MarkRegistry) {
        for l in &self.edge {
            l.intern(&mut reg.edge);
        }
        for l in &self.vertex {
            l.intern(&mut reg.vertex);
        }
    }
}

pub fn dist_from_json<W: Weight>(j: &DistJson, reg: &mut MarkRegistry) -> Result<NeighborhoodDist<W>> {
    if let Some(m) = &j.marks {
        m.preload(reg);
    }
    let mut atoms: BTreeMap<CanonicalTree, W> = BTreeMap::new();
    for a in &j.atoms {
        let p = match &a.prob {
            ProbJson::Text(s) => parse_weight::<W>(s),
            ProbJson::Number(x) => parse_weight::<W>(&x.to_string()),
        };
        let Some(p) = p else { bail!(Parse, "unreadable probability {:?}", a.prob) };
        let t = tree_from_json(&a.tree, reg);
        let slot = atoms.entry(t).or_insert_with(W::zero);
        *slot = slot.add(&p);
    }
    NeighborhoodDist::new(j.h, atoms)
}

pub fn dist_to_json<W: Weight>(p: &NeighborhoodDist<W>, reg: &MarkRegistry) -> DistJson {
    let atoms = p
        .atoms()
        .map(|(t, w)| AtomJson {
            tree: tree_to_json(t, reg),
            prob: if W::EXACT { ProbJson::Text(w.render()) } else { ProbJson::Number(w.to_f64()) },
        })
        .collect();
    let marks = MarksJson {
        edge: (0..reg.edge.len() as Mark).map(|m| Label::of(&reg.edge, m)).collect(),
        vertex: (0..reg.vertex.len() as Mark).map(|m| Label::of(&reg.vertex, m)).collect(),
    };
    DistJson { h: p.h(), atoms, marks: Some(marks) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub u: usize,
    pub v: usize,
    pub mark_uv: Label,
    pub mark_vu: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub vertex_marks: Vec<Label>,
    pub edges: Vec<EdgeJson>,
}

pub fn graph_to_json(g: &MarkedGraph, reg: &MarkRegistry) -> GraphJson {
    GraphJson {
        n: g.n(),
        vertex_marks: g.vertex_marks().iter().map(|&m| Label::of(&reg.vertex, m)).collect(),
        edges: g
            .edges()
            .into_iter()
            .map(|e| EdgeJson {
                u: e.u,
                v: e.v,
                mark_uv: Label::of(&reg.edge, e.mark_uv),
                mark_vu: Label::of(&reg.edge, e.mark_vu),
            })
            .collect(),
    }
}

pub fn graph_from_json(j: &GraphJson, reg: &mut MarkRegistry) -> Result<MarkedGraph> {
    if j.vertex_marks.len() != j.n {
        bail!(Parse, "{} vertex marks for n = {}", j.vertex_marks.len(), j.n);
    }
    let marks = j.vertex_marks.iter().map(|l| l.intern(&mut reg.vertex)).collect();
    let mut edges = Vec::with_capacity(j.edges.len());
    for e in &j.edges {
        if e.u >= j.n || e.v >= j.n {
            bail!(Parse, "edge ({}, {}) out of range", e.u, e.v);
        }
        edges.push(Edge { u: e.u, v: e.v, mark_uv: e.mark_uv.intern(&mut reg.edge), mark_vu: e.mark_vu.intern(&mut reg.edge) });
    }
    MarkedGraph::new(marks, &edges)
}

const EDGE_CSV_HEADER: &str = "u,v,mark_uv,mark_vu";
const VERTEX_CSV_HEADER: &str = "vertex,mark";

/// Edge list CSV with header `u,v,mark_uv,mark_vu`.
pub fn graph_edges_csv(g: &MarkedGraph, reg: &MarkRegistry) -> String {
    let mut s = format!("{EDGE_CSV_HEADER}\n");
    for e in g.edges() {
        s.push_str(&format!("{},{},{},{}\n", e.u, e.v, reg.edge.label(e.mark_uv), reg.edge.label(e.mark_vu)));
    }
    s
}

/// Vertex mark CSV with header `vertex,mark`.
pub fn graph_vertices_csv(g: &MarkedGraph, reg: &MarkRegistry) -> String {
    let mut s = format!("{VERTEX_CSV_HEADER}\n");
    for (v, &m) in g.vertex_marks().iter().enumerate() {
        s.push_str(&format!("{v},{}\n", reg.vertex.label(m)));
    }
    s
}

fn csv_rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => bail!(Parse, "expected header `{header}`"),
    }
    Ok(lines.map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect())))
}

/// Reads the CSV pair written by [`graph_edges_csv`] and [`graph_vertices_csv`].
pub fn graph_from_csv(edges: &str, vertices: &str, reg: &mut MarkRegistry) -> Result<MarkedGraph> {
    let mut marks = Vec::new();
    for (line, row) in csv_rows(vertices, VERTEX_CSV_HEADER)? {
        let [v, m] = row[..] else { bail!(Parse, "line {line}: expected 2 fields") };
        if v.parse::<usize>().ok() != Some(marks.len()) {
            bail!(Parse, "line {line}: vertices must be listed as 0, 1, 2, ...");
        }
        marks.push(reg.vertex.intern(m));
    }
    let mut list = Vec::new();
    for (line, row) in csv_rows(edges, EDGE_CSV_HEADER)? {
        let [u, v, a, b] = row[..] else { bail!(Parse, "line {line}: expected 4 fields") };
        let (Ok(u), Ok(v)) = (u.parse::<usize>(), v.parse::<usize>()) else { bail!(Parse, "line {line}: bad endpoint") };
        if u >= marks.len() || v >= marks.len() {
            bail!(Parse, "line {line}: edge ({u}, {v}) out of range");
        }
        list.push(Edge { u, v, mark_uv: reg.edge.intern(a), mark_vu: reg.edge.intern(b) });
    }
    MarkedGraph::new(marks, &list)
}

/// Colored degree sequence file: color index c = i·L + j is listed as `colors[c] = [i, j]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreesJson {
    #[serde(rename = "L")]
    pub l: usize,
    pub colors: Vec<[usize; 2]>,
    pub matrices: Vec<Vec<Vec<u32>>>,
}

pub fn degrees_to_json(d: &ColoredDegreeSequence) -> DegreesJson {
    let l = d.l();
    DegreesJson {
        l,
        colors: (0..l * l).map(|c| [c / l, c % l]).collect(),
        matrices: d.matrices().iter().map(|m| m.chunks(l.max(1)).map(<[u32]>::to_vec).collect()).collect(),
    }
}

pub fn degrees_from_json(j: &DegreesJson) -> Result<ColoredDegreeSequence> {
    let l = j.l;
    let mut rows = Vec::with_capacity(j.matrices.len());
    for (v, m) in j.matrices.iter().enumerate() {
        if m.len() != l || m.iter().any(|r| r.len() != l) {
            bail!(Parse, "matrix of vertex {v} is not {l}x{l}");
        }
        rows.push(m.concat());
    }
    ColoredDegreeSequence::new(l, rows)
}

/// Directed colored multigraph dumped as per-color lists of directed edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultigraphJson {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub colors: Vec<ColorEdgesJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorEdgesJson {
    pub color: [usize; 2],
    pub edges: Vec<[u32; 2]>,
}

pub fn multigraph_to_json(g: &DirectedColoredMultigraph) -> MultigraphJson {
    let l = g.l();
    let mut by: BTreeMap<u32, Vec<[u32; 2]>> = BTreeMap::new();
    for &(u, v, c) in g.directed_edges() {
        by.entry(c).or_default().push([u, v]);
    }
    MultigraphJson {
        n: g.n(),
        l,
        colors: by.into_iter().map(|(c, edges)| ColorEdgesJson { color: [c as usize / l, c as usize % l], edges }).collect(),
    }
}

pub fn multigraph_from_json(j: &MultigraphJson) -> Result<DirectedColoredMultigraph> {
    let mut edges = Vec::new();
    for ce in &j.colors {
        let [i, k] = ce.color;
        if i >= j.l || k >= j.l {
            bail!(Parse, "color ({i}, {k}) outside an L = {} palette", j.l);
        }
        edges.extend(ce.edges.iter().map(|&[u, v]| (u, v, (i * j.l + k) as u32)));
    }
    DirectedColoredMultigraph::from_directed(j.n, j.l, edges)
}

/// One line of a sample dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleJson {
    pub seed: u64,
    pub h: u32,
    pub depth_cap: u32,
    pub gamma_sum: f64,
    /// Parent of each vertex; the root (vertex 0) has none.
    pub parent: Vec<Option<usize>>,
    pub marks: Vec<Label>,
    /// Mark toward the parent and mark toward the vertex, per non-root vertex.
    pub edge_marks: Vec<Option<[Label; 2]>>,
    pub gamma: Vec<Option<f64>>,
}

pub fn sample_to_json(s: &SampledTree, reg: &MarkRegistry) -> SampleJson {
    let t = &s.tree;
    SampleJson {
        seed: s.seed,
        h: s.h,
        depth_cap: s.depth_cap,
        gamma_sum: s.gamma_sum(),
        parent: (0..t.len()).map(|v| t.parent(v)).collect(),
        marks: (0..t.len()).map(|v| Label::of(&reg.vertex, t.mark(v))).collect(),
        edge_marks: (0..t.len())
            .map(|v| {
                t.parent(v).map(|_| [Label::of(&reg.edge, t.to_parent_mark(v)), Label::of(&reg.edge, t.from_parent_mark(v))])
            })
            .collect(),
        gamma: s.gamma.clone(),
    }
}

/// JSON-lines dump, one sample per line.
pub fn samples_to_jsonl(samples: &[SampledTree], reg: &MarkRegistry) -> Result<String> {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(&sample_to_json(s, reg))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| crate::Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
