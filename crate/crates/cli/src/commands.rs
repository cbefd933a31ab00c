use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use lwc_core::convert::{adapted_counts_for, log_n_h, realize, root_mark_law, CountMode, GraphEdit, RealizationPlan};
use lwc_core::graph::{empirical_dist, mark_counts, MarkCounts};
use lwc_core::io::{self, DistJson, GraphJson, Label};
use lwc_core::metrics::{exact_log_count, lp_upper_from_profile, neighborhood_marginals, tv_distance};
use lwc_core::rng::derive;
use lwc_core::tree::MarkedAdjacency;
use lwc_core::ugwt::{involution_check, sample_cugwt, ColoredDegreeLaw};
use lwc_core::weight::RATIONAL_SUPPORT_LIMIT;
use lwc_core::{CanonicalRootedGraph, CanonicalTree, MarkRegistry, MarkedGraph, NeighborhoodDist, Rational, UgwtSampler, Weight};

use crate::manifest::ManifestBuilder;
use crate::{CheckArgs, Cli, Command, ConvergeArgs, CountArgs, CountMethod, EntropyArgs, ModeArg, RealizeArgs, SampleArgs};

/// Tolerance for the nonincreasing check on the J_h ladder.
const LADDER_TOL: f64 = 1e-9;

/// A distribution loaded in the arithmetic chosen by `--mode`.
enum Loaded {
    Exact(NeighborhoodDist<Rational>),
    Float(NeighborhoodDist<f64>),
}

/// Runs `$body` with `$p` bound to the loaded distribution, whichever arithmetic it uses.
macro_rules! with_dist {
    ($loaded:expr, $p:ident => $body:expr) => {
        match $loaded {
            Loaded::Exact($p) => $body,
            Loaded::Float($p) => $body,
        }
    };
}

impl Loaded {
    fn mode_name(&self) -> &'static str {
        match self {
            Loaded::Exact(_) => "rational",
            Loaded::Float(_) => "float",
        }
    }
}

fn load_dist(path: &Path, mode: ModeArg, reg: &mut MarkRegistry) -> Result<Loaded> {
    let j: DistJson = io::read_json(path)?;
    let exact = match mode {
        ModeArg::Rational => true,
        ModeArg::Float => false,
        ModeArg::Auto => j.atoms.len() <= RATIONAL_SUPPORT_LIMIT,
    };
    Ok(if exact {
        Loaded::Exact(io::dist_from_json(&j, reg)?)
    } else {
        Loaded::Float(io::dist_from_json(&j, reg)?)
    })
}

fn check_depth<W: Weight>(p: &NeighborhoodDist<W>, h: Option<u32>) -> Result<()> {
    match h {
        Some(h) if h != p.h() => Err(lwc_core::Error::Precondition(format!("--h {h} but the distribution has depth {}", p.h())).into()),
        _ => Ok(()),
    }
}

fn out_path(cli: &Cli, explicit: &Option<PathBuf>, default: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    Ok(explicit.clone().unwrap_or_else(|| cli.out_dir.join(default)))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sample(a) => sample(cli, a),
        Command::Check(a) => check(cli, a),
        Command::Entropy(a) => entropy(cli, a),
        Command::Realize(a) => realize_cmd(cli, a),
        Command::Converge(a) => converge(cli, a),
        Command::Count(a) => count(cli, a),
    }
}

// ---------------------------------------------------------------- sample

#[derive(Deserialize)]
struct ColoredLawJson {
    #[serde(rename = "L")]
    l: usize,
    atoms: Vec<ColoredAtomJson>,
}

#[derive(Deserialize)]
struct ColoredAtomJson {
    /// Row-major L×L matrix; entry i*L+j counts edges of color (i, j).
    degree: Vec<u32>,
    prob: f64,
}

#[derive(Serialize)]
struct ColoredSampleJson<'a> {
    seed: u64,
    parent: &'a [Option<usize>],
    color_from_parent: &'a [Option<usize>],
    degree: &'a [Vec<u32>],
    depth: &'a [u32],
}

fn sample(cli: &Cli, a: &SampleArgs) -> Result<()> {
    let out = out_path(cli, &a.out, "samples.jsonl")?;
    let mut text = String::new();
    let mode = if let Some(law) = &a.colored_law {
        let j: ColoredLawJson = io::read_json(law)?;
        let r = ColoredDegreeLaw::new(j.l, j.atoms.into_iter().map(|x| (x.degree, x.prob)).collect())?;
        for i in 0..a.n as u64 {
            let s = sample_cugwt(&r, a.depth, derive(cli.seed, &[i]))?;
            let line = ColoredSampleJson {
                seed: s.seed,
                parent: &s.parent,
                color_from_parent: &s.color_from_parent,
                degree: &s.degree,
                depth: &s.depth,
            };
            text.push_str(&serde_json::to_string(&line)?);
            text.push('\n');
        }
        "float"
    } else {
        let path = a.dist.as_ref().expect("clap requires --dist or --colored-law");
        let mut reg = MarkRegistry::new();
        let loaded = load_dist(path, cli.mode, &mut reg)?;
        with_dist!(&loaded, p => {
            check_depth(p, a.h)?;
            let sampler = UgwtSampler::new(p)?;
            let samples = sampler.sample_batch(a.depth, cli.seed, a.n)?;
            text = io::samples_to_jsonl(&samples, &reg)?;
        });
        loaded.mode_name()
    };
    let mut m = ManifestBuilder::new("sample", a, cli.seed, mode)?;
    write_text(&out, &text)?;
    m.output(&out);
    m.finish(&cli.out_dir)?;
    println!("wrote {} samples to {}", a.n, out.display());
    Ok(())
}

// ---------------------------------------------------------------- check

/// Test statistic for the involution check: deg(v) * (1 + mark(u)).
fn involution_statistic(t: &lwc_core::LabeledTree, u: usize, v: usize) -> f64 {
    t.degree(v) as f64 * (1.0 + t.mark(u) as f64)
}

fn check(cli: &Cli, a: &CheckArgs) -> Result<()> {
    fs::create_dir_all(&cli.out_dir)?;
    let mut reg = MarkRegistry::new();
    let loaded = load_dist(&a.dist, cli.mode, &mut reg)?;
    let mut m = ManifestBuilder::new("check", a, cli.seed, loaded.mode_name())?;
    let mut report = serde_json::Map::new();
    with_dist!(&loaded, p => {
        let adm = p.is_admissible();
        println!("admissible: {}", adm.admissible);
        report.insert("admissible".into(), json!(adm.admissible));
        if let Some((t, t2, e, e2)) = &adm.violation {
            let pair = json!({
                "t": io::half_tree_to_json(t, &reg),
                "t_prime": io::half_tree_to_json(t2, &reg),
                "e_t_t_prime": e.render(),
                "e_t_prime_t": e2.render(),
            });
            println!("violation: e_P(t, t') = {} but e_P(t', t) = {}", e.render(), e2.render());
            println!("  t  = {}", serde_json::to_string(&pair["t"])?);
            println!("  t' = {}", serde_json::to_string(&pair["t_prime"])?);
            report.insert("violation".into(), pair);
        }
        // both remaining checks presuppose admissibility
        if !adm.admissible && (a.consistency || a.unimodularity.is_some()) {
            println!("skipping consistency and involution checks for an inadmissible law");
        } else if a.consistency {
            let c = p.markov_consistency()?;
            let max = c.marginal_deviation.to_f64().max(c.kernel_deviation.to_f64());
            println!("marginal deviation: {}", c.marginal_deviation.render());
            println!("kernel deviation: {}", c.kernel_deviation.render());
            println!("max deviation: {max}");
            report.insert(
                "consistency".into(),
                json!({
                    "marginal_deviation": c.marginal_deviation.render(),
                    "kernel_deviation": c.kernel_deviation.render(),
                    "max_deviation": max,
                    "pairs_checked": c.pairs_checked,
                    "extended_support": c.extended_support,
                }),
            );
        }
        if let (true, Some(samples)) = (adm.admissible, a.unimodularity) {
            let r = involution_check(p, p.h() + 2, involution_statistic, samples, cli.seed)?;
            println!(
                "involution: forward {:.6} ± {:.6}, backward {:.6} ± {:.6}, z = {:.3}, pass(3σ) = {}",
                r.mean_forward,
                r.half_width_forward,
                r.mean_backward,
                r.half_width_backward,
                r.z_score(),
                r.passes(3.0)
            );
            report.insert(
                "involution".into(),
                json!({
                    "mean_forward": r.mean_forward,
                    "mean_backward": r.mean_backward,
                    "half_width_forward": r.half_width_forward,
                    "half_width_backward": r.half_width_backward,
                    "diff": r.diff,
                    "diff_se": r.diff_se,
                    "z": r.z_score(),
                    "samples": r.samples,
                }),
            );
        }
    });
    let out = cli.out_dir.join("check.json");
    io::write_json(&out, &report)?;
    m.output(&out);
    m.finish(&cli.out_dir)?;
    Ok(())
}

// ---------------------------------------------------------------- entropy

fn entropy_ladder<W: Weight>(p: &NeighborhoodDist<W>, rungs: u32) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::new();
    let mut cur = p.clone();
    for i in 0..rungs.max(1) {
        if i > 0 {
            cur = cur.extend_exact()?;
        }
        out.push((cur.h(), cur.j_h()?));
    }
    Ok(out)
}

fn entropy(cli: &Cli, a: &EntropyArgs) -> Result<()> {
    fs::create_dir_all(&cli.out_dir)?;
    let mut reg = MarkRegistry::new();
    let loaded = load_dist(&a.dist, cli.mode, &mut reg)?;
    let mut m = ManifestBuilder::new("entropy", a, cli.seed, loaded.mode_name())?;
    let ladder = with_dist!(&loaded, p => entropy_ladder(p, a.ladder)?);
    for (h, j) in &ladder {
        println!("J_{h} = {j}");
    }
    let nonincreasing = ladder.windows(2).all(|w| w[1].1 <= w[0].1 + LADDER_TOL);
    if ladder.len() > 1 {
        println!("nonincreasing: {nonincreasing}");
    }
    let out = cli.out_dir.join("entropy.json");
    let rows: Vec<_> = ladder.iter().map(|(h, j)| json!({ "h": h, "j": j })).collect();
    io::write_json(&out, &json!({ "ladder": rows, "nonincreasing": nonincreasing }))?;
    m.output(&out);
    m.finish(&cli.out_dir)?;
    Ok(())
}

// ---------------------------------------------------------------- realize

fn counts_json(c: &MarkCounts, reg: &MarkRegistry) -> serde_json::Value {
    let m: Vec<_> = c
        .m
        .iter()
        .map(|(&(x, y), &k)| json!({ "marks": [Label::of(&reg.edge, x), Label::of(&reg.edge, y)], "count": k }))
        .collect();
    let u: Vec<_> = c.u.iter().map(|(&x, &k)| json!({ "mark": Label::of(&reg.vertex, x), "count": k })).collect();
    json!({ "edges": m, "vertices": u })
}

fn plan_json(plan: &RealizationPlan, reg: &MarkRegistry) -> serde_json::Value {
    let edge = |e: &lwc_core::Edge| {
        json!({ "u": e.u, "v": e.v, "mark_uv": Label::of(&reg.edge, e.mark_uv), "mark_vu": Label::of(&reg.edge, e.mark_vu) })
    };
    let graph_edits: Vec<_> = plan
        .graph_edits
        .iter()
        .map(|g| match g {
            GraphEdit::VertexMark { vertex, from, to } => json!({
                "kind": "vertex_mark",
                "vertex": vertex,
                "from": Label::of(&reg.vertex, *from),
                "to": Label::of(&reg.vertex, *to),
            }),
            GraphEdit::RemoveEdge(e) => json!({ "kind": "remove_edge", "edge": edge(e) }),
            GraphEdit::AddEdge(e) => json!({ "kind": "add_edge", "edge": edge(e) }),
        })
        .collect();
    json!({
        "n": plan.n,
        "h": plan.h,
        "target": counts_json(&plan.target, reg),
        "atom_counts": plan.atom_counts.iter().map(|(t, k)| json!({ "tree": io::tree_to_json(t, reg), "count": k })).collect::<Vec<_>>(),
        "assignment": plan.assignment,
        "beta": plan.beta.iter().map(|&b| Label::of(&reg.vertex, b)).collect::<Vec<_>>(),
        "types": plan.table.types().iter().map(|t| io::half_tree_to_json(t, reg)).collect::<Vec<_>>(),
        "degrees": io::degrees_to_json(&plan.degrees),
        "balance_edits": plan.balance_edits.iter().map(|b| json!({ "vertex": b.vertex, "color": b.color, "from": b.from, "to": b.to })).collect::<Vec<_>>(),
        "graph_edits": graph_edits,
        "rejection_attempts": plan.rejection_attempts,
    })
}

fn realize_one<W: Weight>(p: &NeighborhoodDist<W>, n: usize, seed: u64, max_attempts: u64) -> Result<(MarkedGraph, RealizationPlan)> {
    let target = adapted_counts_for(p, n as u64)?;
    Ok(realize(p, n, &target, seed, max_attempts)?)
}

fn realize_cmd(cli: &Cli, a: &RealizeArgs) -> Result<()> {
    let out = out_path(cli, &a.out, "graph.json")?;
    let plan_out = out_path(cli, &a.plan, "plan.json")?;
    let mut reg = MarkRegistry::new();
    let loaded = load_dist(&a.dist, cli.mode, &mut reg)?;
    let mut m = ManifestBuilder::new("realize", a, cli.seed, loaded.mode_name())?;
    let (g, plan) = with_dist!(&loaded, p => {
        check_depth(p, a.h)?;
        realize_one(p, a.n, cli.seed, a.max_attempts)?
    });
    io::write_json(&out, &io::graph_to_json(&g, &reg))?;
    io::write_json(&plan_out, &plan_json(&plan, &reg))?;
    m.output(&out);
    m.output(&plan_out);
    m.finish(&cli.out_dir)?;
    println!(
        "realized n = {} with {} edges ({} rejection attempts, {} touched vertices)",
        g.n(),
        g.edge_count(),
        plan.rejection_attempts,
        plan.touched_vertices().len()
    );
    Ok(())
}

// ---------------------------------------------------------------- converge

type Law = BTreeMap<CanonicalRootedGraph, f64>;

fn tree_law<W: Weight>(p: &NeighborhoodDist<W>) -> Law {
    p.atoms().map(|(t, w)| (CanonicalRootedGraph::Tree(t.clone()), w.to_f64())).collect()
}

/// Reference laws at depths 0..=h+1: the root mark law, the marginals of P,
/// then the empirical depth-(h+1) law of UGWT samples.
fn reference_laws<W: Weight>(p: &NeighborhoodDist<W>, samples: usize, seed: u64) -> Result<Vec<Law>> {
    let h = p.h();
    let mut laws = vec![root_mark_law(p)
        .into_iter()
        .map(|(x, w)| (CanonicalRootedGraph::Tree(CanonicalTree::leaf(x)), w.to_f64()))
        .collect::<Law>()];
    for k in 1..=h {
        laws.push(tree_law(&p.marginal(k)?));
    }
    if p.mean_degree().is_zero() {
        // no edges: the tree is its root ball, so the deeper law is P itself
        laws.push(tree_law(p));
        return Ok(laws);
    }
    let sampler = UgwtSampler::new(p)?;
    let mut counts: BTreeMap<CanonicalTree, u64> = BTreeMap::new();
    for s in sampler.sample_batch(h + 1, seed, samples)? {
        *counts.entry(s.tree.ball(0, h + 1)).or_insert(0) += 1;
    }
    laws.push(counts.into_iter().map(|(t, c)| (CanonicalRootedGraph::Tree(t), c as f64 / samples as f64)).collect());
    Ok(laws)
}

fn empirical_j<W: Weight>(g: &MarkedGraph, h: u32) -> f64 {
    empirical_dist(g, h)
        .and_then(|e| e.to_tree_dist::<W>())
        .and_then(|q| q.j_h())
        .unwrap_or(f64::NAN)
}

fn converge_rows<W: Weight>(p: &NeighborhoodDist<W>, a: &ConvergeArgs, seed: u64) -> Result<String> {
    let h = p.h();
    let reference = reference_laws(p, a.samples, derive(seed, &[u64::MAX]))?;
    let j_target = p.j_h().unwrap_or(f64::NAN);
    let mut csv = String::from("n");
    for k in 0..=h + 1 {
        write!(csv, ",tv_{k}")?;
    }
    csv.push_str(",lp_upper,j_h_target,j_h_empirical\n");
    for (i, &n) in a.schedule.iter().enumerate() {
        let (g, _) = realize_one(p, n, derive(seed, &[i as u64]), a.max_attempts)?;
        let marginals = neighborhood_marginals(&g, h + 1)?;
        let profile: Vec<f64> = marginals.iter().zip(&reference).map(|(mu, nu)| tv_distance(mu, nu)).collect();
        write!(csv, "{n}")?;
        for tv in &profile {
            write!(csv, ",{tv}")?;
        }
        writeln!(csv, ",{},{},{}", lp_upper_from_profile(&profile), j_target, empirical_j::<W>(&g, h))?;
    }
    Ok(csv)
}

fn converge(cli: &Cli, a: &ConvergeArgs) -> Result<()> {
    if a.schedule.is_empty() {
        bail!(lwc_core::Error::Precondition("empty schedule".into()));
    }
    let out = out_path(cli, &a.out, "converge.csv")?;
    let mut reg = MarkRegistry::new();
    let loaded = load_dist(&a.dist, cli.mode, &mut reg)?;
    let mut m = ManifestBuilder::new("converge", a, cli.seed, loaded.mode_name())?;
    let csv = with_dist!(&loaded, p => converge_rows(p, a, cli.seed)?);
    write_text(&out, &csv)?;
    m.output(&out);
    m.finish(&cli.out_dir)?;
    print!("{csv}");
    Ok(())
}

// ---------------------------------------------------------------- count

fn count(cli: &Cli, a: &CountArgs) -> Result<()> {
    fs::create_dir_all(&cli.out_dir)?;
    let j: GraphJson = io::read_json(&a.graph)?;
    let mut reg = MarkRegistry::new();
    let g = io::graph_from_json(&j, &mut reg)?;
    let mut m = ManifestBuilder::new("count", a, cli.seed, "float")?;
    let mode = match a.method {
        CountMethod::Exact => CountMode::Exact,
        CountMethod::Estimate => CountMode::MonteCarlo { trials: a.trials, seed: cli.seed },
    };
    let log_nh = log_n_h(&g, a.h, mode)?;
    let mc = mark_counts(&g);
    let log_ensemble = exact_log_count(g.n() as u64, &mc.m, &mc.u);
    println!("log N_h = {log_nh}");
    println!("log |G(n, m, u)| = {log_ensemble}");
    let out = cli.out_dir.join("count.json");
    io::write_json(
        &out,
        &json!({
            "h": a.h,
            "n": g.n(),
            "log_n_h": log_nh,
            "log_ensemble": log_ensemble,
            "mark_counts": counts_json(&mc, &reg),
        }),
    )?;
    m.output(&out);
    m.finish(&cli.out_dir)?;
    Ok(())
}
