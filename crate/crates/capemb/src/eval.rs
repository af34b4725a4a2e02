//! Distortion evaluation: embed an instance, compare every pair against the
//! exact oracle and count violations of the exact per-run bound.

use std::fmt::Write as _;

use crate::build_clean::BuildCleanPlan;
use crate::capped_l1::{capped_l1_embed, DEFAULT_C, per_run_bound};
use crate::caterpillar::{decompose, fixed_cap_tree_embed, snip_embed};
use crate::error::{invalid, Error, Result};
use crate::gen::{
    gen_general_tim, gen_line, gen_line_caps, gen_lipschitz_caps, gen_points, gen_random_tree, gen_symmetric_tim,
};
use crate::ising::{
    bias_data, forced_tree, general_head, general_tim_embed, reduce_bad_edges, symmetric_tim_embed, theta_tree,
    GeneralTim, SymmetricTim,
};
use crate::metric::{
    all_pairs_tree_distance, dcap, dlcap, log_scale, summarize, CapAssignment, Distortion, Embedding, LineMetric,
    PointSet, WeightedTree, TOL,
};
use crate::rng::RngSeed;
use crate::snake::{boost_average, lazy_snake_fixed, lazy_snake_lipschitz};

#[derive(Clone, Debug)]
pub enum Instance {
    Line { line: LineMetric, caps: Option<CapAssignment> },
    Tree { tree: WeightedTree, caps: Option<CapAssignment> },
    Symmetric(SymmetricTim),
    General(GeneralTim),
    Points(PointSet),
}

impl Instance {
    pub fn n(&self) -> usize {
        match self {
            Instance::Line { line, .. } => line.len(),
            Instance::Tree { tree, .. } => tree.n(),
            Instance::Symmetric(m) => m.n(),
            Instance::General(m) => m.n(),
            Instance::Points(p) => p.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Embedder {
    /// Boosted lazy snake with cap `m`; oracle `dcap`.
    LineFixed { m: f64 },
    /// Boosted Lipschitz lazy snake; oracle `dlcap`.
    LineLipschitz,
    /// Boosted fixed-cap tree embedder; oracle `dcap`, bound `6 dcap`.
    TreeFixed { m: f64 },
    /// Boosted build/clean embedder; oracle `dlcap`.
    TreeLipschitz,
    /// Snipped caterpillar embedding; oracle tree distance, isometric.
    Caterpillar,
    /// Symmetric model embedder; oracle disagreement, bound `48 d`.
    Symmetric,
    /// General model embedder; oracle disagreement, bound `207 d`.
    General,
    /// Boosted capped ℓ1 embedder with `c d` buckets; oracle capped ℓ1.
    L1 { m: f64, c: usize },
}

pub const SYMMETRIC_BOUND: f64 = 48.0;
pub const GENERAL_BOUND: f64 = 207.0;
pub const TREE_FIXED_BOUND: f64 = 6.0;

/// Default copy count `64 log n`.
pub fn default_copies(n: usize) -> usize {
    64 * log_scale(n)
}

fn mismatch<T>(inst: &Instance, emb: Embedder) -> Result<T> {
    let kind = match inst {
        Instance::Line { caps: None, .. } => "line without caps",
        Instance::Line { .. } => "line with caps",
        Instance::Tree { caps: None, .. } => "tree without caps",
        Instance::Tree { .. } => "tree with caps",
        Instance::Symmetric(_) => "symmetric model",
        Instance::General(_) => "general model",
        Instance::Points(_) => "point set",
    };
    invalid(format!("oracle/embedder mismatch: {emb:?} on a {kind}"))
}

fn check_m(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        invalid(format!("cap must be positive, got {m}"))
    }
}

/// Index of pair `i < j` in the packed upper triangle.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

fn accumulate(rows: &[Vec<f64>], scale: f64, out: &mut [f64]) {
    let n = rows.len();
    let dim = rows.first().map_or(0, |r| r.len());
    let mut col = vec![0.0; n];
    for c in 0..dim {
        for (x, r) in col.iter_mut().zip(rows) {
            *x = r[c];
        }
        if col.iter().all(|&x| x == col[0]) {
            continue;
        }
        let mut base = 0;
        for i in 0..n {
            let xi = col[i];
            let len = n - i - 1;
            for (o, &xj) in out[base..base + len].iter_mut().zip(&col[i + 1..]) {
                *o += scale * (xi - xj).abs();
            }
            base += len;
        }
    }
}

/// All pairwise ℓ1 distances, packed by [`pair_index`].
pub fn pairwise_l1(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut out = vec![0.0; n * n.saturating_sub(1) / 2];
    accumulate(rows, 1.0, &mut out);
    out
}

/// Pairwise distances of [`boost_average`] output without materializing it.
pub fn boosted_pairwise<F>(n: usize, copies: usize, seed: RngSeed, mut embed: F) -> Result<Vec<f64>>
where
    F: FnMut(RngSeed) -> Result<Embedding>,
{
    if copies == 0 {
        return invalid("boosting needs at least one copy");
    }
    let mut out = vec![0.0; n * n.saturating_sub(1) / 2];
    let scale = 1.0 / copies as f64;
    for k in 0..copies {
        let e = embed(seed.derive(k as u64))?;
        if e.len() != n {
            return invalid("copies disagree on point count");
        }
        accumulate(e.rows(), scale, &mut out);
    }
    Ok(out)
}

fn add(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn snip_dense(tree: &WeightedTree) -> Result<Embedding> {
    let s = snip_embed(tree, &decompose(tree), 1.0)?;
    let rows = s
        .vectors
        .iter()
        .map(|v| {
            let mut r = vec![0.0; s.snippet_count];
            for &(q, x) in v {
                r[q] = x;
            }
            r
        })
        .collect();
    Embedding::new(rows)
}

/// Materialized embedding, as written by the CLI.
pub fn embed(inst: &Instance, emb: Embedder, copies: usize, seed: RngSeed) -> Result<Embedding> {
    match (inst, emb) {
        (Instance::Line { line, .. }, Embedder::LineFixed { m }) => {
            check_m(m)?;
            boost_average(copies, seed.named("line"), |s| column(lazy_snake_fixed(line.locs(), m, s)?))
        }
        (Instance::Line { line, caps: Some(c) }, Embedder::LineLipschitz) => {
            boost_average(copies, seed.named("line"), |s| column(lazy_snake_lipschitz(line, c, s)?))
        }
        (Instance::Tree { tree, .. }, Embedder::TreeFixed { m }) => {
            check_m(m)?;
            boost_average(copies, seed.named("tree-fixed"), |s| fixed_cap_tree_embed(tree, m, s))
        }
        (Instance::Tree { tree, caps: Some(c) }, Embedder::TreeLipschitz) => {
            let l = log_scale(tree.n());
            let plan = BuildCleanPlan::new(tree, c, l)?;
            boost_average(copies, seed.named("tree-bc"), |s| plan.embed(s))
        }
        (Instance::Tree { tree, .. }, Embedder::Caterpillar) => snip_dense(tree),
        (Instance::Symmetric(m), Embedder::Symmetric) => symmetric_tim_embed(m, copies, seed),
        (Instance::General(m), Embedder::General) => general_tim_embed(m, copies, seed),
        (Instance::Points(p), Embedder::L1 { m, c }) => {
            boost_average(copies, seed.named("l1"), |s| capped_l1_embed(p, m, c, s))
        }
        _ => mismatch(inst, emb),
    }
}

fn column(v: Vec<f64>) -> Result<Embedding> {
    Embedding::new(v.into_iter().map(|x| vec![x]).collect())
}

/// Packed pairwise embedded distances, equal to those of [`embed`] up to
/// summation order.
pub fn embedded_pairwise(inst: &Instance, emb: Embedder, copies: usize, seed: RngSeed) -> Result<Vec<f64>> {
    let n = inst.n();
    match (inst, emb) {
        (Instance::Line { line, .. }, Embedder::LineFixed { m }) => {
            check_m(m)?;
            boosted_pairwise(n, copies, seed.named("line"), |s| column(lazy_snake_fixed(line.locs(), m, s)?))
        }
        (Instance::Line { line, caps: Some(c) }, Embedder::LineLipschitz) => {
            boosted_pairwise(n, copies, seed.named("line"), |s| column(lazy_snake_lipschitz(line, c, s)?))
        }
        (Instance::Tree { tree, .. }, Embedder::TreeFixed { m }) => {
            check_m(m)?;
            boosted_pairwise(n, copies, seed.named("tree-fixed"), |s| fixed_cap_tree_embed(tree, m, s))
        }
        (Instance::Tree { tree, caps: Some(c) }, Embedder::TreeLipschitz) => {
            let l = log_scale(n);
            let plan = BuildCleanPlan::new(tree, c, l)?;
            boosted_pairwise(n, copies, seed.named("tree-bc"), |s| plan.embed(s))
        }
        (Instance::Tree { tree, .. }, Embedder::Caterpillar) => Ok(pairwise_l1(snip_dense(tree)?.rows())),
        (Instance::Symmetric(model), Embedder::Symmetric) => {
            let (reduced, parity) = reduce_bad_edges(model);
            let tree = theta_tree(&reduced)?;
            let mut d = boosted_pairwise(n, copies, seed.named("sym-tree"), |s| fixed_cap_tree_embed(&tree, 0.5, s))?;
            let par: Vec<Vec<f64>> = parity.iter().map(|&p| vec![f64::from(p)]).collect();
            add(&mut d, &pairwise_l1(&par));
            Ok(d)
        }
        (Instance::General(model), Embedder::General) => {
            let data = bias_data(model);
            let (ftree, caps) = forced_tree(model, &data)?;
            let l = log_scale(n);
            let plan = BuildCleanPlan::new(&ftree, &caps, l)?;
            let mut d = boosted_pairwise(n, copies, seed.named("gen-bc"), |s| plan.embed(s))?;
            add(&mut d, &pairwise_l1(general_head(&data)?.rows()));
            Ok(d)
        }
        (Instance::Points(p), Embedder::L1 { m, c }) => {
            check_m(m)?;
            boosted_pairwise(n, copies, seed.named("l1"), |s| capped_l1_embed(p, m, c, s))
        }
        _ => mismatch(inst, emb),
    }
}

/// Exact oracle distances and per-pair bounds, packed by [`pair_index`].
pub fn oracle(inst: &Instance, emb: Embedder) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = inst.n();
    let mut truth = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut bound = Vec::with_capacity(truth.capacity());
    let mut push = |t: f64, b: f64| {
        truth.push(t);
        bound.push(b);
    };
    match (inst, emb) {
        (Instance::Line { line, .. }, Embedder::LineFixed { m }) => {
            let x = line.locs();
            for i in 0..n {
                for j in i + 1..n {
                    let t = dcap((x[j] - x[i]).abs(), m);
                    push(t, t);
                }
            }
        }
        (Instance::Line { line, caps: Some(c) }, Embedder::LineLipschitz) => {
            let (x, c) = (line.locs(), c.caps());
            for i in 0..n {
                for j in i + 1..n {
                    let t = dlcap((x[j] - x[i]).abs(), c[i], c[j]);
                    push(t, t);
                }
            }
        }
        (Instance::Tree { tree, .. }, Embedder::TreeFixed { .. } | Embedder::TreeLipschitz | Embedder::Caterpillar) => {
            let caps = match (inst, emb) {
                (Instance::Tree { caps: Some(c), .. }, Embedder::TreeLipschitz) => Some(c.caps()),
                (_, Embedder::TreeLipschitz) => return mismatch(inst, emb),
                _ => None,
            };
            let d = all_pairs_tree_distance(tree);
            for i in 0..n {
                for j in i + 1..n {
                    match (emb, caps) {
                        (Embedder::TreeFixed { m }, _) => {
                            let t = dcap(d[i][j], m);
                            push(t, TREE_FIXED_BOUND * t);
                        }
                        (_, Some(c)) => {
                            let t = dlcap(d[i][j], c[i], c[j]);
                            push(t, t);
                        }
                        _ => push(d[i][j], d[i][j]),
                    }
                }
            }
        }
        (Instance::Symmetric(model), Embedder::Symmetric) => {
            for i in 0..n {
                for j in i + 1..n {
                    let t = model.disagreement(i, j);
                    push(t, SYMMETRIC_BOUND * t);
                }
            }
        }
        (Instance::General(model), Embedder::General) => {
            let m0 = model.marginals0();
            for i in 0..n {
                for j in i + 1..n {
                    let p = model.pair_joint_with(&m0, i, j)?;
                    let t = p[0][1] + p[1][0];
                    push(t, GENERAL_BOUND * t);
                }
            }
        }
        (Instance::Points(p), Embedder::L1 { m, c }) => {
            for i in 0..n {
                for j in i + 1..n {
                    let d = p.distance(i, j);
                    push(dcap(d, m), per_run_bound(d, m, c));
                }
            }
        }
        _ => return mismatch(inst, emb),
    }
    Ok((truth, bound))
}

/// Embedders of the statistical suite, each paired with an instance family.
pub const SUITE: [&str; 7] =
    ["line-fixed", "line-lipschitz", "tree-fixed", "tree-lipschitz", "symmetric", "general", "l1"];

/// Random instance of size `n` for a suite entry.
///
/// Lines have gaps in `[0, 8/n]` so that about a quarter of the pairs are
/// uncapped; trees have lengths in `[0, 1]`; caps start in `[1, 4]` with
/// floor `1/4`; points are uniform in `[0, 1]^4` with `M = 1`.
pub fn suite_case(name: &str, n: usize, seed: RngSeed) -> Result<(Instance, Embedder)> {
    let gap = 8.0 / n as f64;
    Ok(match name {
        "line-fixed" => (Instance::Line { line: gen_line(n, gap, seed.named("line"))?, caps: None }, Embedder::LineFixed { m: 1.0 }),
        "line-lipschitz" => {
            let line = gen_line(n, gap, seed.named("line"))?;
            let caps = gen_line_caps(&line, 1.0, 4.0, 0.25, seed.named("caps"))?;
            (Instance::Line { line, caps: Some(caps) }, Embedder::LineLipschitz)
        }
        "tree-fixed" => {
            (Instance::Tree { tree: gen_random_tree(n, 1.0, seed.named("tree"))?, caps: None }, Embedder::TreeFixed { m: 1.0 })
        }
        "tree-lipschitz" => {
            let tree = gen_random_tree(n, 1.0, seed.named("tree"))?;
            let caps = gen_lipschitz_caps(&tree, 1.0, 4.0, 0.25, seed.named("caps"))?;
            (Instance::Tree { tree, caps: Some(caps) }, Embedder::TreeLipschitz)
        }
        "symmetric" => (Instance::Symmetric(gen_symmetric_tim(n, seed)?), Embedder::Symmetric),
        "general" => (Instance::General(gen_general_tim(n, seed)?), Embedder::General),
        "l1" => (Instance::Points(gen_points(n, 4, 1.0, seed.named("points"))?), Embedder::L1 { m: 1.0, c: DEFAULT_C }),
        _ => return invalid(format!("unknown suite entry {name:?}")),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub truth: f64,
    pub embedded: f64,
    /// `embedded / truth`, absent when the truth is 0.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub rows: Vec<PairRow>,
    pub summary: Distortion,
}

/// Whether `embedded` exceeds `bound` beyond floating-point slack.
pub fn violates(embedded: f64, bound: f64) -> bool {
    embedded > bound + TOL * (1.0 + bound)
}

/// Assemble a report from packed truth, bound and embedded distances.
pub fn build_report(n: usize, truth: &[f64], bound: &[f64], embedded: &[f64]) -> Report {
    let mut rows = Vec::with_capacity(truth.len());
    let (mut lo, mut hi, mut violations) = (f64::INFINITY, 0.0f64, 0);
    for i in 0..n {
        for j in i + 1..n {
            let k = pair_index(n, i, j);
            let (t, e) = (truth[k], embedded[k]);
            if violates(e, bound[k]) {
                violations += 1;
            }
            let ratio = (t > 0.0).then(|| e / t);
            if let Some(r) = ratio {
                lo = lo.min(r);
                hi = hi.max(r);
            }
            rows.push(PairRow { i, j, truth: t, embedded: e, ratio });
        }
    }
    Report { rows, summary: summarize(lo, hi, violations) }
}

pub fn run_eval(inst: &Instance, emb: Embedder, copies: usize, seed: RngSeed) -> Result<Report> {
    let n = inst.n();
    if n < 2 {
        return invalid("evaluation needs at least two points");
    }
    let (truth, bound) = oracle(inst, emb)?;
    let embedded = embedded_pairwise(inst, emb, copies, seed)?;
    Ok(build_report(n, &truth, &bound, &embedded))
}

pub const REPORT_HEADER: &str = "i,j,truth,embedded,ratio";

impl Report {
    pub fn rows_csv(&self) -> String {
        let mut s = format!("{REPORT_HEADER}\n");
        for r in &self.rows {
            write!(s, "{},{},{},{},", r.i, r.j, r.truth, r.embedded).unwrap();
            if let Some(x) = r.ratio {
                write!(s, "{x}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }

    pub fn parse(csv: &str, json: &str) -> Result<Report> {
        let mut lines = csv.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == REPORT_HEADER => {}
            _ => return Err(Error::Parse { line: 1, msg: format!("expected header `{REPORT_HEADER}`") }),
        }
        let mut rows = Vec::new();
        for (k, l) in lines {
            let line = k + 1;
            let f: Vec<&str> = l.trim().split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse { line, msg: "expected 5 fields".into() });
            }
            let bad = |t: &str| Error::Parse { line, msg: format!("cannot parse {t:?}") };
            rows.push(PairRow {
                i: f[0].parse().map_err(|_| bad(f[0]))?,
                j: f[1].parse().map_err(|_| bad(f[1]))?,
                truth: f[2].parse().map_err(|_| bad(f[2]))?,
                embedded: f[3].parse().map_err(|_| bad(f[3]))?,
                ratio: if f[4].is_empty() { None } else { Some(f[4].parse().map_err(|_| bad(f[4]))?) },
            });
        }
        Ok(Report { rows, summary: serde_json::from_str(json)? })
    }
}
