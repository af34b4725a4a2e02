//! Trees, lines, caps, point sets and the exact distances the embedders target.

use crate::error::{invalid, Error, Result};

pub const TOL: f64 = 1e-9;

/// `max(1, ceil(log2 n))`, the log-scale used for every stage length and width.
pub fn log_scale(n: usize) -> usize {
    if n <= 2 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Rooted tree with nonnegative edge lengths.
///
/// Construction validates the edge list and precomputes parent pointers,
/// children in id order, a preorder and root distances.
#[derive(Clone, Debug)]
pub struct WeightedTree {
    n: usize,
    root: usize,
    edges: Vec<(usize, usize, f64)>,
    parent: Vec<Option<usize>>,
    parent_edge: Vec<Option<usize>>,
    parent_len: Vec<f64>,
    children: Vec<Vec<usize>>,
    preorder: Vec<usize>,
    depth: Vec<usize>,
    root_dist: Vec<f64>,
}

impl WeightedTree {
    pub fn new(n: usize, root: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return invalid("tree needs at least one vertex");
        }
        if root >= n {
            return Err(Error::VertexOutOfRange { vertex: root, n });
        }
        if edges.len() != n - 1 {
            return invalid(format!("expected {} edges, got {}", n - 1, edges.len()));
        }
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, &(u, v, len)) in edges.iter().enumerate() {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if !(len >= 0.0) || !len.is_finite() {
                return invalid(format!("edge {k} has invalid length {len}"));
            }
            if u == v {
                return invalid(format!("edge {k} is a self loop"));
            }
            adj[u].push((v, k));
            adj[v].push((u, k));
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }

        let mut parent = vec![None; n];
        let mut parent_edge = vec![None; n];
        let mut parent_len = vec![0.0; n];
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0; n];
        let mut root_dist = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            preorder.push(u);
            for &(v, k) in adj[u].iter().rev() {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                parent[v] = Some(u);
                parent_edge[v] = Some(k);
                parent_len[v] = edges[k].2;
                depth[v] = depth[u] + 1;
                root_dist[v] = root_dist[u] + edges[k].2;
                stack.push(v);
            }
        }
        if preorder.len() != n {
            return invalid("edges do not form a connected tree");
        }
        for &v in &preorder {
            if let Some(p) = parent[v] {
                children[p].push(v);
            }
        }
        Ok(WeightedTree {
            n,
            root,
            edges,
            parent,
            parent_edge,
            parent_len,
            children,
            preorder,
            depth,
            root_dist,
        })
    }

    /// Path 0 - 1 - ... - (k) with the given lengths, rooted at 0.
    pub fn path(lengths: &[f64]) -> Result<Self> {
        let edges = lengths.iter().enumerate().map(|(i, &l)| (i, i + 1, l)).collect();
        WeightedTree::new(lengths.len() + 1, 0, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn root(&self) -> usize {
        self.root
    }
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }
    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }
    /// Index into `edges()` of the edge joining `v` to its parent.
    pub fn parent_edge(&self, v: usize) -> Option<usize> {
        self.parent_edge[v]
    }
    pub fn parent_len(&self, v: usize) -> f64 {
        self.parent_len[v]
    }
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }
    /// Depth-first preorder, children visited in increasing id.
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }
    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }
    pub fn root_dist(&self, v: usize) -> f64 {
        self.root_dist[v]
    }

    /// Same topology with new per-edge lengths (indexed like `edges()`).
    pub fn with_lengths(&self, lengths: &[f64]) -> Result<Self> {
        if lengths.len() != self.edges.len() {
            return invalid("length vector does not match edge count");
        }
        let edges = self
            .edges
            .iter()
            .zip(lengths)
            .map(|(&(u, v, _), &l)| (u, v, l))
            .collect();
        WeightedTree::new(self.n, self.root, edges)
    }

    pub fn lca(&self, mut i: usize, mut j: usize) -> usize {
        while self.depth[i] > self.depth[j] {
            i = self.parent[i].unwrap();
        }
        while self.depth[j] > self.depth[i] {
            j = self.parent[j].unwrap();
        }
        while i != j {
            i = self.parent[i].unwrap();
            j = self.parent[j].unwrap();
        }
        i
    }

    /// Edge indices on the path from `i` to `j`.
    pub fn path_edges(&self, i: usize, j: usize) -> Vec<usize> {
        let a = self.lca(i, j);
        let mut out = Vec::new();
        for mut v in [i, j] {
            while v != a {
                out.push(self.parent_edge[v].unwrap());
                v = self.parent[v].unwrap();
            }
        }
        out
    }

    fn check(&self, v: usize) -> Result<()> {
        if v >= self.n {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        } else {
            Ok(())
        }
    }
}

pub fn tree_distance(tree: &WeightedTree, i: usize, j: usize) -> Result<f64> {
    tree.check(i)?;
    tree.check(j)?;
    if i == j {
        return Ok(0.0);
    }
    let a = tree.lca(i, j);
    let mut s = 0.0;
    for mut v in [i, j] {
        while v != a {
            s += tree.parent_len(v);
            v = tree.parent(v).unwrap();
        }
    }
    Ok(s)
}

/// All-pairs tree distances, one traversal per source.
pub fn all_pairs_tree_distance(tree: &WeightedTree) -> Vec<Vec<f64>> {
    let n = tree.n();
    let mut adj = vec![Vec::new(); n];
    for &(u, v, l) in tree.edges() {
        adj[u].push((v, l));
        adj[v].push((u, l));
    }
    let mut out = vec![vec![0.0; n]; n];
    let mut stack = Vec::new();
    for s in 0..n {
        let row = &mut out[s];
        let mut seen = vec![false; n];
        seen[s] = true;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &(v, l) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    row[v] = row[u] + l;
                    stack.push(v);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineMetric {
    locs: Vec<f64>,
}

impl LineMetric {
    pub fn new(locs: Vec<f64>) -> Result<Self> {
        if locs.is_empty() {
            return invalid("line needs at least one point");
        }
        if locs[0] != 0.0 {
            return invalid("line must start at 0");
        }
        if locs.iter().any(|x| !x.is_finite()) || locs.windows(2).any(|w| w[1] < w[0]) {
            return invalid("line locations must be finite and nondecreasing");
        }
        Ok(LineMetric { locs })
    }

    /// Line from consecutive gaps.
    pub fn from_gaps(gaps: &[f64]) -> Result<Self> {
        let mut locs = Vec::with_capacity(gaps.len() + 1);
        let mut t = 0.0;
        locs.push(t);
        for &g in gaps {
            if g < 0.0 {
                return Err(Error::Negative(g));
            }
            t += g;
            locs.push(t);
        }
        LineMetric::new(locs)
    }

    pub fn locs(&self) -> &[f64] {
        &self.locs
    }
    pub fn len(&self) -> usize {
        self.locs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.locs.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapAssignment {
    caps: Vec<f64>,
    lipschitz_checked: bool,
}

impl CapAssignment {
    pub fn new(caps: Vec<f64>) -> Result<Self> {
        for &c in &caps {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::Negative(c));
            }
        }
        Ok(CapAssignment { caps, lipschitz_checked: false })
    }

    /// Caps checked against the tree metric. Checking every edge suffices:
    /// summing edge inequalities along a path gives the pairwise one.
    pub fn lipschitz_on_tree(caps: Vec<f64>, tree: &WeightedTree) -> Result<Self> {
        let mut c = CapAssignment::new(caps)?;
        if c.caps.len() != tree.n() {
            return invalid("cap count does not match vertex count");
        }
        for &(u, v, l) in tree.edges() {
            check_pair(&c.caps, u, v, l)?;
        }
        c.lipschitz_checked = true;
        Ok(c)
    }

    pub fn lipschitz_on_line(caps: Vec<f64>, line: &LineMetric) -> Result<Self> {
        let mut c = CapAssignment::new(caps)?;
        if c.caps.len() != line.len() {
            return invalid("cap count does not match point count");
        }
        let l = line.locs();
        for i in 1..l.len() {
            check_pair(&c.caps, i - 1, i, l[i] - l[i - 1])?;
        }
        c.lipschitz_checked = true;
        Ok(c)
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }
    pub fn lipschitz_checked(&self) -> bool {
        self.lipschitz_checked
    }
}

fn check_pair(caps: &[f64], i: usize, j: usize, d: f64) -> Result<()> {
    let (mi, mj) = (caps[i], caps[j]);
    if (mi - mj).abs() > d + TOL {
        return Err(Error::Lipschitz { i, j, mi, mj, d });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if dim == 0 {
            return invalid("points need dimension at least 1");
        }
        if points.iter().any(|p| p.len() != dim) {
            return invalid("points have inconsistent dimension");
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return invalid("points must be finite");
        }
        Ok(PointSet { points, dim })
    }
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        l1(&self.points[i], &self.points[j])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl Embedding {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return invalid("embedding rows have inconsistent dimension");
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return invalid("embedding entries must be finite");
        }
        Ok(Embedding { rows, dim })
    }
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.rows.len()
    }
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        l1(&self.rows[i], &self.rows[j])
    }

    /// Column-wise concatenation.
    pub fn hstack(parts: &[Embedding]) -> Result<Self> {
        let n = parts.first().map(|p| p.len()).unwrap_or(0);
        if parts.iter().any(|p| p.len() != n) {
            return invalid("cannot stack embeddings with different row counts");
        }
        let rows = (0..n)
            .map(|i| parts.iter().flat_map(|p| p.rows[i].iter().copied()).collect())
            .collect();
        Embedding::new(rows)
    }
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapMode {
    Fixed,
    Lipschitz,
}

pub fn capped_distance(d: f64, cap_i: f64, cap_j: f64, mode: CapMode) -> Result<f64> {
    for x in [d, cap_i, cap_j] {
        if !(x >= 0.0) {
            return Err(Error::Negative(x));
        }
    }
    match mode {
        CapMode::Fixed => {
            if cap_i != cap_j {
                return invalid("fixed cap mode needs equal caps");
            }
            Ok(d.min(cap_i))
        }
        CapMode::Lipschitz => Ok(d.min(cap_i.max(cap_j))),
    }
}

/// `min(d, M)`.
pub fn dcap(d: f64, m: f64) -> f64 {
    d.min(m)
}

/// `min(d, max(Mi, Mj))`.
pub fn dlcap(d: f64, mi: f64, mj: f64) -> f64 {
    d.min(mi.max(mj))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Distortion {
    pub contraction: f64,
    pub expansion: f64,
    /// Infinite when some pair collapses; written as `null` in JSON.
    #[serde(with = "inf_as_null")]
    pub distortion: f64,
    /// Pairs at truth 0 whose embedded distance exceeds the tolerance.
    pub violations: usize,
    /// True when every pair had truth 0.
    pub degenerate: bool,
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

pub fn eval_distortion<F>(n: usize, truth: F, emb: &Embedding) -> Result<Distortion>
where
    F: Fn(usize, usize) -> f64,
{
    if n < 2 {
        return invalid("distortion needs at least two points");
    }
    if emb.len() != n {
        return invalid("embedding row count does not match");
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut violations = 0;
    for i in 0..n {
        for j in i + 1..n {
            let t = truth(i, j);
            let e = emb.distance(i, j);
            if t > 0.0 {
                let r = e / t;
                lo = lo.min(r);
                hi = hi.max(r);
            } else if e > TOL {
                violations += 1;
            }
        }
    }
    Ok(summarize(lo, hi, violations))
}

pub(crate) fn summarize(lo: f64, hi: f64, violations: usize) -> Distortion {
    if lo.is_infinite() {
        return Distortion {
            contraction: 1.0,
            expansion: 1.0,
            distortion: 1.0,
            violations,
            degenerate: true,
        };
    }
    let distortion = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Distortion { contraction: lo, expansion: hi, distortion, violations, degenerate: false }
}
