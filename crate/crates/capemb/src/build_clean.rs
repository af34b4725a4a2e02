//! Build/clean embeddings for Lipschitz-capped trees and capped lines.
//!
//! The tree is cut into vertical caterpillars, each caterpillar is chopped
//! into pieces no longer than `M(start) / (100 L)`, and a state vector of
//! width `H = 8L` is carried down the pieces. A piece either builds (raises
//! one hashed coordinate from 0) or cleans (lowers the first positive
//! coordinate), depending on a stage counter that advances by one per piece.

use rand::Rng;

use crate::caterpillar::decompose;
use crate::error::{invalid, Error, Result};
use crate::metric::{CapAssignment, Embedding, WeightedTree};
use crate::rng::RngSeed;
use crate::snake::interpolated_cap;

const CHOP_BUDGET: usize = 10_000_000;
const LINE_PIECE_BUDGET: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageParams {
    pub l: usize,
    pub lb: usize,
    pub lc: usize,
    pub h: usize,
}

impl StageParams {
    pub fn new(l: usize) -> Self {
        let l = l.max(1);
        StageParams { l, lb: 4 * l, lc: 9 * l, h: 8 * l }
    }
    pub fn period(&self) -> usize {
        self.lb + self.lc
    }
    pub fn is_build(&self, a: usize) -> bool {
        a < self.lb
    }
    /// Longest piece allowed at a point with cap `m`.
    pub fn piece_len(&self, m: f64) -> f64 {
        m / (100.0 * self.l as f64)
    }
}

/// State vector with a bitmask of positive coordinates.
#[derive(Clone, Debug)]
struct State {
    vals: Vec<f64>,
    mask: Vec<u64>,
}

impl State {
    fn zero(h: usize) -> Self {
        State { vals: vec![0.0; h], mask: vec![0; h.div_ceil(64)] }
    }
    fn from_vals(vals: Vec<f64>) -> Self {
        let mut s = State { mask: vec![0; vals.len().div_ceil(64)], vals };
        for k in 0..s.vals.len() {
            if s.vals[k] > 0.0 {
                s.mask[k / 64] |= 1 << (k % 64);
            }
        }
        s
    }
    fn first_positive(&self) -> Option<usize> {
        self.mask
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
    fn set(&mut self, k: usize, x: f64) {
        self.vals[k] = x;
        if x > 0.0 {
            self.mask[k / 64] |= 1 << (k % 64);
        } else {
            self.mask[k / 64] &= !(1 << (k % 64));
        }
    }
    fn norm(&self) -> f64 {
        self.vals.iter().sum()
    }
    fn is_zero(&self) -> bool {
        self.mask.iter().all(|w| *w == 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Action {
    Idle,
    Raise(usize),
    Lower { k: usize, amount: f64 },
}

impl Action {
    fn resolve(state: &State, hash: Option<usize>, len: f64) -> Action {
        match hash {
            Some(h) if state.vals[h] == 0.0 => Action::Raise(h),
            Some(_) => Action::Idle,
            None => match state.first_positive() {
                Some(k) => Action::Lower { k, amount: state.vals[k].min(len) },
                None => Action::Idle,
            },
        }
    }

    /// Value of the touched coordinate after walking `v` along the piece.
    fn value(&self, state: &State, v: f64) -> Option<(usize, f64)> {
        match *self {
            Action::Idle => None,
            Action::Raise(k) => Some((k, v)),
            Action::Lower { k, amount } => {
                let x = state.vals[k];
                Some((k, if v >= amount { end_lower(x, amount) } else { x - v }))
            }
        }
    }

    fn snapshot(&self, state: &State, v: f64) -> Vec<f64> {
        let mut out = state.vals.clone();
        if let Some((k, x)) = self.value(state, v) {
            out[k] = x;
        }
        out
    }

    fn finish(&self, state: &mut State, len: f64) {
        if let Some((k, x)) = self.value(state, len) {
            state.set(k, x);
        }
    }
}

/// Cleaning the whole remaining value lands on an exact zero.
fn end_lower(x: f64, amount: f64) -> f64 {
    if amount >= x {
        0.0
    } else {
        x - amount
    }
}

/// A caterpillar extended, for the root chain, by the virtual vertex `r0`.
#[derive(Clone, Debug)]
pub struct ExtChain {
    /// Top vertex; `None` is the virtual `r0`.
    pub head: Option<usize>,
    /// Vertices below the head.
    pub vertices: Vec<usize>,
    /// Positions of `vertices` below the head.
    pub positions: Vec<f64>,
    /// Caps of the head followed by those of `vertices`.
    pub caps: Vec<f64>,
    /// Range of this chain's pieces in `ChoppedDecomposition::pieces`.
    pub pieces: std::ops::Range<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub chain: usize,
    pub start: f64,
    pub len: f64,
    pub cap_start: f64,
    pub cap_end: f64,
    /// Pieces between this one and the topmost piece.
    pub depth: usize,
    pub parent: Option<usize>,
}

/// Where a vertex sits: inside `piece` at `offset`, or at the head of its
/// chain when `piece` is `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexLoc {
    pub chain: usize,
    pub piece: Option<usize>,
    pub offset: f64,
}

#[derive(Clone, Debug)]
pub struct ChoppedDecomposition {
    pub stages: StageParams,
    pub chains: Vec<ExtChain>,
    pub pieces: Vec<Piece>,
    pub vertex_loc: Vec<VertexLoc>,
    /// Piece whose stage counter a chain headed at this vertex continues.
    pub anchor: Vec<Option<usize>>,
}

impl ChoppedDecomposition {
    /// Stage counter of a piece given the counter `a0` of the topmost piece.
    pub fn stage(&self, piece: usize, a0: usize) -> usize {
        (a0 + self.pieces[piece].depth) % self.stages.period()
    }
}

fn check_positive_caps(tree: &WeightedTree, caps: &CapAssignment) -> Result<()> {
    if caps.caps().len() != tree.n() {
        return invalid("cap count does not match vertex count");
    }
    for (index, &cap) in caps.caps().iter().enumerate() {
        if !(cap > 0.0) {
            return Err(Error::NonPositiveCap { index, cap });
        }
    }
    CapAssignment::lipschitz_on_tree(caps.caps().to_vec(), tree)?;
    Ok(())
}

/// Chop every caterpillar into pieces of length `M(start) / (100 L)`,
/// the last piece of a caterpillar possibly shorter.
pub fn chop_decompose(tree: &WeightedTree, caps: &CapAssignment, l: usize) -> Result<ChoppedDecomposition> {
    check_positive_caps(tree, caps)?;
    let stages = StageParams::new(l);
    let m = caps.caps();
    let root = tree.root();
    let decomp = decompose(tree);

    let mut chains: Vec<ExtChain> = Vec::with_capacity(decomp.chains.len().max(1));
    let lead = 2.0 * m[root];
    if decomp.chains.is_empty() {
        chains.push(ExtChain {
            head: None,
            vertices: vec![root],
            positions: vec![lead],
            caps: vec![m[root], m[root]],
            pieces: 0..0,
        });
    }
    for (c, ch) in decomp.chains.iter().enumerate() {
        let (head, shift, mut caps_list) = if c == 0 && ch.head() == root {
            (None, lead, vec![m[root], m[root]])
        } else {
            (Some(ch.head()), 0.0, vec![m[ch.head()]])
        };
        let mut vertices = Vec::with_capacity(ch.vertices.len());
        let mut positions = Vec::with_capacity(ch.vertices.len());
        if head.is_none() {
            vertices.push(root);
            positions.push(lead);
        }
        for (k, &v) in ch.vertices.iter().enumerate().skip(1) {
            vertices.push(v);
            positions.push(ch.positions[k] + shift);
            caps_list.push(m[v]);
        }
        chains.push(ExtChain { head, vertices, positions, caps: caps_list, pieces: 0..0 });
    }

    let n = tree.n();
    let mut pieces: Vec<Piece> = Vec::new();
    let mut vertex_loc = vec![VertexLoc { chain: 0, piece: None, offset: 0.0 }; n];
    let mut anchor: Vec<Option<usize>> = vec![None; n];

    for c in 0..chains.len() {
        let ch = &chains[c];
        let head_anchor = ch.head.and_then(|h| anchor[h]);
        let first_depth = head_anchor.map(|p| pieces[p].depth + 1).unwrap_or(0);
        let mut all_pos = Vec::with_capacity(ch.positions.len() + 1);
        all_pos.push(0.0);
        all_pos.extend_from_slice(&ch.positions);
        let total = *all_pos.last().unwrap();

        let begin = pieces.len();
        let mut s = 0.0;
        let mut edge = 0; // index into vertices of the edge containing s
        let mut per_edge = 0usize;
        while s < total {
            let cap_start = interpolated_cap(&all_pos, &ch.caps, s);
            let mut len = stages.piece_len(cap_start);
            if !(len > 0.0) {
                return invalid(format!("zero cap reached at position {s} while chopping"));
            }
            if s + len >= total {
                len = total - s;
            }
            while edge + 1 < ch.vertices.len() && all_pos[edge + 1] <= s {
                edge += 1;
                per_edge = 0;
            }
            per_edge += 1;
            if per_edge > CHOP_BUDGET {
                return Err(Error::ChopBudget(ch.vertices[edge]));
            }
            let k = pieces.len();
            let depth = first_depth + (k - begin);
            let parent = if k == begin { head_anchor } else { Some(k - 1) };
            let end = if s + len >= total { total } else { s + len };
            pieces.push(Piece {
                chain: c,
                start: s,
                len,
                cap_start,
                cap_end: interpolated_cap(&all_pos, &ch.caps, end),
                depth,
                parent,
            });
            s = end;
        }
        let end_idx = pieces.len();
        chains[c].pieces = begin..end_idx;

        let ch = &chains[c];
        let mut p = begin;
        for (k, &v) in ch.vertices.iter().enumerate() {
            let pos = ch.positions[k];
            if pos == 0.0 || begin == end_idx {
                vertex_loc[v] = VertexLoc { chain: c, piece: None, offset: 0.0 };
                anchor[v] = head_anchor;
                continue;
            }
            while p + 1 < end_idx && pieces[p].start + pieces[p].len < pos {
                p += 1;
            }
            let offset = (pos - pieces[p].start).clamp(0.0, pieces[p].len);
            vertex_loc[v] = VertexLoc { chain: c, piece: Some(p), offset };
            anchor[v] = Some(p);
        }
    }
    Ok(ChoppedDecomposition { stages, chains, pieces, vertex_loc, anchor })
}

/// Per-piece record from an instrumented run.
#[derive(Clone, Debug, PartialEq)]
pub struct PieceTrace {
    pub stage: usize,
    pub build: bool,
    pub action: Action,
    pub start_norm: f64,
    pub end_norm: f64,
    pub end_zero: bool,
    pub cap_end: f64,
}

fn run_positive(
    d: &ChoppedDecomposition,
    n: usize,
    seed: RngSeed,
    mut trace: Option<&mut Vec<PieceTrace>>,
) -> Vec<Vec<f64>> {
    let st = d.stages;
    let a0 = seed.named("bc-stage").rng().gen_range(0..st.period());
    let hash_seed = seed.named("bc-hash");
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); n];
    if let Some(t) = trace.as_deref_mut() {
        t.reserve(d.pieces.len());
    }

    for ch in &d.chains {
        let mut state = match ch.head {
            None => State::zero(st.h),
            Some(h) => State::from_vals(rows[h].clone()),
        };
        let key = ch.vertices[0] as u64;
        let mut hrng = hash_seed.derive(key).rng();

        // Vertices at the head of the chain share its state.
        let mut vi = 0;
        while vi < ch.vertices.len() && d.vertex_loc[ch.vertices[vi]].piece.is_none() {
            rows[ch.vertices[vi]] = state.vals.clone();
            vi += 1;
        }
        for p in ch.pieces.clone() {
            let piece = &d.pieces[p];
            let a = d.stage(p, a0);
            let build = st.is_build(a);
            let hash = if build { Some(hrng.gen_range(0..st.h)) } else { None };
            let action = Action::resolve(&state, hash, piece.len);
            let start_norm = if trace.is_some() { state.norm() } else { 0.0 };
            while vi < ch.vertices.len() && d.vertex_loc[ch.vertices[vi]].piece == Some(p) {
                let v = ch.vertices[vi];
                rows[v] = action.snapshot(&state, d.vertex_loc[v].offset);
                vi += 1;
            }
            action.finish(&mut state, piece.len);
            if let Some(t) = trace.as_deref_mut() {
                t.push(PieceTrace {
                    stage: a,
                    build,
                    action,
                    start_norm,
                    end_norm: state.norm(),
                    end_zero: state.is_zero(),
                    cap_end: piece.cap_end,
                });
            }
        }
    }
    rows
}

/// Build/clean embedding of a tree with strictly positive Lipschitz caps.
/// Output dimension is `8 l`.
pub fn build_clean_embed_positive(
    tree: &WeightedTree,
    caps: &CapAssignment,
    l: usize,
    seed: RngSeed,
) -> Result<Embedding> {
    let d = chop_decompose(tree, caps, l)?;
    Embedding::new(run_positive(&d, tree.n(), seed, None))
}

/// Same as [`build_clean_embed_positive`], also returning the decomposition
/// and one record per processed piece, in processing order.
pub fn build_clean_traced(
    tree: &WeightedTree,
    caps: &CapAssignment,
    l: usize,
    seed: RngSeed,
) -> Result<(Embedding, ChoppedDecomposition, Vec<PieceTrace>)> {
    let d = chop_decompose(tree, caps, l)?;
    let mut trace = Vec::new();
    let rows = run_positive(&d, tree.n(), seed, Some(&mut trace));
    Ok((Embedding::new(rows)?, d, trace))
}

/// Maximal subtrees of positive-cap vertices, each listed in preorder with
/// its top vertex first.
pub fn positive_components(tree: &WeightedTree, caps: &[f64]) -> Vec<Vec<usize>> {
    let mut comp_of = vec![usize::MAX; tree.n()];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for &v in tree.preorder() {
        if caps[v] <= 0.0 {
            continue;
        }
        match tree.parent(v) {
            Some(p) if caps[p] > 0.0 => {
                comp_of[v] = comp_of[p];
                comps[comp_of[v]].push(v);
            }
            _ => {
                comp_of[v] = comps.len();
                comps.push(vec![v]);
            }
        }
    }
    comps
}

/// Build/clean embedding for nonnegative Lipschitz caps. Zero-cap vertices map
/// to the zero vector; each positive component gets the halved positive
/// embedding plus a coordinate `±M(i)/4` with one random sign per component.
/// Output dimension is `8 l + 1`.
pub fn build_clean_embed_general(
    tree: &WeightedTree,
    caps: &CapAssignment,
    l: usize,
    seed: RngSeed,
) -> Result<Embedding> {
    BuildCleanPlan::new(tree, caps, l)?.embed(seed)
}

/// Seed-independent part of [`build_clean_embed_general`]: the positive
/// components and their chopped decompositions, reusable across copies.
#[derive(Clone, Debug)]
pub struct BuildCleanPlan {
    n: usize,
    h: usize,
    caps: Vec<f64>,
    comps: Vec<(Vec<usize>, ChoppedDecomposition)>,
}

impl BuildCleanPlan {
    pub fn new(tree: &WeightedTree, caps: &CapAssignment, l: usize) -> Result<Self> {
        let m = caps.caps();
        if m.len() != tree.n() {
            return invalid("cap count does not match vertex count");
        }
        CapAssignment::lipschitz_on_tree(m.to_vec(), tree)?;
        let mut comps = Vec::new();
        for comp in positive_components(tree, m) {
            let mut local = std::collections::HashMap::with_capacity(comp.len());
            for (k, &v) in comp.iter().enumerate() {
                local.insert(v, k);
            }
            let edges = comp[1..]
                .iter()
                .map(|&v| (local[&tree.parent(v).unwrap()], local[&v], tree.parent_len(v)))
                .collect();
            let sub = WeightedTree::new(comp.len(), 0, edges)?;
            let sub_caps = CapAssignment::new(comp.iter().map(|&v| m[v]).collect())?;
            let d = chop_decompose(&sub, &sub_caps, l)?;
            comps.push((comp, d));
        }
        Ok(BuildCleanPlan { n: tree.n(), h: StageParams::new(l).h, caps: m.to_vec(), comps })
    }

    pub fn embed(&self, seed: RngSeed) -> Result<Embedding> {
        let h = self.h;
        let mut rows = vec![vec![0.0; h + 1]; self.n];
        for (comp, d) in &self.comps {
            let top = comp[0];
            let emb = run_positive(d, comp.len(), seed.named("bc-comp").derive(top as u64), None);
            let sign = if seed.named("bc-sign").derive(top as u64).rng().gen::<bool>() { 1.0 } else { -1.0 };
            for (k, &v) in comp.iter().enumerate() {
                let row = &mut rows[v];
                for (x, y) in row.iter_mut().zip(&emb[k]) {
                    *x = 0.5 * y;
                }
                row[h] = sign * self.caps[v] / 4.0;
            }
        }
        Embedding::new(rows)
    }
}

/// Build/clean on a line with pieces of exactly `m / (100 l)`, starting
/// `2m` left of the leftmost point. Returns one vector of length `8 l` per
/// location, in input order.
pub fn line_build_clean(locs: &[f64], m: f64, l: usize, seed: RngSeed) -> Result<Vec<Vec<f64>>> {
    if !(m > 0.0) || !m.is_finite() {
        return invalid(format!("cap must be positive, got {m}"));
    }
    if locs.iter().any(|x| !x.is_finite()) {
        return invalid("locations must be finite");
    }
    let st = StageParams::new(l);
    if locs.is_empty() {
        return Ok(Vec::new());
    }
    let sigma = st.piece_len(m);
    let lo = locs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = locs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let r0 = lo - 2.0 * m;
    if ((hi - r0) / sigma) as usize > LINE_PIECE_BUDGET {
        return Err(Error::ChopBudget(0));
    }

    let mut order: Vec<usize> = (0..locs.len()).collect();
    order.sort_by(|&a, &b| locs[a].total_cmp(&locs[b]));
    let a0 = seed.named("bc-stage").rng().gen_range(0..st.period());
    let mut hrng = seed.named("bc-hash").rng();
    let mut state = State::zero(st.h);
    let mut out = vec![Vec::new(); locs.len()];
    let mut next = 0;
    let mut piece = 0usize;
    while next < order.len() {
        let start = r0 + piece as f64 * sigma;
        let a = (a0 + piece) % st.period();
        let hash = if st.is_build(a) { Some(hrng.gen_range(0..st.h)) } else { None };
        let action = Action::resolve(&state, hash, sigma);
        while next < order.len() {
            let x = locs[order[next]];
            let off = x - start;
            if off >= sigma {
                break;
            }
            out[order[next]] = action.snapshot(&state, off.clamp(0.0, sigma));
            next += 1;
        }
        action.finish(&mut state, sigma);
        piece += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_edge_is_one_piece() {
        let l = 1;
        let t = WeightedTree::path(&[1.0 / 200.0]).unwrap();
        let caps = CapAssignment::new(vec![1.0, 1.0]).unwrap();
        let d = chop_decompose(&t, &caps, l).unwrap();
        // r0 lead of length 2 at cap 1 gives 200 pieces, then the original edge.
        let ch = &d.chains[0];
        assert_eq!(ch.pieces.len(), 201);
        assert_eq!(d.vertex_loc[1].piece, Some(200));
    }

    #[test]
    fn constant_cap_chops_into_bound() {
        let l = 2;
        let t = WeightedTree::path(&[0.5]).unwrap();
        let caps = CapAssignment::new(vec![1.0, 1.0]).unwrap();
        let d = chop_decompose(&t, &caps, l).unwrap();
        let on_edge: Vec<_> = d.pieces.iter().filter(|p| p.start >= 2.0 - 1e-12).collect();
        assert!(on_edge.len() >= 100);
        assert!(on_edge.iter().all(|p| p.len <= 1.0 / 200.0 + 1e-15));
    }

    #[test]
    fn zero_cap_rejected() {
        let t = WeightedTree::path(&[1.0]).unwrap();
        let caps = CapAssignment::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(chop_decompose(&t, &caps, 1), Err(Error::NonPositiveCap { .. })));
    }

    #[test]
    fn general_with_zero_caps() {
        let t = WeightedTree::path(&[1.0, 1.0]).unwrap();
        let caps = CapAssignment::new(vec![0.0, 0.0, 1.0]).unwrap();
        let e = build_clean_embed_general(&t, &caps, 2, RngSeed::new(3)).unwrap();
        assert_eq!(e.dim(), 17);
        assert!(e.rows()[0].iter().all(|x| *x == 0.0));
        assert!(e.rows()[1].iter().all(|x| *x == 0.0));
        assert_eq!(e.rows()[2][16].abs(), 0.25);
    }

    #[test]
    fn line_values_are_two_level() {
        let locs = [0.0, 0.013, 0.5, 0.77, 3.0];
        let v = line_build_clean(&locs, 1.0, 2, RngSeed::new(5)).unwrap();
        let sigma = 1.0 / 200.0;
        for row in &v {
            assert_eq!(row.len(), 16);
            let frac = row.iter().filter(|&&x| x != 0.0 && x != sigma).count();
            assert!(frac <= 1);
        }
    }
}
