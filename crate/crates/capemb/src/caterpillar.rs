//! Caterpillar (heavy-light) decomposition and the fixed-cap tree embedder.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::metric::{log_scale, Embedding, WeightedTree};
use crate::rng::RngSeed;
use crate::snake::lazy_snake_fixed;

/// A vertical path `head, v1, v2, ...`; its edges join consecutive vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub vertices: Vec<usize>,
    /// Distance of each vertex below the head.
    pub positions: Vec<f64>,
}

impl Chain {
    pub fn head(&self) -> usize {
        self.vertices[0]
    }
    pub fn length(&self) -> f64 {
        *self.positions.last().unwrap()
    }
    pub fn edge_count(&self) -> usize {
        self.vertices.len() - 1
    }
}

#[derive(Clone, Debug)]
pub struct CaterpillarDecomposition {
    /// Chains in creation order; every chain appears after the chain holding its head.
    pub chains: Vec<Chain>,
    /// Chain containing the edge from `v` to its parent (`None` for the root).
    pub chain_of: Vec<Option<usize>>,
    /// Index of `v` inside `chains[chain_of[v]].vertices`.
    pub index_in_chain: Vec<usize>,
}

impl CaterpillarDecomposition {
    /// Distinct chains crossed on the path from the root to `v`.
    pub fn chains_to_root(&self, tree: &WeightedTree, v: usize) -> usize {
        let mut count = 0;
        let mut cur = v;
        while let Some(c) = self.chain_of[cur] {
            count += 1;
            cur = self.chains[c].head();
        }
        debug_assert_eq!(cur, tree.root());
        count
    }
}

/// Heavy child of every vertex: largest subtree, ties to the lowest id.
pub fn heavy_children(tree: &WeightedTree) -> Vec<Option<usize>> {
    let n = tree.n();
    let mut size = vec![1usize; n];
    for &v in tree.preorder().iter().rev() {
        if let Some(p) = tree.parent(v) {
            size[p] += size[v];
        }
    }
    (0..n)
        .map(|u| {
            let mut best: Option<usize> = None;
            for &c in tree.children(u) {
                best = match best {
                    Some(b) if size[b] > size[c] || (size[b] == size[c] && b < c) => Some(b),
                    _ => Some(c),
                };
            }
            best
        })
        .collect()
}

pub fn decompose(tree: &WeightedTree) -> CaterpillarDecomposition {
    let n = tree.n();
    let heavy = heavy_children(tree);
    let mut chains = Vec::new();
    let mut chain_of = vec![None; n];
    let mut index_in_chain = vec![0; n];

    let mut grow = |head: usize, first: usize, chains: &mut Vec<Chain>| {
        let id = chains.len();
        let mut vertices = vec![head];
        let mut positions = vec![0.0];
        let mut cur = Some(first);
        while let Some(v) = cur {
            positions.push(positions.last().unwrap() + tree.parent_len(v));
            index_in_chain[v] = vertices.len();
            vertices.push(v);
            chain_of[v] = Some(id);
            cur = heavy[v];
        }
        chains.push(Chain { vertices, positions });
    };

    let root = tree.root();
    if let Some(h) = heavy[root] {
        grow(root, h, &mut chains);
    }
    for &u in tree.preorder() {
        for &c in tree.children(u) {
            if Some(c) != heavy[u] {
                grow(u, c, &mut chains);
            }
        }
    }
    CaterpillarDecomposition { chains, chain_of, index_in_chain }
}

/// Sparse vectors of snippet overlaps, one per vertex.
#[derive(Clone, Debug)]
pub struct SnippedEmbedding {
    pub snippet_size: f64,
    pub snippet_count: usize,
    /// Per vertex, `(snippet index, overlap length)` sorted by index.
    pub vectors: Vec<Vec<(usize, f64)>>,
}

impl SnippedEmbedding {
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        sparse_l1(&self.vectors[i], &self.vectors[j])
    }

    /// Nonzero entries of the difference vector of `i` and `j`.
    pub fn difference(&self, i: usize, j: usize) -> Vec<(usize, f64)> {
        let (a, b) = (&self.vectors[i], &self.vectors[j]);
        let (mut p, mut q) = (0, 0);
        let mut out = Vec::new();
        while p < a.len() || q < b.len() {
            let (k, x) = if q == b.len() || (p < a.len() && a[p].0 < b[q].0) {
                p += 1;
                (a[p - 1].0, a[p - 1].1)
            } else if p == a.len() || b[q].0 < a[p].0 {
                q += 1;
                (b[q - 1].0, -b[q - 1].1)
            } else {
                p += 1;
                q += 1;
                (a[p - 1].0, a[p - 1].1 - b[q - 1].1)
            };
            if x != 0.0 {
                out.push((k, x.abs()));
            }
        }
        out
    }
}

fn sparse_l1(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut p, mut q, mut s) = (0, 0, 0.0);
    while p < a.len() && q < b.len() {
        if a[p].0 < b[q].0 {
            s += a[p].1.abs();
            p += 1;
        } else if b[q].0 < a[p].0 {
            s += b[q].1.abs();
            q += 1;
        } else {
            s += (a[p].1 - b[q].1).abs();
            p += 1;
            q += 1;
        }
    }
    s + a[p..].iter().map(|x| x.1.abs()).sum::<f64>() + b[q..].iter().map(|x| x.1.abs()).sum::<f64>()
}

/// Cut every caterpillar into snippets of `m / log n`, the partial one on top.
pub fn snip_embed(tree: &WeightedTree, decomp: &CaterpillarDecomposition, m: f64) -> Result<SnippedEmbedding> {
    if !(m > 0.0) || !m.is_finite() {
        return invalid(format!("cap must be positive, got {m}"));
    }
    let sigma = m / log_scale(tree.n()) as f64;

    // Snippet boundaries of each chain, top to bottom.
    let mut offsets = Vec::with_capacity(decomp.chains.len());
    let mut bounds: Vec<Vec<f64>> = Vec::with_capacity(decomp.chains.len());
    let mut count = 0;
    for ch in &decomp.chains {
        let t = ch.length();
        let mut b = vec![t];
        let mut x = t - sigma;
        while x > 0.0 {
            b.push(x);
            x -= sigma;
        }
        if t > 0.0 {
            b.push(0.0);
        }
        b.reverse();
        offsets.push(count);
        count += b.len() - 1;
        bounds.push(b);
    }

    let mut vectors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); tree.n()];
    for &v in tree.preorder() {
        let Some(c) = decomp.chain_of[v] else { continue };
        let ch = &decomp.chains[c];
        let p = ch.positions[decomp.index_in_chain[v]];
        let mut vec = vectors[ch.head()].clone();
        let b = &bounds[c];
        for k in 0..b.len() - 1 {
            if p <= b[k] {
                break;
            }
            let overlap = p.min(b[k + 1]) - b[k];
            if overlap > 0.0 {
                vec.push((offsets[c] + k, overlap));
            }
        }
        vectors[v] = vec;
    }
    // Chains are numbered after their ancestors, so pushes stay sorted.
    Ok(SnippedEmbedding { snippet_size: sigma, snippet_count: count, vectors })
}

/// Number of buckets `6 log n`.
pub fn bucket_count(n: usize) -> usize {
    6 * log_scale(n)
}

/// One copy of the fixed-cap tree embedding: snip, hash snippets into
/// `6 log n` buckets, and snake each bucket with cap `m / log n`.
pub fn fixed_cap_tree_embed(tree: &WeightedTree, m: f64, seed: RngSeed) -> Result<Embedding> {
    let decomp = decompose(tree);
    let snipped = snip_embed(tree, &decomp, m)?;
    let k = bucket_count(tree.n());
    let mut hrng = seed.named("hash").rng();
    let hash: Vec<usize> = (0..snipped.snippet_count).map(|_| hrng.gen_range(0..k)).collect();

    let n = tree.n();
    let mut locs = vec![vec![0.0; n]; k];
    for (i, v) in snipped.vectors.iter().enumerate() {
        for &(q, x) in v {
            locs[hash[q]][i] += x;
        }
    }
    let cap = m / log_scale(n) as f64;
    let snake = seed.named("snake");
    let mut rows = vec![vec![0.0; k]; n];
    for (p, loc) in locs.iter().enumerate() {
        let vals = lazy_snake_fixed(loc, cap, snake.derive(p as u64))?;
        for (row, x) in rows.iter_mut().zip(vals) {
            row[p] = x;
        }
    }
    Embedding::new(rows)
}
