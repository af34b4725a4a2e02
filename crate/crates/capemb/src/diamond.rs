//! The recursive diamond Bayesian network.
//!
//! Level 0 has two D-nodes, all-zeros (always 0) and all-ones (always 1).
//! Going up a level doubles every Hamming coordinate and splits every edge
//! `(u, v)` into two new D-nodes `x < y` driven by a fair switch `X`:
//! `X = 0` copies `D_u` to `D_x` and `D_v` to `D_y`, `X = 1` swaps them.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::rng::RngSeed;

pub const MAX_LEVEL: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Split {
    pub u: usize,
    pub v: usize,
    pub x: usize,
    pub y: usize,
    pub switch: usize,
    pub level: usize,
}

#[derive(Clone, Debug)]
pub struct DiamondNet {
    level: usize,
    /// Hamming bits of every D-node, length `2^level`.
    bits: Vec<Vec<u8>>,
    splits: Vec<Split>,
    /// Edges of the final level, each with `u < v` lexicographically.
    edges: Vec<(usize, usize)>,
}

pub fn d_count(level: usize) -> usize {
    (2 * 4usize.pow(level as u32) + 4) / 3
}

pub fn x_count(level: usize) -> usize {
    (4usize.pow(level as u32) - 1) / 3
}

pub fn gen_diamond(level: usize) -> Result<DiamondNet> {
    if level > MAX_LEVEL {
        return invalid(format!("diamond level {level} exceeds {MAX_LEVEL}"));
    }
    let mut bits: Vec<Vec<u8>> = vec![vec![0], vec![1]];
    let mut edges = vec![(0usize, 1usize)];
    let mut splits = Vec::new();
    for lv in 1..=level {
        for b in bits.iter_mut() {
            *b = b.iter().flat_map(|&x| [x, x]).collect();
        }
        edges.sort_by(|a, b| (&bits[a.0], &bits[a.1]).cmp(&(&bits[b.0], &bits[b.1])));
        let mut next = Vec::with_capacity(4 * edges.len());
        for &(u, v) in &edges {
            let diff: Vec<usize> = (0..bits[u].len()).filter(|&k| bits[u][k] != bits[v][k]).collect();
            debug_assert_eq!(diff.len(), 2);
            let mut a = bits[u].clone();
            a[diff[0]] = bits[v][diff[0]];
            let mut b = bits[u].clone();
            b[diff[1]] = bits[v][diff[1]];
            let (xa, ya) = if a < b { (a, b) } else { (b, a) };
            let x = bits.len();
            bits.push(xa);
            let y = bits.len();
            bits.push(ya);
            splits.push(Split { u, v, x, y, switch: splits.len(), level: lv });
            for e in [(u, x), (x, v), (u, y), (y, v)] {
                next.push(if bits[e.0] < bits[e.1] { e } else { (e.1, e.0) });
            }
        }
        edges = next;
    }
    Ok(DiamondNet { level, bits, splits, edges })
}

impl DiamondNet {
    pub fn level(&self) -> usize {
        self.level
    }
    pub fn d_nodes(&self) -> usize {
        self.bits.len()
    }
    pub fn x_nodes(&self) -> usize {
        self.splits.len()
    }
    pub fn splits(&self) -> &[Split] {
        &self.splits
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    pub fn bits(&self, i: usize) -> &[u8] {
        &self.bits[i]
    }

    /// Normalized Hamming coordinates of node `i`.
    pub fn hamming_vector(&self, i: usize) -> Vec<f64> {
        self.bits[i].iter().map(|&b| f64::from(b)).collect()
    }

    /// Fraction of differing coordinates.
    pub fn hamming(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.bits[i], &self.bits[j]);
        a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
    }

    /// Draw every switch, then resolve the D-nodes in creation order.
    /// Returns `(d, x)`.
    pub fn sample(&self, seed: RngSeed) -> (Vec<u8>, Vec<u8>) {
        let mut rng = seed.rng();
        let x: Vec<u8> = (0..self.splits.len()).map(|_| u8::from(rng.gen::<bool>())).collect();
        let mut d = vec![0u8; self.bits.len()];
        d[1] = 1;
        for s in &self.splits {
            let (a, b) = if x[s.switch] == 0 { (d[s.u], d[s.v]) } else { (d[s.v], d[s.u]) };
            d[s.x] = a;
            d[s.y] = b;
        }
        (d, x)
    }

    /// Exact `Pr[D_i != D_j]` for all pairs, by conditioning on the newest
    /// node's switch, which is independent of everything older than it.
    pub fn exact_disagreement(&self) -> Vec<Vec<f64>> {
        let n = self.bits.len();
        let mut p = vec![vec![0.0; n]; n];
        p[0][1] = 1.0;
        p[1][0] = 1.0;
        for s in &self.splits {
            for (node, sib) in [(s.x, s.y), (s.y, s.x)] {
                for b in 0..node {
                    let val = if b == sib { p[s.u][s.v] } else { 0.5 * (p[s.u][b] + p[s.v][b]) };
                    p[node][b] = val;
                    p[b][node] = val;
                }
            }
        }
        p
    }
}
