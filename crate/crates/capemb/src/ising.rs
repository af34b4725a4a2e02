//! Tree Ising models: exact pairwise oracles, sampling, the Bernoulli
//! randomness calculus and the two model embedders.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::build_clean::BuildCleanPlan;
use crate::caterpillar::fixed_cap_tree_embed;
use crate::error::{invalid, Error, Result};
use crate::metric::{log_scale, tree_distance, CapAssignment, Embedding, PointSet, WeightedTree};
use crate::rng::RngSeed;
use crate::snake::boost_average;

/// `channel[a][b] = Pr[child = b | parent = a]`.
pub type Channel = [[f64; 2]; 2];

/// `joint[a][b] = Pr[X_i = a, X_j = b]`.
pub type PairJoint = [[f64; 2]; 2];

const ROW_TOL: f64 = 1e-12;

pub fn theta_from_beta(beta: f64) -> f64 {
    let t = 1.0 / (1.0 + (2.0 * beta).exp());
    t.max(f64::MIN_POSITIVE)
}

pub fn flip_channel(theta: f64) -> Channel {
    [[1.0 - theta, theta], [theta, 1.0 - theta]]
}

#[derive(Clone, Debug)]
pub struct SymmetricTim {
    tree: WeightedTree,
    theta: Vec<f64>,
}

impl SymmetricTim {
    /// `theta[k]` is the flip probability of `tree.edges()[k]`.
    pub fn new(tree: WeightedTree, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != tree.edges().len() {
            return invalid("theta count does not match edge count");
        }
        if theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return invalid("flip probabilities must lie in [0, 1]");
        }
        Ok(SymmetricTim { tree, theta })
    }
    pub fn tree(&self) -> &WeightedTree {
        &self.tree
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn disagreement(&self, i: usize, j: usize) -> f64 {
        let prod: f64 = self
            .tree
            .path_edges(i, j)
            .into_iter()
            .map(|k| 1.0 - 2.0 * self.theta[k])
            .product();
        (1.0 - prod) / 2.0
    }

    /// Same law as a rooted Bayesian network with an unbiased root.
    pub fn to_general(&self) -> GeneralTim {
        let channels = (0..self.n())
            .map(|v| match self.tree.parent_edge(v) {
                Some(k) => flip_channel(self.theta[k]),
                None => [[1.0, 0.0], [0.0, 1.0]],
            })
            .collect();
        GeneralTim { tree: self.tree.clone(), root_p0: 0.5, channels }
    }

    pub fn sample(&self, seed: RngSeed) -> Vec<u8> {
        let mut rng = seed.rng();
        let mut x = vec![0u8; self.n()];
        for &v in self.tree.preorder() {
            x[v] = match (self.tree.parent(v), self.tree.parent_edge(v)) {
                (Some(p), Some(k)) => x[p] ^ u8::from(rng.gen::<f64>() < self.theta[k]),
                _ => u8::from(rng.gen::<bool>()),
            };
        }
        x
    }
}

#[derive(Clone, Debug)]
pub struct GeneralTim {
    tree: WeightedTree,
    root_p0: f64,
    /// Indexed by child vertex; the root's entry is the identity and unused.
    channels: Vec<Channel>,
}

impl GeneralTim {
    pub fn new(tree: WeightedTree, root_p0: f64, channels: Vec<Channel>) -> Result<Self> {
        if !(0.0..=1.0).contains(&root_p0) {
            return invalid("root marginal must lie in [0, 1]");
        }
        if channels.len() != tree.n() {
            return invalid("need one channel per vertex (root entry ignored)");
        }
        for (v, c) in channels.iter().enumerate() {
            if v == tree.root() {
                continue;
            }
            for row in c {
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row[0] + row[1] - 1.0).abs() > ROW_TOL {
                    return invalid(format!("channel into vertex {v} is not row-stochastic"));
                }
            }
        }
        Ok(GeneralTim { tree, root_p0, channels })
    }
    pub fn tree(&self) -> &WeightedTree {
        &self.tree
    }
    pub fn n(&self) -> usize {
        self.tree.n()
    }
    pub fn root_p0(&self) -> f64 {
        self.root_p0
    }
    pub fn channel(&self, v: usize) -> &Channel {
        &self.channels[v]
    }

    /// `Pr[X_v = 0]` for every vertex.
    pub fn marginals0(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n()];
        for &v in self.tree.preorder() {
            m[v] = match self.tree.parent(v) {
                None => self.root_p0,
                Some(p) => {
                    let c = &self.channels[v];
                    m[p] * c[0][0] + (1.0 - m[p]) * c[1][0]
                }
            };
        }
        m
    }

    /// `Pr[X_v | X_a]` for an ancestor `a` of `v`.
    fn conditional(&self, a: usize, v: usize) -> Channel {
        let mut chain = Vec::new();
        let mut cur = v;
        while cur != a {
            chain.push(cur);
            cur = self.tree.parent(cur).expect("not an ancestor");
        }
        let mut acc: Channel = [[1.0, 0.0], [0.0, 1.0]];
        for &w in chain.iter().rev() {
            acc = matmul(&acc, &self.channels[w]);
        }
        acc
    }

    pub fn pair_joint(&self, i: usize, j: usize) -> Result<PairJoint> {
        self.pair_joint_with(&self.marginals0(), i, j)
    }

    /// Like [`pair_joint`](Self::pair_joint) with precomputed marginals.
    pub fn pair_joint_with(&self, m0: &[f64], i: usize, j: usize) -> Result<PairJoint> {
        for v in [i, j] {
            if v >= self.n() {
                return Err(Error::VertexOutOfRange { vertex: v, n: self.n() });
            }
        }
        let a = self.tree.lca(i, j);
        let ca = self.conditional(a, i);
        let cb = self.conditional(a, j);
        let ma = [m0[a], 1.0 - m0[a]];
        let mut out = [[0.0; 2]; 2];
        for x in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    out[p][q] += ma[x] * ca[x][p] * cb[x][q];
                }
            }
        }
        Ok(out)
    }

    pub fn disagreement(&self, i: usize, j: usize) -> Result<f64> {
        let p = self.pair_joint(i, j)?;
        Ok(p[0][1] + p[1][0])
    }

    /// Joint of an edge, parent first.
    pub fn edge_joint(&self, m0: &[f64], child: usize) -> PairJoint {
        let p = self.tree.parent(child).expect("root has no edge");
        let c = &self.channels[child];
        let mp = [m0[p], 1.0 - m0[p]];
        [[mp[0] * c[0][0], mp[0] * c[0][1]], [mp[1] * c[1][0], mp[1] * c[1][1]]]
    }

    pub fn sample(&self, seed: RngSeed) -> Vec<u8> {
        let mut rng = seed.rng();
        let mut x = vec![0u8; self.n()];
        for &v in self.tree.preorder() {
            let p0 = match self.tree.parent(v) {
                None => self.root_p0,
                Some(p) => self.channels[v][x[p] as usize][0],
            };
            x[v] = u8::from(rng.gen::<f64>() >= p0);
        }
        x
    }
}

fn matmul(a: &Channel, b: &Channel) -> Channel {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Flip bad edges (`theta > 1/2`) to `1 - theta`; returns the new model and
/// the parity of bad edges on each root path.
pub fn reduce_bad_edges(model: &SymmetricTim) -> (SymmetricTim, Vec<u8>) {
    let tree = model.tree();
    let theta: Vec<f64> = model.theta.iter().map(|&t| t.min(1.0 - t)).collect();
    let mut parity = vec![0u8; tree.n()];
    for &v in tree.preorder() {
        if let (Some(p), Some(k)) = (tree.parent(v), tree.parent_edge(v)) {
            parity[v] = parity[p] ^ u8::from(model.theta[k] > 0.5);
        }
    }
    (SymmetricTim { tree: tree.clone(), theta }, parity)
}

/// Tree with edge lengths equal to the flip probabilities.
pub fn theta_tree(model: &SymmetricTim) -> Result<WeightedTree> {
    model.tree().with_lengths(model.theta())
}

/// `min(sum of theta on the path, 1/2)` on a model without bad edges.
pub fn dcap_half(reduced: &SymmetricTim, i: usize, j: usize) -> Result<f64> {
    let t = theta_tree(reduced)?;
    Ok(tree_distance(&t, i, j)?.min(0.5))
}

/// Boosted fixed-cap embedding of the reduced model with cap 1/2, plus the
/// bad-edge parity as a final coordinate.
pub fn symmetric_tim_embed(model: &SymmetricTim, copies: usize, seed: RngSeed) -> Result<Embedding> {
    let (reduced, parity) = reduce_bad_edges(model);
    let tree = theta_tree(&reduced)?;
    let base = boost_average(copies, seed.named("sym-tree"), |s| fixed_cap_tree_embed(&tree, 0.5, s))?;
    let par = Embedding::new(parity.iter().map(|&p| vec![f64::from(p)]).collect())?;
    Embedding::hstack(&[base, par])
}

pub fn bernoulli_randomness(p0: f64) -> f64 {
    2.0 * p0.min(1.0 - p0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `Br(X | Y)`, `X` the first index of the joint.
    XGivenY,
    /// `Br(Y | X)`.
    YGivenX,
}

pub fn cond_bernoulli_randomness(j: &PairJoint, dir: Direction) -> f64 {
    match dir {
        Direction::XGivenY => (0..2).map(|y| 2.0 * j[0][y].min(j[1][y])).sum(),
        Direction::YGivenX => (0..2).map(|x| 2.0 * j[x][0].min(j[x][1])).sum(),
    }
}

/// Strictly more than half the mass off the diagonal.
pub fn is_cross(j: &PairJoint) -> bool {
    j[0][1] + j[1][0] > 0.5
}

pub fn bias(p0: f64) -> f64 {
    p0.min(1.0 - p0)
}

pub fn forced_randomness(j: &PairJoint) -> f64 {
    cond_bernoulli_randomness(j, Direction::XGivenY).max(cond_bernoulli_randomness(j, Direction::YGivenX))
}

/// Per-vertex and per-edge quantities the general embedding is built from.
#[derive(Clone, Debug)]
pub struct BiasData {
    pub marginal0: Vec<f64>,
    pub bias: Vec<f64>,
    /// Forced randomness of the edge into each vertex (0 at the root).
    pub forced: Vec<f64>,
    /// Parity of crosses on the root path.
    pub cross_parity: Vec<u8>,
}

pub fn bias_data(model: &GeneralTim) -> BiasData {
    let tree = model.tree();
    let m0 = model.marginals0();
    let bias_v = m0.iter().map(|&p| bias(p)).collect();
    let mut forced = vec![0.0; tree.n()];
    let mut parity = vec![0u8; tree.n()];
    for &v in tree.preorder() {
        if let Some(p) = tree.parent(v) {
            let j = model.edge_joint(&m0, v);
            forced[v] = forced_randomness(&j);
            parity[v] = parity[p] ^ u8::from(is_cross(&j));
        }
    }
    BiasData { marginal0: m0, bias: bias_v, forced, cross_parity: parity }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreePart {
    pub marg: f64,
    pub forced: f64,
    pub negcor: f64,
}

impl ThreePart {
    pub fn sum(&self) -> f64 {
        self.marg + self.forced + self.negcor
    }
}

pub fn three_part_metrics(model: &GeneralTim, data: &BiasData, i: usize, j: usize) -> ThreePart {
    let tree = model.tree();
    let (bi, bj) = (data.bias[i], data.bias[j]);
    let f_sum: f64 = tree
        .path_edges(i, j)
        .into_iter()
        .map(|k| {
            let (u, v, _) = tree.edges()[k];
            let child = if tree.parent(v) == Some(u) { v } else { u };
            data.forced[child]
        })
        .sum();
    let odd = data.cross_parity[i] != data.cross_parity[j];
    ThreePart {
        marg: (data.marginal0[i] - data.marginal0[j]).abs(),
        forced: f_sum.min(bi.max(bj)),
        negcor: if odd { bi.max(bj) } else { (bi - bj).abs() },
    }
}

/// The tree reweighted by forced randomness, with the biases as caps.
pub fn forced_tree(model: &GeneralTim, data: &BiasData) -> Result<(WeightedTree, CapAssignment)> {
    let tree = model.tree();
    let lengths: Vec<f64> = tree
        .edges()
        .iter()
        .map(|&(u, v, _)| data.forced[if tree.parent(v) == Some(u) { v } else { u }])
        .collect();
    let ftree = tree.with_lengths(&lengths)?;
    let caps = CapAssignment::lipschitz_on_tree(data.bias.clone(), &ftree)?;
    Ok((ftree, caps))
}

/// The two leading columns `[Pr[X=0], ±b]`.
pub fn general_head(data: &BiasData) -> Result<Embedding> {
    Embedding::new(
        (0..data.bias.len())
            .map(|v| {
                let s = if data.cross_parity[v] == 1 { -1.0 } else { 1.0 };
                vec![data.marginal0[v], s * data.bias[v]]
            })
            .collect(),
    )
}

/// `[Pr[X=0]] ++ [±b] ++ boosted build/clean on (forced randomness, bias)`.
pub fn general_tim_embed(model: &GeneralTim, copies: usize, seed: RngSeed) -> Result<Embedding> {
    let data = bias_data(model);
    let (ftree, caps) = forced_tree(model, &data)?;
    let l = log_scale(ftree.n());
    let plan = BuildCleanPlan::new(&ftree, &caps, l)?;
    let bc = boost_average(copies, seed.named("gen-bc"), |s| plan.embed(s))?;
    Embedding::hstack(&[general_head(&data)?, bc])
}

/// Threshold sampler whose disagreement equals normalized ℓ1 distance.
pub fn l1_to_distribution_sampler(points: &PointSet, seed: RngSeed) -> Result<Vec<u8>> {
    if points.points().iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
        return invalid("coordinates must lie in [0, 1]");
    }
    let mut rng = seed.rng();
    let k = rng.gen_range(0..points.dim());
    let p: f64 = rng.gen();
    Ok(points.points().iter().map(|x| u8::from(x[k] <= p)).collect())
}

#[derive(Serialize, Deserialize)]
struct GeneralEdgeJson {
    parent: usize,
    child: usize,
    channel: Channel,
}

#[derive(Serialize, Deserialize)]
struct GeneralJson {
    n: usize,
    root: usize,
    root_marginal_p0: f64,
    edges: Vec<GeneralEdgeJson>,
}

#[derive(Serialize, Deserialize)]
struct SymEdgeJson {
    u: usize,
    v: usize,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct SymJson {
    n: usize,
    edges: Vec<SymEdgeJson>,
}

impl GeneralTim {
    pub fn to_json(&self) -> Result<String> {
        let edges = self
            .tree
            .preorder()
            .iter()
            .filter_map(|&v| {
                self.tree.parent(v).map(|p| GeneralEdgeJson { parent: p, child: v, channel: self.channels[v] })
            })
            .collect();
        let j = GeneralJson { n: self.n(), root: self.tree.root(), root_marginal_p0: self.root_p0, edges };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: GeneralJson = serde_json::from_str(s)?;
        let edges = j.edges.iter().map(|e| (e.parent, e.child, 1.0)).collect();
        let tree = WeightedTree::new(j.n, j.root, edges)?;
        let mut channels = vec![[[1.0, 0.0], [0.0, 1.0]]; j.n];
        for e in &j.edges {
            if tree.parent(e.child) != Some(e.parent) {
                return invalid(format!("edge {} -> {} is not directed away from the root", e.parent, e.child));
            }
            channels[e.child] = e.channel;
        }
        GeneralTim::new(tree, j.root_marginal_p0, channels)
    }
}

impl SymmetricTim {
    pub fn to_json(&self) -> Result<String> {
        let edges = self
            .tree
            .edges()
            .iter()
            .zip(&self.theta)
            .map(|(&(u, v, _), &theta)| SymEdgeJson { u, v, theta })
            .collect();
        Ok(serde_json::to_string_pretty(&SymJson { n: self.n(), edges })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: SymJson = serde_json::from_str(s)?;
        let tree = WeightedTree::new(j.n, 0, j.edges.iter().map(|e| (e.u, e.v, 1.0)).collect())?;
        SymmetricTim::new(tree, j.edges.iter().map(|e| e.theta).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_of_beta() {
        assert_eq!(theta_from_beta(0.0), 0.5);
        assert!(theta_from_beta(1e6) > 0.0 && theta_from_beta(1e6) < 1e-300);
        for b in [-3.0, -0.2, 0.7, 2.5] {
            assert!((theta_from_beta(b) + theta_from_beta(-b) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn worked_example_br() {
        let j = [[0.1, 0.2], [0.2, 0.5]];
        assert!((cond_bernoulli_randomness(&j, Direction::XGivenY) - 0.6).abs() < 1e-15);
        assert!((cond_bernoulli_randomness(&j, Direction::YGivenX) - 0.6).abs() < 1e-15);
        assert!((bernoulli_randomness(0.3) - 0.6).abs() < 1e-15);
        assert_eq!(bernoulli_randomness(0.5), 1.0);
    }

    #[test]
    fn crosses() {
        let anti = [[0.0, 0.5], [0.5, 0.0]];
        assert!(is_cross(&anti));
        assert_eq!(forced_randomness(&anti), 0.0);
        let ident = [[0.5, 0.0], [0.0, 0.5]];
        assert!(!is_cross(&ident));
        assert_eq!(forced_randomness(&ident), 0.0);
        let tie = [[0.25, 0.25], [0.25, 0.25]];
        assert!(!is_cross(&tie));
    }

    #[test]
    fn path_disagreement() {
        let t = WeightedTree::path(&[1.0, 1.0]).unwrap();
        let m = SymmetricTim::new(t, vec![0.1, 0.2]).unwrap();
        assert!((m.disagreement(0, 2) - 0.26).abs() < 1e-15);
        assert!((m.to_general().disagreement(0, 2).unwrap() - 0.26).abs() < 1e-15);
        assert_eq!(m.disagreement(1, 1), 0.0);
        assert!((m.disagreement(0, 1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn identity_pair_is_diagonal() {
        let t = WeightedTree::path(&[1.0]).unwrap();
        let g = GeneralTim::new(t, 0.3, vec![[[1.0, 0.0], [0.0, 1.0]], [[0.6, 0.4], [0.1, 0.9]]]).unwrap();
        let j = g.pair_joint(1, 1).unwrap();
        let m = g.marginals0()[1];
        assert!((j[0][0] - m).abs() < 1e-15 && (j[1][1] - (1.0 - m)).abs() < 1e-15);
        assert_eq!(j[0][1], 0.0);
    }

    #[test]
    fn one_bad_edge() {
        let t = WeightedTree::path(&[1.0]).unwrap();
        let m = SymmetricTim::new(t, vec![0.9]).unwrap();
        let (r, par) = reduce_bad_edges(&m);
        assert!((r.theta()[0] - 0.1).abs() < 1e-15);
        assert_ne!(par[0], par[1]);
        assert!(m.disagreement(0, 1) >= 0.5);
    }

    #[test]
    fn json_roundtrip() {
        let t = WeightedTree::new(3, 0, vec![(0, 1, 1.0), (0, 2, 1.0)]).unwrap();
        let g = GeneralTim::new(t.clone(), 0.3, vec![[[1.0, 0.0], [0.0, 1.0]], [[0.6, 0.4], [0.1, 0.9]], [[0.5, 0.5], [0.2, 0.8]]])
            .unwrap();
        let g2 = GeneralTim::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(g.disagreement(1, 2).unwrap(), g2.disagreement(1, 2).unwrap());
        let s = SymmetricTim::new(t, vec![0.2, 0.7]).unwrap();
        let s2 = SymmetricTim::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s.theta(), s2.theta());
    }
}
