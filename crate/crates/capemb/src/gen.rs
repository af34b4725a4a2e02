//! Random instance generators.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::ising::{flip_channel, GeneralTim, SymmetricTim};
use crate::metric::{CapAssignment, LineMetric, PointSet, WeightedTree};
use crate::rng::RngSeed;

/// Random attachment tree: vertex `i` hangs below a uniform earlier vertex,
/// edge lengths uniform in `[0, max_weight]`.
pub fn gen_random_tree(n: usize, max_weight: f64, seed: RngSeed) -> Result<WeightedTree> {
    if n < 2 {
        return invalid("random trees need n >= 2");
    }
    if !(max_weight >= 0.0) || !max_weight.is_finite() {
        return invalid("max weight must be finite and nonnegative");
    }
    let mut rng = seed.rng();
    let edges = (1..n).map(|i| (rng.gen_range(0..i), i, rng.gen::<f64>() * max_weight)).collect();
    WeightedTree::new(n, 0, edges)
}

/// Lipschitz caps by a random walk down the tree: root cap uniform in
/// `[root_lo, root_hi]`, each child the parent's cap plus a uniform step in
/// `[-len, len]`, clamped below at `floor`.
pub fn gen_lipschitz_caps(
    tree: &WeightedTree,
    root_lo: f64,
    root_hi: f64,
    floor: f64,
    seed: RngSeed,
) -> Result<CapAssignment> {
    if !(0.0 <= floor && floor <= root_lo && root_lo <= root_hi) {
        return invalid("need 0 <= floor <= root_lo <= root_hi");
    }
    let mut rng = seed.rng();
    let mut caps = vec![0.0; tree.n()];
    for &v in tree.preorder() {
        caps[v] = match tree.parent(v) {
            None => rng.gen_range(root_lo..=root_hi),
            Some(p) => {
                let len = tree.parent_len(v);
                (caps[p] + (2.0 * rng.gen::<f64>() - 1.0) * len).max(floor)
            }
        };
    }
    CapAssignment::lipschitz_on_tree(caps, tree)
}

/// Random line with gaps uniform in `[0, max_gap]`.
pub fn gen_line(n: usize, max_gap: f64, seed: RngSeed) -> Result<LineMetric> {
    let mut rng = seed.rng();
    let gaps: Vec<f64> = (1..n.max(1)).map(|_| rng.gen::<f64>() * max_gap).collect();
    LineMetric::from_gaps(&gaps)
}

/// Lipschitz caps along a line, same walk as [`gen_lipschitz_caps`].
pub fn gen_line_caps(line: &LineMetric, root_lo: f64, root_hi: f64, floor: f64, seed: RngSeed) -> Result<CapAssignment> {
    let l = line.locs();
    let gaps: Vec<f64> = l.windows(2).map(|w| w[1] - w[0]).collect();
    let tree = WeightedTree::path(&gaps)?;
    let caps = gen_lipschitz_caps(&tree, root_lo, root_hi, floor, seed)?;
    CapAssignment::lipschitz_on_line(caps.caps().to_vec(), line)
}

pub fn gen_points(n: usize, d: usize, scale: f64, seed: RngSeed) -> Result<PointSet> {
    let mut rng = seed.rng();
    PointSet::new((0..n).map(|_| (0..d).map(|_| rng.gen::<f64>() * scale).collect()).collect())
}

/// Flip probabilities uniform in `[0, 1]` on a random attachment tree.
pub fn gen_symmetric_tim(n: usize, seed: RngSeed) -> Result<SymmetricTim> {
    let tree = gen_random_tree(n, 1.0, seed.named("tree"))?;
    let mut rng = seed.named("theta").rng();
    let theta = (0..n - 1).map(|_| rng.gen::<f64>()).collect();
    SymmetricTim::new(tree, theta)
}

/// Uniform root marginal and channel rows uniform on the simplex.
pub fn gen_general_tim(n: usize, seed: RngSeed) -> Result<GeneralTim> {
    let tree = gen_random_tree(n, 1.0, seed.named("tree"))?;
    let mut rng = seed.named("channels").rng();
    let root_p0 = rng.gen::<f64>();
    let channels = (0..n)
        .map(|v| {
            if v == tree.root() {
                flip_channel(0.0)
            } else {
                let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
                [[a, 1.0 - a], [b, 1.0 - b]]
            }
        })
        .collect();
    GeneralTim::new(tree, root_p0, channels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_vertex_tree() {
        let t = gen_random_tree(2, 3.0, RngSeed::new(1)).unwrap();
        assert_eq!(t.edges().len(), 1);
        assert!(gen_random_tree(1, 3.0, RngSeed::new(1)).is_err());
    }

    #[test]
    fn caps_are_lipschitz() {
        for s in 0..20 {
            let t = gen_random_tree(30, 2.0, RngSeed::new(s)).unwrap();
            let c = gen_lipschitz_caps(&t, 0.5, 3.0, 0.0, RngSeed::new(s).named("c")).unwrap();
            assert!(c.lipschitz_checked());
        }
    }

    #[test]
    fn symmetric_reproducible() {
        let a = gen_symmetric_tim(10, RngSeed::new(4)).unwrap();
        let b = gen_symmetric_tim(10, RngSeed::new(4)).unwrap();
        assert_eq!(a.theta(), b.theta());
    }
}
