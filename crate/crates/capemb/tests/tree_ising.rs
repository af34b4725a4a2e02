use capemb::gen::{gen_general_tim, gen_symmetric_tim};
use capemb::ising::{
    bernoulli_randomness, bias, bias_data, cond_bernoulli_randomness, dcap_half, flip_channel, forced_randomness,
    general_tim_embed, is_cross, l1_to_distribution_sampler, reduce_bad_edges, symmetric_tim_embed, three_part_metrics,
    Direction, GeneralTim, PairJoint, SymmetricTim,
};
use capemb::{PointSet, RngSeed, WeightedTree};
use rand::Rng;

const EXACT: f64 = 1e-10;

/// Every pairwise joint by summing over all `2^n` configurations.
fn enumerate_joints(m: &GeneralTim) -> Vec<Vec<PairJoint>> {
    let n = m.n();
    let t = m.tree();
    let mut out = vec![vec![[[0.0; 2]; 2]; n]; n];
    for x in 0u32..(1 << n) {
        let bit = |v: usize| ((x >> v) & 1) as usize;
        let mut p = if bit(t.root()) == 0 { m.root_p0() } else { 1.0 - m.root_p0() };
        for v in 0..n {
            if let Some(u) = t.parent(v) {
                p *= m.channel(v)[bit(u)][bit(v)];
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[i][j][bit(i)][bit(j)] += p;
            }
        }
    }
    out
}

fn line_model(n: usize, seed: RngSeed) -> GeneralTim {
    let tree = WeightedTree::path(&vec![1.0; n - 1]).unwrap();
    let mut rng = seed.rng();
    let channels = (0..n)
        .map(|_| {
            let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
            [[a, 1.0 - a], [b, 1.0 - b]]
        })
        .collect();
    GeneralTim::new(tree, rng.gen(), channels).unwrap()
}

fn br_x_given_y(j: &PairJoint) -> f64 {
    cond_bernoulli_randomness(j, Direction::XGivenY)
}

#[test]
fn pair_joint_matches_enumeration() {
    for s in 0..60u64 {
        let n = 2 + (s as usize % 11);
        let m = gen_general_tim(n, RngSeed::new(s)).unwrap();
        let table = enumerate_joints(&m);
        for i in 0..n {
            for j in 0..n {
                let p = m.pair_joint(i, j).unwrap();
                for a in 0..2 {
                    for b in 0..2 {
                        assert!((p[a][b] - table[i][j][a][b]).abs() < EXACT);
                    }
                }
            }
        }
    }
}

#[test]
fn symmetric_closed_form_matches_enumeration() {
    for s in 0..60u64 {
        let n = 2 + (s as usize % 11);
        let m = gen_symmetric_tim(n, RngSeed::new(s)).unwrap();
        let table = enumerate_joints(&m.to_general());
        for i in 0..n {
            for j in 0..n {
                let t = table[i][j][0][1] + table[i][j][1][0];
                assert!((m.disagreement(i, j) - t).abs() < EXACT);
            }
        }
    }
}

#[test]
fn trivial_flip_probabilities() {
    let t = WeightedTree::path(&[1.0, 1.0, 1.0]).unwrap();
    let zero = SymmetricTim::new(t.clone(), vec![0.0; 3]).unwrap();
    assert_eq!(zero.disagreement(0, 3), 0.0);
    let one = SymmetricTim::new(t, vec![0.0, 1.0, 0.0]).unwrap();
    assert_eq!(one.disagreement(1, 2), 1.0);
    assert_eq!(one.disagreement(0, 3), 1.0);
    for s in 0..20 {
        let x = one.sample(RngSeed::new(s));
        assert_eq!((x[0], x[2]), (x[1], 1 - x[1]));
    }
}

#[test]
fn single_bad_edge() {
    let t = WeightedTree::path(&[1.0]).unwrap();
    let m = SymmetricTim::new(t, vec![0.9]).unwrap();
    let (r, parity) = reduce_bad_edges(&m);
    assert!((r.theta()[0] - 0.1).abs() < 1e-15);
    assert_ne!(parity[0], parity[1]);
    assert!(m.disagreement(0, 1) >= 0.5);
    let e = symmetric_tim_embed(&m, 8, RngSeed::new(0)).unwrap();
    assert!(e.distance(0, 1) >= 1.0);
}

#[test]
fn bad_edge_reduction() {
    for s in 0..200u64 {
        let n = 2 + (s as usize % 11);
        let m = gen_symmetric_tim(n, RngSeed::new(s)).unwrap();
        let (r, parity) = reduce_bad_edges(&m);
        assert!(r.theta().iter().all(|&t| t <= 0.5));
        for i in 0..n {
            for j in 0..n {
                if parity[i] == parity[j] {
                    assert!((m.disagreement(i, j) - r.disagreement(i, j)).abs() < EXACT);
                } else {
                    assert!(m.disagreement(i, j) >= 0.5 - EXACT);
                }
            }
        }
    }
}

#[test]
fn symmetric_sandwich() {
    for s in 0..100u64 {
        let n = 2 + (s as usize % 63);
        let (r, _) = reduce_bad_edges(&gen_symmetric_tim(n, RngSeed::new(s)).unwrap());
        for i in 0..n {
            for j in i + 1..n {
                let d = r.disagreement(i, j);
                let c = dcap_half(&r, i, j).unwrap();
                assert!(0.5 * d <= c + 1e-9 && c <= 8.0 * d + 1e-9);
            }
        }
    }
}

#[test]
fn zero_model_embeds_to_a_point() {
    let t = WeightedTree::path(&[1.0, 1.0]).unwrap();
    let m = SymmetricTim::new(t, vec![0.0, 0.0]).unwrap();
    let e = symmetric_tim_embed(&m, 4, RngSeed::new(1)).unwrap();
    assert_eq!(e.distance(0, 2), 0.0);
    assert_eq!(e.rows()[1].last(), Some(&0.0));
}

#[test]
fn bernoulli_randomness_examples() {
    assert_eq!(bernoulli_randomness(0.5), 1.0);
    assert_eq!(bernoulli_randomness(0.0), 0.0);
    let j = [[0.1, 0.2], [0.2, 0.5]];
    assert!((br_x_given_y(&j) - 0.6).abs() < 1e-15);
    assert!((cond_bernoulli_randomness(&j, Direction::YGivenX) - 0.6).abs() < 1e-15);
    assert!((bernoulli_randomness(0.3) - 0.6).abs() < 1e-15);
    for (p, q) in [(0.3, 0.8), (0.5, 0.1), (0.9, 0.6)] {
        let ind = [[p * q, p * (1.0 - q)], [(1.0 - p) * q, (1.0 - p) * (1.0 - q)]];
        assert!((br_x_given_y(&ind) - bernoulli_randomness(p)).abs() < 1e-12);
    }
}

#[test]
fn crosses_and_forced_randomness() {
    let anti = [[0.0, 0.5], [0.5, 0.0]];
    assert!(is_cross(&anti));
    assert_eq!(forced_randomness(&anti), 0.0);
    let id = [[0.5, 0.0], [0.0, 0.5]];
    assert!(!is_cross(&id));
    assert_eq!(forced_randomness(&id), 0.0);
    assert!(!is_cross(&[[0.25, 0.25], [0.25, 0.25]]));
    assert!((bias(0.8) - 0.2).abs() < 1e-15);
}

#[test]
fn br_calculus_on_random_models() {
    for s in 0..300u64 {
        let n = 3 + (s as usize % 10);
        let line = line_model(n, RngSeed::new(s).named("line"));
        let m0 = line.marginals0();
        let j = |a: usize, b: usize| line.pair_joint_with(&m0, a, b).unwrap();
        for i in 0..n {
            for k in i + 1..n {
                let direct = br_x_given_y(&j(i, k));
                let path: f64 = (i..k).map(|q| br_x_given_y(&j(q, q + 1))).sum();
                assert!(path >= direct - EXACT, "super-additivity, model {s}");
                for mid in i + 1..k {
                    assert!(direct >= br_x_given_y(&j(i, mid)) - EXACT, "data processing, model {s}");
                }
            }
        }
        let tree = gen_general_tim(n, RngSeed::new(s)).unwrap();
        let data = bias_data(&tree);
        for v in 0..n {
            if tree.tree().parent(v).is_some() {
                let p = tree.tree().parent(v).unwrap();
                assert!((data.bias[v] - data.bias[p]).abs() <= data.forced[v] + EXACT);
            }
            for w in 0..n {
                let p = tree.pair_joint(v, w).unwrap();
                let d = p[0][1] + p[1][0];
                let (bx, by) = (br_x_given_y(&p), cond_bernoulli_randomness(&p, Direction::YGivenX));
                assert!(bx <= bernoulli_randomness(p[0][0] + p[0][1]) + EXACT);
                assert!(d >= bx.max(by) / 2.0 - EXACT);
                assert!((data.bias[v] - data.bias[w]).abs() <= d + EXACT);
            }
        }
    }
}

#[test]
fn three_part_sandwich_and_components() {
    for s in 0..200u64 {
        let n = 2 + (s as usize % 11);
        let m = gen_general_tim(n, RngSeed::new(s)).unwrap();
        let data = bias_data(&m);
        let table = enumerate_joints(&m);
        for i in 0..n {
            let z = three_part_metrics(&m, &data, i, i);
            assert_eq!(z.sum(), 0.0);
            for j in 0..n {
                let pr = table[i][j][0][1] + table[i][j][1][0];
                let t = three_part_metrics(&m, &data, i, j);
                assert!(t.marg <= pr + EXACT);
                assert!(t.forced <= 200.0 * pr + EXACT);
                assert!(t.negcor <= 3.0 * pr + EXACT);
                let br = br_x_given_y(&table[i][j]);
                assert!(t.forced >= data.bias[i].max(data.bias[j]).min(br) - EXACT);
                assert!(pr / 200.0 <= t.sum() + EXACT && t.sum() <= 204.0 * pr + EXACT);
            }
        }
    }
}

#[test]
fn lifted_symmetric_crosses_are_bad_edges() {
    for s in 0..50u64 {
        let m = gen_symmetric_tim(10, RngSeed::new(s)).unwrap();
        let (_, parity) = reduce_bad_edges(&m);
        let g = m.to_general();
        let data = bias_data(&g);
        assert_eq!(data.cross_parity, parity);
        for i in 0..10 {
            for j in 0..10 {
                assert!(three_part_metrics(&g, &data, i, j).marg.abs() < EXACT);
            }
        }
    }
}

#[test]
fn deterministic_model_embeds_marginal_difference() {
    let t = WeightedTree::path(&[1.0, 1.0]).unwrap();
    let channels = vec![flip_channel(0.0), flip_channel(1.0), flip_channel(0.0)];
    let m = GeneralTim::new(t, 1.0, channels).unwrap();
    let e = general_tim_embed(&m, 4, RngSeed::new(2)).unwrap();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert!((e.distance(i, j) - m.disagreement(i, j).unwrap()).abs() < EXACT);
    }
}

#[test]
fn json_roundtrip() {
    let g = gen_general_tim(7, RngSeed::new(3)).unwrap();
    let g2 = GeneralTim::from_json(&g.to_json().unwrap()).unwrap();
    assert_eq!(g.marginals0(), g2.marginals0());
    let s = gen_symmetric_tim(7, RngSeed::new(3)).unwrap();
    let s2 = SymmetricTim::from_json(&s.to_json().unwrap()).unwrap();
    assert_eq!(s.theta(), s2.theta());
    assert!(GeneralTim::from_json(r#"{"n":2,"root":0,"root_marginal_p0":0.5,"edges":[{"parent":1,"child":0,"channel":[[1,0],[0,1]]}]}"#).is_err());
}

fn within_3_sigma(hits: usize, trials: usize, p: f64) -> bool {
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    ((hits as f64 / trials as f64) - p).abs() <= 3.0 * sd + 1e-12
}

#[test]
fn samplers_match_oracles() {
    let trials = 100_000;
    let sym = gen_symmetric_tim(6, RngSeed::new(11)).unwrap();
    let gen = gen_general_tim(6, RngSeed::new(12)).unwrap();
    let pairs = [(0, 5), (1, 4), (2, 3)];
    let mut hs = [0usize; 3];
    let mut hg = [0usize; 3];
    for t in 0..trials {
        let a = sym.sample(RngSeed::new(1).derive(t as u64));
        let b = gen.sample(RngSeed::new(2).derive(t as u64));
        for (k, &(i, j)) in pairs.iter().enumerate() {
            hs[k] += usize::from(a[i] != a[j]);
            hg[k] += usize::from(b[i] != b[j]);
        }
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        assert!(within_3_sigma(hs[k], trials, sym.disagreement(i, j)));
        assert!(within_3_sigma(hg[k], trials, gen.disagreement(i, j).unwrap()));
    }
}

#[test]
fn l1_sampler_matches_normalized_distance() {
    let p = PointSet::new(vec![vec![0.1, 0.9, 0.4], vec![0.6, 0.2, 0.4], vec![0.1, 0.9, 0.4]]).unwrap();
    let trials = 100_000;
    let mut hits = [0usize; 2];
    for t in 0..trials {
        let x = l1_to_distribution_sampler(&p, RngSeed::new(4).derive(t)).unwrap();
        hits[0] += usize::from(x[0] != x[1]);
        hits[1] += usize::from(x[0] != x[2]);
    }
    assert!(within_3_sigma(hits[0], trials as usize, p.distance(0, 1) / 3.0));
    assert_eq!(hits[1], 0);
    let unit = PointSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
    let x = l1_to_distribution_sampler(&unit, RngSeed::new(0)).unwrap();
    assert_ne!(x[0], x[1]);
    assert!(l1_to_distribution_sampler(&PointSet::new(vec![vec![1.5]]).unwrap(), RngSeed::new(0)).is_err());
}
