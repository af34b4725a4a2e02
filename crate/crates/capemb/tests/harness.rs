use capemb::diamond::{d_count, gen_diamond, x_count};
use capemb::eval::{embed, embedded_pairwise, pair_index, run_eval, suite_case, Embedder, Instance, Report, SUITE};
use capemb::gen::{gen_general_tim, gen_lipschitz_caps, gen_random_tree, gen_symmetric_tim};
use capemb::io::{read_embedding, read_points, read_reals, read_tree, write_embedding, write_points, write_reals, write_tree};
use capemb::RngSeed;
use proptest::prelude::*;

#[test]
fn diamond_counts_match_closed_forms() {
    for lv in 0..=4 {
        let g = gen_diamond(lv).unwrap();
        let four = 4f64.powi(lv as i32);
        assert_eq!(g.d_nodes() as f64, 2.0 / 3.0 * four + 4.0 / 3.0);
        assert_eq!(g.x_nodes() as f64, four / 3.0 - 1.0 / 3.0);
        assert_eq!((d_count(lv), x_count(lv)), (g.d_nodes(), g.x_nodes()));
    }
    let g = gen_diamond(2).unwrap();
    assert_eq!((g.d_nodes(), g.x_nodes()), (12, 5));
}

#[test]
fn diamond_switches_copy_or_swap() {
    let g = gen_diamond(3).unwrap();
    for t in 0..200 {
        let (d, x) = g.sample(RngSeed::new(t));
        assert_eq!((d[0], d[1]), (0, 1));
        for s in g.splits() {
            let (a, b) = if x[s.switch] == 0 { (d[s.u], d[s.v]) } else { (d[s.v], d[s.u]) };
            assert_eq!((d[s.x], d[s.y]), (a, b));
        }
    }
}

#[test]
fn exact_disagreement_matches_monte_carlo() {
    let g = gen_diamond(2).unwrap();
    let p = g.exact_disagreement();
    let n = g.d_nodes();
    let trials = 100_000;
    let mut hits = vec![vec![0usize; n]; n];
    for t in 0..trials {
        let (d, _) = g.sample(RngSeed::new(9).derive(t));
        for i in 0..n {
            for j in 0..n {
                hits[i][j] += usize::from(d[i] != d[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let q = p[i][j];
            let sd = (q * (1.0 - q) / trials as f64).sqrt();
            assert!((hits[i][j] as f64 / trials as f64 - q).abs() <= 3.0 * sd + 1e-12, "pair {i},{j}");
        }
    }
}

#[test]
fn diamond_edges_and_marginals_follow_hamming() {
    for lv in 1..=4 {
        let g = gen_diamond(lv).unwrap();
        let p = g.exact_disagreement();
        for &(u, v) in g.edges() {
            assert!((p[u][v] - g.hamming(u, v)).abs() < 1e-12);
        }
        for i in 0..g.d_nodes() {
            assert!((p[0][i] - g.hamming(0, i)).abs() < 1e-12);
            assert!((p[1][i] - g.hamming(1, i)).abs() < 1e-12);
        }
    }
}

#[test]
fn generators_are_reproducible_and_valid() {
    let a = gen_symmetric_tim(12, RngSeed::new(3)).unwrap();
    let b = gen_symmetric_tim(12, RngSeed::new(3)).unwrap();
    assert_eq!(a.theta(), b.theta());
    for s in 0..50 {
        let g = gen_general_tim(2 + s % 10, RngSeed::new(s as u64)).unwrap();
        for v in 0..g.n() {
            for row in g.channel(v) {
                assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
            }
        }
        let t = gen_random_tree(2 + s, 1.0, RngSeed::new(s as u64)).unwrap();
        assert!(gen_lipschitz_caps(&t, 0.0, 1.0, 0.0, RngSeed::new(s as u64)).unwrap().lipschitz_checked());
    }
}

#[test]
fn file_formats_roundtrip() {
    let t = gen_random_tree(9, 1.0, RngSeed::new(1)).unwrap();
    let t2 = read_tree(&write_tree(&t)).unwrap();
    assert_eq!(t.edges(), t2.edges());
    let xs = vec![0.1, 2.0 / 3.0, 1e-300];
    assert_eq!(read_reals(&write_reals(&xs)).unwrap(), xs);
    let p = capemb::gen::gen_points(5, 3, 1.0, RngSeed::new(2)).unwrap();
    assert_eq!(read_points(&write_points(&p)).unwrap(), p);
    let (inst, emb) = suite_case("tree-fixed", 10, RngSeed::new(3)).unwrap();
    let e = embed(&inst, emb, 3, RngSeed::new(4)).unwrap();
    assert_eq!(read_embedding(&write_embedding(&e)).unwrap(), e);
}

#[test]
fn pairwise_evaluation_matches_materialized_embedding() {
    for name in SUITE {
        let (inst, emb) = suite_case(name, 12, RngSeed::new(5)).unwrap();
        let e = embed(&inst, emb, 4, RngSeed::new(6)).unwrap();
        let d = embedded_pairwise(&inst, emb, 4, RngSeed::new(6)).unwrap();
        for i in 0..12 {
            for j in i + 1..12 {
                let x = e.distance(i, j);
                assert!((d[pair_index(12, i, j)] - x).abs() <= 1e-12 * (1.0 + x), "{name} {i},{j}");
            }
        }
    }
}

#[test]
fn caterpillar_baseline_has_distortion_one() {
    let t = gen_random_tree(30, 1.0, RngSeed::new(8)).unwrap();
    let r = run_eval(&Instance::Tree { tree: t, caps: None }, Embedder::Caterpillar, 1, RngSeed::new(0)).unwrap();
    assert!((r.summary.distortion - 1.0).abs() < 1e-9);
}

#[test]
fn fixed_cap_tree_has_no_violations() {
    for s in 0..10 {
        let (inst, emb) = suite_case("tree-fixed", 40, RngSeed::new(s)).unwrap();
        assert_eq!(run_eval(&inst, emb, 1, RngSeed::new(s)).unwrap().summary.violations, 0);
    }
}

#[test]
fn reports_are_reproducible_and_roundtrip() {
    for name in SUITE {
        let (inst, emb) = suite_case(name, 10, RngSeed::new(1)).unwrap();
        let a = run_eval(&inst, emb, 3, RngSeed::new(2)).unwrap();
        let b = run_eval(&inst, emb, 3, RngSeed::new(2)).unwrap();
        assert_eq!(a.rows_csv(), b.rows_csv());
        let back = Report::parse(&a.rows_csv(), &a.summary_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }
}

#[test]
fn mismatched_specs_are_rejected() {
    let (inst, _) = suite_case("l1", 5, RngSeed::new(0)).unwrap();
    assert!(run_eval(&inst, Embedder::Symmetric, 1, RngSeed::new(0)).is_err());
    assert!(suite_case("nope", 5, RngSeed::new(0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn clamping_at_zero_is_lipschitz(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        prop_assert!((a.max(0.0) - b.max(0.0)).abs() <= (a - b).abs());
    }

    #[test]
    fn generated_caps_are_lipschitz(n in 2usize..60, seed in any::<u64>()) {
        let t = gen_random_tree(n, 1.0, RngSeed::new(seed)).unwrap();
        let c = gen_lipschitz_caps(&t, 0.0, 2.0, 0.0, RngSeed::new(seed).named("c")).unwrap();
        prop_assert!(c.lipschitz_checked());
    }

    #[test]
    fn report_csv_roundtrips(rows in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..20)) {
        let n = 7;
        let truth: Vec<f64> = (0..21).map(|k| rows[k % rows.len()].0).collect();
        let emb: Vec<f64> = (0..21).map(|k| rows[k % rows.len()].1).collect();
        let r = capemb::eval::build_report(n, &truth, &truth, &emb);
        let back = Report::parse(&r.rows_csv(), &r.summary_json().unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }
}
