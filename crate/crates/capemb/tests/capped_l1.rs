use capemb::capped_l1::{capped_l1_boosted, capped_l1_embed, per_run_bound, DEFAULT_C};
use capemb::gen::gen_points;
use capemb::metric::dcap;
use capemb::{eval_distortion, PointSet, RngSeed};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

#[test]
fn per_run_bound_cases() {
    assert_eq!(per_run_bound(0.5, 1.0, 128), 0.5);
    assert_eq!(per_run_bound(1.0, 1.0, 128), 1.0);
    assert_eq!(per_run_bound(1.5, 1.0, 128), 128.0);
}

#[test]
fn dimension_is_c_times_d() {
    let p = gen_points(10, 3, 1.0, RngSeed::new(1)).unwrap();
    assert_eq!(capped_l1_embed(&p, 1.0, 16, RngSeed::new(2)).unwrap().dim(), 48);
    assert!(capped_l1_embed(&p, 0.0, 16, RngSeed::new(2)).is_err());
    assert!(capped_l1_embed(&p, 1.0, 0, RngSeed::new(2)).is_err());
}

#[test]
fn boosted_distortion_is_finite_across_seeds() {
    let p = gen_points(64, 4, 1.0, RngSeed::new(7)).unwrap();
    for s in 0..3 {
        let e = capped_l1_boosted(&p, 1.0, DEFAULT_C, 64, RngSeed::new(s)).unwrap();
        let r = eval_distortion(64, |i, j| dcap(p.distance(i, j), 1.0), &e).unwrap();
        assert!(r.contraction > 0.0 && r.distortion.is_finite());
        assert_eq!(r.violations, 0);
    }
}

#[test]
fn translation_shifts_nothing_for_coincident_points() {
    let p = PointSet::new(vec![vec![3.0, -2.0], vec![3.0, -2.0]]).unwrap();
    let e = capped_l1_embed(&p, 0.5, 8, RngSeed::new(0)).unwrap();
    assert_eq!(e.distance(0, 1), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn one_run_respects_case_split(n in 2usize..25, d in 1usize..5, m in 0.2f64..2.0, seed in any::<u64>()) {
        let s = RngSeed::new(seed);
        let p = gen_points(n, d, 2.0, s.named("p")).unwrap();
        let e = capped_l1_embed(&p, m, 16, s.named("e")).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!(e.distance(i, j) <= per_run_bound(p.distance(i, j), m, 16) + TOL);
            }
        }
    }
}
