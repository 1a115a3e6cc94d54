use proptest::prelude::*;
use wnc_core::dentability::{builtin_suite, delta_f, dz_index, DerivationConfig};
use wnc_core::operators::{adjoint, operator_chain_value, witness_transpose, MatrixOperator};
use wnc_core::profiles::{
    cesaro_subset_profile, chain_value, separation_value, uwn_profile, SearchConfig, SearchMode,
};
use wnc_core::sets::{overlap_brute_force, overlap_profile, SetFamily};
use wnc_core::{PointSet, SpaceSpec};

fn space(kind: u8, d: usize) -> SpaceSpec {
    match kind % 4 {
        0 => SpaceSpec::lp(1.0, d),
        1 => SpaceSpec::lp(2.0, d),
        2 => SpaceSpec::lp(f64::INFINITY, d),
        _ => SpaceSpec::symmetric((0..d).map(|i| 1.0 / (i + 1) as f64).collect()),
    }
    .unwrap()
}

fn point_set(max_d: usize, max_m: usize) -> impl Strategy<Value = PointSet> {
    (any::<u8>(), 1..=max_d, 2..=max_m).prop_flat_map(|(kind, d, m)| {
        prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, d), m)
            .prop_map(move |rows| PointSet::from_rows(space(kind, d), rows).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uwn_is_nonincreasing_and_starts_at_max_norm(a in point_set(3, 5)) {
        let cfg = SearchConfig::default();
        let p = uwn_profile(&a, a.len() - 1, SearchMode::Exact, &cfg).unwrap();
        let maxn = a.points.iter().map(|x| wnc_core::normed::norm(&a.space, x).unwrap()).fold(0.0, f64::max);
        prop_assert!((p.value(0).unwrap() - maxn).abs() <= p.gap(0).unwrap() + 1e-7);
        for k in 1..a.len() {
            prop_assert!(p.value(k).unwrap() <= p.value(k - 1).unwrap() + p.gap(k - 1).unwrap() + 1e-7);
        }
    }

    #[test]
    fn profiles_are_homogeneous(a in point_set(3, 5), c in 0.1f64..4.0) {
        let cfg = SearchConfig::default();
        let b = a.scaled(c);
        let k = a.len() - 1;
        let (pa, pb) = (
            uwn_profile(&a, k, SearchMode::Exact, &cfg).unwrap(),
            uwn_profile(&b, k, SearchMode::Exact, &cfg).unwrap(),
        );
        let (ca, cb) = (
            cesaro_subset_profile(&a, a.len(), SearchMode::Exact, &cfg).unwrap(),
            cesaro_subset_profile(&b, a.len(), SearchMode::Exact, &cfg).unwrap(),
        );
        for j in 0..=k {
            let tol = pa.gap(j).unwrap() * c + pb.gap(j).unwrap() + 1e-7;
            prop_assert!((pb.value(j).unwrap() - c * pa.value(j).unwrap()).abs() <= tol);
        }
        for j in 1..=a.len() {
            prop_assert!((cb.value(j).unwrap() - c * ca.value(j).unwrap()).abs() <= 1e-12 * (1.0 + c));
        }
    }

    #[test]
    fn adding_points_never_shrinks_profiles(a in point_set(3, 5)) {
        let cfg = SearchConfig::default();
        let sub = a.subset(&(0..a.len() - 1).collect::<Vec<_>>());
        let k = sub.len() - 1;
        let (ps, pa) = (
            uwn_profile(&sub, k, SearchMode::Exact, &cfg).unwrap(),
            uwn_profile(&a, k, SearchMode::Exact, &cfg).unwrap(),
        );
        for j in 0..=k {
            prop_assert!(ps.value(j).unwrap() <= pa.value(j).unwrap() + ps.gap(j).unwrap() + 1e-7);
        }
    }

    #[test]
    fn chain_never_exceeds_separation(a in point_set(3, 5), n in 2usize..=3) {
        prop_assume!(n <= a.len());
        let cfg = SearchConfig::default();
        let c = chain_value(&a, n, SearchMode::Exact, &cfg).unwrap();
        let s = separation_value(&a, n, SearchMode::Exact, &cfg).unwrap();
        prop_assert!(c.value <= s.value + c.gap + s.gap + 1e-9);
        prop_assert!(c.witness.verify(&a.space, 1e-7).is_ok());
        prop_assert!(s.witness.verify(&a.space, 1e-7).is_ok());
    }

    #[test]
    fn midpoint_gap_is_nonnegative(x in prop::collection::vec(-3.0f64..3.0, 3), y in prop::collection::vec(-3.0f64..3.0, 3)) {
        for f in builtin_suite(&SpaceSpec::lp(1.5, 3).unwrap()) {
            let scale = 1.0 + f.eval(&x).abs() + f.eval(&y).abs();
            prop_assert!(delta_f(f.as_ref(), &x, &y) >= -1e-12 * scale, "{}", f.name());
        }
    }

    #[test]
    fn derivation_traces_reverify(a in point_set(2, 6), eps in 0.2f64..1.5) {
        let (idx, trace) = dz_index(&a, eps, &DerivationConfig::default()).unwrap();
        prop_assert!(idx >= 1 && idx <= a.len());
        prop_assert!(trace.verify(&a, 1e-7).is_ok());
    }

    #[test]
    fn overlap_closed_form_matches_enumeration(
        members in prop::collection::vec(prop::collection::btree_set(0usize..6, 1..=4), 1..=6)
    ) {
        let f = SetFamily::new(6, members.into_iter().map(|s| s.into_iter().collect()).collect()).unwrap();
        let p = overlap_profile(&f, f.len()).unwrap();
        for n in 1..=f.len() {
            prop_assert_eq!(p.value(n).unwrap() as usize, overlap_brute_force(&f, n));
        }
    }

    #[test]
    fn transposition_is_an_involution(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, 3), 1..=3),
        flip in any::<bool>(),
        n in 1usize..=2,
    ) {
        let (pd, pc) = if flip { (1.0, f64::INFINITY) } else { (f64::INFINITY, 1.0) };
        let r = rows.len();
        let t = MatrixOperator::new(rows, SpaceSpec::lp(pd, 3).unwrap(), SpaceSpec::lp(pc, r).unwrap()).unwrap();
        let res = operator_chain_value(&t, n, None, SearchMode::Exact, &SearchConfig::default()).unwrap();
        let w1 = witness_transpose(&t, &res.witness, 1e-9).unwrap();
        let w2 = witness_transpose(&adjoint(&t).unwrap(), &w1, 1e-9).unwrap();
        prop_assert_eq!(w2.level, res.witness.level);
        prop_assert!(w2.verify(&t, 1e-9).is_ok());
    }
}
