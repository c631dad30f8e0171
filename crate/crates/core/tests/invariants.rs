use condgreedy::bases::{
    block_index, block_offset, difference, interleave, interleave_index, lindenstrauss, lorentz_lift,
    lorentz_retract, summing, unit_vector_system, Side,
};
use condgreedy::conditionality::{lm_estimate, TemplateFamily};
use condgreedy::spaces::{norm, nonincreasing_rearrangement, Block, Exponent, SpaceDesc};
use condgreedy::witness::{Method, Witness, WitnessKind};
use proptest::prelude::*;

fn spaces_for(n: usize) -> Vec<SpaceDesc> {
    let half = n / 2;
    vec![
        SpaceDesc::lp(1.0),
        SpaceDesc::lp(2.0),
        SpaceDesc::lp(3.5),
        SpaceDesc::linf(),
        SpaceDesc::lorentz_pq(2.0, 1.0),
        SpaceDesc::lorentz_pq(3.0, 2.0),
        SpaceDesc::Bv,
        SpaceDesc::MixedSum {
            outer: Exponent::Finite(2.0),
            blocks: vec![Block::new(SpaceDesc::lp(1.0), half), Block::new(SpaceDesc::linf(), n - half)],
        },
    ]
}

fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (2usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
            -5.0f64..5.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn norm_axioms((x, y, t) in vec_pair()) {
        for space in spaces_for(x.len()) {
            let nx = norm(&space, &x).unwrap();
            let ny = norm(&space, &y).unwrap();
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let scaled: Vec<f64> = x.iter().map(|a| t * a).collect();
            prop_assert!(nx >= 0.0);
            prop_assert!(norm(&space, &sum).unwrap() <= nx + ny + 1e-9 * (1.0 + nx + ny), "{space}");
            let ns = norm(&space, &scaled).unwrap();
            prop_assert!((ns - t.abs() * nx).abs() <= 1e-9 * (1.0 + ns), "{space}");
            if x.iter().any(|a| *a != 0.0) {
                prop_assert!(nx > 0.0, "{space}");
            }
        }
    }

    #[test]
    fn lorentz_with_equal_indices_is_lp(x in prop::collection::vec(-10.0f64..10.0, 1..16), p in 1.0f64..6.0) {
        let a = norm(&SpaceDesc::lorentz_pq(p, p), &x).unwrap();
        let b = norm(&SpaceDesc::lp(p), &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn lorentz_is_rearrangement_invariant(x in prop::collection::vec(-10.0f64..10.0, 1..16), seed in any::<u64>()) {
        let mut y = x.clone();
        let n = y.len();
        for i in (1..n).rev() {
            y.swap(i, (seed.rotate_left(i as u32) % (i as u64 + 1)) as usize);
        }
        let space = SpaceDesc::lorentz_pq(2.5, 1.5);
        prop_assert_eq!(norm(&space, &x).unwrap(), norm(&space, &y).unwrap());
        prop_assert_eq!(nonincreasing_rearrangement(&x), nonincreasing_rearrangement(&y));
    }

    #[test]
    fn single_block_mixed_sum_is_exact(
        x in prop::collection::vec(-10.0f64..10.0, 1..8),
        block in 0usize..3,
        outer in prop_oneof![Just(Exponent::Finite(1.0)), Just(Exponent::Finite(3.0)), Just(Exponent::Inf)],
    ) {
        let n = x.len();
        let inner = [SpaceDesc::lp(1.0), SpaceDesc::lp(2.0), SpaceDesc::linf()];
        let space = SpaceDesc::MixedSum {
            outer,
            blocks: inner.iter().map(|s| Block::new(s.clone(), n)).collect(),
        };
        let mut v = vec![0.0; 3 * n];
        v[block * n..(block + 1) * n].copy_from_slice(&x);
        prop_assert_eq!(norm(&space, &v).unwrap(), norm(&inner[block], &x).unwrap());
    }

    #[test]
    fn block_index_is_a_bijection(dims in prop::collection::vec(1usize..9, 1..6)) {
        let total: usize = dims.iter().sum();
        for k in 0..total {
            let (r, j) = block_index(&dims, k).unwrap();
            prop_assert!(j < dims[r]);
            prop_assert_eq!(block_offset(&dims, r) + j, k);
        }
        prop_assert_eq!(block_index(&dims, total), None);
    }

    #[test]
    fn retract_inverts_lift(x in prop::collection::vec(-1e6f64..1e6, 0..40)) {
        prop_assert_eq!(lorentz_retract(&lorentz_lift(&x)), x);
    }
}

fn coeffs_and_set(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
    (
        prop::collection::vec(prop_oneof![Just(0.0), -4.0f64..4.0], d),
        prop::collection::vec(0..d, 0..d),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn witness_ratio_is_scale_invariant((a, set) in coeffs_and_set(8), t in 0.01f64..100.0) {
        let b = lindenstrauss(8).unwrap();
        prop_assume!(a.iter().any(|x| *x != 0.0));
        let w = Witness::evaluate(&b, a, set, WitnessKind::Conditionality, Method::Random);
        let s = w.scaled(&b, t);
        prop_assert!((s.ratio - w.ratio).abs() <= 1e-12 * w.ratio.max(1.0));
        prop_assert!(s.verify(&b));
    }

    #[test]
    fn interleave_transfer_keeps_ratio((a, set) in coeffs_and_set(6)) {
        prop_assume!(a.iter().any(|x| *x != 0.0));
        let b0 = difference(6).unwrap();
        let b1 = unit_vector_system(6, SpaceDesc::lp(2.0)).unwrap();
        let joint = interleave(&b0, &b1).unwrap();
        let w = Witness::evaluate(&b0, a.clone(), set.clone(), WitnessKind::Conditionality, Method::Random);
        let mut moved = vec![0.0; joint.d()];
        for (j, x) in a.iter().enumerate() {
            moved[interleave_index(Side::First, j, 6, 6)] = *x;
        }
        let moved_set = set.iter().map(|&j| interleave_index(Side::First, j, 6, 6)).collect();
        let t = Witness::evaluate(&joint, moved, moved_set, WitnessKind::Conditionality, Method::Transfer);
        prop_assert!((t.ratio - w.ratio).abs() <= 1e-12 * w.ratio.max(1.0));
    }

    #[test]
    fn indices_past_the_support_do_not_matter(
        (a, set) in coeffs_and_set(5),
        extra in prop::collection::vec(5usize..10, 0..5),
    ) {
        let b = summing(10).unwrap();
        let mut coeffs = a;
        coeffs.resize(10, 0.0);
        let w = Witness::evaluate(&b, coeffs.clone(), set.clone(), WitnessKind::Conditionality, Method::Random);
        let mut wider = set;
        wider.extend(extra);
        let v = Witness::evaluate(&b, coeffs, wider, WitnessKind::Conditionality, Method::Random);
        prop_assert_eq!(v.ratio, w.ratio);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimate_never_decreases_with_budget(m in 3usize..=10, low in 0usize..20, extra in 1usize..40, seed in any::<u64>()) {
        let b = lindenstrauss(10).unwrap();
        let templates = TemplateFamily::standard();
        let (a, _) = lm_estimate(&b, m, low, seed, &templates).unwrap();
        let (c, _) = lm_estimate(&b, m, low + extra, seed, &templates).unwrap();
        prop_assert!(c >= a, "budget {} gave {a}, budget {} gave {c}", low, low + extra);
    }

    #[test]
    fn lindenstrauss_partial_sums_are_bounded(
        k in 3u32..=6,
        a in prop::collection::vec(-1.0f64..1.0, 64),
        m_frac in 0.0f64..1.0,
    ) {
        let d = 1usize << k;
        let b = lindenstrauss(d).unwrap();
        let m = 1 + ((d - 1) as f64 * m_frac) as usize;
        let f = b.synthesize(&a[..d]);
        let mut head = a[..d].to_vec();
        head[m..].iter_mut().for_each(|x| *x = 0.0);
        let s = b.synthesize(&head);
        let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        prop_assert!(l1(&s) <= 3.0 * l1(&f) + 1e-12);
    }
}
