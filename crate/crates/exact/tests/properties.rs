use gwz_exact::{rat, Monomial, MultiPoly, RationalFn, TruncSeries, DEFAULT_POLE_EPS};
use proptest::prelude::*;

fn arb_poly() -> impl Strategy<Value = MultiPoly> {
    let term = (
        -6i64..=6,
        1i64..=5,
        prop::collection::vec((2u32..=5, 0u32..=3), 0..3),
    );
    prop::collection::vec(term, 0..5).prop_map(|terms| {
        MultiPoly::from_terms(
            terms
                .into_iter()
                .map(|(n, d, exps)| (Monomial::from_pairs(exps), rat(n, d))),
        )
    })
}

fn arb_nonzero_poly() -> impl Strategy<Value = MultiPoly> {
    arb_poly().prop_filter("nonzero", |p| !p.is_zero())
}

fn arb_ratfn() -> impl Strategy<Value = RationalFn> {
    (arb_poly(), arb_nonzero_poly()).prop_map(|(n, d)| RationalFn::new(n, d).unwrap())
}

/// Denominators built from `1 - c·u_q^k` with `|c| < 1` never vanish for
/// beta >= 0, which keeps numeric checks away from poles.
fn arb_safe_ratfn() -> impl Strategy<Value = RationalFn> {
    let factor = (2u32..=5, 1u32..=3, 1i64..=3).prop_map(|(q, k, c)| {
        &MultiPoly::one() - &MultiPoly::term(rat(c, 4), Monomial::var_pow(q, k))
    });
    (arb_poly(), prop::collection::vec(factor, 0..3))
        .prop_map(|(n, fs)| RationalFn::from_factors(n, fs.into_iter().map(|f| (f, 1))).unwrap())
}

fn arb_series(order: usize) -> impl Strategy<Value = TruncSeries> {
    prop::collection::vec(arb_poly(), order + 1)
        .prop_map(|ps| TruncSeries::new(ps.into_iter().map(RationalFn::from_poly).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poly_ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn ratfn_div_then_mul_roundtrips(a in arb_ratfn(), b in arb_ratfn()) {
        prop_assume!(!b.is_zero());
        let q = a.checked_div(&b).unwrap();
        prop_assert_eq!(&q * &b, a);
    }

    #[test]
    fn ratfn_field_axioms(a in arb_ratfn(), b in arb_ratfn(), c in arb_ratfn()) {
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&(&a + &b) - &b - a.clone()).is_zero());
    }

    #[test]
    fn reduce_preserves_value(a in arb_ratfn(), b in arb_nonzero_poly()) {
        let f = a.mul_poly(&b).checked_div(&RationalFn::from_poly(b)).unwrap();
        prop_assert_eq!(f.clone().reduced(), f);
    }

    #[test]
    fn json_roundtrip(a in arb_ratfn()) {
        let s = serde_json::to_string(&a).unwrap();
        let back: RationalFn = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(&back, &a);
        // deterministic serialization
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn evaluation_is_multiplicative(
        f in arb_safe_ratfn(),
        g in arb_safe_ratfn(),
        beta in 0.0f64..4.0,
    ) {
        let fg = (&f * &g).eval_beta(beta, DEFAULT_POLE_EPS).unwrap();
        let prod = f.eval_beta(beta, DEFAULT_POLE_EPS).unwrap()
            * g.eval_beta(beta, DEFAULT_POLE_EPS).unwrap();
        let scale = fg.abs().max(prod.abs()).max(1e-300);
        prop_assert!((fg - prod).abs() <= 1e-10 * scale, "{fg} vs {prod}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn series_pow_matches_iterated_mul(a in arb_series(5), k in 1u32..=8) {
        let mut acc = TruncSeries::one(5);
        for _ in 0..k {
            acc = acc.mul(&a).unwrap();
        }
        prop_assert_eq!(a.pow(k), acc);
    }

    #[test]
    fn xi_is_linear_and_fixes_low_orders(
        a in arb_series(6),
        b in arb_series(6),
        q in 2u32..=7,
        n in -3i64..=3,
        d in 1i64..=4,
    ) {
        let c = rat(n, d);
        let lhs = a.scale(&c).add(&b).unwrap().xi(q);
        let rhs = a.xi(q).scale(&c).add(&b.xi(q)).unwrap();
        prop_assert_eq!(lhs, rhs);
        let x = a.xi(q);
        prop_assert_eq!(x.coeff(0), a.coeff(0));
        prop_assert_eq!(x.coeff(1), a.coeff(1));
    }
}

#[test]
fn series_pow_matches_iterated_mul_at_order_twelve() {
    let a = TruncSeries::new(
        (0..=12)
            .map(|n| {
                let p = &MultiPoly::from(n as i64 + 1)
                    + &MultiPoly::term(
                        rat(1, n as i64 + 2),
                        Monomial::var_pow(2 + (n % 3) as u32, 1),
                    );
                RationalFn::from_poly(p)
            })
            .collect(),
    );
    let mut acc = TruncSeries::one(12);
    for k in 1..=8u32 {
        acc = acc.mul(&a).unwrap();
        assert_eq!(a.pow(k), acc, "k = {k}");
    }
}
