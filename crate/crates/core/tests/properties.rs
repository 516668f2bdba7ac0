use gwz_core::gwsim::{sample_tree, verify_ultrametric};
use gwz_core::{
    glued_occupation_exact, mean_z, mean_z_numeric, mean_z_table, BranchingLaw, EnergyCostSeq,
    GluedSystem,
};
use gwz_exact::{BigInt, BigRational, MultiPoly, RationalFn};
use num_traits::One;
use proptest::prelude::*;

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Laws on a subset of {1, ..., 5} with small rational weights, never
/// putting all mass on 1.
fn law_strategy() -> impl Strategy<Value = BranchingLaw> {
    prop::collection::vec(0u32..4, 5).prop_filter_map("needs branching", |w| {
        if w[1..].iter().all(|&x| x == 0) {
            return None;
        }
        let total: u32 = w.iter().sum();
        let entries = w
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0)
            .map(|(i, &x)| (i as u32 + 1, BigRational::new(x.into(), total.into())))
            .collect();
        BranchingLaw::new(entries).ok()
    })
}

fn weight_strategy() -> impl Strategy<Value = BigRational> {
    (1i64..8).prop_map(|k| BigRational::new(k.into(), 8.into()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn beta_zero_gives_inverse_factorial(law in law_strategy()) {
        let table = mean_z_table(&law, 6).unwrap();
        for (n, z) in table.values().iter().enumerate() {
            let expected = BigRational::new(BigInt::one(), factorial(n));
            prop_assert_eq!(z.eval_at_one().unwrap(), expected);
        }
    }

    #[test]
    fn decreasing_in_beta(law in law_strategy(), n in 2usize..6) {
        let mut prev = f64::INFINITY;
        for k in 0..=16 {
            let v = mean_z_numeric(&law, n, k as f64 / 4.0).unwrap();
            prop_assert!(v > 0.0);
            prop_assert!(v <= prev * (1.0 + 1e-12), "{} then {}", prev, v);
            prev = v;
        }
    }

    #[test]
    fn leaf_free_mass_on_one_does_not_matter(q in 2u32..4, pi in 1i64..4, n in 1usize..7) {
        let p = BigRational::new(pi.into(), 4.into());
        let mixed = BranchingLaw::two_point(q, p).unwrap();
        let regular = BranchingLaw::regular(q).unwrap();
        prop_assert_eq!(mean_z(&mixed, n).unwrap(), mean_z(&regular, n).unwrap());
    }

    #[test]
    fn q_moment_is_affine_under_mixing(
        a in law_strategy(),
        b in law_strategy(),
        lambda in weight_strategy(),
        n in 1usize..7,
    ) {
        let mix = a.mix(&b, &lambda).unwrap();
        let rest = BigRational::one() - &lambda;
        let expected = &a.q_moment(n).value.scale(&lambda) + &b.q_moment(n).value.scale(&rest);
        prop_assert_eq!(mix.q_moment(n).value, expected);
    }

    #[test]
    fn q_moment_at_beta_zero(law in law_strategy(), n in 1usize..8) {
        let expected: BigRational = law
            .entries()
            .iter()
            .map(|(q, p)| p / BigRational::from_integer(BigInt::from(*q).pow(n as u32 - 1)))
            .sum();
        prop_assert_eq!(law.q_moment(n).value.eval_at_one(), expected);
    }

    #[test]
    fn denominator_divides_moment_product(law in law_strategy(), n in 2usize..6) {
        let z = mean_z(&law, n).unwrap();
        let mut prod = MultiPoly::one();
        for m in 2..=n {
            let d = &MultiPoly::one() - &law.q_moment(m).value;
            prod = &prod * &d.pow((n / m) as u32);
        }
        prop_assert!(z.mul_poly(&prod).reduced().is_polynomial());
    }

    #[test]
    fn symmetric_occupation_is_half(law in law_strategy(), n in 1usize..6) {
        let sys = GluedSystem::symmetric(law, EnergyCostSeq::Zero, n);
        let e = glued_occupation_exact(&sys).unwrap();
        prop_assert_eq!(e, RationalFn::constant(BigRational::new((n as i64).into(), 2.into())));
    }

    #[test]
    fn sampled_trees_are_ultrametric(law in law_strategy(), seed in any::<u64>()) {
        let tree = sample_tree(&law, 6, seed).unwrap();
        let report = verify_ultrametric(&tree, 300, seed ^ 1).unwrap();
        prop_assert!(report.pass);
    }
}
