//! Mean grand-canonical partition functions `Z̄(β, t) = Σ_N Z̄_N(β) t^N`.
//!
//! Conditioning on the root gives the functional equation
//! `Z̄(t) = Σ_q p_q · (Ξ(u_q, Z̄)(t/q))^q`, where `Ξ(z, ·)` multiplies the
//! `t^N` coefficient by `z^{binom(N,2)}`. [`apply_operator`] is the right-hand
//! side; both the residual check and the fixed-point iteration go through it.

use gwz_exact::{BigInt, BigRational, RationalFn, TruncSeries};
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::law::BranchingLaw;
use crate::meanrec::{mean_z_table, MeanZTable};
use crate::report::{Report, Residual};

/// `Z̄(β, t)` truncated at order `T`, with its law.
#[derive(Debug, Clone)]
pub struct MeanGCPF {
    pub law: BranchingLaw,
    pub series: TruncSeries,
}

impl MeanGCPF {
    pub fn from_table(table: &MeanZTable, order: usize) -> Result<MeanGCPF> {
        if table.n_max() < order {
            return Err(Error::InvalidArgument(format!(
                "table holds N <= {}, order {order} requested",
                table.n_max()
            )));
        }
        Ok(MeanGCPF {
            law: table.law().clone(),
            series: TruncSeries::new(table.values()[..=order].to_vec()),
        })
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    /// `F̄_q(β, t) = Σ_N Z̄_N u_q^{binom(N,2)} t^N`; the identity for `q = 1`.
    pub fn f_bar(&self, q: u32) -> TruncSeries {
        self.series.xi(q)
    }
}

/// `Z̄(β, t)` through order `T`.
pub fn mean_gcpf(law: &BranchingLaw, order: usize) -> Result<MeanGCPF> {
    if order < 1 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    MeanGCPF::from_table(&mean_z_table(law, order)?, order)
}

/// `F̄_q(β, t)` through order `T`.
pub fn f_bar(law: &BranchingLaw, q: u32, order: usize) -> Result<TruncSeries> {
    if q < 1 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    Ok(mean_gcpf(law, order)?.f_bar(q))
}

/// `α ↦ Σ_q p_q · Ξ(u_q, α)(t/q)^q`.
pub fn apply_operator(law: &BranchingLaw, alpha: &TruncSeries) -> TruncSeries {
    let parts: Vec<TruncSeries> = law
        .entries()
        .par_iter()
        .map(|(q, p)| {
            let inner = if *q == 1 {
                alpha.clone()
            } else {
                alpha.xi(*q).rescale(*q).pow(*q)
            };
            inner.scale(p)
        })
        .collect();
    parts
        .iter()
        .fold(TruncSeries::zero(alpha.order()), |acc, s| {
            acc.add(s).expect("operator terms share the order of alpha")
        })
}

fn residual_report(check: &str, lhs: &TruncSeries, rhs: &TruncSeries) -> Result<Report> {
    let diff = lhs.sub(rhs)?;
    let residuals = diff
        .coeffs()
        .iter()
        .enumerate()
        .map(|(order, c)| Residual {
            order,
            zero: c.is_zero(),
            value: c.to_string(),
        })
        .collect();
    Ok(Report::from_residuals(check, residuals))
}

/// Coefficientwise residual of `Z̄ = Σ_q p_q F̄_q(t/q)^q` through order `T`.
pub fn verify_functional_equation(law: &BranchingLaw, order: usize) -> Result<Report> {
    let z = mean_gcpf(law, order.max(1))?;
    verify_functional_equation_for(&z)
}

/// As [`verify_functional_equation`], for an already computed series.
pub fn verify_functional_equation_for(z: &MeanGCPF) -> Result<Report> {
    let rhs = apply_operator(&z.law, &z.series);
    residual_report("functional_equation", &z.series, &rhs)
}

/// Iterates the operator from `α = 1 + t` until the coefficients through
/// order `T` stop changing.
///
/// The `t^N` coefficient of the operator is `M_N α_N + R_N`, with
/// `M_N = E[Q^{1-N} u_Q^{binom(N,2)}]` and `R_N` depending only on lower
/// coefficients. Plain substitution contracts `α_N` towards the fixed point
/// geometrically and never lands on it exactly, so each step instead solves
/// the diagonal part: `α_N ← (Φ(α)_N - M_N α_N) / (1 - M_N)`. The fixed point
/// is unchanged, and every step makes at least one more order exact.
pub fn fixed_point_iterate(
    law: &BranchingLaw,
    order: usize,
    max_iter: usize,
) -> Result<TruncSeries> {
    Ok(fixed_point_trace(law, order, max_iter)?
        .pop()
        .expect("trace holds the final iterate"))
}

/// Compares the fixed-point iterate with the recursion coefficientwise.
pub fn verify_fixed_point(law: &BranchingLaw, order: usize, max_iter: usize) -> Result<Report> {
    let z = mean_gcpf(law, order)?;
    let it = fixed_point_iterate(law, order, max_iter)?;
    residual_report("fixed_point", &z.series, &it)
}

/// Every iterate of [`fixed_point_iterate`], starting with `1 + t`.
pub fn fixed_point_trace(
    law: &BranchingLaw,
    order: usize,
    max_iter: usize,
) -> Result<Vec<TruncSeries>> {
    if order < 1 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let mut gains = Vec::with_capacity(order + 1);
    for n in 0..=order {
        if n < 2 {
            gains.push(None);
            continue;
        }
        let m = RationalFn::from_poly(law.q_moment(n).value);
        let den = &RationalFn::one() - &m;
        if den.is_zero() {
            return Err(Error::DegenerateDenominator { n });
        }
        gains.push(Some((m, den)));
    }
    let mut alpha = TruncSeries::zero(order);
    alpha.set_coeff(0, RationalFn::one());
    alpha.set_coeff(1, RationalFn::one());
    let mut trace = vec![alpha.clone()];
    for _ in 0..max_iter {
        let phi = apply_operator(law, &alpha);
        let mut next = alpha.clone();
        for (n, gain) in gains.iter().enumerate() {
            if let Some((m, den)) = gain {
                let rest = phi.coeff(n) - &(m * alpha.coeff(n));
                next.set_coeff(n, rest.checked_div(den)?.reduced());
            }
        }
        let stable = next
            .coeffs()
            .iter()
            .zip(alpha.coeffs())
            .all(|(a, b)| a == b);
        trace.push(next.clone());
        if stable {
            return Ok(trace);
        }
        alpha = next;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
    })
}

/// `lim_{β→∞} Z̄(β, t) = E[(1 + t/Q)^Q | Q > 1]`, exact through order `T`.
pub fn beta_infinity_gcpf(law: &BranchingLaw, order: usize) -> TruncSeries {
    let p_branch: BigRational = law
        .entries()
        .iter()
        .filter(|(q, _)| *q > 1)
        .map(|(_, p)| p.clone())
        .sum();
    let coeffs: Vec<BigRational> = (0..=order)
        .map(|n| {
            let total: BigRational = law
                .entries()
                .iter()
                .filter(|(q, _)| *q > 1)
                .map(|(q, p)| p * binomial_over_power(*q, n))
                .sum();
            total / &p_branch
        })
        .collect();
    TruncSeries::from_rationals(order, &coeffs)
}

/// `binom(q, n) q^{-n}`, the `t^n` coefficient of `(1 + t/q)^q`.
fn binomial_over_power(q: u32, n: usize) -> BigRational {
    if n as u64 > q as u64 {
        return BigRational::zero();
    }
    let mut c = BigInt::one();
    for k in 0..n {
        c = c * BigInt::from(q as u64 - k as u64) / BigInt::from(k as u64 + 1);
    }
    BigRational::new(c, BigInt::from(q).pow(n as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gwz_exact::{rat, Monomial, MultiPoly};

    fn laws() -> Vec<BranchingLaw> {
        vec![
            BranchingLaw::regular(2).unwrap(),
            BranchingLaw::regular(3).unwrap(),
            BranchingLaw::from_fractions(&[(2, 1, 2), (3, 1, 2)]).unwrap(),
            BranchingLaw::two_point(3, rat(1, 2)).unwrap(),
        ]
    }

    fn inv_factorial(n: usize) -> BigRational {
        let f: BigInt = (1..=n as u64).map(BigInt::from).product();
        BigRational::new(BigInt::one(), f)
    }

    fn regular_two_z2() -> RationalFn {
        // 1 / (2(2 - u_2))
        let den =
            &MultiPoly::constant(rat(4, 1)) - &MultiPoly::term(rat(2, 1), Monomial::var_pow(2, 1));
        RationalFn::new(MultiPoly::one(), den).unwrap()
    }

    #[test]
    fn gcpf_examples() {
        let law = BranchingLaw::regular(2).unwrap();
        let z = mean_gcpf(&law, 2).unwrap();
        assert!(z.series.coeff(0).is_one());
        assert!(z.series.coeff(1).is_one());
        assert_eq!(z.series.coeff(2), &regular_two_z2());

        let one = mean_gcpf(
            &BranchingLaw::from_fractions(&[(2, 2, 3), (5, 1, 3)]).unwrap(),
            1,
        )
        .unwrap();
        assert_eq!(one.order(), 1);
        assert!(mean_gcpf(&law, 0).is_err());
    }

    #[test]
    fn beta_zero_is_exponential() {
        for law in laws() {
            let z = mean_gcpf(&law, 7).unwrap();
            for (n, c) in z.series.coeffs().iter().enumerate() {
                assert_eq!(c.eval_at_one().unwrap(), inv_factorial(n), "{law}, N = {n}");
            }
        }
    }

    #[test]
    fn f_bar_examples() {
        let law = BranchingLaw::regular(2).unwrap();
        let z = mean_gcpf(&law, 4).unwrap();
        assert_eq!(f_bar(&law, 1, 4).unwrap().coeffs(), z.series.coeffs());
        let f2 = f_bar(&law, 2, 2).unwrap();
        let expect = regular_two_z2().mul_term(&rat(1, 1), &Monomial::var_pow(2, 1));
        assert_eq!(f2.coeff(2), &expect);
        for q in 1..5 {
            let f = z.f_bar(q);
            assert!(f.coeff(0).is_one() && f.coeff(1).is_one());
        }
    }

    #[test]
    fn functional_equation_holds() {
        for law in laws() {
            let report = verify_functional_equation(&law, 7).unwrap();
            assert!(report.pass, "{law}: {:?}", report.first_failure_order);
            assert_eq!(report.residuals.len(), 8);
        }
    }

    #[test]
    fn functional_equation_detects_wrong_series() {
        let law = BranchingLaw::from_fractions(&[(2, 1, 2), (3, 1, 2)]).unwrap();
        let mut z = mean_gcpf(&law, 5).unwrap();
        let bumped = z.series.coeff(4) + &RationalFn::constant(rat(1, 1000));
        z.series.set_coeff(4, bumped);
        let report = verify_functional_equation_for(&z).unwrap();
        assert!(!report.pass);
        assert_eq!(report.first_failure_order, Some(4));
    }

    #[test]
    fn operator_fixes_the_mean_series() {
        for law in laws() {
            let z = mean_gcpf(&law, 6).unwrap();
            let image = apply_operator(&law, &z.series);
            assert_eq!(image.coeffs(), z.series.coeffs(), "{law}");
        }
    }

    #[test]
    fn fixed_point_matches_recursion() {
        for law in laws() {
            let z = mean_gcpf(&law, 6).unwrap();
            let trace = fixed_point_trace(&law, 6, 20).unwrap();
            assert_eq!(trace.last().unwrap().coeffs(), z.series.coeffs(), "{law}");
            // at most T iterations to stabilize, plus the confirming step
            assert!(trace.len() <= 6 + 1, "{law}: {} iterates", trace.len());
            for (k, it) in trace.iter().enumerate() {
                assert!(it.coeff(0).is_one() && it.coeff(1).is_one());
                // iterate k is exact through order k + 1
                for n in 0..=(k + 1).min(6) {
                    assert_eq!(
                        it.coeff(n),
                        z.series.coeff(n),
                        "{law}: iterate {k}, N = {n}"
                    );
                }
            }
        }
    }

    #[test]
    fn fixed_point_budget_exhaustion() {
        let law = BranchingLaw::regular(2).unwrap();
        assert_eq!(
            fixed_point_iterate(&law, 6, 2).unwrap_err(),
            Error::NoConvergence { iterations: 2 }
        );
    }

    #[test]
    fn beta_infinity_examples() {
        let regular = beta_infinity_gcpf(&BranchingLaw::regular(3).unwrap(), 4);
        let expect = [rat(1, 1), rat(1, 1), rat(1, 3), rat(1, 27), rat(0, 1)];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(regular.coeff(n).as_constant().unwrap(), *e);
        }
        let two_point = beta_infinity_gcpf(&BranchingLaw::two_point(3, rat(1, 4)).unwrap(), 4);
        assert_eq!(two_point.coeffs(), regular.coeffs());

        let mixed = beta_infinity_gcpf(
            &BranchingLaw::from_fractions(&[(2, 1, 2), (3, 1, 2)]).unwrap(),
            3,
        );
        // (1/2)(1 + t + t²/4) + (1/2)(1 + t + t²/3 + t³/27)
        let expect = [rat(1, 1), rat(1, 1), rat(7, 24), rat(1, 54)];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(mixed.coeff(n).as_constant().unwrap(), *e);
        }
    }

    #[test]
    fn large_beta_matches_limit() {
        for law in laws() {
            let table = mean_z_table(&law, 6).unwrap();
            let limit = beta_infinity_gcpf(&law, 6);
            for n in 0..=6 {
                let numeric = table.values()[n].eval_beta(60.0, 1e-12).unwrap();
                let exact = limit.coeff(n).as_constant().unwrap();
                let exact = num_traits::ToPrimitive::to_f64(&exact).unwrap();
                assert!(
                    (numeric - exact).abs() < 1e-6,
                    "{law}, N = {n}: {numeric} vs {exact}"
                );
            }
        }
    }
}
