//! Quadratic recurrences: the regular-tree identities, and occupation of a
//! tree `P` glued next to a tree `T` under a common root.
//!
//! For the glued system the mean partition function is, up to a factor `2^N`
//! that cancels everywhere it is used,
//!
//! ```text
//! Z̄_{N,U} ∝ Σ_n w_n Z̄_{n,P} Z̄_{N-n,T},   w_n = e^{-β E_n},
//! E[N_P] = Σ_n n w_n Z̄_{n,P} Z̄_{N-n,T} / Σ_n w_n Z̄_{n,P} Z̄_{N-n,T}.
//! ```

use gwz_exact::{
    pairs, BigInt, BigRational, ExactError, Monomial, MultiPoly, RationalFn, TruncSeries,
    DEFAULT_POLE_EPS,
};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gwsim::{sample_seed, sample_tree, tree_partition_all};
use crate::law::BranchingLaw;
use crate::meanrec::{mean_z_direct, mean_z_table};
use crate::report::{Report, Residual};

/// Energy cost `E_n` of putting `n` particles in `P`, with `E_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergyCostSeq {
    Zero,
    /// `E_n = c n`.
    Linear(BigRational),
    /// `E_n = binom(n,2) log b`, so `e^{-β E_n} = b^{-β binom(n,2)}`.
    PairLog {
        base: BigRational,
    },
    /// Weight `b^{-β binom(n,2) - n}`: the pair-log cost plus the mass factor
    /// `b^{-n}` a subtree hanging one level below the root would carry. For a
    /// regular `q`-ary pair and `b = q` this is the weight of the regular-tree
    /// recurrence, where `E[N_P] = N/(q+1)`.
    SubtreeScaled {
        base: BigRational,
    },
    /// `E_0, E_1, …` given directly.
    Explicit(Vec<BigRational>),
}

impl EnergyCostSeq {
    pub fn explicit(values: Vec<BigRational>) -> Result<EnergyCostSeq> {
        match values.first() {
            Some(e0) if e0.is_zero() => Ok(EnergyCostSeq::Explicit(values)),
            Some(_) => Err(Error::InvalidArgument("E_0 must be 0".into())),
            None => Err(Error::InvalidArgument("empty cost list".into())),
        }
    }

    fn check_base(base: &BigRational) -> Result<()> {
        if !base.is_positive() {
            return Err(Error::InvalidArgument(format!(
                "cost base must be positive, got {base}"
            )));
        }
        Ok(())
    }

    pub fn pair_log(base: BigRational) -> Result<EnergyCostSeq> {
        EnergyCostSeq::check_base(&base)?;
        Ok(EnergyCostSeq::PairLog { base })
    }

    pub fn subtree_scaled(base: BigRational) -> Result<EnergyCostSeq> {
        EnergyCostSeq::check_base(&base)?;
        Ok(EnergyCostSeq::SubtreeScaled { base })
    }

    /// `e^{-β E_n}` in double precision.
    pub fn weight(&self, n: usize, beta: f64) -> Result<f64> {
        let f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
        let pn = pairs(n) as f64;
        Ok(match self {
            EnergyCostSeq::Zero => 1.0,
            EnergyCostSeq::Linear(c) => (-beta * f(c) * n as f64).exp(),
            EnergyCostSeq::PairLog { base } => f(base).powf(-beta * pn),
            EnergyCostSeq::SubtreeScaled { base } => f(base).powf(-beta * pn - n as f64),
            EnergyCostSeq::Explicit(e) => {
                let en = e.get(n).ok_or_else(|| {
                    Error::InvalidArgument(format!("cost list has no entry for n = {n}"))
                })?;
                (-beta * f(en)).exp()
            }
        })
    }

    /// `e^{-β E_n}` as a polynomial in the `u_q`, when it is one.
    pub fn weight_exact(&self, n: usize) -> Result<MultiPoly> {
        let mono = |base: &BigRational| -> Result<(Monomial, BigRational)> {
            if !base.is_integer() {
                return Err(Error::UnsupportedExactCost);
            }
            let b = base
                .to_integer()
                .to_u32()
                .ok_or(Error::UnsupportedExactCost)?;
            let m = if b == 1 {
                Monomial::one()
            } else {
                Monomial::var_pow(b, pairs(n))
            };
            Ok((
                m,
                BigRational::new(BigInt::one(), BigInt::from(b).pow(n as u32)),
            ))
        };
        match self {
            EnergyCostSeq::Zero => Ok(MultiPoly::one()),
            EnergyCostSeq::Linear(c) if c.is_zero() => Ok(MultiPoly::one()),
            EnergyCostSeq::Explicit(e) if e.iter().all(Zero::is_zero) => Ok(MultiPoly::one()),
            EnergyCostSeq::PairLog { base } => {
                let (m, _) = mono(base)?;
                Ok(MultiPoly::term(BigRational::one(), m))
            }
            EnergyCostSeq::SubtreeScaled { base } => {
                let (m, scale) = mono(base)?;
                Ok(MultiPoly::term(scale, m))
            }
            _ => Err(Error::UnsupportedExactCost),
        }
    }

    pub fn label(&self) -> String {
        match self {
            EnergyCostSeq::Zero => "zero".into(),
            EnergyCostSeq::Linear(c) => format!("linear:{c}"),
            EnergyCostSeq::PairLog { base } => format!("pairlog:{base}"),
            EnergyCostSeq::SubtreeScaled { base } => format!("scaled:{base}"),
            EnergyCostSeq::Explicit(e) => {
                let parts: Vec<String> = e.iter().map(|x| x.to_string()).collect();
                format!("explicit:{}", parts.join(","))
            }
        }
    }
}

/// `T` and `P` hung below a common root, with `N` particles.
#[derive(Debug, Clone)]
pub struct GluedSystem {
    pub law_t: BranchingLaw,
    pub law_p: BranchingLaw,
    pub costs: EnergyCostSeq,
    pub n: usize,
}

impl GluedSystem {
    pub fn new(law_t: BranchingLaw, law_p: BranchingLaw, costs: EnergyCostSeq, n: usize) -> Self {
        GluedSystem {
            law_t,
            law_p,
            costs,
            n,
        }
    }

    /// Both halves drawn from the same law.
    pub fn symmetric(law: BranchingLaw, costs: EnergyCostSeq, n: usize) -> Self {
        GluedSystem::new(law.clone(), law, costs, n)
    }

    /// `w_n Z̄_{n,P} Z̄_{N-n,T}` for `n = 0..=N`, in double precision.
    fn numeric_terms(&self, beta: f64) -> Result<Vec<f64>> {
        let zt = mean_z_direct(&self.law_t, self.n, beta)?;
        let zp = mean_z_direct(&self.law_p, self.n, beta)?;
        (0..=self.n)
            .map(|n| Ok(self.costs.weight(n, beta)? * zp[n] * zt[self.n - n]))
            .collect()
    }

    fn exact_terms(&self) -> Result<Vec<RationalFn>> {
        let zt = mean_z_table(&self.law_t, self.n)?;
        let zp = if self.law_p.entries() == self.law_t.entries() {
            zt.clone()
        } else {
            mean_z_table(&self.law_p, self.n)?
        };
        (0..=self.n)
            .into_par_iter()
            .map(|n| {
                let w = self.costs.weight_exact(n)?;
                Ok((&zp.values()[n] * &zt.values()[self.n - n]).mul_poly(&w))
            })
            .collect()
    }
}

fn occupation_from_terms(terms: &[f64], beta: f64) -> Result<f64> {
    let total: f64 = terms.iter().sum();
    if total.is_nan() || total.abs() <= DEFAULT_POLE_EPS {
        return Err(ExactError::PoleProximity { beta, value: total }.into());
    }
    let weighted: f64 = terms.iter().enumerate().map(|(n, t)| n as f64 * t).sum();
    Ok(weighted / total)
}

/// `E[N_P]` at inverse temperature `β`.
pub fn glued_occupation(sys: &GluedSystem, beta: f64) -> Result<f64> {
    occupation_from_terms(&sys.numeric_terms(beta)?, beta)
}

/// `E[N_P]` as a rational function of the `u_q`. Needs costs whose Boltzmann
/// weights are monomials: zero, pair-log or subtree-scaled with an integer base.
pub fn glued_occupation_exact(sys: &GluedSystem) -> Result<RationalFn> {
    let terms = sys.exact_terms()?;
    let total = terms.iter().fold(RationalFn::zero(), |acc, t| &acc + t);
    let weighted = terms
        .iter()
        .enumerate()
        .fold(RationalFn::zero(), |acc, (n, t)| {
            &acc + &t.scale(&BigRational::from_integer(BigInt::from(n)))
        });
    let ratio = weighted.checked_div(&total)?;
    Ok(match ratio.constant_value() {
        Some(c) => RationalFn::constant(c),
        None => ratio,
    })
}

/// `Σ_n (E[N_P] - n) w_n Z̄_{n,P} Z̄_{N-n,T}` in double precision, with
/// `E[N_P]` from [`glued_occupation`]. Passes when the sum is within `1e-10`
/// of the sum of absolute terms.
pub fn verify_mean_quadratic(sys: &GluedSystem, beta: f64) -> Result<Report> {
    let occupation = glued_occupation(sys, beta)?;
    let terms = sys.numeric_terms(beta)?;
    let mut sum = 0.0;
    let mut scale = 0.0;
    for (n, t) in terms.iter().enumerate() {
        let x = (occupation - n as f64) * t;
        sum += x;
        scale += x.abs();
    }
    let residual = Residual {
        order: sys.n,
        zero: sum.abs() <= 1e-10 * scale,
        value: format!("{sum:e}"),
    };
    Ok(Report::from_residuals("mean_quadratic", vec![residual]))
}

/// As [`verify_mean_quadratic`], exactly, with `E[N_P]` from
/// [`glued_occupation_exact`].
pub fn verify_mean_quadratic_exact(sys: &GluedSystem) -> Result<Report> {
    let occupation = glued_occupation_exact(sys)?;
    let terms = sys.exact_terms()?;
    let sum = terms
        .iter()
        .enumerate()
        .fold(RationalFn::zero(), |acc, (n, t)| {
            let coef =
                &occupation - &RationalFn::constant(BigRational::from_integer(BigInt::from(n)));
            &acc + &(&coef * t)
        });
    let residual = Residual {
        order: sys.n,
        zero: sum.is_zero(),
        value: sum.to_string(),
    };
    Ok(Report::from_residuals(
        "mean_quadratic_exact",
        vec![residual],
    ))
}

/// `Σ_n (N/(q+1) - n) u_q^{binom(n,2)} q^{-n} Z_n Z_{N-n}` for the regular
/// `q`-ary tree, exactly, for every `N <= N_max`.
pub fn verify_regular_quadratic(q: u32, n_max: usize) -> Result<Report> {
    if q < 2 {
        return Err(Error::InvalidArgument("q must be at least 2".into()));
    }
    let table = mean_z_table(&BranchingLaw::regular(q)?, n_max)?;
    let z = table.values();
    let residuals = (0..=n_max)
        .into_par_iter()
        .map(|big_n| {
            let share = BigRational::new(BigInt::from(big_n), BigInt::from(q + 1));
            let sum = (0..=big_n).fold(RationalFn::zero(), |acc, n| {
                let coef = &share - &BigRational::from_integer(BigInt::from(n));
                if coef.is_zero() {
                    return acc;
                }
                let weight = &coef / BigRational::from_integer(BigInt::from(q).pow(n as u32));
                let term =
                    (&z[n] * &z[big_n - n]).mul_term(&weight, &Monomial::var_pow(q, pairs(n)));
                &acc + &term
            });
            Residual {
                order: big_n,
                zero: sum.is_zero(),
                value: sum.to_string(),
            }
        })
        .collect();
    Ok(Report::from_residuals("regular_quadratic", residuals))
}

/// `Z_q(t) = F_q(t/q)^q` coefficientwise through order `T`, for the regular
/// `q`-ary tree.
pub fn verify_q_power_identity(q: u32, order: usize) -> Result<Report> {
    if q < 2 {
        return Err(Error::InvalidArgument("q must be at least 2".into()));
    }
    let table = mean_z_table(&BranchingLaw::regular(q)?, order)?;
    let z = TruncSeries::new(table.values().to_vec());
    let rhs = z.xi(q).rescale(q).pow(q);
    let diff = z.sub(&rhs)?;
    let residuals = diff
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| Residual {
            order: n,
            zero: c.is_zero(),
            value: c.to_string(),
        })
        .collect();
    Ok(Report::from_residuals("q_power_identity", residuals))
}

/// Measurements for the open question whether pair-log costs with base
/// `E[Q]` give `E[N_P] = N/(E[Q]+1)` for two independent copies of a tree.
/// Nothing here is asserted.
#[derive(Debug, Clone, Serialize)]
pub struct ConjectureObservation {
    pub law: serde_json::Value,
    pub beta: f64,
    pub n: usize,
    pub mean_q: String,
    /// `N / (E[Q] + 1)`.
    pub conjectured: f64,
    /// `E[N_P]` from the mean partition functions with `E_n = binom(n,2) log E[Q]`.
    pub literal: f64,
    pub literal_gap: f64,
    /// `E[N_P]` with the extra mass factor `E[Q]^{-n}` (subtree-scaled costs).
    pub scaled: f64,
    pub scaled_gap: f64,
    /// Average over sampled tree pairs of the per-pair occupation under the
    /// literal costs, with its standard error.
    pub quenched_mean: f64,
    pub quenched_std_error: f64,
    pub samples: usize,
    pub depth: usize,
    pub seed: u64,
}

/// Per-pair occupation averaged over independently sampled `(T, P)`, using
/// enclosure midpoints of the per-tree partition functions.
fn quenched_occupation(
    law: &BranchingLaw,
    costs: &EnergyCostSeq,
    beta: f64,
    n: usize,
    n_samples: usize,
    depth: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let weights: Vec<f64> = (0..=n)
        .map(|k| costs.weight(k, beta))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let t = sample_tree(law, depth, sample_seed(seed, 2 * i))?;
            let p = sample_tree(law, depth, sample_seed(seed, 2 * i + 1))?;
            let zt = tree_partition_all(&t, n, beta)?;
            let zp = tree_partition_all(&p, n, beta)?;
            let terms: Vec<f64> = (0..=n)
                .map(|k| weights[k] * zp[k].midpoint() * zt[n - k].midpoint())
                .collect();
            occupation_from_terms(&terms, beta)
        })
        .collect::<Result<_>>()?;
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    Ok((mean, (var / m).sqrt()))
}

/// Computes both sides of the conjectured occupation law, plus a quenched
/// Monte Carlo average, and reports the gaps.
pub fn conjecture_experiment(
    law: &BranchingLaw,
    beta: f64,
    n: usize,
    n_samples: usize,
    depth: usize,
    seed: u64,
) -> Result<ConjectureObservation> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(
            "at least 2 samples are needed".into(),
        ));
    }
    let mean_q = law.mean_q();
    let mq = mean_q.to_f64().unwrap_or(f64::NAN);
    let conjectured = n as f64 / (mq + 1.0);
    let literal_costs = EnergyCostSeq::pair_log(mean_q.clone())?;
    let literal = glued_occupation(
        &GluedSystem::symmetric(law.clone(), literal_costs.clone(), n),
        beta,
    )?;
    let scaled_costs = EnergyCostSeq::subtree_scaled(mean_q.clone())?;
    let scaled = glued_occupation(&GluedSystem::symmetric(law.clone(), scaled_costs, n), beta)?;
    let (quenched_mean, quenched_std_error) =
        quenched_occupation(law, &literal_costs, beta, n, n_samples, depth, seed)?;
    Ok(ConjectureObservation {
        law: law.to_json_value(),
        beta,
        n,
        mean_q: mean_q.to_string(),
        conjectured,
        literal,
        literal_gap: (literal - conjectured).abs(),
        scaled,
        scaled_gap: (scaled - conjectured).abs(),
        quenched_mean,
        quenched_std_error,
        samples: n_samples,
        depth,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gwz_exact::rat;

    fn laws() -> Vec<BranchingLaw> {
        vec![
            BranchingLaw::regular(2).unwrap(),
            BranchingLaw::regular(3).unwrap(),
            BranchingLaw::from_fractions(&[(2, 1, 2), (3, 1, 2)]).unwrap(),
            BranchingLaw::from_fractions(&[(2, 2, 3), (5, 1, 3)]).unwrap(),
        ]
    }

    #[test]
    fn regular_quadratic_q2_n2_by_hand() {
        // (2/3) Z_2 - (1/3)(1/2) - (4/3) u_2 (1/4) Z_2 with Z_2 = 1/(2(2 - u_2))
        let z2 = RationalFn::new(
            MultiPoly::one(),
            &MultiPoly::constant(rat(4, 1)) - &MultiPoly::term(rat(2, 1), Monomial::var_pow(2, 1)),
        )
        .unwrap();
        let sum = &(&z2.scale(&rat(2, 3)) - &RationalFn::constant(rat(1, 6)))
            - &z2.mul_term(&rat(1, 3), &Monomial::var_pow(2, 1));
        assert!(sum.is_zero());
        let report = verify_regular_quadratic(2, 2).unwrap();
        assert!(report.pass);
        assert_eq!(report.residuals.len(), 3);
    }

    #[test]
    fn regular_quadratic_holds() {
        for q in [2, 3, 5] {
            let report = verify_regular_quadratic(q, 8).unwrap();
            assert!(report.pass, "q = {q}: {:?}", report.first_failure_order);
        }
    }

    #[test]
    fn q_power_identity_holds() {
        for (q, t) in [(2, 8), (3, 6)] {
            let report = verify_q_power_identity(q, t).unwrap();
            assert!(report.pass, "q = {q}");
            assert!(report.residuals[0].zero && report.residuals[1].zero);
        }
    }

    #[test]
    fn symmetric_zero_cost_occupation_is_half() {
        for law in laws() {
            for n in 1..=6 {
                let sys = GluedSystem::symmetric(law.clone(), EnergyCostSeq::Zero, n);
                let exact = glued_occupation_exact(&sys).unwrap();
                assert_eq!(
                    exact,
                    RationalFn::constant(rat(n as i64, 2)),
                    "{law}, N = {n}"
                );
                let numeric = glued_occupation(&sys, 1.3).unwrap();
                assert!((numeric - n as f64 / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaled_costs_reproduce_regular_occupation() {
        for q in [2u32, 3, 5] {
            let law = BranchingLaw::regular(q).unwrap();
            let costs = EnergyCostSeq::subtree_scaled(rat(q as i64, 1)).unwrap();
            for n in 1..=6 {
                let sys = GluedSystem::symmetric(law.clone(), costs.clone(), n);
                let exact = glued_occupation_exact(&sys).unwrap();
                assert_eq!(
                    exact,
                    RationalFn::constant(rat(n as i64, q as i64 + 1)),
                    "q = {q}, N = {n}"
                );
            }
        }
    }

    #[test]
    fn mean_quadratic_holds() {
        for law in laws() {
            for n in 0..=6 {
                let sys = GluedSystem::symmetric(law.clone(), EnergyCostSeq::Zero, n);
                if n > 0 {
                    assert!(
                        verify_mean_quadratic_exact(&sys).unwrap().pass,
                        "{law}, N = {n}"
                    );
                }
            }
        }
        let law = BranchingLaw::from_fractions(&[(2, 1, 2), (3, 1, 2)]).unwrap();
        for n in 1..=6 {
            let sys = GluedSystem::symmetric(law.clone(), EnergyCostSeq::Linear(rat(1, 1)), n);
            assert!(verify_mean_quadratic(&sys, 1.0).unwrap().pass, "N = {n}");
        }
    }

    #[test]
    fn zero_particles() {
        let sys = GluedSystem::symmetric(BranchingLaw::regular(2).unwrap(), EnergyCostSeq::Zero, 0);
        assert_eq!(glued_occupation(&sys, 1.0).unwrap(), 0.0);
        let report = verify_mean_quadratic(&sys, 1.0).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn occupation_is_bounded() {
        let costs = [
            EnergyCostSeq::Zero,
            EnergyCostSeq::Linear(rat(-2, 1)),
            EnergyCostSeq::Linear(rat(3, 2)),
            EnergyCostSeq::pair_log(rat(5, 2)).unwrap(),
            EnergyCostSeq::explicit(vec![rat(0, 1), rat(1, 3), rat(-1, 1), rat(2, 1), rat(0, 1)])
                .unwrap(),
        ];
        let laws = laws();
        for c in &costs {
            for beta in [0.0, 0.7, 2.0] {
                for n in 1..=4 {
                    let sys = GluedSystem::new(laws[2].clone(), laws[3].clone(), c.clone(), n);
                    let e = glued_occupation(&sys, beta).unwrap();
                    assert!(
                        (0.0..=n as f64).contains(&e),
                        "{} β = {beta} N = {n}: {e}",
                        c.label()
                    );
                }
            }
        }
    }

    #[test]
    fn exact_and_numeric_occupation_agree() {
        let law_t = BranchingLaw::from_fractions(&[(2, 1, 2), (3, 1, 2)]).unwrap();
        let law_p = BranchingLaw::regular(2).unwrap();
        let sys = GluedSystem::new(law_t, law_p, EnergyCostSeq::pair_log(rat(3, 1)).unwrap(), 5);
        let exact = glued_occupation_exact(&sys).unwrap();
        for beta in [0.0, 0.5, 2.0] {
            let a = exact.eval_beta(beta, 1e-12).unwrap();
            let b = glued_occupation(&sys, beta).unwrap();
            assert!((a - b).abs() < 1e-12, "β = {beta}: {a} vs {b}");
        }
    }

    #[test]
    fn unsupported_exact_costs() {
        let law = BranchingLaw::regular(2).unwrap();
        for c in [
            EnergyCostSeq::Linear(rat(1, 1)),
            EnergyCostSeq::pair_log(rat(5, 2)).unwrap(),
            EnergyCostSeq::explicit(vec![rat(0, 1), rat(1, 1)]).unwrap(),
        ] {
            let sys = GluedSystem::symmetric(law.clone(), c, 1);
            assert_eq!(
                glued_occupation_exact(&sys),
                Err(Error::UnsupportedExactCost)
            );
        }
        assert!(EnergyCostSeq::explicit(vec![rat(1, 1)]).is_err());
        let short =
            GluedSystem::symmetric(law, EnergyCostSeq::explicit(vec![rat(0, 1)]).unwrap(), 2);
        assert!(matches!(
            glued_occupation(&short, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn conjecture_observations() {
        // the regular tree: the scaled variant is the proven case
        let obs =
            conjecture_experiment(&BranchingLaw::regular(3).unwrap(), 1.0, 4, 8, 6, 1).unwrap();
        assert!(obs.scaled_gap < 1e-12, "{obs:?}");
        // without the mass factor one particle splits evenly
        let one =
            conjecture_experiment(&BranchingLaw::regular(3).unwrap(), 1.0, 1, 8, 6, 1).unwrap();
        assert!((one.literal - 0.5).abs() < 1e-12);
        // a deterministic environment has no quenched spread
        assert!(obs.quenched_std_error < 1e-12);
        assert!((obs.quenched_mean - obs.literal).abs() < 1e-6);

        let mixed = BranchingLaw::from_fractions(&[(2, 1, 2), (3, 1, 2)]).unwrap();
        let obs = conjecture_experiment(&mixed, 1.0, 4, 200, 6, 7).unwrap();
        assert_eq!(obs.mean_q, "5/2");
        assert!((obs.conjectured - 4.0 / 3.5).abs() < 1e-15);
        assert!(obs.literal.is_finite() && obs.scaled.is_finite() && obs.quenched_mean.is_finite());
    }
}
