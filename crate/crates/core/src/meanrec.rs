//! Mean canonical partition functions `Z̄_N(β)` as exact rational functions
//! of the `u_q = q^{-β}`.
//!
//! Conditioning on the root's child count gives
//!
//! ```text
//! Z̄_N = (1 - E[Q^{1-N} u_Q^{binom(N,2)}])^{-1}
//!       · Σ_q p_q Σ_{N_1+…+N_q = N, N_k < N} Π_k q^{-N_k} u_q^{binom(N_k,2)} Z̄_{N_k}
//! ```
//!
//! with `Z̄_0 = Z̄_1 = 1`. The inner composition sum is the `t^N` coefficient
//! of `G_q(t)^q`, where `G_q(t) = Σ_{n<N} Z̄_n u_q^{binom(n,2)} (t/q)^n`.

use gwz_exact::{
    pairs, rat, BigInt, BigRational, ExactError, Monomial, MultiPoly, RationalFn, TruncSeries,
    DEFAULT_POLE_EPS,
};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::BranchingLaw;
use crate::report::{Report, Residual};

/// Memoized `Z̄_0, …, Z̄_{N_max}` for one law.
#[derive(Debug, Clone)]
pub struct MeanZTable {
    law: BranchingLaw,
    values: Vec<RationalFn>,
    powers: Vec<PowerSeries>,
}

/// Running coefficients of `G_q` and `G_q^q` for one support point `q ≥ 2`,
/// kept up to the current table order.
#[derive(Debug, Clone)]
struct PowerSeries {
    q: u32,
    base: Vec<RationalFn>,
    power: Vec<RationalFn>,
}

impl PowerSeries {
    fn new(q: u32) -> Self {
        let first = RationalFn::constant(rat(1, q as i64));
        PowerSeries {
            q,
            base: vec![RationalFn::one(), first.clone()],
            power: vec![RationalFn::one(), first.scale(&rat(q as i64, 1))],
        }
    }

    /// `[t^n] G_q^q` with the still unknown `t^n` coefficient of `G_q` set to
    /// zero. For `a_0 = 1` and `B = A^k`, `m b_m = Σ_{j=1}^m ((k+1)j - m) a_j b_{m-j}`,
    /// so each step costs `O(n)` products instead of a full series power.
    fn partial(&self, n: usize) -> RationalFn {
        let k = self.q as i64;
        let terms: Vec<RationalFn> = (1..n)
            .into_par_iter()
            .filter_map(|j| {
                let w = (k + 1) * j as i64 - n as i64;
                (w != 0).then(|| (&self.base[j] * &self.power[n - j]).scale(&rat(w, 1)))
            })
            .collect();
        let acc = terms.iter().fold(RationalFn::zero(), |acc, t| &acc + t);
        acc.scale(&rat(1, n as i64))
    }

    /// Records `Z̄_n` and completes the `t^n` coefficient of `G_q^q`.
    fn push(&mut self, z: &RationalFn, partial: RationalFn) {
        let n = self.base.len();
        let a = z.mul_term(
            &BigRational::new(BigInt::one(), BigInt::from(self.q).pow(n as u32)),
            &Monomial::var_pow(self.q, pairs(n)),
        );
        let b = &partial + &a.scale(&rat(self.q as i64, 1));
        self.base.push(a);
        self.power.push(b);
    }

    fn truncated(&self, n_max: usize) -> PowerSeries {
        PowerSeries {
            q: self.q,
            base: self.base[..=n_max].to_vec(),
            power: self.power[..=n_max].to_vec(),
        }
    }
}

impl MeanZTable {
    pub fn new(law: &BranchingLaw) -> Self {
        MeanZTable {
            law: law.clone(),
            values: vec![RationalFn::one(), RationalFn::one()],
            powers: law
                .support()
                .filter(|&q| q >= 2)
                .map(PowerSeries::new)
                .collect(),
        }
    }

    pub fn law(&self) -> &BranchingLaw {
        &self.law
    }

    /// Largest `N` available.
    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[RationalFn] {
        &self.values
    }

    pub fn get(&self, n: usize) -> Option<&RationalFn> {
        self.values.get(n)
    }

    /// Extends the table so that `Z̄_{n_max}` is available.
    pub fn extend_to(&mut self, n_max: usize) -> Result<()> {
        while self.values.len() <= n_max {
            let n = self.values.len();
            if n == 1 {
                self.values.push(RationalFn::one());
                continue;
            }
            let den = &MultiPoly::one() - &self.law.q_moment(n).value;
            if den.is_zero() {
                return Err(Error::DegenerateDenominator { n });
            }
            // q = 1 contributes nothing: its only composition puts all N in one part.
            let partials: Vec<RationalFn> =
                self.powers.par_iter().map(|ps| ps.partial(n)).collect();
            let num = self
                .powers
                .iter()
                .zip(&partials)
                .fold(RationalFn::zero(), |acc, (ps, c)| {
                    &acc + &c.scale(&self.law.prob(ps.q))
                });
            let z = num.checked_div(&RationalFn::from_poly(den))?.reduced();
            for (ps, c) in self.powers.iter_mut().zip(partials) {
                ps.push(&z, c);
            }
            self.values.push(z);
        }
        Ok(())
    }

    /// The values up to `n_max` (the table may hold more).
    pub fn truncated(&self, n_max: usize) -> MeanZTable {
        let n_max = n_max.min(self.n_max());
        if n_max < 1 {
            let mut t = MeanZTable::new(&self.law);
            t.values.truncate(n_max + 1);
            return t;
        }
        MeanZTable {
            law: self.law.clone(),
            values: self.values[..=n_max].to_vec(),
            powers: self.powers.iter().map(|p| p.truncated(n_max)).collect(),
        }
    }
}

/// Coefficient of `t^n` in `(Σ_{k<n} z_k u_q^{binom(k,2)} (t/q)^k)^q`, by a
/// full truncated series power. Slower than the running recurrence kept by
/// [`MeanZTable`]; used as an independent check.
pub fn composition_sum(q: u32, lower: &[RationalFn], n: usize) -> RationalFn {
    let mut coeffs: Vec<RationalFn> = lower[..n].to_vec();
    coeffs.push(RationalFn::zero());
    let g = TruncSeries::new(coeffs).xi(q).rescale(q);
    g.pow(q).coeff(n).clone()
}

/// `Z̄_0, …, Z̄_{n_max}`.
pub fn mean_z_table(law: &BranchingLaw, n_max: usize) -> Result<MeanZTable> {
    let mut table = MeanZTable::new(law);
    table.extend_to(n_max)?;
    Ok(table.truncated(n_max))
}

/// `Z̄_N` as an exact rational function.
pub fn mean_z(law: &BranchingLaw, n: usize) -> Result<RationalFn> {
    Ok(mean_z_table(law, n)?.values[n].clone())
}

/// `Z̄_N(β)` in double precision.
pub fn mean_z_numeric(law: &BranchingLaw, n: usize, beta: f64) -> Result<f64> {
    let z = mean_z(law, n)?;
    Ok(z.eval_beta(beta, DEFAULT_POLE_EPS)?)
}

/// `Z̄_0(β), …, Z̄_{n_max}(β)` by running the recursion directly in doubles at
/// a fixed `β`. Much cheaper than the exact path for large `N`.
pub fn mean_z_direct(law: &BranchingLaw, n_max: usize, beta: f64) -> Result<Vec<f64>> {
    let mut z = vec![1.0; (n_max + 1).min(2)];
    let uq = |q: u32| (q as f64).powf(-beta);
    for n in 2..=n_max {
        let mut num = 0.0;
        let mut moment = 0.0;
        for (q, p) in law.entries() {
            let p = num_traits::ToPrimitive::to_f64(p).unwrap_or(f64::NAN);
            let qf = *q as f64;
            moment += p * qf.powi(1 - n as i32) * uq(*q).powi(pairs(n) as i32);
            if *q < 2 {
                continue;
            }
            let g: Vec<f64> = (0..=n)
                .map(|k| {
                    if k < n {
                        z[k] * uq(*q).powi(pairs(k) as i32) * qf.powi(-(k as i32))
                    } else {
                        0.0
                    }
                })
                .collect();
            num += p * power_coeff(&g, *q, n);
        }
        let den = 1.0 - moment;
        if den.is_nan() || den.abs() <= DEFAULT_POLE_EPS {
            return Err(ExactError::PoleProximity { beta, value: den }.into());
        }
        z.push(num / den);
    }
    Ok(z)
}

/// Coefficient `n` of `g^k`, all series truncated at `n`.
fn power_coeff(g: &[f64], k: u32, n: usize) -> f64 {
    let mul = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        for (i, x) in a.iter().enumerate() {
            if *x == 0.0 {
                continue;
            }
            for (j, y) in b.iter().enumerate().take(n + 1 - i) {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut acc: Option<Vec<f64>> = None;
    let mut base = g.to_vec();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => mul(&a, &base),
            });
        }
        k >>= 1;
        if k > 0 {
            base = mul(&base, &base);
        }
    }
    acc.map(|a| a[n]).unwrap_or(if n == 0 { 1.0 } else { 0.0 })
}

/// Grid and tolerance for locating the first denominator root at `β < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSearch {
    pub step: f64,
    pub beta_min: f64,
    pub tol: f64,
}

impl Default for PoleSearch {
    fn default() -> Self {
        PoleSearch {
            step: 0.01,
            beta_min: -10.0,
            tol: 1e-9,
        }
    }
}

/// Largest `β* < 0` at which a denominator factor of `f` changes sign, found
/// on a grid walking down from 0 and refined by bisection. No claim is made
/// about convergence of the defining integral there.
pub fn denominator_root_hint(f: &RationalFn, search: &PoleSearch) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (factor, _) in f.den_factors() {
        let val = |b: f64| factor.eval_beta(b);
        let mut hi = 0.0;
        let mut v_hi = val(hi);
        if v_hi == 0.0 {
            continue;
        }
        let mut root = None;
        while hi > search.beta_min {
            let lo = (hi - search.step).max(search.beta_min);
            let v_lo = val(lo);
            if v_lo == 0.0 {
                root = Some(lo);
                break;
            }
            if v_lo.signum() != v_hi.signum() {
                let (mut a, mut b) = (lo, hi);
                while b - a > search.tol {
                    let m = 0.5 * (a + b);
                    let vm = val(m);
                    if vm.signum() == v_hi.signum() {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                root = Some(0.5 * (a + b));
                break;
            }
            hi = lo;
            v_hi = v_lo;
        }
        if let Some(r) = root {
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best
}

/// `Z̄_N` at `u_q = 1` against `1/N!` for every `N <= N_max`.
pub fn verify_beta_zero(law: &BranchingLaw, n_max: usize) -> Result<Report> {
    let table = mean_z_table(law, n_max)?;
    let mut fact = BigInt::one();
    let mut residuals = Vec::with_capacity(n_max + 1);
    for (n, z) in table.values().iter().enumerate() {
        if n > 0 {
            fact *= n;
        }
        let diff = z.eval_at_one()? - BigRational::new(BigInt::one(), fact.clone());
        residuals.push(Residual {
            order: n,
            zero: diff.is_zero(),
            value: diff.to_string(),
        });
    }
    Ok(Report::from_residuals("beta_zero", residuals))
}

/// One point of a `β` sweep; `value` is `None` next to a denominator root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub beta: f64,
    pub value: Option<f64>,
}

/// `Z̄_N(β)` on a grid, marking points within [`DEFAULT_POLE_EPS`] of a pole.
pub fn mean_z_sweep(law: &BranchingLaw, n: usize, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    let z = mean_z(law, n)?;
    grid.iter()
        .map(|&beta| {
            if !beta.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite β {beta}")));
            }
            let value = match z.eval_beta(beta, DEFAULT_POLE_EPS) {
                Ok(v) => Some(v),
                Err(ExactError::PoleProximity { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(SweepPoint { beta, value })
        })
        .collect()
}

/// Same as [`mean_z`] but reuses a shared table.
pub fn mean_z_from(table: &mut MeanZTable, n: usize) -> Result<RationalFn> {
    table.extend_to(n)?;
    Ok(table.values[n].clone())
}
