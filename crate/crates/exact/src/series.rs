//! Power series in the fugacity `t`, truncated at a fixed order, with
//! rational-function coefficients.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{ExactError, Result};
use crate::monomial::Monomial;
use crate::ratfn::RationalFn;

/// `binom(n, 2)`, with `binom(0, 2) = binom(1, 2) = 0`.
pub fn pairs(n: usize) -> u32 {
    (n * n.saturating_sub(1) / 2) as u32
}

/// `Σ_{N=0}^{T} a_N t^N`; `coeffs.len() == order + 1` always.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncSeries {
    coeffs: Vec<RationalFn>,
}

impl TruncSeries {
    /// Panics if `coeffs` is empty.
    pub fn new(coeffs: Vec<RationalFn>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a series needs at least the t^0 coefficient"
        );
        TruncSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        TruncSeries {
            coeffs: vec![RationalFn::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = TruncSeries::zero(order);
        s.coeffs[0] = RationalFn::one();
        s
    }

    /// Series with rational constant coefficients, padded or cut to `order`.
    pub fn from_rationals(order: usize, coeffs: &[BigRational]) -> Self {
        let mut s = TruncSeries::zero(order);
        for (n, c) in coeffs.iter().enumerate().take(order + 1) {
            s.coeffs[n] = RationalFn::constant(c.clone());
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &RationalFn {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[RationalFn] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<RationalFn> {
        self.coeffs
    }

    pub fn set_coeff(&mut self, n: usize, c: RationalFn) {
        self.coeffs[n] = c;
    }

    /// Keeps orders `0..=order`, padding with zeros if needed.
    pub fn truncate(&self, order: usize) -> TruncSeries {
        let mut coeffs: Vec<RationalFn> = self.coeffs.iter().take(order + 1).cloned().collect();
        coeffs.resize(order + 1, RationalFn::zero());
        TruncSeries { coeffs }
    }

    fn check_order(&self, other: &TruncSeries) -> Result<()> {
        if self.order() != other.order() {
            return Err(ExactError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &TruncSeries) -> Result<TruncSeries> {
        self.check_order(other)?;
        Ok(TruncSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &TruncSeries) -> Result<TruncSeries> {
        self.check_order(other)?;
        Ok(TruncSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, c: &BigRational) -> TruncSeries {
        TruncSeries {
            coeffs: self.coeffs.iter().map(|a| a.scale(c)).collect(),
        }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &TruncSeries) -> Result<TruncSeries> {
        self.check_order(other)?;
        let order = self.order();
        let mut out = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let mut acc = RationalFn::zero();
            for i in 0..=n {
                let (a, b) = (&self.coeffs[i], &other.coeffs[n - i]);
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                acc = &acc + &(a * b);
            }
            out.push(acc);
        }
        Ok(TruncSeries { coeffs: out })
    }

    /// `self^k` by repeated squaring; `k = 0` gives the unit series.
    pub fn pow(&self, k: u32) -> TruncSeries {
        let mut acc: Option<TruncSeries> = None;
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base).expect("same order"),
                });
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base).expect("same order");
            }
        }
        acc.unwrap_or_else(|| TruncSeries::one(self.order()))
    }

    /// Substitutes `t -> t/q`: the `t^N` coefficient is multiplied by `q^{-N}`.
    pub fn rescale(&self, q: u32) -> TruncSeries {
        assert!(q >= 1, "rescale factor must be positive");
        let mut factor = BigRational::one();
        let step = BigRational::new(BigInt::one(), BigInt::from(q));
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for a in &self.coeffs {
            coeffs.push(a.scale(&factor));
            factor *= &step;
        }
        TruncSeries { coeffs }
    }

    /// The Ξ operator at `z = u_q`: multiplies the `t^N` coefficient by
    /// `u_q^{binom(N,2)}`. For `q = 1` this is the identity (`u_1 = 1`).
    pub fn xi(&self, q: u32) -> TruncSeries {
        if q == 1 {
            return self.clone();
        }
        let one = BigRational::one();
        TruncSeries {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(n, a)| a.mul_term(&one, &Monomial::var_pow(q, pairs(n))))
                .collect(),
        }
    }

    /// Indices of nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len())
            .filter(|&n| !self.coeffs[n].is_zero())
            .collect()
    }
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match n {
                0 => write!(f, "[{a}]")?,
                1 => write!(f, "[{a}]*t")?,
                _ => write!(f, "[{a}]*t^{n}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(t^{})", self.order() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, MultiPoly};

    fn s(order: usize, c: &[(i64, i64)]) -> TruncSeries {
        let r: Vec<BigRational> = c.iter().map(|&(n, d)| rat(n, d)).collect();
        TruncSeries::from_rationals(order, &r)
    }

    fn u(q: u32, e: u32) -> RationalFn {
        RationalFn::from_poly(MultiPoly::term(rat(1, 1), Monomial::var_pow(q, e)))
    }

    #[test]
    fn mul_examples() {
        let a = s(2, &[(1, 1), (1, 1)]);
        assert_eq!(a.mul(&a).unwrap(), s(2, &[(1, 1), (2, 1), (1, 1)]));

        let e = s(3, &[(1, 1), (1, 1), (1, 2), (1, 6)]);
        assert_eq!(e.mul(&e).unwrap(), s(3, &[(1, 1), (2, 1), (2, 1), (4, 3)]));

        assert_eq!(e.mul(&TruncSeries::one(3)).unwrap(), e);
        assert_eq!(
            e.mul(&TruncSeries::one(2)),
            Err(ExactError::OrderMismatch { left: 3, right: 2 })
        );
    }

    #[test]
    fn pow_examples() {
        assert_eq!(
            s(3, &[(1, 1), (1, 1)]).pow(3),
            s(3, &[(1, 1), (3, 1), (3, 1), (1, 1)])
        );
        let a = s(4, &[(2, 1), (-1, 3), (5, 7)]);
        assert_eq!(a.pow(1), a);
        assert_eq!(
            s(2, &[(1, 1), (1, 2)]).pow(2),
            s(2, &[(1, 1), (1, 1), (1, 4)])
        );
        assert_eq!(a.pow(0), TruncSeries::one(4));
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(s(1, &[(1, 1), (1, 1)]).rescale(2), s(1, &[(1, 1), (1, 2)]));
        let a = s(3, &[(2, 1), (-1, 3), (5, 7)]);
        assert_eq!(a.rescale(1), a);
        assert_eq!(
            s(2, &[(0, 1), (0, 1), (1, 1)]).rescale(3),
            s(2, &[(0, 1), (0, 1), (1, 9)])
        );
    }

    #[test]
    fn xi_examples() {
        let a = s(2, &[(1, 1), (1, 1), (1, 1)]);
        let mut expect = s(2, &[(1, 1), (1, 1)]);
        expect.set_coeff(2, u(2, 1));
        assert_eq!(a.xi(2), expect);

        let b = s(1, &[(1, 1), (1, 1)]);
        for q in 1..8 {
            assert_eq!(b.xi(q), b);
        }

        let c = s(3, &[(0, 1), (0, 1), (0, 1), (1, 1)]);
        let mut expect = TruncSeries::zero(3);
        expect.set_coeff(3, u(3, 3));
        assert_eq!(c.xi(3), expect);
    }

    #[test]
    fn pairs_values() {
        assert_eq!(pairs(0), 0);
        assert_eq!(pairs(1), 0);
        assert_eq!(pairs(2), 1);
        assert_eq!(pairs(5), 10);
    }
}
