//! Rational functions in the `u_q` with a partially factored denominator.
//!
//! The denominator is stored as a product of monic, non-constant polynomial
//! factors with multiplicities. Factors are only ever matched by exact
//! equality, so sums use the least common multiple of the two factor lists
//! and no multivariate gcd is needed. Equality is decided by
//! cross-multiplication.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{ExactError, Result};
use crate::monomial::Monomial;
use crate::poly::MultiPoly;

/// Default `ε_pole` for numeric evaluation.
pub const DEFAULT_POLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Default)]
pub struct RationalFn {
    num: MultiPoly,
    /// Sorted, distinct, monic, non-constant factors with positive
    /// multiplicities. Empty when `num` is zero.
    den: Vec<(MultiPoly, u32)>,
}

impl RationalFn {
    pub fn zero() -> Self {
        RationalFn::default()
    }

    pub fn one() -> Self {
        RationalFn::from_poly(MultiPoly::one())
    }

    pub fn from_poly(num: MultiPoly) -> Self {
        RationalFn {
            num,
            den: Vec::new(),
        }
    }

    pub fn constant(c: BigRational) -> Self {
        RationalFn::from_poly(MultiPoly::constant(c))
    }

    /// `num / den`.
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        let mut out = RationalFn::from_poly(num);
        out.push_factor(den, 1);
        Ok(out)
    }

    /// Builds from a numerator and an explicit list of denominator factors.
    pub fn from_factors<I>(num: MultiPoly, factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiPoly, u32)>,
    {
        let mut out = RationalFn::from_poly(num);
        for (f, m) in factors {
            if f.is_zero() {
                return Err(ExactError::DivisionByZero);
            }
            out.push_factor(f, m);
        }
        Ok(out)
    }

    pub fn numer(&self) -> &MultiPoly {
        &self.num
    }

    pub fn den_factors(&self) -> &[(MultiPoly, u32)] {
        &self.den
    }

    /// The expanded denominator. Its leading coefficient is 1.
    pub fn denom(&self) -> MultiPoly {
        self.den
            .iter()
            .fold(MultiPoly::one(), |acc, (f, m)| &acc * &f.pow(*m))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    /// The value when this is a constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    /// The constant this equals, detected by comparing leading terms, even
    /// when numerator and denominator share factors that were never cancelled.
    pub fn constant_value(&self) -> Option<BigRational> {
        if self.den.is_empty() {
            return self.num.as_constant();
        }
        let den = self.denom();
        let (_, a) = self.num.leading_term()?;
        let (_, b) = den.leading_term()?;
        let c = a / b;
        (self.num == den.scale(&c)).then_some(c)
    }

    /// Multiplies the denominator by `f^m`, normalizing `f` to be monic and
    /// moving constants into the numerator.
    fn push_factor(&mut self, f: MultiPoly, m: u32) {
        if m == 0 {
            return;
        }
        if let Some(c) = f.as_constant() {
            let inv = num_traits::pow(c.recip(), m as usize);
            self.num = self.num.scale(&inv);
            return;
        }
        // Split off factors already present so repeated factors share a slot.
        let mut f = f;
        for i in 0..self.den.len() {
            while f.total_degree() > 0 && f.len() > 1 {
                match f.div_exact(&self.den[i].0) {
                    Some(rest) => {
                        self.den[i].1 += m;
                        f = rest;
                    }
                    None => break,
                }
            }
        }
        if let Some(c) = f.as_constant() {
            let inv = num_traits::pow(c.recip(), m as usize);
            self.num = self.num.scale(&inv);
            return;
        }
        let (f, lc) = f.monic();
        if !lc.is_one() {
            let inv = num_traits::pow(lc.recip(), m as usize);
            self.num = self.num.scale(&inv);
        }
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        match self.den.binary_search_by(|(g, _)| g.cmp(&f)) {
            Ok(i) => self.den[i].1 += m,
            Err(i) => self.den.insert(i, (f, m)),
        }
    }

    /// Least common multiple of two factor lists.
    fn lcm(a: &[(MultiPoly, u32)], b: &[(MultiPoly, u32)]) -> Vec<(MultiPoly, u32)> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, _) => std::cmp::Ordering::Greater,
            };
            match ord {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1.max(b[j].1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    /// Product of the factors of `lcm` missing from `part`.
    fn cofactor(part: &[(MultiPoly, u32)], lcm: &[(MultiPoly, u32)]) -> MultiPoly {
        let mut acc = MultiPoly::one();
        for (f, m) in lcm {
            let have = part
                .binary_search_by(|(g, _)| g.cmp(f))
                .map(|i| part[i].1)
                .unwrap_or(0);
            if *m > have {
                acc = &acc * &f.pow(m - have);
            }
        }
        acc
    }

    fn add_impl(&self, rhs: &RationalFn, negate: bool) -> RationalFn {
        let rnum = if negate { -&rhs.num } else { rhs.num.clone() };
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return RationalFn {
                num: rnum,
                den: rhs.den.clone(),
            };
        }
        if self.den == rhs.den {
            let num = &self.num + &rnum;
            let den = if num.is_zero() {
                Vec::new()
            } else {
                self.den.clone()
            };
            return RationalFn { num, den };
        }
        let lcm = RationalFn::lcm(&self.den, &rhs.den);
        let a = &self.num * &RationalFn::cofactor(&self.den, &lcm);
        let b = &rnum * &RationalFn::cofactor(&rhs.den, &lcm);
        let num = &a + &b;
        let den = if num.is_zero() { Vec::new() } else { lcm };
        RationalFn { num, den }
    }

    pub fn checked_div(&self, rhs: &RationalFn) -> Result<RationalFn> {
        if rhs.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        // (a/B) / (c/D) = a (D/g) / (c (B/g)) with g the shared factors
        let mut den = self.den.clone();
        let mut extra = MultiPoly::one();
        for (f, m) in &rhs.den {
            let mut m = *m;
            if let Ok(i) = den.binary_search_by(|(g, _)| g.cmp(f)) {
                let k = den[i].1.min(m);
                den[i].1 -= k;
                m -= k;
            }
            if m > 0 {
                extra = &extra * &f.pow(m);
            }
        }
        den.retain(|(_, m)| *m > 0);
        let mut out = RationalFn {
            num: &self.num * &extra,
            den,
        };
        if out.num.is_zero() {
            out.den.clear();
            return Ok(out);
        }
        out.push_factor(rhs.num.clone(), 1);
        Ok(out)
    }

    /// Multiplicative inverse.
    pub fn recip(&self) -> Result<RationalFn> {
        RationalFn::one().checked_div(self)
    }

    pub fn scale(&self, c: &BigRational) -> RationalFn {
        if c.is_zero() {
            return RationalFn::zero();
        }
        RationalFn {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Multiplies by `c · m` for a monomial `m`.
    pub fn mul_term(&self, c: &BigRational, m: &Monomial) -> RationalFn {
        if c.is_zero() {
            return RationalFn::zero();
        }
        RationalFn {
            num: self.num.mul_term(c, m),
            den: self.den.clone(),
        }
    }

    pub fn mul_poly(&self, p: &MultiPoly) -> RationalFn {
        let num = &self.num * p;
        let den = if num.is_zero() {
            Vec::new()
        } else {
            self.den.clone()
        };
        RationalFn { num, den }
    }

    /// Cancels denominator factors that divide the numerator exactly.
    pub fn reduce(&mut self) {
        let mut kept = Vec::with_capacity(self.den.len());
        for (f, mut m) in std::mem::take(&mut self.den) {
            while m > 0 {
                match self.num.div_exact(&f) {
                    Some(q) => {
                        self.num = q;
                        m -= 1;
                    }
                    None => break,
                }
            }
            if m > 0 {
                kept.push((f, m));
            }
        }
        self.den = kept;
    }

    pub fn reduced(mut self) -> RationalFn {
        self.reduce();
        self
    }

    /// Numeric value of the denominator with `u_q := q^{-beta}`.
    pub fn denom_at(&self, beta: f64) -> f64 {
        self.den
            .iter()
            .map(|(f, m)| f.eval_beta(beta).powi(*m as i32))
            .product()
    }

    /// Value at `u_q := q^{-beta}` in double precision.
    pub fn eval_beta(&self, beta: f64, pole_eps: f64) -> Result<f64> {
        let d = self.denom_at(beta);
        if d.is_nan() || d.abs() <= pole_eps {
            return Err(ExactError::PoleProximity { beta, value: d });
        }
        Ok(self.num.eval_beta(beta) / d)
    }

    /// Exact value with `u_q := value(q)`.
    pub fn eval_exact(&self, value: impl Fn(u32) -> BigRational) -> Result<BigRational> {
        let mut d = BigRational::one();
        for (f, m) in &self.den {
            d *= num_traits::pow(f.eval_exact(&value), *m as usize);
        }
        if d.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        Ok(self.num.eval_exact(&value) / d)
    }

    /// Exact value at `u_q := 1` (that is, `beta = 0`).
    pub fn eval_at_one(&self) -> Result<BigRational> {
        self.eval_exact(|_| BigRational::one())
    }

    /// Sorted list of variable indices appearing anywhere.
    pub fn vars(&self) -> Vec<u32> {
        let mut v = self.num.vars();
        for (f, _) in &self.den {
            v.extend(f.vars());
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Total number of stored terms, as a rough size measure.
    pub fn size(&self) -> usize {
        self.num.len() + self.den.iter().map(|(f, _)| f.len()).sum::<usize>()
    }
}

impl PartialEq for RationalFn {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        let lcm = RationalFn::lcm(&self.den, &other.den);
        let a = &self.num * &RationalFn::cofactor(&self.den, &lcm);
        let b = &other.num * &RationalFn::cofactor(&other.den, &lcm);
        a == b
    }
}

impl From<MultiPoly> for RationalFn {
    fn from(p: MultiPoly) -> Self {
        RationalFn::from_poly(p)
    }
}

impl From<BigRational> for RationalFn {
    fn from(c: BigRational) -> Self {
        RationalFn::constant(c)
    }
}

impl From<i64> for RationalFn {
    fn from(c: i64) -> Self {
        RationalFn::from_poly(MultiPoly::from(c))
    }
}

impl Add for &RationalFn {
    type Output = RationalFn;
    fn add(self, rhs: &RationalFn) -> RationalFn {
        self.add_impl(rhs, false)
    }
}

impl Sub for &RationalFn {
    type Output = RationalFn;
    fn sub(self, rhs: &RationalFn) -> RationalFn {
        self.add_impl(rhs, true)
    }
}

impl Mul for &RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: &RationalFn) -> RationalFn {
        let num = &self.num * &rhs.num;
        if num.is_zero() {
            return RationalFn::zero();
        }
        let mut out = RationalFn {
            num,
            den: self.den.clone(),
        };
        for (f, m) in &rhs.den {
            match out.den.binary_search_by(|(g, _)| g.cmp(f)) {
                Ok(i) => out.den[i].1 += m,
                Err(i) => out.den.insert(i, (f.clone(), *m)),
            }
        }
        out
    }
}

/// Panics on division by zero; use [`RationalFn::checked_div`] otherwise.
impl Div for &RationalFn {
    type Output = RationalFn;
    fn div(self, rhs: &RationalFn) -> RationalFn {
        self.checked_div(rhs)
            .expect("division by zero rational function")
    }
}

impl Neg for &RationalFn {
    type Output = RationalFn;
    fn neg(self) -> RationalFn {
        RationalFn {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for RationalFn {
            type Output = RationalFn;
            fn $f(self, rhs: RationalFn) -> RationalFn {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for RationalFn {
    type Output = RationalFn;
    fn neg(self) -> RationalFn {
        -&self
    }
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})/", self.num)?;
        let factors: Vec<String> = self
            .den
            .iter()
            .map(|(g, m)| {
                if *m == 1 {
                    format!("({g})")
                } else {
                    format!("({g})^{m}")
                }
            })
            .collect();
        if factors.len() == 1 {
            write!(f, "{}", factors[0])
        } else {
            write!(f, "[{}]", factors.join("*"))
        }
    }
}
