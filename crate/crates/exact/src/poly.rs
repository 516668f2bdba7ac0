//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::monomial::Monomial;

/// Polynomial in the variables `u_q`. Terms are kept in a map ordered by the
/// graded lexicographic monomial order; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly::default()
    }

    pub fn one() -> Self {
        MultiPoly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        MultiPoly::term(c, Monomial::one())
    }

    pub fn term(c: BigRational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MultiPoly { terms }
    }

    /// The variable `u_q`.
    pub fn var(q: u32) -> Self {
        MultiPoly::term(BigRational::one(), Monomial::var_pow(q, 1))
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, BigRational)>>(terms: I) -> Self {
        let mut p = MultiPoly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The constant value, if the polynomial has no variable terms.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u64 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Sorted list of variable indices that occur.
    pub fn vars(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.terms.keys().flat_map(|m| m.vars()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn mul_term(&self, c: &BigRational, m: &Monomial) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly {
            terms: self.terms.iter().map(|(k, a)| (k.mul(m), a * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Exact quotient `self / divisor`, or `None` when `divisor` does not
    /// divide `self`. The divisor must be nonzero.
    pub fn div_exact(&self, divisor: &MultiPoly) -> Option<MultiPoly> {
        let (lm, lc) = divisor.leading_term().expect("division by zero polynomial");
        if divisor.len() == 1 {
            let inv = lc.recip();
            let mut q = MultiPoly::zero();
            for (m, c) in &self.terms {
                q.terms.insert(m.div(lm)?, c * &inv);
            }
            return Some(q);
        }
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero();
        while let Some((rm, rc)) = rem.leading_term() {
            let m = rm.div(lm)?;
            let c = rc / lc;
            for (dm, dc) in &divisor.terms {
                rem.add_term(dm.mul(&m), -(dc * &c));
            }
            quot.add_term(m, c);
        }
        Some(quot)
    }

    /// Divides by the leading coefficient. Returns the monic polynomial and
    /// the scalar removed. The zero polynomial is returned unchanged with
    /// scalar one.
    pub fn monic(&self) -> (MultiPoly, BigRational) {
        match self.leading_term() {
            None => (self.clone(), BigRational::one()),
            Some((_, lc)) => {
                let lc = lc.clone();
                (self.scale(&lc.recip()), lc)
            }
        }
    }

    /// Evaluates with `u_q := value(q)` in double precision.
    pub fn eval_f64(&self, value: impl Fn(u32) -> f64) -> f64 {
        let mut cache: Vec<(u32, f64)> = Vec::new();
        let mut lookup = |q: u32| -> f64 {
            if let Some(&(_, v)) = cache.iter().find(|(k, _)| *k == q) {
                v
            } else {
                let v = value(q);
                cache.push((q, v));
                v
            }
        };
        let mut sum = 0.0;
        for (m, c) in &self.terms {
            let mv: f64 = m
                .pairs()
                .iter()
                .map(|&(q, e)| lookup(q).powi(e as i32))
                .product();
            sum += c.to_f64().unwrap_or(f64::NAN) * mv;
        }
        sum
    }

    /// Evaluates with `u_q := q^{-beta}`.
    pub fn eval_beta(&self, beta: f64) -> f64 {
        self.eval_f64(|q| (q as f64).powf(-beta))
    }

    /// Exact evaluation with `u_q := value(q)`.
    pub fn eval_exact(&self, value: impl Fn(u32) -> BigRational) -> BigRational {
        let mut sum = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(q, e) in m.pairs() {
                t *= num_traits::pow(value(q), e as usize);
            }
            sum += t;
        }
        sum
    }

    /// Substitutes `u_q := 1` for every variable.
    pub fn eval_at_one(&self) -> BigRational {
        self.terms
            .values()
            .fold(BigRational::zero(), |acc, c| acc + c)
    }
}

impl From<BigRational> for MultiPoly {
    fn from(c: BigRational) -> Self {
        MultiPoly::constant(c)
    }
}

impl From<i64> for MultiPoly {
    fn from(c: i64) -> Self {
        MultiPoly::constant(BigRational::from_integer(BigInt::from(c)))
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        let (big, small) = if self.len() >= rhs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        if self.is_zero() || rhs.is_zero() {
            return MultiPoly::zero();
        }
        if let Some(c) = rhs.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return rhs.scale(&c);
        }
        if let Some(out) = mul_dense(self, rhs) {
            return out;
        }
        let mut out = MultiPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

/// Largest exponent grid the dense product will allocate.
const DENSE_LIMIT: usize = 1 << 24;

/// Integer numerators over one common denominator.
fn cleared(p: &MultiPoly) -> (Vec<(&Monomial, BigInt)>, BigInt) {
    let den = p
        .terms
        .values()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints = p
        .terms
        .iter()
        .map(|(m, c)| (m, c.numer() * (&den / c.denom())))
        .collect();
    (ints, den)
}

/// Product on a dense exponent grid with integer accumulation. Avoids a gcd
/// and a monomial allocation per pair of terms, which dominate the sparse
/// product for the large, fairly dense numerators of the recursion. Returns
/// `None` when the grid would be too large.
fn mul_dense(a: &MultiPoly, b: &MultiPoly) -> Option<MultiPoly> {
    let pairs = a.len().saturating_mul(b.len());
    if pairs < 64 {
        return None;
    }
    let mut vars: Vec<u32> = a.vars();
    vars.extend(b.vars());
    vars.sort_unstable();
    vars.dedup();
    let max_exp = |p: &MultiPoly, v: u32| p.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0);
    let mut strides = Vec::with_capacity(vars.len());
    let mut size: usize = 1;
    for &v in &vars {
        strides.push(size);
        let extent = (max_exp(a, v) + max_exp(b, v)) as usize + 1;
        size = size.checked_mul(extent)?;
        if size > DENSE_LIMIT {
            return None;
        }
    }
    // A mostly empty grid costs more to sweep than the sparse product.
    if size > pairs.saturating_mul(16) {
        return None;
    }
    let index = |m: &Monomial| -> usize {
        m.pairs()
            .iter()
            .map(|&(q, e)| {
                let k = vars.binary_search(&q).expect("variable collected above");
                strides[k] * e as usize
            })
            .sum()
    };
    let (ia, da) = cleared(a);
    let (ib, db) = cleared(b);
    let ia: Vec<(usize, BigInt)> = ia.into_iter().map(|(m, c)| (index(m), c)).collect();
    let ib: Vec<(usize, BigInt)> = ib.into_iter().map(|(m, c)| (index(m), c)).collect();
    let mut grid: Vec<BigInt> = vec![BigInt::zero(); size];
    for (xa, ca) in &ia {
        for (xb, cb) in &ib {
            grid[xa + xb] += ca * cb;
        }
    }
    let den = da * db;
    let extents: Vec<usize> = (0..vars.len())
        .map(|k| strides.get(k + 1).copied().unwrap_or(size) / strides[k])
        .collect();
    let mut terms = BTreeMap::new();
    for (x, c) in grid.into_iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mono = Monomial::from_pairs(
            vars.iter()
                .enumerate()
                .map(|(k, &q)| (q, ((x / strides[k]) % extents[k]) as u32)),
        );
        terms.insert(mono, BigRational::new(c, den.clone()));
    }
    Some(MultiPoly { terms })
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $f(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        -&self
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}
