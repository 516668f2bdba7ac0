//! JSON form of polynomials and rational functions.
//!
//! ```json
//! {"num": [{"exp": {"2": 1}, "coef": "7/24"}], "den": [{"exp": {}, "coef": "1/1"}]}
//! ```
//!
//! Terms are written in descending graded lexicographic order and
//! coefficients as `"a/b"` strings. The denominator is written expanded.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_rational::BigRational;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ExactError, Result};
use crate::monomial::Monomial;
use crate::poly::MultiPoly;
use crate::ratfn::RationalFn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRepr {
    pub exp: BTreeMap<String, u32>,
    pub coef: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFnRepr {
    pub num: Vec<TermRepr>,
    pub den: Vec<TermRepr>,
}

/// Always `"a/b"`, with `b = 1` for integers.
pub fn rational_to_string(c: &BigRational) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

/// Parses `"a/b"` or an integer `"a"`. Decimal notation is rejected.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    if t.contains(['.', 'e', 'E']) {
        return Err(ExactError::Parse(format!(
            "decimal number {s:?} not accepted; write it as a fraction a/b"
        )));
    }
    let r = BigRational::from_str(t)
        .map_err(|_| ExactError::Parse(format!("not a rational number: {s:?}")))?;
    Ok(r)
}

pub fn poly_to_repr(p: &MultiPoly) -> Vec<TermRepr> {
    p.terms()
        .rev()
        .map(|(m, c)| TermRepr {
            exp: m.pairs().iter().map(|&(q, e)| (q.to_string(), e)).collect(),
            coef: rational_to_string(c),
        })
        .collect()
}

pub fn poly_from_repr(terms: &[TermRepr]) -> Result<MultiPoly> {
    let mut p = MultiPoly::zero();
    for t in terms {
        let mut pairs = Vec::with_capacity(t.exp.len());
        for (k, &e) in &t.exp {
            let q: u32 = k
                .parse()
                .map_err(|_| ExactError::Parse(format!("bad variable index {k:?}")))?;
            if q < 2 {
                return Err(ExactError::Parse(format!(
                    "variable index must be >= 2, got {q}"
                )));
            }
            pairs.push((q, e));
        }
        p.add_term(Monomial::from_pairs(pairs), parse_rational(&t.coef)?);
    }
    Ok(p)
}

impl RationalFnRepr {
    pub fn from_ratfn(f: &RationalFn) -> Self {
        RationalFnRepr {
            num: poly_to_repr(f.numer()),
            den: poly_to_repr(&f.denom()),
        }
    }

    pub fn to_ratfn(&self) -> Result<RationalFn> {
        RationalFn::new(poly_from_repr(&self.num)?, poly_from_repr(&self.den)?)
    }
}

impl Serialize for RationalFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalFnRepr::from_ratfn(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RationalFnRepr::deserialize(d)?;
        repr.to_ratfn().map_err(D::Error::custom)
    }
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        poly_to_repr(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<TermRepr>::deserialize(d)?;
        poly_from_repr(&terms).map_err(D::Error::custom)
    }
}
