//! Offspring laws of the branching process.

use std::collections::BTreeSet;

use gwz_exact::json::{parse_rational, rational_to_string};
use gwz_exact::{pairs, BigInt, BigRational, Monomial, MultiPoly};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite-support law of the child count `Q`, with exact probabilities.
///
/// Valid laws have `p_0 = 0`, distinct support points, probabilities summing
/// to exactly one, and are not concentrated on `q = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BranchingLaw {
    /// Sorted by `q`.
    entries: Vec<(u32, BigRational)>,
}

/// `E[Q^{1-N-β binom(N,2)}]` as a polynomial in the `u_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QMoment {
    pub value: MultiPoly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LawEntryRepr {
    q: u32,
    p: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LawFileRepr {
    law: Vec<LawEntryRepr>,
}

impl BranchingLaw {
    pub fn new(entries: Vec<(u32, BigRational)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (q, p) in &entries {
            if *q == 0 {
                return Err(Error::ZeroChildrenForbidden);
            }
            if !seen.insert(*q) {
                return Err(Error::DuplicateSupport { q: *q });
            }
            if *p <= BigRational::zero() || *p > BigRational::one() {
                return Err(Error::InvalidProbability {
                    q: *q,
                    p: p.to_string(),
                });
            }
        }
        let sum: BigRational = entries.iter().map(|(_, p)| p.clone()).sum();
        if !sum.is_one() {
            return Err(Error::ProbabilitySumNotOne {
                sum: sum.to_string(),
            });
        }
        if entries.iter().all(|(q, _)| *q == 1) {
            return Err(Error::DegenerateLaw);
        }
        let mut entries = entries;
        entries.sort_by_key(|(q, _)| *q);
        Ok(BranchingLaw { entries })
    }

    #[cfg(test)]
    pub(crate) fn unchecked(entries: Vec<(u32, BigRational)>) -> Self {
        BranchingLaw { entries }
    }

    /// Every node has exactly `q` children.
    pub fn regular(q: u32) -> Result<Self> {
        BranchingLaw::new(vec![(q, BigRational::one())])
    }

    /// `q` children with probability `p`, one child otherwise.
    pub fn two_point(q: u32, p: BigRational) -> Result<Self> {
        let rest = BigRational::one() - &p;
        if rest.is_zero() {
            return BranchingLaw::regular(q);
        }
        BranchingLaw::new(vec![(q, p), (1, rest)])
    }

    /// Convenience constructor from `(q, numerator, denominator)` triples.
    pub fn from_fractions(entries: &[(u32, i64, i64)]) -> Result<Self> {
        BranchingLaw::new(
            entries
                .iter()
                .map(|&(q, n, d)| (q, BigRational::new(BigInt::from(n), BigInt::from(d))))
                .collect(),
        )
    }

    pub fn entries(&self) -> &[(u32, BigRational)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|(q, _)| *q)
    }

    pub fn prob(&self, q: u32) -> BigRational {
        self.entries
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn max_q(&self) -> u32 {
        self.entries.last().map(|(q, _)| *q).unwrap_or(1)
    }

    /// The single child count when the law is a point mass.
    pub fn deterministic(&self) -> Option<u32> {
        match self.entries.as_slice() {
            [(q, _)] => Some(*q),
            _ => None,
        }
    }

    /// `E[Q]`.
    pub fn mean_q(&self) -> BigRational {
        self.entries
            .iter()
            .map(|(q, p)| p * BigRational::from_integer(BigInt::from(*q)))
            .sum()
    }

    /// `Σ_q p_q q^{1-N} u_q^{binom(N,2)}`; the `q = 1` term is the constant `p_1`.
    pub fn q_moment(&self, n: usize) -> QMoment {
        assert!(n >= 1, "q_moment needs N >= 1");
        let mut value = MultiPoly::zero();
        for (q, p) in &self.entries {
            let scale = BigRational::new(BigInt::one(), BigInt::from(*q).pow(n as u32 - 1));
            let mono = if *q == 1 {
                Monomial::one()
            } else {
                Monomial::var_pow(*q, pairs(n))
            };
            value.add_term(mono, p * scale);
        }
        QMoment { value }
    }

    /// The mixture `λ·self + (1-λ)·other`.
    pub fn mix(&self, other: &BranchingLaw, lambda: &BigRational) -> Result<BranchingLaw> {
        let mut qs: Vec<u32> = self.support().chain(other.support()).collect();
        qs.sort_unstable();
        qs.dedup();
        let rest = BigRational::one() - lambda;
        let entries = qs
            .into_iter()
            .map(|q| (q, lambda * self.prob(q) + &rest * other.prob(q)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        BranchingLaw::new(entries)
    }

    /// Parses `{"law": [{"q": 2, "p": "1/2"}, ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: LawFileRepr =
            serde_json::from_str(text).map_err(|e| Error::LawFormat(e.to_string()))?;
        let mut entries = Vec::with_capacity(repr.law.len());
        for e in repr.law {
            let p = parse_rational(&e.p).map_err(|err| Error::LawFormat(err.to_string()))?;
            entries.push((e.q, p));
        }
        BranchingLaw::new(entries)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let repr = LawFileRepr {
            law: self
                .entries
                .iter()
                .map(|(q, p)| LawEntryRepr {
                    q: *q,
                    p: rational_to_string(p),
                })
                .collect(),
        };
        serde_json::to_value(repr).expect("law serializes")
    }

    /// Short human-readable form, e.g. `{2: 1/2, 3: 1/2}`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(q, p)| format!("{q}: {p}"))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl std::fmt::Display for BranchingLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}
