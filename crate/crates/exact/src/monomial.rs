//! Sparse monomials in the variables `u_q`, `q >= 2`.

use std::cmp::Ordering;
use std::fmt;

/// A product `Π u_q^{e_q}` stored as `(q, e_q)` pairs sorted by `q`, with no
/// zero exponents. The empty monomial is the constant `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(u32, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    /// `u_var^exp`. Returns the constant monomial when `exp == 0`.
    pub fn var_pow(var: u32, exp: u32) -> Self {
        assert!(var >= 2, "variable index must be >= 2, got {var}");
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(var, exp)])
        }
    }

    /// Builds a monomial from arbitrary `(var, exp)` pairs, merging repeats
    /// and dropping zero exponents.
    pub fn from_pairs<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Self {
        let mut v: Vec<(u32, u32)> = pairs.into_iter().filter(|&(_, e)| e > 0).collect();
        for &(q, _) in &v {
            assert!(q >= 2, "variable index must be >= 2, got {q}");
        }
        v.sort_unstable_by_key(|&(q, _)| q);
        let mut out: Vec<(u32, u32)> = Vec::with_capacity(v.len());
        for (q, e) in v {
            match out.last_mut() {
                Some(last) if last.0 == q => last.1 += e,
                _ => out.push((q, e)),
            }
        }
        Monomial(out)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&(_, e)| e as u64).sum()
    }

    pub fn exponent(&self, var: u32) -> u32 {
        self.0
            .binary_search_by_key(&var, |&(q, _)| q)
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|&(q, _)| q)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for &(q, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 < q {
                return None;
            }
            if j < other.0.len() && other.0[j].0 == q {
                let f = other.0[j].1;
                if f > e {
                    return None;
                }
                if e > f {
                    out.push((q, e - f));
                }
                j += 1;
            } else {
                out.push((q, e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    pub fn pow(&self, k: u32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|&(q, e)| (q, e * k)).collect())
    }

    /// Evaluates with `u_q := value(q)`.
    pub fn eval_f64(&self, value: impl Fn(u32) -> f64) -> f64 {
        self.0
            .iter()
            .map(|&(q, e)| value(q).powi(e as i32))
            .product()
    }
}

/// Graded lexicographic order: total degree first, then the exponent of the
/// smallest variable index decides (`u_2 > u_3 > ...`).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(qa, ea)), Some(&(qb, eb))) => match qa.cmp(&qb) {
                    // `a` has a smaller variable that `b` lacks.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, &(q, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if e == 1 {
                write!(f, "u{q}")?;
            } else {
                write!(f, "u{q}^{e}")?;
            }
        }
        Ok(())
    }
}
