//! Exact algebra over the formal variables `u_q = q^{-β}`.
//!
//! * [`MultiPoly`]: sparse polynomials with [`BigRational`] coefficients,
//!   terms ordered by graded lexicographic order (`u_2 > u_3 > ...`).
//! * [`RationalFn`]: quotients with a factored, monic denominator; equality by
//!   cross-multiplication.
//! * [`TruncSeries`]: power series in `t` truncated at a fixed order, with
//!   the rescaling `t -> t/q` and the Ξ operator.

pub mod error;
pub mod json;
pub mod monomial;
pub mod poly;
pub mod ratfn;
pub mod series;

pub use error::{ExactError, Result};
pub use monomial::Monomial;
pub use num_bigint::BigInt;
pub use num_rational::BigRational;
pub use poly::{rat, MultiPoly};
pub use ratfn::{RationalFn, DEFAULT_POLE_EPS};
pub use series::{pairs, TruncSeries};
