//! The bundled verification run used by `verify-all`.

use crate::error::Result;
use crate::genfun::{verify_fixed_point, verify_functional_equation};
use crate::law::BranchingLaw;
use crate::meanrec::verify_beta_zero;
use crate::quadrec::{
    verify_mean_quadratic_exact, verify_regular_quadratic, EnergyCostSeq, GluedSystem,
};
use crate::report::{Report, Residual};

/// Iteration cap for the fixed-point check; each step fixes at least one order.
pub const FIXED_POINT_MAX_ITER: usize = 64;

/// `β = 0` identity and symmetric occupation through `N_max`, functional
/// equation and fixed point through order `T`, and the regular quadratic
/// recurrence when the law is deterministic.
pub fn verify_all(law: &BranchingLaw, n_max: usize, order: usize) -> Result<Vec<Report>> {
    let mut reports = vec![
        verify_beta_zero(law, n_max)?,
        verify_functional_equation(law, order)?,
        verify_fixed_point(law, order, FIXED_POINT_MAX_ITER.max(order + 2))?,
    ];
    let mut residuals = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let sys = GluedSystem::symmetric(law.clone(), EnergyCostSeq::Zero, n);
        let r = verify_mean_quadratic_exact(&sys)?;
        residuals.push(Residual {
            order: n,
            zero: r.pass,
            value: r.residuals[0].value.clone(),
        });
    }
    reports.push(Report::from_residuals("symmetric_occupation", residuals));
    if let Some(q) = law.deterministic() {
        reports.push(verify_regular_quadratic(q, n_max)?);
    }
    Ok(reports)
}
