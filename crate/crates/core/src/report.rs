use serde::Serialize;

/// Outcome of one verification, indexed by order `N` (or by sample for the
/// simulator checks).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub pass: bool,
    pub first_failure_order: Option<usize>,
    pub residuals: Vec<Residual>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub order: usize,
    pub zero: bool,
    pub value: String,
}

impl Report {
    pub fn from_residuals(check: impl Into<String>, residuals: Vec<Residual>) -> Report {
        let first_failure_order = residuals.iter().find(|r| !r.zero).map(|r| r.order);
        Report {
            check: check.into(),
            pass: first_failure_order.is_none(),
            first_failure_order,
            residuals,
        }
    }
}
