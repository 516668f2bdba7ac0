//! Exact and numerical tools for the mean partition function of
//! Galton-Watson tree models.

pub mod error;
pub mod genfun;
pub mod gwsim;
pub mod law;
pub mod meanrec;
pub mod quadrec;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
pub use genfun::{
    apply_operator, beta_infinity_gcpf, f_bar, fixed_point_iterate, mean_gcpf, verify_fixed_point,
    verify_functional_equation, MeanGCPF,
};
pub use gwsim::{
    mc_mean_z, mc_mean_z_adaptive, sample_tree, tree_distance, tree_partition, verify_ultrametric,
    AdaptiveDepth, BranchingTree, Enclosure, ExplicitTree, McEstimate, SampledTree,
};
pub use law::{BranchingLaw, QMoment};
pub use meanrec::{
    mean_z, mean_z_numeric, mean_z_sweep, mean_z_table, verify_beta_zero, MeanZTable, SweepPoint,
};
pub use quadrec::{
    conjecture_experiment, glued_occupation, glued_occupation_exact, verify_mean_quadratic,
    verify_mean_quadratic_exact, verify_q_power_identity, verify_regular_quadratic,
    ConjectureObservation, EnergyCostSeq, GluedSystem,
};
pub use report::{Report, Residual};
pub use suite::verify_all;
