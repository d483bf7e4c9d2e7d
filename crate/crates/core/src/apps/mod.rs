//! Screening, delegation, contest and persuasion pipelines.

pub mod contest;
pub mod delegation;
pub mod dist;
pub mod mechanism;
pub mod persuasion;
pub mod screening;

pub use contest::{average_allocation, contest_cfi, solve_contest};
pub use delegation::{
    delegation_cfi, delegation_comparative_statics, solve_delegation, theta_star_continuous, DelegationMenu,
};
pub use dist::{DistKind, DistributionSpec};
pub use mechanism::{certify, extract_allocation, right_slopes, Mechanism, SolveOptions};
pub use persuasion::{persuasion_cfi, solve_persuasion_sshaped, x_star_continuous, Contraction, ValueSpec};
pub use screening::{
    default_regions, mu_revenue, mu_welfare, screening_cfi, solve_screening, transfer_revenue, Menu,
    ScreeningObjective,
};
