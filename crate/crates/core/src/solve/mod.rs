//! Structure-exploiting solvers and the optimality certificate.

mod concavify;
mod design;
mod verify;

pub use concavify::{concavify_solve, AffineBound, ConcavifySolution};
pub(crate) use concavify::{reflect_cfi, reflect_fn, reflect_measure};
pub use design::{
    design_lower_boundary, linearity_check, one_kink_family, outer_value, two_kink_family,
    DesignResult,
};
pub use verify::{
    build_partition, segment_partition, verify_optimality, verify_with_partition, Cell, CellKind,
    CellReport, Partition, VerificationReport,
};
