//! Dense ground truth for small SU(3) chains: explicit monodromy matrices,
//! weight-sector transfer matrices, and eigenvector ratios that do not
//! depend on how Bethe vectors are normalized.

pub mod basis;
pub mod error;
pub mod lattice;
pub mod ratio;
pub mod spectrum;

pub use basis::SectorBasis;
pub use error::{OracleError, Result};
pub use lattice::{
    rtt_defect, sector_transfer, sector_transfer_unnormalized, LatticeOperator, Monodromy,
    MonodromyOrder,
};
pub use ratio::{local_op, ratio_diag, ratio_local, ratio_local_diag, ratio_offdiag};
pub use spectrum::{match_state, probe_points, MatchOptions, MatchedState};

/// Largest chain handled by default.
pub const L_MAX: usize = 6;
