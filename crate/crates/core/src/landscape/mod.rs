//! Two-parameter channel families, grid sweeps and the diagnostics run on them.

pub mod analysis;
pub mod family;
pub mod grid;

pub use analysis::{
    argmin_report, corner_basin_diagnostics, diagonal_argmin_check, log_partition_check, near_argmin_psi_check,
    ArgminReport, CornerReport, DiagonalArgminReport, PsiReport, Quantity,
};
pub use family::{biodmc, family_constrained, family_convex, ChannelFamily, ConstrainedParams, ConvexFamily, ConvexParams, FamilyKind};
pub use grid::{sweep, CellRecord, LandscapeGrid, SweepConfig};
