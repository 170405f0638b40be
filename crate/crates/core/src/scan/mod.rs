//! Two-parameter families, tongue scans and boundary continuation.

mod boundaries;
mod expr;
mod family;
mod grid;

pub use boundaries::{
    curves_csv, parse_curves_csv, seed_from_grid, shrink_candidates, tongue_boundaries,
    width_profile, BoundaryTrace, ContinuationOptions, CurvePoint, StopReason, WidthProfile,
    WidthSample,
};
pub use expr::Expr;
pub use family::{parse_family, FamilySpec};
pub use grid::{
    classify_map, grid_coord, scan_tongues, Cell, CellLabel, ScanOptions, TongueGrid, GRID_HEADER,
};
