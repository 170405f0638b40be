//! Periodic solutions, resonance tongues and shrinking points of
//! piecewise-affine continuous maps
//!
//! ```text
//! x' = μb + A_L x   (s ≤ 0)
//! x' = μb + A_R x   (s ≥ 0),   s = e₁ᵀx
//! ```
//!
//! where `A_L` and `A_R` agree in every column but the first.
//!
//! The crate is organised bottom-up:
//!
//! * [`symseq`]: symbol sequences over `{L, R}`, rotational sequences
//!   `S[l,m,n]` and the necklace counting formulas.
//! * [`smallmat`]: a dense kernel for `N ≤ 8` (determinant, adjugate,
//!   solve, eigenvalues).
//! * [`pwamap`]: the map itself, fixed points and the border-collision
//!   classification.
//! * [`cycles`]: `S`-cycles, the stability and border-collision matrices and
//!   the classification of the n-cycle solution system.
//! * [`shrink`]: shrinking-point certificates, invariant polygons and the
//!   two-parameter unfolding.
//! * [`scan`]: expression-defined two-parameter families, tongue scans,
//!   boundary continuation and width profiles.

pub mod cycles;
pub mod error;
pub mod format;
pub mod pwamap;
pub mod roots;
pub mod scan;
pub mod shrink;
pub mod smallmat;
pub mod symseq;

pub use error::{Error, Result};

/// Numerical thresholds shared by every operation that makes a
/// singular/nonsingular or on/off-manifold decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|det M| ≤ sing · max(1, ‖M‖∞^N)` means singular.
    pub sing: f64,
    /// `|s_i| ≤ band · max(1, ‖x_i‖)` means on the switching manifold.
    pub band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sing: 1e-9,
            band: 1e-8,
        }
    }
}
