//! Matrix bipolar duality for completely positive maps at finite dimension.
//!
//! Maps `M_m → M_n` are stored by their Choi matrices ([`cpmaps`]), paired
//! with matrix tests `(k, ρ, s)` ([`mtests`]). Saturated-polar suprema over
//! C*-convex combinations reduce to small semidefinite programs ([`sdp`]),
//! and [`polar`] turns those into certified polar membership, separation
//! certificates and bipolar verdicts. [`harness`] drives reproducible
//! experiments and owns the JSON document formats.

pub mod cpmaps;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mtests;
pub mod polar;
pub mod random;
pub mod sdp;

pub use cpmaps::{CPMap, CStarCoefficients, CStarTerm, KrausFamily, Normalization};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianEig, C64};
pub use mtests::{FoldResult, MatrixTest};
