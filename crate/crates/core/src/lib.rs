//! Verification kernels for a family of constructions around model Dehn twists
//! on the cotangent bundle of the round two-sphere.
//!
//! The crate is organised as a stack of small numerical modules:
//!
//! * [`halfint`]: exact half-integer arithmetic used by all index computations.
//! * [`symplectic`]: frames and paths of Lagrangian subspaces of (ℝ^{2n}, ω).
//! * [`maslov`]: crossing-form Maslov index for pairs of Lagrangian paths and
//!   its conjugate-point counting oracle.
//! * [`sphere`]: geodesic flow, circle actions, Jacobi transport, conjugate
//!   points and Morse indices on the round sphere, plus exponential charts.
//! * [`twist`]: compactly supported twist profiles, the model twist, its
//!   square-root isotopy stages, and symplecticity checks for bundle maps.
//! * [`intersections`]: the clean intersection circles of a twisted fiber with
//!   a reference fiber: radii, actions, Morse data and cleanness verification.
//! * [`floer`]: mod-2 bigraded pages, survival bookkeeping, brute-force
//!   boundary enumeration for small filtered complexes, rank feasibility.
//! * [`surgery`]: Lagrangian handles, the figure-eight immersion, branched
//!   covers with their deck transformation and path lifting, correction
//!   two-forms, and the chart-level surgery identities.
//! * [`report`]: machine-readable check results, suite runners and tables.
//!
//! All checks are deterministic: randomized suites draw from a caller-seeded
//! ChaCha stream and every report is byte-stable for a fixed configuration.

pub mod error;
pub mod floer;
pub mod halfint;
pub mod intersections;
pub mod maslov;
pub mod numeric;
pub mod report;
pub mod sampling;
pub mod sphere;
pub mod surgery;
pub mod symplectic;
pub mod twist;

pub use error::Error;
pub use halfint::HalfInt;
pub use symplectic::{LagrangianFrame, LagrangianPath, SymplecticSpace};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
