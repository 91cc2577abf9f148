//! Constructive solver for a degenerate variational wave system.
//!
//! The system couples two angle fields through a wave speed that vanishes on
//! the initial line, which makes the Cauchy problem parabolic-degenerate
//! there. This crate follows the constructive route: a partial hodograph
//! transformation trades time for the wave speed itself, the transformed
//! Riemann-invariant system is homogenized so that the unknowns vanish to
//! second order on the degenerate line, and the resulting integral system is
//! solved by fixed-point iteration along characteristics in a tau^2-weighted
//! metric. The converged fields are mapped back to physical variables, where
//! independent consistency identities and the PDE residuals of the original
//! system quantify the reconstruction.
//!
//! Module map:
//! - [`expr`], [`material`], [`scenario`]: material models, initial data,
//!   validation of the structural assumptions, derived boundary data.
//! - [`source`]: coefficients of the homogenized system and the assembled
//!   right-hand sides, with analytically controlled small-tau limits.
//! - [`crosscheck`]: an independent re-derivation route for every
//!   coefficient family.
//! - [`grid`], [`solver`], [`oracle`]: the discretized strip, the
//!   characteristic fixed-point iteration with contraction monitoring, and
//!   the y-independent ODE reference.
//! - [`reconstruct`]: physical variables, the time map, and residuals.
//! - [`config`], [`pipeline`], [`report`]: the batch front end.

pub mod config;
pub mod crosscheck;
pub mod error;
pub mod expr;
pub mod grid;
pub mod material;
pub mod oracle;
pub mod pipeline;
pub mod reconstruct;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod source;

pub use error::{Error, Result};
