//! Error types shared across the crate.
//!
//! Every failure path names the violated condition in plain terms (which
//! structural bound broke, where, and by how much) so that a batch run can be
//! diagnosed from the log alone.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A structural assumption on the material or the initial data failed.
    #[error("validation failed: {0}")]
    Validation(String),

    /// The wave-speed inversion c(u) = -tau has no root inside `u_domain`.
    #[error(
        "hodograph window exceeded: c(u) = {target:.6e} has no root in \
         u_domain [{lo:.6e}, {hi:.6e}]; enlarge u_domain or reduce delta"
    )]
    HodographWindow { target: f64, lo: f64, hi: f64 },

    /// An iterate left the admissible function class (denominator margin or
    /// weighted-norm bound); the run is invalid past this point.
    #[error(
        "class-membership breach at (tau = {tau:.6e}, y = {y:.6e}): {what} = {value:.6e} \
         violated the floor {floor:.6e}; shrink delta"
    )]
    ClassBreach {
        what: &'static str,
        tau: f64,
        y: f64,
        value: f64,
        floor: f64,
    },

    /// A backward characteristic from a reported node left the buffered domain.
    #[error(
        "domain-of-dependence breach: characteristic from (tau = {tau:.6e}, y = {y:.6e}) \
         reached y = {reached:.6e} outside the buffered domain; grid must be re-buffered"
    )]
    DomainBreach { tau: f64, y: f64, reached: f64 },

    /// A non-finite value appeared while assembling a source term.
    #[error("source assembly failure: term {term} is not finite at (tau = {tau:.6e}, y = {y:.6e})")]
    SourceAssembly {
        term: &'static str,
        tau: f64,
        y: f64,
    },

    /// The weighted distances grew for several consecutive iterations.
    #[error(
        "contraction failure: weighted distance increased for {streak} consecutive \
         iterations (last d = {last_distance:.6e}); shrink delta or lambda"
    )]
    ContractionFailure { streak: usize, last_distance: f64 },

    /// The iteration ran out of its budget without meeting the tolerance.
    #[error("iteration budget exhausted: {iterations} iterations, last d = {last_distance:.6e} > tol")]
    MaxIterations { iterations: usize, last_distance: f64 },

    /// The Jacobian of the hodograph map lost its positivity margin.
    #[error(
        "Jacobian degeneration at (tau = {tau:.6e}, y = {y:.6e}): J = {value:.6e} \
         below the positivity floor {floor:.6e}"
    )]
    JacobianDegeneration {
        tau: f64,
        y: f64,
        value: f64,
        floor: f64,
    },

    /// The rectangular physical sample is not covered by the mapped grid.
    #[error("reconstruction coverage gap: {0}")]
    CoverageGap(String),

    /// Two fields living on different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A malformed configuration file or inconsistent flag set.
    #[error("config error ({field}): {message}")]
    Config { field: String, message: String },

    /// An unparsable arithmetic expression.
    #[error("expression error: {0}")]
    Expr(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
