//! Scale functions and their minimal convex-concave factorizations.

mod factorization;
mod monotone;
mod parse;
mod spec;
mod verify;

pub use factorization::{
    log_grid, minimal_factorization, Factorization, InvariantReport, COMPOSITION_TOLERANCE, DEFAULT_GRID_POINTS,
    DEFAULT_R_MAX, GRID_SPAN, SHAPE_TOLERANCE,
};
pub use monotone::{TabulatedMonotone, INVERSION_TOLERANCE};
pub use spec::{Curvature, ScaleKind, ScaleSpec, ScaleTable, DEFAULT_TABLE_FD_TOLERANCE};
pub use verify::{minimality_gap, verify_factorization, ResidualReport, CANDIDATE_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScaleError {
    #[error("argument {r} outside the domain [0, {cap}]")]
    Domain { r: f64, cap: f64 },
    #[error("argument {r} outside the tabulated range [{lo}, {hi}]")]
    Extrapolation { r: f64, lo: f64, hi: f64 },
    #[error("tabulated derivative is not finite near r = {r}")]
    NonFiniteTabulation { r: f64 },
    #[error("invalid scale function: {0}")]
    InvalidScale(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("not factorizable at this resolution: {0}")]
    NotFactorizable(String),
    #[error(
        "argument {argument} exceeds the convex factor tabulation (limit {limit}); \
         recompute the factorization with r_max >= {required_r_max}"
    )]
    TabulationOverflow {
        argument: f64,
        limit: f64,
        required_r_max: f64,
    },
    #[error("{which} has a zero or non-finite derivative at {at}")]
    ZeroDerivative { at: f64, which: &'static str },
    #[error("candidate is not a concave factor at {at}: {reason}")]
    NotAFactorization { at: f64, reason: String },
    #[error("cannot parse scale spec: {0}")]
    Parse(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl ScaleError {
    /// Whether this error is a numerical failure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ScaleError::NotFactorizable(_) | ScaleError::TabulationOverflow { .. } | ScaleError::NonFiniteTabulation { .. }
        )
    }
}
