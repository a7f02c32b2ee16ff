//! Exact discrete optimal transport and the Wasserstein-type distance
//! `W(mu, nu) = inf { t > 0 : min_q sum_ij q_ij phi(psi(d_ij) / t) <= 1 }`.

mod simplex;
mod wasserstein;

pub use simplex::{solve_ot, OTResult, OtSolver, REDUCED_COST_TOLERANCE};
pub use wasserstein::{
    check_unit_ball_equivalence, optimal_coupling, transport_modular, wasserstein_distance, UnitBallCheck,
    WassersteinResult, DEFAULT_TOLERANCE,
};

use thiserror::Error;

use crate::scale::ScaleError;
use crate::spaces::SpaceError;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error("cost matrix has {got} entries, expected {}x{}", expected.0, expected.1)]
    Dimension { expected: (usize, usize), got: usize },
    #[error("cost[{i}][{j}] is not finite")]
    NonFiniteCost { i: usize, j: usize },
    #[error("simplex made no progress after {pivots} pivots")]
    Stalled { pivots: usize },
    #[error("t must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("transport modular still exceeds 1 at t = {t}")]
    Divergence { t: f64 },
}

impl TransportError {
    pub fn is_numerical(&self) -> bool {
        match self {
            TransportError::Stalled { .. } | TransportError::Divergence { .. } => true,
            TransportError::Scale(e) => e.is_numerical(),
            _ => false,
        }
    }
}
