use std::cmp::Ordering;

use serde::Serialize;

use super::{OtSolver, TransportError};
use crate::scale::{Factorization, ScaleError, ScaleSpec};
use crate::spaces::{DiscreteMeasure, FiniteMetricSpace, TransportPlan};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
const MAX_DOUBLINGS: u32 = 60;
const MAX_REFINEMENTS: u32 = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WassersteinResult {
    /// Midpoint of the final bracket.
    pub distance: f64,
    /// Optimal plan at the upper end of the final bracket.
    pub optimal_plan: TransportPlan,
    /// `sum_ij q_ij phi(psi(d_ij) / distance)` for the returned plan.
    pub transport_modular_at_w: f64,
    pub lp_solves: u32,
    pub bracket: (f64, f64),
}

/// Both sides of `W <= 1  <=>  min_q sum_ij q_ij theta(d_ij) <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitBallCheck {
    pub distance_at_most_one: bool,
    pub min_cost_at_most_one: bool,
    pub distance: f64,
    pub min_cost: f64,
}

impl UnitBallCheck {
    pub fn agree(&self) -> bool {
        self.distance_at_most_one == self.min_cost_at_most_one
    }
}

/// `psi_hat(d_ij)` for all pairs.
fn concave_costs(space: &FiniteMetricSpace, fact: &Factorization) -> Result<Vec<f64>, ScaleError> {
    space.distances().iter().map(|&d| fact.psi_hat(d)).collect()
}

struct Level {
    value: f64,
    plan: TransportPlan,
}

/// One LP solve at scale `t`. Cells past the convex factor's tabulation get
/// its convexity lower bound, which can only certify `T(t) > 1`.
fn level_at(solver: &mut OtSolver, ys: &[f64], fact: &Factorization, t: f64) -> Result<Level, TransportError> {
    let mut overflow = None;
    let mut substituted = vec![false; ys.len()];
    let mut cost = Vec::with_capacity(ys.len());
    for (k, &y) in ys.iter().enumerate() {
        let c = match fact.phi_check(y / t) {
            Ok(v) => v,
            Err(e @ ScaleError::TabulationOverflow { .. }) => {
                substituted[k] = true;
                overflow.get_or_insert(e);
                fact.phi_check_lower_bound(y / t)
            }
            Err(e) => return Err(e.into()),
        };
        cost.push(c);
    }
    let r = solver.solve(&cost)?;
    if let Some(e) = overflow {
        let uses_bound = r.plan.entries().iter().zip(&substituted).any(|(q, s)| *s && *q > 0.0);
        if r.cost <= 1.0 && uses_bound {
            return Err(e.into());
        }
    }
    Ok(Level {
        value: r.cost,
        plan: r.plan,
    })
}

/// `T(t) = min_q sum_ij q_ij phi_check(psi_hat(d_ij) / t)` and a minimizing plan.
pub fn transport_modular(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    space: &FiniteMetricSpace,
    t: f64,
    fact: &Factorization,
) -> Result<(f64, TransportPlan), TransportError> {
    if !(t > 0.0) {
        return Err(TransportError::NonPositiveScale(t));
    }
    mu.check_on(space)?;
    nu.check_on(space)?;
    let ys = concave_costs(space, fact)?;
    let cost = ys.iter().map(|&y| fact.phi_check(y / t)).collect::<Result<Vec<_>, _>>()?;
    let r = OtSolver::new(mu, nu).solve(&cost)?;
    Ok((r.cost, r.plan))
}

/// `W(mu, nu)` by halving down from a pointwise upper bound, then bisection
/// to relative bracket width `tol`. The LP basis is reused across solves.
pub fn wasserstein_distance(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    space: &FiniteMetricSpace,
    fact: &Factorization,
    tol: f64,
) -> Result<WassersteinResult, TransportError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(TransportError::InvalidTolerance(tol));
    }
    mu.check_on(space)?;
    nu.check_on(space)?;
    // solve in a canonical order so that W(mu, nu) and W(nu, mu) agree bit for bit
    let swap = mu.weights().partial_cmp(nu.weights()) == Some(Ordering::Greater);
    let (a, b) = if swap { (nu, mu) } else { (mu, nu) };
    let mut result = canonical(a, b, space, fact, tol)?;
    if swap {
        result.optimal_plan = result.optimal_plan.transposed();
    }
    Ok(result)
}

fn canonical(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    space: &FiniteMetricSpace,
    fact: &Factorization,
    tol: f64,
) -> Result<WassersteinResult, TransportError> {
    if mu.weights() == nu.weights() {
        return Ok(WassersteinResult {
            distance: 0.0,
            optimal_plan: TransportPlan::diagonal(mu),
            transport_modular_at_w: 0.0,
            lp_solves: 0,
            bracket: (0.0, 0.0),
        });
    }
    let ys = concave_costs(space, fact)?;
    let y_max = ys.iter().copied().fold(0.0, f64::max);
    let mut solver = OtSolver::new(mu, nu);
    let mut solves = 0;
    let mut at = |t: f64| {
        solves += 1;
        level_at(&mut solver, &ys, fact, t)
    };

    let mut hi = y_max / fact.phi_check_inv_at_1();
    let mut hi_level = at(hi)?;
    let mut doublings = 0;
    while hi_level.value > 1.0 {
        if doublings == MAX_DOUBLINGS {
            return Err(TransportError::Divergence { t: hi });
        }
        hi *= 2.0;
        doublings += 1;
        hi_level = at(hi)?;
    }
    let floor = tol * hi;
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if lo < floor {
            // W is below the resolution of the bracket
            lo = 0.0;
            break;
        }
        let l = at(lo)?;
        if l.value > 1.0 {
            break;
        }
        hi = lo;
        hi_level = l;
    }
    let bisect = |lo: &mut f64, hi: &mut f64, hi_level: &mut Level, at: &mut dyn FnMut(f64) -> Result<Level, TransportError>| -> Result<bool, TransportError> {
        let mid = 0.5 * (*lo + *hi);
        if mid <= *lo || mid >= *hi {
            return Ok(false);
        }
        let l = at(mid)?;
        if l.value > 1.0 {
            *lo = mid;
        } else {
            *hi = mid;
            *hi_level = l;
        }
        Ok(true)
    };
    while hi - lo > tol * hi {
        if !bisect(&mut lo, &mut hi, &mut hi_level, &mut at)? {
            break;
        }
    }
    // the plan is optimal at hi; keep going until it is also admissible at the midpoint
    let plan_modular = |plan: &TransportPlan, t: f64| -> Result<f64, TransportError> {
        let mut sum = 0.0;
        for (&q, &y) in plan.entries().iter().zip(&ys) {
            if q > 0.0 {
                sum += q * fact.phi_check(y / t)?;
            }
        }
        Ok(sum)
    };
    let mut refinements = 0;
    let mut modular_at_w = plan_modular(&hi_level.plan, 0.5 * (lo + hi))?;
    while modular_at_w > 1.0 + tol && refinements < MAX_REFINEMENTS {
        if !bisect(&mut lo, &mut hi, &mut hi_level, &mut at)? {
            break;
        }
        refinements += 1;
        modular_at_w = plan_modular(&hi_level.plan, 0.5 * (lo + hi))?;
    }
    Ok(WassersteinResult {
        distance: 0.5 * (lo + hi),
        optimal_plan: hi_level.plan,
        transport_modular_at_w: modular_at_w,
        lp_solves: solves,
        bracket: (lo, hi),
    })
}

/// Compares `W <= 1` against `min_q sum_ij q_ij theta(d_ij) <= 1`, the latter
/// solved directly with `theta` evaluated from `spec`.
pub fn check_unit_ball_equivalence(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    space: &FiniteMetricSpace,
    spec: &ScaleSpec,
    fact: &Factorization,
    tol: f64,
) -> Result<UnitBallCheck, TransportError> {
    let w = wasserstein_distance(mu, nu, space, fact, tol)?;
    let cost = space
        .distances()
        .iter()
        .map(|&d| spec.eval(d, 0))
        .collect::<Result<Vec<_>, _>>()?;
    let direct = OtSolver::new(mu, nu).solve(&cost)?;
    Ok(UnitBallCheck {
        distance_at_most_one: w.distance <= 1.0,
        min_cost_at_most_one: direct.cost <= 1.0,
        distance: w.distance,
        min_cost: direct.cost,
    })
}

/// A coupling whose transport modular at `W(mu, nu)` is at most `1 + tol`.
pub fn optimal_coupling(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    space: &FiniteMetricSpace,
    fact: &Factorization,
    tol: f64,
) -> Result<TransportPlan, TransportError> {
    Ok(wasserstein_distance(mu, nu, space, fact, tol)?.optimal_plan)
}
