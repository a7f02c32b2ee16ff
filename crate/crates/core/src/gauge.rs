//! The Orlicz-type distance `d(f, g) = inf { t > 0 : sum_i mu_i phi(psi(|f_i - g_i|) / t) <= 1 }`
//! on a finite weighted space, with `(phi, psi)` the minimal factorization.
//!
//! Distances depend on the factorization used; this module always uses the
//! minimal one.

use serde::Serialize;
use thiserror::Error;

use crate::scale::{Factorization, ScaleError, ScaleSpec};
use crate::spaces::{SampleFunction, SpaceError, WeightedSpace};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Cap on bracket doublings before giving up.
pub const MAX_DOUBLINGS: u32 = 60;
/// `|Phi(1) - 1|` allowed for an outer function in [`jensen_compose`].
pub const JENSEN_NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Relative tolerance on `phi_check = Id` for [`orlicz_distance_concave`].
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

const MAX_HALVINGS: u32 = 2100;

#[derive(Debug, Error)]
pub enum GaugeError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error("t must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("modular still exceeds 1 after {doublings} doublings (t = {t}); the difference is not in the Orlicz class at this tabulation")]
    Divergence { doublings: u32, t: f64 },
    #[error("modular never exceeds 1 as t decreases to {t}")]
    Degenerate { t: f64 },
    #[error("convex factor is not the identity, so the scale function is not concave: {0}")]
    NotConcave(String),
    #[error("outer function must satisfy Phi(1) = 1 within {JENSEN_NORMALIZATION_TOLERANCE}, got Phi(1) = {0}")]
    JensenNormalization(f64),
}

impl GaugeError {
    pub fn is_numerical(&self) -> bool {
        match self {
            GaugeError::Divergence { .. } | GaugeError::Degenerate { .. } => true,
            GaugeError::Scale(e) => e.is_numerical(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeResult {
    pub distance: f64,
    pub modular_at_t: f64,
    pub bisection_iterations: u32,
    pub bracket: (f64, f64),
}

impl GaugeResult {
    fn zero() -> Self {
        Self {
            distance: 0.0,
            modular_at_t: 0.0,
            bisection_iterations: 0,
            bracket: (0.0, 0.0),
        }
    }
}

/// Modular value, or a lower bound already above 1 when some argument ran
/// past the convex factor's tabulation.
#[derive(Debug, Clone, Copy)]
enum Level {
    Exact(f64),
    Above(f64),
}

impl Level {
    fn exceeds_one(self) -> bool {
        match self {
            Level::Exact(v) => v > 1.0,
            Level::Above(_) => true,
        }
    }
}

/// One term `phi(y)` of the modular.
#[derive(Debug)]
enum Term {
    Value(f64),
    /// Past the tabulation; a lower bound only.
    Bound(f64, ScaleError),
    /// Past the domain of an outer function, where it is astronomically large.
    Infinite,
}

fn convex_term(fact: &Factorization, y: f64) -> Result<Term, ScaleError> {
    match fact.phi_check(y) {
        Ok(v) => Ok(Term::Value(v)),
        Err(e @ ScaleError::TabulationOverflow { .. }) => Ok(Term::Bound(fact.phi_check_lower_bound(y), e)),
        Err(e) => Err(e),
    }
}

fn level(
    weights: &[f64],
    ys: &[f64],
    t: f64,
    term: &dyn Fn(f64) -> Result<Term, ScaleError>,
) -> Result<Level, ScaleError> {
    let mut sum = 0.0;
    let mut overflow = None;
    for (&w, &y) in weights.iter().zip(ys) {
        if w == 0.0 || y == 0.0 {
            continue;
        }
        match term(y / t)? {
            Term::Value(v) => sum += w * v,
            Term::Bound(v, e) => {
                sum += w * v;
                overflow.get_or_insert(e);
            }
            Term::Infinite => return Ok(Level::Above(f64::INFINITY)),
        }
    }
    match overflow {
        None => Ok(Level::Exact(sum)),
        Some(_) if sum > 1.0 => Ok(Level::Above(sum)),
        Some(e) => Err(e),
    }
}

fn differences(f: &SampleFunction, g: &SampleFunction, space: &WeightedSpace) -> Result<Vec<f64>, SpaceError> {
    f.check_bound(space)?;
    g.check_bound(space)?;
    Ok(f.values().iter().zip(g.values()).map(|(a, b)| (a - b).abs()).collect())
}

fn concave_values(fact: &Factorization, diffs: &[f64], weights: &[f64]) -> Result<Vec<f64>, ScaleError> {
    diffs
        .iter()
        .zip(weights)
        .map(|(&d, &w)| if w == 0.0 { Ok(0.0) } else { fact.psi_hat(d) })
        .collect()
}

/// `sum_i mu_i phi_check(psi_hat(|f_i - g_i|) / t)`.
pub fn modular(
    f: &SampleFunction,
    g: &SampleFunction,
    t: f64,
    fact: &Factorization,
    space: &WeightedSpace,
) -> Result<f64, GaugeError> {
    if !(t > 0.0) {
        return Err(GaugeError::NonPositiveScale(t));
    }
    let diffs = differences(f, g, space)?;
    let ys = concave_values(fact, &diffs, space.weights())?;
    let mut sum = 0.0;
    for (&w, &y) in space.weights().iter().zip(&ys) {
        if w != 0.0 && y != 0.0 {
            sum += w * fact.phi_check(y / t)?;
        }
    }
    Ok(sum)
}

/// The distance between `f` and `g`, by bracket doubling and bisection to
/// relative bracket width `tol`. The reported distance is the upper end of
/// the final bracket, where the modular is at most 1.
pub fn orlicz_distance(
    f: &SampleFunction,
    g: &SampleFunction,
    fact: &Factorization,
    space: &WeightedSpace,
    tol: f64,
) -> Result<GaugeResult, GaugeError> {
    let diffs = differences(f, g, space)?;
    let ys = concave_values(fact, &diffs, space.weights())?;
    let inv = start_inverse(fact, space);
    search(space, &ys, &|y| convex_term(fact, y), inv, tol)
}

/// `phi_check^{-1}(1 / total_mass)`; the pointwise bound
/// `phi(y_i / t) <= 1 / total_mass` makes `y_max / inv` an upper bracket.
fn start_inverse(fact: &Factorization, space: &WeightedSpace) -> f64 {
    fact.phi_check_inverse(1.0 / space.total_mass())
        .unwrap_or_else(|_| fact.phi_check_inv_at_1())
}

/// The Luxemburg gauge `inf { t : sum_i mu_i phi_check(u_i / t) <= 1 }` of
/// nonnegative values `u` in the Orlicz class of the convex factor alone.
pub fn luxemburg_gauge(
    values: &SampleFunction,
    fact: &Factorization,
    space: &WeightedSpace,
    tol: f64,
) -> Result<GaugeResult, GaugeError> {
    values.check_bound(space)?;
    if let Some((index, &value)) = values.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(SpaceError::Negative { what: "values", index, value }.into());
    }
    let inv = start_inverse(fact, space);
    search(space, values.values(), &|y| convex_term(fact, y), inv, tol)
}

fn search(
    space: &WeightedSpace,
    ys: &[f64],
    term: &dyn Fn(f64) -> Result<Term, ScaleError>,
    inv: f64,
    tol: f64,
) -> Result<GaugeResult, GaugeError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(GaugeError::InvalidTolerance(tol));
    }
    let weights = space.weights();
    let y_max = ys
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&y, _)| y)
        .fold(0.0, f64::max);
    if y_max == 0.0 {
        return Ok(GaugeResult::zero());
    }
    let at = |t: f64| level(weights, ys, t, term);
    let mut hi = y_max / inv;
    let mut hi_level = at(hi)?;
    let mut doublings = 0;
    while hi_level.exceeds_one() {
        if doublings == MAX_DOUBLINGS {
            return Err(GaugeError::Divergence { doublings, t: hi });
        }
        hi *= 2.0;
        doublings += 1;
        hi_level = at(hi)?;
    }
    let mut lo = hi;
    let mut halvings = 0;
    loop {
        lo *= 0.5;
        halvings += 1;
        let l = at(lo)?;
        if l.exceeds_one() {
            break;
        }
        hi = lo;
        hi_level = l;
        if halvings == MAX_HALVINGS || lo == 0.0 {
            return Err(GaugeError::Degenerate { t: lo });
        }
    }
    let mut iterations = 0;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let l = at(mid)?;
        if l.exceeds_one() {
            lo = mid;
        } else {
            hi = mid;
            hi_level = l;
        }
    }
    let modular_at_t = match hi_level {
        Level::Exact(v) => v,
        Level::Above(v) => v,
    };
    Ok(GaugeResult {
        distance: hi,
        modular_at_t,
        bisection_iterations: iterations,
        bracket: (lo, hi),
    })
}

/// The distance for `Phi o theta` under the factorization
/// `(Phi o phi_check, psi_hat)` inherited from `theta`:
/// `inf { t : sum_i mu_i Phi(phi_check(psi_hat(|f_i - g_i|) / t)) <= 1 }`.
///
/// This is the form in which `d_{Phi o theta} >= d_theta` holds for
/// probability weights and convex `Phi` with `Phi(1) = 1`. The minimal
/// factorization of `Phi o theta` can differ and break the inequality: for
/// `theta = sqrt` and `Phi(x) = x^2` it gives the `L^1` distance, which is
/// below `sum_i mu_i sqrt|f_i - g_i|` when all differences are below 1.
pub fn orlicz_distance_with_outer(
    f: &SampleFunction,
    g: &SampleFunction,
    fact: &Factorization,
    outer: &ScaleSpec,
    space: &WeightedSpace,
    tol: f64,
) -> Result<GaugeResult, GaugeError> {
    let at_one = outer.eval(1.0, 0)?;
    if (at_one - 1.0).abs() > JENSEN_NORMALIZATION_TOLERANCE {
        return Err(GaugeError::JensenNormalization(at_one));
    }
    let diffs = differences(f, g, space)?;
    let ys = concave_values(fact, &diffs, space.weights())?;
    // None past the outer function's domain cap
    let apply = |v: f64| match outer.eval(v, 0) {
        Ok(x) => Ok(Some(x)),
        Err(ScaleError::Domain { .. }) if v > 1.0 => Ok(None),
        Err(e) => Err(e),
    };
    let term = |y: f64| -> Result<Term, ScaleError> {
        Ok(match convex_term(fact, y)? {
            Term::Value(v) => apply(v)?.map_or(Term::Infinite, Term::Value),
            Term::Bound(v, e) => apply(v)?.map_or(Term::Infinite, |x| Term::Bound(x, e)),
            Term::Infinite => Term::Infinite,
        })
    };
    // Phi(1) = 1, so phi_check^{-1}(1) starts the bracket; doubling fixes the rest
    search(space, &ys, &term, fact.phi_check_inv_at_1(), tol)
}

/// `sum_i mu_i theta(|f_i - g_i|)`, the distance for concave `theta`.
pub fn orlicz_distance_concave(
    f: &SampleFunction,
    g: &SampleFunction,
    fact: &Factorization,
    space: &WeightedSpace,
) -> Result<f64, GaugeError> {
    if !fact.phi_is_identity(IDENTITY_TOLERANCE) {
        return Err(GaugeError::NotConcave(fact.source().to_string()));
    }
    let diffs = differences(f, g, space)?;
    let theta = fact.source();
    let mut sum = 0.0;
    for (&w, &d) in space.weights().iter().zip(&diffs) {
        if w != 0.0 && d != 0.0 {
            sum += w * theta.eval(d, 0)?;
        }
    }
    Ok(sum)
}

/// Convex outer functions with `Phi(1) = 1` for comparing `d_{Phi o theta}`
/// against `d_theta` under probability weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JensenPhi {
    Square,
    Cube,
    /// `2^x - 1`
    ExpBase2,
}

impl JensenPhi {
    pub const ALL: [JensenPhi; 3] = [JensenPhi::Square, JensenPhi::Cube, JensenPhi::ExpBase2];

    pub fn spec(self) -> ScaleSpec {
        match self {
            JensenPhi::Square => ScaleSpec::power(2.0).expect("valid exponent"),
            JensenPhi::Cube => ScaleSpec::power(3.0).expect("valid exponent"),
            JensenPhi::ExpBase2 => ScaleSpec::exp_minus_one_rate(std::f64::consts::LN_2).expect("valid rate"),
        }
    }
}

/// `Phi o theta`, after checking `Phi(1) = 1`.
pub fn jensen_compose(outer: &ScaleSpec, theta: &ScaleSpec) -> Result<ScaleSpec, GaugeError> {
    let at_one = outer.eval(1.0, 0)?;
    if (at_one - 1.0).abs() > JENSEN_NORMALIZATION_TOLERANCE {
        return Err(GaugeError::JensenNormalization(at_one));
    }
    Ok(ScaleSpec::composed(outer.clone(), theta.clone()))
}
