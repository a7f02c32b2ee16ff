//! Minimal convex-concave factorization `theta = phi_check o psi_hat`.
//!
//! The concave factor is
//!
//! ```text
//! psi_hat(x) = int_0^x exp( int_1^y min(theta'', 0) / theta' dz ) dy
//! ```
//!
//! and the convex factor is `phi_check = theta o psi_hat^{-1}`, tabulated on
//! the image grid `psi_hat(r_k)`. Both integrals are cumulative trapezoid
//! sums on a geometric grid. A cell on which `theta'' <= 0` at both ends is
//! integrated against `d theta` instead of `dy` (the integrand
//! `exp(-int_1^y max(theta'', 0)/theta')` is constant there), so concave
//! stretches of `theta` are reproduced without quadrature error. A cell
//! where the sign of `theta''` changes is split at the sign change.

use super::monotone::TabulatedMonotone;
use super::spec::{Curvature, ScaleSpec, ScaleTable};
use super::ScaleError;

pub const DEFAULT_GRID_POINTS: usize = 2048;
pub const DEFAULT_R_MAX: f64 = 10.0;
/// Smallest positive grid node as a fraction of `r_max`.
pub const GRID_SPAN: f64 = 1e-6;
/// Relative tolerance on discrete second differences of the factors.
pub const SHAPE_TOLERANCE: f64 = 1e-8;
/// Relative tolerance on `phi_check(psi_hat(r_k)) = theta(r_k)` at grid nodes.
pub const COMPOSITION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
enum PhiTail {
    None,
    /// `phi_check` is affine past the tabulation.
    Linear { slope: f64 },
    /// `theta` is convex past `r_max`, so `psi_hat` continues linearly with
    /// this slope and `phi_check(y) = theta(r_max + (y - y_max) / slope)`.
    Continued { psi_slope: f64 },
}

/// Model on the first cell `[0, r_1]`, where a cubic cannot follow
/// infinite slopes at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Head {
    /// `theta` is concave near 0: `psi_hat` is proportional to `theta`.
    Concave,
    /// `psi_hat(r) = psi_hat(r_1) (r / r_1)^b`.
    Power { b: f64 },
}

/// The pair `(phi_check, psi_hat)` as tabulated monotone functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    source: ScaleSpec,
    r_max: f64,
    psi_hat: TabulatedMonotone,
    phi_check: TabulatedMonotone,
    psi_d1: Vec<f64>,
    psi_d2: Vec<f64>,
    phi_d1: Vec<f64>,
    phi_d2: Vec<f64>,
    phi_check_inv_at_1: f64,
    tail: PhiTail,
    head: Head,
    concave_normalized: bool,
}

/// Shape and consistency diagnostics for a [`Factorization`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct InvariantReport {
    /// Largest relative increase of consecutive `psi_hat` slopes (> 0 means non-concave).
    pub concavity_excess: f64,
    /// Largest relative decrease of consecutive `phi_check` slopes (> 0 means non-convex).
    pub convexity_deficit: f64,
    /// Sup over grid nodes of `|phi_check(psi_hat(r)) - theta(r)| / max(theta(r), 1e-12)`.
    pub composition_error: f64,
    /// Same quantity at geometric cell midpoints, excluding the cell at zero.
    pub composition_error_between_nodes: f64,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.concavity_excess <= SHAPE_TOLERANCE
            && self.convexity_deficit <= SHAPE_TOLERANCE
            && self.composition_error <= COMPOSITION_TOLERANCE
    }
}

/// Geometric grid `r_max * 1e-6 .. r_max` with `grid_points` nodes, plus 0.
pub fn log_grid(grid_points: usize, r_max: f64) -> Vec<f64> {
    let r_min = r_max * GRID_SPAN;
    let span = (1.0 / GRID_SPAN).ln();
    let last = (grid_points - 1) as f64;
    let mut grid = Vec::with_capacity(grid_points + 1);
    grid.push(0.0);
    for k in 0..grid_points {
        grid.push(r_min * (span * k as f64 / last).exp());
    }
    grid[grid_points] = r_max;
    grid
}

/// Computes the minimal factorization of `spec` on `[0, r_max]`.
///
/// Factorizations are unique up to `(phi(l x), psi(x) / l)`. The
/// representative returned here has `psi_hat'(1) = 1`, except when `theta`
/// is concave on the whole grid, where it is `(Id, theta)`.
pub fn minimal_factorization(spec: &ScaleSpec, grid_points: usize, r_max: f64) -> Result<Factorization, ScaleError> {
    if grid_points < 3 {
        return Err(ScaleError::InvalidScale(format!("grid_points must be >= 3, got {grid_points}")));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(ScaleError::InvalidScale(format!("r_max must be positive and finite, got {r_max}")));
    }
    if r_max > spec.domain_cap() {
        return Err(ScaleError::Domain {
            r: r_max,
            cap: spec.domain_cap(),
        });
    }
    let grid = log_grid(grid_points, r_max);
    let n = grid.len();

    let mut theta = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    theta[0] = spec.eval(0.0, 0)?;
    for k in 1..n {
        let r = grid[k];
        theta[k] = spec.eval(r, 0)?;
        d1[k] = spec.eval(r, 1)?;
        d2[k] = spec.eval(r, 2)?;
        if !(d1[k].is_finite() && d1[k] > 0.0) {
            return Err(ScaleError::InvalidScale(format!(
                "theta'({r}) = {} is not positive and finite",
                d1[k]
            )));
        }
        if !d2[k].is_finite() {
            return Err(ScaleError::InvalidScale(format!("theta''({r}) = {} is not finite", d2[k])));
        }
        if !(theta[k] > theta[k - 1]) {
            return Err(ScaleError::InvalidScale(format!(
                "theta is not strictly increasing at r = {r} ({} -> {})",
                theta[k - 1],
                theta[k]
            )));
        }
    }
    let d1_zero = spec.eval(0.0, 1).unwrap_or(f64::NAN);
    let d2_zero = spec.eval(0.0, 2).unwrap_or(f64::NAN);

    // log-density of the concave part (neg) and of the convex part (pos)
    let neg: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { d2[k].min(0.0) / d1[k] }).collect();
    let pos: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { d2[k].max(0.0) / d1[k] }).collect();
    let cum_neg = cumulative_trapezoid(&grid, &neg);
    let cum_pos = cumulative_trapezoid(&grid, &pos);

    let anchor = if r_max < 1.0 {
        r_max
    } else if grid[1] > 1.0 {
        grid[1]
    } else {
        1.0
    };
    let j = 1 + (grid[1..].partition_point(|&g| g <= anchor) - 1).min(n - 3);
    let (d1_a, d2_a) = (spec.eval(anchor, 1)?, spec.eval(anchor, 2)?);
    let dx = anchor - grid[j];
    let l_anchor = cum_neg[j] + 0.5 * dx * (neg[j] + d2_a.min(0.0) / d1_a);
    let p_anchor = cum_pos[j] + 0.5 * dx * (pos[j] + d2_a.max(0.0) / d1_a);
    let log_psi_slope: Vec<f64> = cum_neg.iter().map(|c| c - l_anchor).collect();
    let log_phi_slope: Vec<f64> = cum_pos.iter().map(|c| c - p_anchor).collect();

    let concave = (1..n).all(|k| d2[k] <= 0.0);
    // exp(-P)/theta'(anchor): the psi_hat density with respect to d theta
    let dtheta_density = |k: usize| (-log_phi_slope[k]).exp() / d1_a;

    let mut psi_slope = vec![0.0; n];
    for k in 1..n {
        psi_slope[k] = if d2[k] <= 0.0 {
            d1[k] * dtheta_density(k)
        } else {
            log_psi_slope[k].exp()
        };
        if !(psi_slope[k].is_finite() && psi_slope[k] > 0.0) {
            return Err(ScaleError::NotFactorizable(format!(
                "concave factor slope {} at r = {} (inner integral {})",
                psi_slope[k], grid[k], log_psi_slope[k]
            )));
        }
    }

    let mut psi = vec![0.0; n];
    let concave_near_zero = d2[1] <= 0.0 && d2[2] <= 0.0;
    let head;
    if concave_near_zero {
        psi[1] = theta[1] * dtheta_density(1);
        psi_slope[0] = d1_zero * dtheta_density(1);
        head = Head::Concave;
    } else {
        // exp(inner integral) ~ c * y^a on the first cell
        let a = (log_psi_slope[2] - log_psi_slope[1]) / (grid[2] / grid[1]).ln();
        if !(a > -1.0 + 1e-9) || !log_psi_slope[1].is_finite() {
            return Err(ScaleError::NotFactorizable(format!(
                "integral defining the concave factor diverges at 0 (local exponent {a})"
            )));
        }
        psi[1] = grid[1] * log_psi_slope[1].exp() / (1.0 + a);
        head = Head::Power { b: 1.0 + a };
        psi_slope[0] = if a < 0.0 {
            f64::INFINITY
        } else if a == 0.0 {
            log_psi_slope[1].exp()
        } else {
            0.0
        };
    }
    for k in 1..n - 1 {
        let step = match (d2[k] <= 0.0, d2[k + 1] <= 0.0) {
            (true, true) => (theta[k + 1] - theta[k]) * 0.5 * (dtheta_density(k) + dtheta_density(k + 1)),
            (false, false) => (grid[k + 1] - grid[k]) * 0.5 * (psi_slope[k] + psi_slope[k + 1]),
            (left_concave, _) => {
                // split at the inflection; the psi slope is continuous there
                let r_star = inflection(spec, grid[k], grid[k + 1], left_concave)?;
                let theta_star = spec.eval(r_star, 0)?;
                let (c, v) = if left_concave { (k, k + 1) } else { (k + 1, k) };
                let slope_star = spec.eval(r_star, 1)? * dtheta_density(c);
                let concave_part = (theta_star - theta[c]).abs() * dtheta_density(c);
                let convex_part = (grid[v] - r_star).abs() * 0.5 * (slope_star + psi_slope[v]);
                concave_part + convex_part
            }
        };
        psi[k + 1] = psi[k] + step;
    }
    if !psi[n - 1].is_finite() {
        return Err(ScaleError::NotFactorizable(format!(
            "concave factor overflows on [0, {r_max}]"
        )));
    }

    let scale = if concave { d1_a } else { 1.0 };
    for k in 0..n {
        psi[k] *= scale;
        psi_slope[k] *= scale;
    }
    let mut psi_d2: Vec<f64> = (0..n).map(|k| psi_slope[k] * neg[k]).collect();
    psi_d2[0] = {
        let curv = psi_slope[0] * (d2_zero.min(0.0) / d1_zero);
        if curv.is_nan() {
            if psi_slope[0].is_infinite() {
                f64::NEG_INFINITY
            } else {
                psi_d2[1]
            }
        } else {
            curv
        }
    };

    let psi_hat = TabulatedMonotone::new(grid.clone(), psi.clone(), Some(psi_slope.clone()))?;

    let mut phi_slope: Vec<f64> = (0..n).map(|k| d1[k] / psi_slope[k]).collect();
    phi_slope[0] = if d1_zero.is_finite() && psi_slope[0].is_finite() && psi_slope[0] > 0.0 {
        d1_zero / psi_slope[0]
    } else {
        f64::NAN
    };
    let phi_check = TabulatedMonotone::new(psi.clone(), theta.clone(), Some(phi_slope.clone()))?;
    phi_slope[0] = phi_check.slopes()[0];
    let mut phi_d2: Vec<f64> = (0..n)
        .map(|k| d2[k].max(0.0) / (psi_slope[k] * psi_slope[k]))
        .collect();
    if !phi_d2[0].is_finite() {
        phi_d2[0] = phi_d2[1];
    }

    let tail = match spec.curvature_beyond(r_max) {
        Some(Curvature::Linear | Curvature::Concave) => PhiTail::Linear {
            slope: phi_slope[n - 1],
        },
        Some(Curvature::Convex) => PhiTail::Continued {
            psi_slope: psi_slope[n - 1],
        },
        None => PhiTail::None,
    };

    let mut fact = Factorization {
        source: spec.clone(),
        r_max,
        psi_hat,
        phi_check,
        psi_d1: psi_slope,
        psi_d2,
        phi_d1: phi_slope,
        phi_d2,
        phi_check_inv_at_1: f64::NAN,
        tail,
        head,
        concave_normalized: concave,
    };
    fact.phi_check_inv_at_1 = fact.phi_check_inverse(1.0)?;
    Ok(fact)
}

/// Sign change of `theta''` in `(lo, hi)`, by bisection.
fn inflection(spec: &ScaleSpec, mut lo: f64, mut hi: f64, left_concave: bool) -> Result<f64, ScaleError> {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (spec.eval(mid, 2)? <= 0.0) == left_concave {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn cumulative_trapezoid(grid: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for k in 2..grid.len() {
        out[k] = out[k - 1] + 0.5 * (grid[k] - grid[k - 1]) * (f[k] + f[k - 1]);
    }
    out
}

impl Factorization {
    pub fn source(&self) -> &ScaleSpec {
        &self.source
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn grid(&self) -> &[f64] {
        self.psi_hat.knots()
    }

    /// `psi_hat` values at the grid nodes.
    pub fn psi_hat_values(&self) -> &[f64] {
        self.psi_hat.values()
    }

    /// The `phi_check` nodes `y_k = psi_hat(r_k)` and values `theta(r_k)`.
    pub fn phi_check_table(&self) -> (&[f64], &[f64]) {
        (self.phi_check.knots(), self.phi_check.values())
    }

    pub fn psi_hat_interpolant(&self) -> &TabulatedMonotone {
        &self.psi_hat
    }

    pub fn phi_check_interpolant(&self) -> &TabulatedMonotone {
        &self.phi_check
    }

    /// Cached `phi_check^{-1}(1)`.
    pub fn phi_check_inv_at_1(&self) -> f64 {
        self.phi_check_inv_at_1
    }

    /// True when the factorization is `(Id, theta)` because `theta` is
    /// concave on the grid.
    pub fn is_concave_normalized(&self) -> bool {
        self.concave_normalized
    }

    /// Whether `phi_check` is the identity at every node, to relative `tol`.
    pub fn phi_is_identity(&self, tol: f64) -> bool {
        let (y, v) = self.phi_check_table();
        y.iter().zip(v).all(|(a, b)| (a - b).abs() <= tol * a.abs().max(1.0))
    }

    pub fn psi_hat(&self, r: f64) -> Result<f64, ScaleError> {
        if r.is_nan() || r < 0.0 || r > self.r_max {
            return Err(ScaleError::Domain { r, cap: self.r_max });
        }
        let (r1, psi1) = (self.grid()[1], self.psi_hat.values()[1]);
        if r > 0.0 && r < r1 {
            return Ok(match self.head {
                Head::Concave => psi1 * self.source.eval(r, 0)? / self.phi_check.values()[1],
                Head::Power { b } => psi1 * (r / r1).powf(b),
            });
        }
        self.psi_hat.eval(r)
    }

    /// Largest argument covered by the `phi_check` tabulation.
    pub fn phi_check_limit(&self) -> f64 {
        self.phi_check.domain().1
    }

    /// `phi_check(y)`, continued past the tabulation when the source scale
    /// function's curvature there is known.
    pub fn phi_check(&self, y: f64) -> Result<f64, ScaleError> {
        if y.is_nan() || y < 0.0 {
            return Err(ScaleError::Domain { r: y, cap: f64::INFINITY });
        }
        let (_, y_max) = self.phi_check.domain();
        let (y1, v1) = (self.phi_check.knots()[1], self.phi_check.values()[1]);
        if y > 0.0 && y < y1 {
            return match self.head {
                Head::Concave => Ok(v1 * (y / y1)),
                Head::Power { b } => self.source.eval(self.grid()[1] * (y / y1).powf(1.0 / b), 0),
            };
        }
        if y <= y_max {
            return self.phi_check.eval(y);
        }
        let v_max = self.phi_check.range().1;
        match self.tail {
            PhiTail::Linear { slope } => Ok(v_max + slope * (y - y_max)),
            PhiTail::Continued { psi_slope } => {
                let r = self.r_max + (y - y_max) / psi_slope;
                if r > self.source.domain_cap() {
                    return Err(ScaleError::TabulationOverflow {
                        argument: y,
                        limit: y_max,
                        required_r_max: r,
                    });
                }
                self.source.eval(r, 0)
            }
            PhiTail::None => Err(ScaleError::TabulationOverflow {
                argument: y,
                limit: y_max,
                required_r_max: self.required_r_max(y),
            }),
        }
    }

    /// Lower bound on `phi_check(y)` from convexity and `phi_check(0) = 0`,
    /// valid for any `y >= phi_check_limit()`.
    pub fn phi_check_lower_bound(&self, y: f64) -> f64 {
        let (_, y_max) = self.phi_check.domain();
        let v_max = self.phi_check.range().1;
        v_max * (y / y_max)
    }

    // crude estimate: extend psi_hat linearly past r_max
    fn required_r_max(&self, y: f64) -> f64 {
        let (_, y_max) = self.phi_check.domain();
        let slope = *self.psi_d1.last().unwrap();
        self.r_max + (y - y_max) / slope
    }

    pub fn phi_check_inverse(&self, v: f64) -> Result<f64, ScaleError> {
        if v.is_nan() || v < 0.0 {
            return Err(ScaleError::Domain { r: v, cap: f64::INFINITY });
        }
        let (_, y_max) = self.phi_check.domain();
        let v_max = self.phi_check.range().1;
        let (y1, v1) = (self.phi_check.knots()[1], self.phi_check.values()[1]);
        if v > 0.0 && v < v1 {
            return match self.head {
                Head::Concave => Ok(y1 * (v / v1)),
                Head::Power { b } => {
                    let r1 = self.grid()[1];
                    let (mut lo, mut hi) = (0.0, r1);
                    while hi - lo > 1e-15 * r1 {
                        let mid = 0.5 * (lo + hi);
                        if self.source.eval(mid, 0)? < v {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    Ok(y1 * (0.5 * (lo + hi) / r1).powf(b))
                }
            };
        }
        if v <= v_max {
            return self.phi_check.invert(v);
        }
        match self.tail {
            PhiTail::Linear { slope } => Ok(y_max + (v - v_max) / slope),
            PhiTail::Continued { psi_slope } => {
                let cap = self.source.domain_cap();
                let (mut lo, mut hi) = (self.r_max, self.r_max);
                loop {
                    hi = (hi * 2.0).min(cap);
                    if self.source.eval(hi, 0)? >= v {
                        break;
                    }
                    if hi >= cap {
                        return Err(ScaleError::TabulationOverflow {
                            argument: v,
                            limit: v_max,
                            required_r_max: cap,
                        });
                    }
                    lo = hi;
                }
                while hi - lo > 1e-13 * hi {
                    let mid = 0.5 * (lo + hi);
                    if self.source.eval(mid, 0)? < v {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(y_max + (0.5 * (lo + hi) - self.r_max) * psi_slope)
            }
            PhiTail::None => Err(ScaleError::TabulationOverflow {
                argument: v,
                limit: v_max,
                required_r_max: f64::NAN,
            }),
        }
    }

    /// The equivalent factorization `(x -> phi_check(lambda x), x -> psi_hat(x) / lambda)`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self, ScaleError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ScaleError::InvalidScale(format!("rescaling factor must be positive, got {lambda}")));
        }
        let div = |v: &[f64]| v.iter().map(|x| x / lambda).collect::<Vec<_>>();
        let mul = |v: &[f64], f: f64| v.iter().map(|x| x * f).collect::<Vec<_>>();
        let psi_hat = TabulatedMonotone::new(
            self.psi_hat.knots().to_vec(),
            div(self.psi_hat.values()),
            Some(div(self.psi_hat.slopes())),
        )?;
        let phi_check = TabulatedMonotone::new(
            div(self.phi_check.knots()),
            self.phi_check.values().to_vec(),
            Some(mul(self.phi_check.slopes(), lambda)),
        )?;
        let tail = match self.tail {
            PhiTail::Linear { slope } => PhiTail::Linear { slope: slope * lambda },
            PhiTail::Continued { psi_slope } => PhiTail::Continued {
                psi_slope: psi_slope / lambda,
            },
            PhiTail::None => PhiTail::None,
        };
        Ok(Self {
            source: self.source.clone(),
            r_max: self.r_max,
            psi_hat,
            phi_check,
            psi_d1: div(&self.psi_d1),
            psi_d2: div(&self.psi_d2),
            phi_d1: mul(&self.phi_d1, lambda),
            phi_d2: mul(&self.phi_d2, lambda * lambda),
            phi_check_inv_at_1: self.phi_check_inv_at_1 / lambda,
            tail,
            head: self.head,
            concave_normalized: self.concave_normalized && lambda == 1.0,
        })
    }

    /// Exports `(phi_check, psi_hat)` as tabulated scale functions, with the
    /// derivatives known at the nodes.
    pub fn as_scale_specs(&self) -> Result<(ScaleSpec, ScaleSpec), ScaleError> {
        let phi = ScaleTable::with_tolerance(
            self.phi_check.knots().to_vec(),
            self.phi_check.values().to_vec(),
            self.phi_d1.clone(),
            self.phi_d2.clone(),
            None,
        )?
        .with_label(format!("phi_check({})", self.source));
        let psi = ScaleTable::with_tolerance(
            self.psi_hat.knots().to_vec(),
            self.psi_hat.values().to_vec(),
            self.psi_d1.clone(),
            self.psi_d2.clone(),
            None,
        )?
        .with_label(format!("psi_hat({})", self.source));
        Ok((ScaleSpec::tabulated(phi), ScaleSpec::tabulated(psi)))
    }

    /// `psi_hat'` and `psi_hat''` at the grid nodes.
    pub fn psi_hat_derivatives(&self) -> (&[f64], &[f64]) {
        (&self.psi_d1, &self.psi_d2)
    }

    /// `phi_check'` and `phi_check''` at the `phi_check` nodes.
    pub fn phi_check_derivatives(&self) -> (&[f64], &[f64]) {
        (&self.phi_d1, &self.phi_d2)
    }

    pub fn check_invariants(&self) -> Result<InvariantReport, ScaleError> {
        let concavity_excess = slope_drift(self.psi_hat.knots(), self.psi_hat.values(), 1.0);
        let convexity_deficit = slope_drift(self.phi_check.knots(), self.phi_check.values(), -1.0);
        let grid = self.grid();
        let rel = |r: f64| -> Result<f64, ScaleError> {
            let theta = self.source.eval(r, 0)?;
            let composed = self.phi_check(self.psi_hat(r)?)?;
            Ok((composed - theta).abs() / theta.max(1e-12))
        };
        let mut composition_error: f64 = 0.0;
        for &r in grid {
            composition_error = composition_error.max(rel(r)?);
        }
        let mut between: f64 = 0.0;
        for w in grid[1..].windows(2) {
            between = between.max(rel((w[0] * w[1]).sqrt())?);
        }
        Ok(InvariantReport {
            concavity_excess,
            convexity_deficit,
            composition_error,
            composition_error_between_nodes: between,
        })
    }
}

/// Max relative change `sign * (s_{k+1} - s_k)` of consecutive secant slopes.
fn slope_drift(x: &[f64], y: &[f64], sign: f64) -> f64 {
    let slopes: Vec<f64> = x.windows(2).zip(y.windows(2)).map(|(a, b)| (b[1] - b[0]) / (a[1] - a[0])).collect();
    slopes
        .windows(2)
        .map(|s| sign * (s[1] - s[0]) / s[0].abs().max(s[1].abs()))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = log_grid(2048, 10.0);
        assert_eq!(g.len(), 2049);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-5).abs() < 1e-18);
        assert_eq!(g[2048], 10.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn convex_power_has_identity_concave_factor() {
        let f = minimal_factorization(&ScaleSpec::power(2.0).unwrap(), 2048, 10.0).unwrap();
        let err = f
            .grid()
            .iter()
            .zip(f.psi_hat_values())
            .map(|(r, p)| (r - p).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!(!f.is_concave_normalized());
        assert!((f.phi_check_inv_at_1() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concave_power_has_identity_convex_factor() {
        let f = minimal_factorization(&ScaleSpec::power(0.5).unwrap(), 2048, 10.0).unwrap();
        assert!(f.is_concave_normalized());
        assert!(f.phi_is_identity(1e-9));
    }

    #[test]
    fn rejects_nonincreasing_scale() {
        let t = ScaleTable::with_tolerance(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 1.0, 2.0, 3.0],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![0.0; 4],
            None,
        )
        .unwrap();
        // r_max beyond the table is a domain error
        let spec = ScaleSpec::tabulated(t);
        assert!(matches!(
            minimal_factorization(&spec, 64, 4.0),
            Err(ScaleError::Domain { .. })
        ));
    }

    #[test]
    fn tail_continues_convex_source() {
        let f = minimal_factorization(&ScaleSpec::power(2.0).unwrap(), 256, 1.0).unwrap();
        let v = f.phi_check(3.0).unwrap();
        assert!((v - 9.0).abs() < 1e-9);
        assert!((f.phi_check_inverse(9.0).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn tail_is_linear_for_concave_source() {
        let f = minimal_factorization(&ScaleSpec::log1p(), 256, 1.0).unwrap();
        let y_max = f.phi_check_limit();
        assert!((f.phi_check(y_max + 2.0).unwrap() - (y_max + 2.0)).abs() < 1e-9);
    }
}
