//! Grid-level checks of the log-derivative identity
//! `(log theta')' = (log phi')'(psi) psi' + (log psi')'` and of minimality.

use serde::Serialize;

use super::{Factorization, ScaleError, ScaleSpec};

/// Relative slack allowed in the shape checks of [`minimality_gap`].
pub const CANDIDATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Sup over the grid of the log-derivative residual.
    pub sup_residual: f64,
    /// Grid point attaining the sup.
    pub argmax: f64,
    /// Sup of `|theta - phi(psi)| / max(theta, 1e-12)`. The derivative
    /// identity alone does not fix the constant of integration.
    pub value_residual: f64,
    pub points: usize,
}

fn log_derivative(spec: &ScaleSpec, r: f64, which: &'static str) -> Result<(f64, f64), ScaleError> {
    let d1 = spec.eval(r, 1)?;
    let d2 = spec.eval(r, 2)?;
    if d1 == 0.0 || !d1.is_finite() {
        return Err(ScaleError::ZeroDerivative { at: r, which });
    }
    Ok((d1, d2 / d1))
}

/// Checks that `(phi, psi)` factorizes `target` on `grid`.
pub fn verify_factorization(
    target: &ScaleSpec,
    phi: &ScaleSpec,
    psi: &ScaleSpec,
    grid: &[f64],
) -> Result<ResidualReport, ScaleError> {
    let mut report = ResidualReport {
        sup_residual: 0.0,
        argmax: f64::NAN,
        value_residual: 0.0,
        points: grid.len(),
    };
    for &t in grid {
        let (_, theta_density) = log_derivative(target, t, "theta")?;
        let (psi_d1, psi_density) = log_derivative(psi, t, "psi")?;
        if psi_d1 < 0.0 {
            return Err(ScaleError::InvalidScale(format!("psi is decreasing at {t}")));
        }
        let y = psi.eval(t, 0)?;
        let (_, phi_density) = log_derivative(phi, y, "phi")?;
        let residual = (theta_density - phi_density * psi_d1 - psi_density).abs();
        if residual.is_nan() {
            return Err(ScaleError::ZeroDerivative { at: t, which: "residual" });
        }
        if residual > report.sup_residual || report.argmax.is_nan() {
            report.sup_residual = residual;
            report.argmax = t;
        }
        let theta = target.eval(t, 0)?;
        let value = (phi.eval(y, 0)? - theta).abs() / theta.max(1e-12);
        report.value_residual = report.value_residual.max(value);
    }
    Ok(report)
}

/// Pointwise difference of concavity densities
/// `(-psi_hat''/psi_hat')(t) - (-psi''/psi')(t)` between the minimal concave
/// factor and a candidate. Minimality means every entry is `<= tol`.
///
/// The candidate must be a valid concave factor of the same `theta`: it is
/// concave and `theta o candidate^{-1}` is convex, i.e.
/// `(log theta')' >= (log psi')'` on the grid.
pub fn minimality_gap(candidate: &ScaleSpec, fact: &Factorization, grid: &[f64]) -> Result<Vec<f64>, ScaleError> {
    let theta = fact.source();
    if candidate.eval(0.0, 0)? != 0.0 {
        return Err(ScaleError::NotAFactorization {
            at: 0.0,
            reason: "candidate does not vanish at 0".into(),
        });
    }
    let (_, psi_hat) = fact.as_scale_specs()?;
    let mut gaps = Vec::with_capacity(grid.len());
    for &t in grid {
        let (d1, cand_density) = log_derivative(candidate, t, "candidate")?;
        let (_, theta_density) = log_derivative(theta, t, "theta")?;
        let slack = CANDIDATE_TOLERANCE * (cand_density.abs() + theta_density.abs()) + 1e-12;
        if d1 <= 0.0 {
            return Err(ScaleError::NotAFactorization {
                at: t,
                reason: "candidate is not increasing".into(),
            });
        }
        if cand_density > slack {
            return Err(ScaleError::NotAFactorization {
                at: t,
                reason: format!("candidate is not concave (psi''/psi' = {cand_density})"),
            });
        }
        if theta_density - cand_density < -slack {
            return Err(ScaleError::NotAFactorization {
                at: t,
                reason: format!(
                    "induced convex factor is not convex ((log theta')' = {theta_density} < (log psi')' = {cand_density})"
                ),
            });
        }
        let (_, hat_density) = log_derivative(&psi_hat, t, "psi_hat")?;
        gaps.push(-hat_density + cand_density);
    }
    Ok(gaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::minimal_factorization;

    #[test]
    fn convex_identity_factorization_is_exact() {
        let p2 = ScaleSpec::power(2.0).unwrap();
        let id = ScaleSpec::power(1.0).unwrap();
        let grid: Vec<f64> = (1..=40).map(|k| k as f64 * 0.1).collect();
        let rep = verify_factorization(&p2, &p2, &id, &grid).unwrap();
        assert!(rep.sup_residual < 1e-8);
        assert!(rep.value_residual < 1e-12);
    }

    #[test]
    fn zero_derivative_is_located() {
        let p2 = ScaleSpec::power(2.0).unwrap();
        let id = ScaleSpec::power(1.0).unwrap();
        let err = verify_factorization(&p2, &p2, &id, &[0.5, 0.0]).unwrap_err();
        assert!(matches!(err, ScaleError::ZeroDerivative { at, .. } if at == 0.0));
    }

    #[test]
    fn self_comparison_has_zero_gap() {
        let fact = minimal_factorization(&ScaleSpec::exp_sqrt(), 512, 10.0).unwrap();
        let (_, psi_hat) = fact.as_scale_specs().unwrap();
        let grid: Vec<f64> = fact.grid()[10..].iter().step_by(7).copied().collect();
        let gaps = minimality_gap(&psi_hat, &fact, &grid).unwrap();
        assert!(gaps.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn non_concave_candidate_is_rejected() {
        let fact = minimal_factorization(&ScaleSpec::power(3.0).unwrap(), 256, 10.0).unwrap();
        let err = minimality_gap(&ScaleSpec::power(2.0).unwrap(), &fact, &[0.5, 1.0]).unwrap_err();
        assert!(matches!(err, ScaleError::NotAFactorization { .. }));
    }
}
