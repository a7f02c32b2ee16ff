use std::fmt;
use std::sync::Arc;

use super::monotone::{hermite, hermite_derivative, TabulatedMonotone};
use super::ScaleError;

/// Default relative tolerance used when checking stored derivatives of a
/// tabulated scale function against finite differences of its values.
pub const DEFAULT_TABLE_FD_TOLERANCE: f64 = 1e-2;

/// Local curvature of a scale function on a half-line `[r, inf)`.
///
/// Used to continue a factorization past the end of its tabulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Convex,
    Concave,
    Linear,
}

/// A strictly increasing scale function `theta` with `theta(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSpec {
    kind: ScaleKind,
    domain_cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScaleKind {
    /// `r^p`.
    Power { exponent: f64 },
    /// `exp(rate * r) - 1`.
    ExpMinusOne { rate: f64 },
    /// `log(1 + r)`.
    Log1p,
    /// `exp(sqrt(r)) - 1`.
    ExpSqrt,
    /// `outer(inner(r))`.
    Composed {
        outer: Box<ScaleSpec>,
        inner: Box<ScaleSpec>,
    },
    Tabulated(Arc<ScaleTable>),
}

impl ScaleSpec {
    pub fn power(exponent: f64) -> Result<Self, ScaleError> {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(ScaleError::InvalidScale(format!(
                "power exponent must be positive and finite, got {exponent}"
            )));
        }
        Ok(Self {
            kind: ScaleKind::Power { exponent },
            domain_cap: 1e15,
        })
    }

    pub fn exp_minus_one() -> Self {
        Self::exp_minus_one_rate(1.0).expect("unit rate is valid")
    }

    pub fn exp_minus_one_rate(rate: f64) -> Result<Self, ScaleError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(ScaleError::InvalidScale(format!(
                "exp_minus_one rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self {
            kind: ScaleKind::ExpMinusOne { rate },
            domain_cap: 700.0 / rate,
        })
    }

    pub fn log1p() -> Self {
        Self {
            kind: ScaleKind::Log1p,
            domain_cap: 1e15,
        }
    }

    pub fn exp_sqrt() -> Self {
        Self {
            kind: ScaleKind::ExpSqrt,
            domain_cap: 700.0 * 700.0,
        }
    }

    pub fn composed(outer: ScaleSpec, inner: ScaleSpec) -> Self {
        let domain_cap = inner.domain_cap;
        Self {
            kind: ScaleKind::Composed {
                outer: Box::new(outer),
                inner: Box::new(inner),
            },
            domain_cap,
        }
    }

    pub fn tabulated(table: ScaleTable) -> Self {
        let domain_cap = *table.grid.last().expect("validated table is non-empty");
        Self {
            kind: ScaleKind::Tabulated(Arc::new(table)),
            domain_cap,
        }
    }

    /// Restricts the largest argument the function will be evaluated at.
    pub fn with_domain_cap(mut self, cap: f64) -> Result<Self, ScaleError> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(ScaleError::InvalidScale(format!(
                "domain cap must be positive and finite, got {cap}"
            )));
        }
        if let ScaleKind::Tabulated(table) = &self.kind {
            let end = *table.grid.last().unwrap();
            if cap > end {
                return Err(ScaleError::InvalidScale(format!(
                    "domain cap {cap} exceeds the tabulated range [0, {end}]"
                )));
            }
        }
        self.domain_cap = cap;
        Ok(self)
    }

    pub fn kind(&self) -> &ScaleKind {
        &self.kind
    }

    pub fn domain_cap(&self) -> f64 {
        self.domain_cap
    }

    /// Evaluates `theta`, `theta'` or `theta''` at `r`.
    pub fn eval(&self, r: f64, order: u8) -> Result<f64, ScaleError> {
        if order > 2 {
            return Err(ScaleError::InvalidScale(format!(
                "derivative order {order} not supported (0, 1 or 2)"
            )));
        }
        if r.is_nan() || r < 0.0 || r > self.domain_cap {
            return Err(ScaleError::Domain {
                r,
                cap: self.domain_cap,
            });
        }
        if order == 0 && r == 0.0 {
            return Ok(0.0);
        }
        let value = match &self.kind {
            ScaleKind::Power { exponent: p } => power_eval(*p, r, order),
            ScaleKind::ExpMinusOne { rate: a } => match order {
                0 => (a * r).exp_m1(),
                1 => a * (a * r).exp(),
                _ => a * a * (a * r).exp(),
            },
            ScaleKind::Log1p => match order {
                0 => r.ln_1p(),
                1 => 1.0 / (1.0 + r),
                _ => -1.0 / ((1.0 + r) * (1.0 + r)),
            },
            ScaleKind::ExpSqrt => {
                let s = r.sqrt();
                match order {
                    0 => s.exp_m1(),
                    1 if r == 0.0 => f64::INFINITY,
                    1 => s.exp() / (2.0 * s),
                    _ if r == 0.0 => f64::NEG_INFINITY,
                    _ => s.exp() * (s - 1.0) / (4.0 * s * s * s),
                }
            }
            ScaleKind::Composed { outer, inner } => {
                let x = inner.eval(r, 0)?;
                match order {
                    0 => outer.eval(x, 0)?,
                    1 => outer.eval(x, 1)? * inner.eval(r, 1)?,
                    _ => {
                        let d1 = inner.eval(r, 1)?;
                        outer.eval(x, 2)? * d1 * d1 + outer.eval(x, 1)? * inner.eval(r, 2)?
                    }
                }
            }
            ScaleKind::Tabulated(table) => table.eval(r, order)?,
        };
        Ok(value)
    }

    /// Curvature of the function on `[r, domain_cap]`, when it is known
    /// without sampling.
    pub fn curvature_beyond(&self, r: f64) -> Option<Curvature> {
        match &self.kind {
            ScaleKind::Power { exponent } => Some(if *exponent > 1.0 {
                Curvature::Convex
            } else if *exponent < 1.0 {
                Curvature::Concave
            } else {
                Curvature::Linear
            }),
            ScaleKind::ExpMinusOne { .. } => Some(Curvature::Convex),
            ScaleKind::Log1p => Some(Curvature::Concave),
            ScaleKind::ExpSqrt => (r >= 1.0).then_some(Curvature::Convex),
            ScaleKind::Composed { outer, inner } => {
                let x = inner.eval(r.min(inner.domain_cap), 0).ok()?;
                let a = outer.curvature_beyond(x)?;
                let b = inner.curvature_beyond(r)?;
                use Curvature::*;
                match (a, b) {
                    (Linear, Linear) => Some(Linear),
                    (Convex | Linear, Convex | Linear) => Some(Convex),
                    (Concave | Linear, Concave | Linear) => Some(Concave),
                    _ => None,
                }
            }
            ScaleKind::Tabulated(_) => None,
        }
    }
}

fn power_eval(p: f64, r: f64, order: u8) -> f64 {
    match order {
        0 => r.powf(p),
        1 => {
            if p == 1.0 {
                1.0
            } else {
                p * r.powf(p - 1.0)
            }
        }
        _ => {
            if p == 1.0 {
                0.0
            } else if p == 2.0 {
                2.0
            } else {
                p * (p - 1.0) * r.powf(p - 2.0)
            }
        }
    }
}

impl fmt::Display for ScaleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ScaleKind::Power { exponent } => write!(f, "power:{exponent}"),
            ScaleKind::ExpMinusOne { rate } if *rate == 1.0 => f.write_str("exp_minus_one"),
            ScaleKind::ExpMinusOne { rate } => write!(f, "exp_minus_one:{rate}"),
            ScaleKind::Log1p => f.write_str("log1p"),
            ScaleKind::ExpSqrt => f.write_str("exp_sqrt"),
            ScaleKind::Composed { outer, inner } => write!(f, "compose:({outer}),({inner})"),
            ScaleKind::Tabulated(table) => match &table.label {
                Some(label) => write!(f, "tabulated:{label}"),
                None => f.write_str("tabulated:<inline>"),
            },
        }
    }
}

/// Tabulated scale function: values and first two derivatives on a grid
/// starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleTable {
    grid: Vec<f64>,
    values: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    value_interp: TabulatedMonotone,
    label: Option<String>,
}

impl ScaleTable {
    /// Validates the table, including finite-difference consistency of
    /// `d1`/`d2` at [`DEFAULT_TABLE_FD_TOLERANCE`].
    pub fn new(grid: Vec<f64>, values: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>) -> Result<Self, ScaleError> {
        Self::with_tolerance(grid, values, d1, d2, Some(DEFAULT_TABLE_FD_TOLERANCE))
    }

    /// Like [`ScaleTable::new`]; `fd_tolerance = None` skips the
    /// finite-difference check.
    pub fn with_tolerance(
        grid: Vec<f64>,
        values: Vec<f64>,
        d1: Vec<f64>,
        d2: Vec<f64>,
        fd_tolerance: Option<f64>,
    ) -> Result<Self, ScaleError> {
        let n = grid.len();
        let bad = |msg: String| Err(ScaleError::InvalidTable(msg));
        if n < 3 {
            return bad(format!("need at least 3 rows, got {n}"));
        }
        if values.len() != n || d1.len() != n || d2.len() != n {
            return bad("columns r, theta, d1, d2 must have equal length".into());
        }
        if grid[0] != 0.0 || values[0] != 0.0 {
            return bad(format!("first row must be r = 0, theta = 0 (got {}, {})", grid[0], values[0]));
        }
        for k in 1..n {
            if !grid[k].is_finite() || grid[k] <= grid[k - 1] {
                return bad(format!("r must be strictly increasing (row {k})"));
            }
            if !values[k].is_finite() || values[k] <= values[k - 1] {
                return bad(format!("theta must be strictly increasing (row {k})"));
            }
            if !(d1[k].is_finite() && d1[k] > 0.0) {
                return bad(format!("d1 must be positive and finite at r = {} (row {k})", grid[k]));
            }
            if !d2[k].is_finite() {
                return bad(format!("d2 must be finite at r = {} (row {k})", grid[k]));
            }
        }
        if d1[0].is_nan() || d1[0] < 0.0 || d2[0].is_nan() {
            return bad("d1(0) must be nonnegative (possibly +inf), d2(0) not NaN".into());
        }
        if let Some(tol) = fd_tolerance {
            check_fd_consistency(&grid, &values, &d1, "d1", tol)?;
            check_fd_consistency(&grid, &d1, &d2, "d2", tol)?;
        }
        let value_interp = TabulatedMonotone::new(grid.clone(), values.clone(), Some(d1.clone()))?;
        Ok(Self {
            grid,
            values,
            d1,
            d2,
            value_interp,
            label: None,
        })
    }

    /// Attaches a label (typically the source path) used when displaying the spec.
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    pub(crate) fn eval(&self, r: f64, order: u8) -> Result<f64, ScaleError> {
        let n = self.grid.len();
        let end = self.grid[n - 1];
        if r > end {
            return Err(ScaleError::Extrapolation { r, lo: 0.0, hi: end });
        }
        if order == 0 {
            return self.value_interp.eval(r);
        }
        let k = cell_index(&self.grid, r);
        let (x0, x1) = (self.grid[k], self.grid[k + 1]);
        if r == x0 {
            return Ok(if order == 1 { self.d1[k] } else { self.d2[k] });
        }
        if r == x1 {
            return Ok(if order == 1 { self.d1[k + 1] } else { self.d2[k + 1] });
        }
        let ends = [self.d1[k], self.d1[k + 1], self.d2[k], self.d2[k + 1]];
        if ends.iter().any(|v| !v.is_finite()) {
            return Err(ScaleError::NonFiniteTabulation { r });
        }
        let (y0, y1, m0, m1) = (self.d1[k], self.d1[k + 1], self.d2[k], self.d2[k + 1]);
        Ok(if order == 1 {
            hermite(x0, x1, y0, y1, m0, m1, r)
        } else {
            hermite_derivative(x0, x1, y0, y1, m0, m1, r)
        })
    }
}

/// Index `k` of the cell `[grid[k], grid[k+1]]` containing `x`.
pub(crate) fn cell_index(grid: &[f64], x: f64) -> usize {
    let n = grid.len();
    grid.partition_point(|&g| g <= x).saturating_sub(1).min(n - 2)
}

fn check_fd_consistency(x: &[f64], f: &[f64], df: &[f64], name: &str, tol: f64) -> Result<(), ScaleError> {
    for k in 1..x.len() - 1 {
        let (fm, f0, fp) = (f[k - 1], f[k], f[k + 1]);
        if !(fm.is_finite() && f0.is_finite() && fp.is_finite() && df[k].is_finite()) {
            continue;
        }
        let hm = x[k] - x[k - 1];
        let hp = x[k + 1] - x[k];
        // second-order three-point formula on a non-uniform grid
        let fd = (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / (hp * hm * (hp + hm));
        let scale = df[k].abs().max(fd.abs()).max(((fp - fm) / (hp + hm)).abs());
        if (df[k] - fd).abs() > tol * scale + 1e-12 {
            return Err(ScaleError::InvalidTable(format!(
                "{name} = {} at r = {} disagrees with finite difference {fd} beyond tolerance {tol}",
                df[k], x[k]
            )));
        }
    }
    Ok(())
}
