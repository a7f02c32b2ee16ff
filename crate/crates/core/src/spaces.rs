//! Finite measure spaces, functions on them, finite metric spaces with
//! probability measures, and couplings.
//!
//! JSON documents:
//!
//! ```text
//! {"weights": [..]}                 WeightedSpace or DiscreteMeasure
//! {"values": [..]}                  SampleFunction
//! {"n": k, "dist": [[..], ..]}      FiniteMetricSpace
//! {"points": [[x, y], ..]}          FiniteMetricSpace with Euclidean distances
//! ```
//!
//! Distance matrices may also be given as CSV: `n` rows of `n` numbers.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A probability vector is accepted as-is when its sum is within this of 1.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;
/// Probability vectors are renormalized when their sum is within this of 1,
/// and rejected beyond.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;
/// Marginal tolerance for [`TransportPlan`].
pub const MARGINAL_TOLERANCE: f64 = 1e-9;
/// Spaces with more points than this may skip the O(n^3) triangle check.
pub const TRIANGLE_CHECK_SKIPPABLE_ABOVE: usize = 512;
/// Relative slack for the triangle inequality, absorbing rounding in
/// computed distances.
pub const TRIANGLE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("schema: {0}")]
    Schema(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("{what}[{index}] = {value} is negative")]
    Negative { what: &'static str, index: usize, value: f64 },
    #[error("{what}[{index}] = {value} is not finite")]
    NonFinite { what: &'static str, index: usize, value: f64 },
    #[error("all weights are zero")]
    ZeroMass,
    #[error("probability weights sum to {sum}, more than {NORMALIZATION_TOLERANCE} away from 1")]
    NotNormalized { sum: f64 },
    #[error("distance matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("distance matrix is not symmetric at ({i},{j}): {a} != {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("distance matrix has nonzero diagonal at ({i},{i}): {value}")]
    NonZeroDiagonal { i: usize, value: f64 },
    #[error("triangle inequality fails for ({i},{j},{k}): d[{i}][{k}] = {d_ik} > d[{i}][{j}] + d[{j}][{k}] = {via}")]
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        d_ik: f64,
        via: f64,
    },
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("plan marginal {which}[{index}] = {got}, expected {expected}")]
    Marginal {
        which: &'static str,
        index: usize,
        got: f64,
        expected: f64,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn read_file(path: &Path) -> Result<String, SpaceError> {
    std::fs::read_to_string(path).map_err(|source| SpaceError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn check_entries(what: &'static str, values: &[f64], nonneg: bool) -> Result<(), SpaceError> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(SpaceError::NonFinite { what, index, value });
        }
        if nonneg && value < 0.0 {
            return Err(SpaceError::Negative { what, index, value });
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDoc {
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValuesDoc {
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MetricDoc {
    Matrix { n: usize, dist: Vec<Vec<f64>> },
    Points { points: Vec<Vec<f64>> },
}

/// A finite measure space `(X, mu)` with `mu({x_i}) = weights[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSpace {
    weights: Vec<f64>,
    #[serde(skip)]
    total_mass: f64,
}

impl WeightedSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self, SpaceError> {
        if weights.is_empty() {
            return Err(SpaceError::Empty("weights"));
        }
        check_entries("weights", &weights, true)?;
        if weights.iter().all(|&w| w == 0.0) {
            return Err(SpaceError::ZeroMass);
        }
        let total_mass = weights.iter().sum();
        Ok(Self { weights, total_mass })
    }

    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let doc: WeightsDoc = serde_json::from_str(text)?;
        Self::new(doc.weights)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        Self::from_json(&read_file(path.as_ref())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite weights serialize")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }
}

/// A real function on the points of a finite space, by index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFunction {
    values: Vec<f64>,
}

impl SampleFunction {
    pub fn new(values: Vec<f64>) -> Result<Self, SpaceError> {
        check_entries("values", &values, false)?;
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let doc: ValuesDoc = serde_json::from_str(text)?;
        Self::new(doc.values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        Self::from_json(&read_file(path.as_ref())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite values serialize")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks that the function lives on `space`.
    pub fn check_bound(&self, space: &WeightedSpace) -> Result<(), SpaceError> {
        if self.len() != space.len() {
            return Err(SpaceError::LengthMismatch {
                what: "function values",
                got: self.len(),
                expected: space.len(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self, SpaceError> {
        Self::new(self.values.iter().map(|v| v * lambda).collect())
    }

    /// Pointwise difference `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self, SpaceError> {
        if self.len() != other.len() {
            return Err(SpaceError::LengthMismatch {
                what: "function values",
                got: other.len(),
                expected: self.len(),
            });
        }
        Self::new(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }
}

/// A finite metric space given by its distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
}

/// Options for metric-space validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetricCheck {
    /// Skip the triangle inequality check. Honoured only for spaces with
    /// more than [`TRIANGLE_CHECK_SKIPPABLE_ABOVE`] points.
    pub skip_triangle: bool,
}

impl FiniteMetricSpace {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, SpaceError> {
        Self::with_check(rows, MetricCheck::default())
    }

    pub fn with_check(rows: Vec<Vec<f64>>, check: MetricCheck) -> Result<Self, SpaceError> {
        let n = rows.len();
        if n == 0 {
            return Err(SpaceError::Empty("distance matrix"));
        }
        let mut dist = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(SpaceError::NotSquare { row, len: r.len(), n });
            }
            dist.extend_from_slice(r);
        }
        check_entries("dist", &dist, true)?;
        let space = Self { n, dist };
        space.validate(check)?;
        Ok(space)
    }

    /// Euclidean distances between points of any common dimension.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, SpaceError> {
        if points.is_empty() {
            return Err(SpaceError::Empty("points"));
        }
        let dim = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(SpaceError::LengthMismatch {
                    what: "point coordinates",
                    got: p.len(),
                    expected: dim,
                });
            }
            check_entries("point coordinates", p, false).map_err(|_| SpaceError::NonFinite {
                what: "points",
                index: i,
                value: f64::NAN,
            })?;
        }
        let rows = points
            .iter()
            .map(|a| {
                points
                    .iter()
                    .map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn from_json(text: &str, check: MetricCheck) -> Result<Self, SpaceError> {
        match serde_json::from_str::<MetricDoc>(text)? {
            MetricDoc::Matrix { n, dist } => {
                if dist.len() != n {
                    return Err(SpaceError::Schema(format!("\"n\" = {n} but \"dist\" has {} rows", dist.len())));
                }
                Self::with_check(dist, check)
            }
            MetricDoc::Points { points } => Self::from_points(&points),
        }
    }

    /// Reads `n` rows of `n` comma-separated numbers (no header).
    pub fn from_csv(text: &str, check: MetricCheck) -> Result<Self, SpaceError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| SpaceError::Schema(format!("{f:?} is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::with_check(rows, check)
    }

    /// Loads a `.csv` matrix or a JSON document, by extension.
    pub fn load(path: impl AsRef<Path>, check: MetricCheck) -> Result<Self, SpaceError> {
        let path = path.as_ref();
        let text = read_file(path)?;
        let is_csv = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("csv"))
            .unwrap_or(false);
        if is_csv {
            Self::from_csv(&text, check)
        } else {
            Self::from_json(&text, check)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "n": self.n, "dist": self.rows() }).to_string()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    fn validate(&self, check: MetricCheck) -> Result<(), SpaceError> {
        let n = self.n;
        for i in 0..n {
            let value = self.d(i, i);
            if value != 0.0 {
                return Err(SpaceError::NonZeroDiagonal { i, value });
            }
            for j in i + 1..n {
                let (a, b) = (self.d(i, j), self.d(j, i));
                if a != b {
                    return Err(SpaceError::Asymmetric { i, j, a, b });
                }
            }
        }
        if check.skip_triangle && n > TRIANGLE_CHECK_SKIPPABLE_ABOVE {
            return Ok(());
        }
        let scale = self.max_distance();
        for i in 0..n {
            for k in i + 1..n {
                let d_ik = self.d(i, k);
                for j in 0..n {
                    let via = self.d(i, j) + self.d(j, k);
                    if d_ik > via + TRIANGLE_SLACK * scale {
                        return Err(SpaceError::Triangle { i, j, k, d_ik, via });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Row-major distance entries.
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }
}

/// A probability measure on the points of a finite metric space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Accepts weights summing to 1 within [`NORMALIZATION_TOLERANCE`];
    /// renormalizes when the sum is further than
    /// [`PROBABILITY_SUM_TOLERANCE`] from 1.
    pub fn new(weights: Vec<f64>) -> Result<Self, SpaceError> {
        if weights.is_empty() {
            return Err(SpaceError::Empty("weights"));
        }
        check_entries("weights", &weights, true)?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(SpaceError::NotNormalized { sum });
        }
        let weights = if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            weights.iter().map(|w| w / sum).collect()
        } else {
            weights
        };
        Ok(Self { weights })
    }

    /// Normalizes arbitrary nonnegative weights with positive total.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self, SpaceError> {
        check_entries("weights", &weights, true)?;
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(SpaceError::ZeroMass);
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    /// Unit mass at point `i` of an `n`-point space.
    pub fn dirac(n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Self { weights }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let doc: WeightsDoc = serde_json::from_str(text)?;
        Self::new(doc.weights)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        Self::from_json(&read_file(path.as_ref())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite weights serialize")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn check_on(&self, space: &FiniteMetricSpace) -> Result<(), SpaceError> {
        if self.len() != space.len() {
            return Err(SpaceError::LengthMismatch {
                what: "measure weights",
                got: self.len(),
                expected: space.len(),
            });
        }
        Ok(())
    }
}

/// A coupling matrix `q` with cached marginals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    q: Vec<f64>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
}

impl TransportPlan {
    /// Validates `q >= 0` and both marginals within [`MARGINAL_TOLERANCE`].
    pub fn new(rows: usize, cols: usize, q: Vec<f64>, mu: &[f64], nu: &[f64]) -> Result<Self, SpaceError> {
        if q.len() != rows * cols {
            return Err(SpaceError::LengthMismatch {
                what: "plan entries",
                got: q.len(),
                expected: rows * cols,
            });
        }
        if mu.len() != rows || nu.len() != cols {
            return Err(SpaceError::LengthMismatch {
                what: "marginals",
                got: mu.len() + nu.len(),
                expected: rows + cols,
            });
        }
        check_entries("plan", &q, true)?;
        let plan = Self::unchecked(rows, cols, q);
        for (index, (&got, &expected)) in plan.row_marginal.iter().zip(mu).enumerate() {
            if (got - expected).abs() > MARGINAL_TOLERANCE {
                return Err(SpaceError::Marginal { which: "row", index, got, expected });
            }
        }
        for (index, (&got, &expected)) in plan.col_marginal.iter().zip(nu).enumerate() {
            if (got - expected).abs() > MARGINAL_TOLERANCE {
                return Err(SpaceError::Marginal { which: "column", index, got, expected });
            }
        }
        Ok(plan)
    }

    pub(crate) fn unchecked(rows: usize, cols: usize, q: Vec<f64>) -> Self {
        let row_marginal = q.chunks(cols).map(|r| r.iter().sum()).collect();
        let col_marginal = (0..cols).map(|j| (0..rows).map(|i| q[i * cols + j]).sum()).collect();
        Self {
            rows,
            cols,
            q,
            row_marginal,
            col_marginal,
        }
    }

    /// The plan `q_{i, sigma(i)} = 1/n`.
    pub fn from_permutation(perm: &[usize]) -> Result<Self, SpaceError> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for (i, &j) in perm.iter().enumerate() {
            if j >= n || seen[j] {
                return Err(SpaceError::Schema(format!("not a permutation at position {i}")));
            }
            seen[j] = true;
        }
        let mut q = vec![0.0; n * n];
        let w = 1.0 / n as f64;
        for (i, &j) in perm.iter().enumerate() {
            q[i * n + j] = w;
        }
        let uniform = vec![w; n];
        Self::new(n, n, q, &uniform, &uniform)
    }

    /// Diagonal coupling of a measure with itself.
    pub fn diagonal(mu: &DiscreteMeasure) -> Self {
        let n = mu.len();
        let mut q = vec![0.0; n * n];
        for (i, &w) in mu.weights().iter().enumerate() {
            q[i * n + i] = w;
        }
        Self::unchecked(n, n, q)
    }

    pub fn transposed(&self) -> Self {
        let mut q = vec![0.0; self.q.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                q[j * self.rows + i] = self.q[i * self.cols + j];
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            q,
            row_marginal: self.col_marginal.clone(),
            col_marginal: self.row_marginal.clone(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.q
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    pub fn row_marginal(&self) -> &[f64] {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &[f64] {
        &self.col_marginal
    }

    /// `sum_ij q_ij c_ij`, summed in row-major order.
    pub fn cost(&self, cost: &[f64]) -> f64 {
        self.q.iter().zip(cost).map(|(q, c)| if *q == 0.0 { 0.0 } else { q * c }).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.q.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}
