//! Independent oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use ccc_transport::scale::{minimal_factorization, Factorization, ScaleSpec, DEFAULT_GRID_POINTS, DEFAULT_R_MAX};
use ccc_transport::spaces::{DiscreteMeasure, FiniteMetricSpace};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Closed forms for the catalog, written out here rather than taken from the
/// library.
#[derive(Debug, Clone, Copy)]
pub enum Closed {
    Power(f64),
    ExpMinusOne,
    Log1p,
    ExpSqrt,
}

impl Closed {
    pub fn theta(self, r: f64) -> f64 {
        match self {
            Closed::Power(p) => r.powf(p),
            Closed::ExpMinusOne => r.exp_m1(),
            Closed::Log1p => r.ln_1p(),
            Closed::ExpSqrt => r.sqrt().exp_m1(),
        }
    }

    pub fn d1(self, r: f64) -> f64 {
        match self {
            Closed::Power(p) => p * r.powf(p - 1.0),
            Closed::ExpMinusOne => r.exp(),
            Closed::Log1p => 1.0 / (1.0 + r),
            Closed::ExpSqrt => r.sqrt().exp() / (2.0 * r.sqrt()),
        }
    }

    pub fn d2(self, r: f64) -> f64 {
        match self {
            Closed::Power(p) => p * (p - 1.0) * r.powf(p - 2.0),
            Closed::ExpMinusOne => r.exp(),
            Closed::Log1p => -1.0 / ((1.0 + r) * (1.0 + r)),
            Closed::ExpSqrt => {
                let s = r.sqrt();
                s.exp() * (s - 1.0) / (4.0 * s * s * s)
            }
        }
    }

    /// `theta^{-1}(1)`.
    pub fn inverse_at_one(self) -> f64 {
        match self {
            Closed::Power(_) => 1.0,
            Closed::ExpMinusOne => std::f64::consts::LN_2,
            Closed::Log1p => std::f64::consts::E - 1.0,
            Closed::ExpSqrt => std::f64::consts::LN_2 * std::f64::consts::LN_2,
        }
    }

    pub fn is_convex(self) -> bool {
        matches!(self, Closed::Power(p) if p >= 1.0) || matches!(self, Closed::ExpMinusOne)
    }

    pub fn is_concave(self) -> bool {
        matches!(self, Closed::Power(p) if p <= 1.0) || matches!(self, Closed::Log1p)
    }
}

pub const CATALOG: [(&str, Closed); 7] = [
    ("power:0.5", Closed::Power(0.5)),
    ("power:1", Closed::Power(1.0)),
    ("power:2", Closed::Power(2.0)),
    ("power:3", Closed::Power(3.0)),
    ("exp_minus_one", Closed::ExpMinusOne),
    ("log1p", Closed::Log1p),
    ("exp_sqrt", Closed::ExpSqrt),
];

pub fn spec(s: &str) -> ScaleSpec {
    ScaleSpec::parse(s).unwrap()
}

pub fn fact(s: &str) -> Factorization {
    minimal_factorization(&spec(s), DEFAULT_GRID_POINTS, DEFAULT_R_MAX).unwrap()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let steps = steps + steps % 2;
    let h = (b - a) / steps as f64;
    let mut s = f(a) + f(b);
    for k in 1..steps {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `int_0^x exp(int_1^y min(theta'', 0)/theta' dz) dy` by dense quadrature:
/// `nodes` midpoint cells in `s = sqrt(y)`, with the inner integral carried
/// along in `u = log z` by Simpson's rule.
pub fn concave_factor_by_quadrature(c: Closed, x: f64, nodes: usize) -> f64 {
    // bounded integrand: z * min(theta''(z), 0) / theta'(z) at z = e^u
    let h = |u: f64| {
        let z = u.exp();
        z * c.d2(z).min(0.0) / c.d1(z)
    };
    let ds = x.sqrt() / nodes as f64;
    let mid = |k: usize| (k as f64 + 0.5) * ds;
    let mut u_prev = 2.0 * mid(0).ln();
    let mut inner = simpson(h, 0.0, u_prev, 20_000);
    let mut total = 0.0;
    for k in 0..nodes {
        let s = mid(k);
        if k > 0 {
            let u = 2.0 * s.ln();
            inner += simpson(h, u_prev, u, 2);
            u_prev = u;
        }
        total += 2.0 * s * inner.exp() * ds;
    }
    total
}

/// Minimum of `sum_ij q_ij c_ij` over couplings, from a general LP solver.
pub fn lp_min_cost(cost: &[f64], mu: &[f64], nu: &[f64]) -> f64 {
    let (m, n) = (mu.len(), nu.len());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = cost.iter().map(|&c| lp.add_var(c, (0.0, f64::INFINITY))).collect();
    for i in 0..m {
        let row: Vec<_> = (0..n).map(|j| (vars[i * n + j], 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, mu[i]);
    }
    // one column constraint is implied by the others
    for j in 0..n - 1 {
        let col: Vec<_> = (0..m).map(|i| (vars[i * n + j], 1.0)).collect();
        lp.add_constraint(col.as_slice(), ComparisonOp::Eq, nu[j]);
    }
    lp.solve().expect("transport LP is feasible and bounded").objective()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `min_sigma (1/n) sum_i c[i][sigma(i)]` and a minimizing permutation.
pub fn permutation_minimum(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    permutations(n)
        .into_iter()
        .map(|p| {
            let v = compensated_sum(p.iter().enumerate().map(|(i, &j)| cost[i * n + j] / n as f64));
            (v, p)
        })
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap()
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, side: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| vec![rng.gen::<f64>() * side, rng.gen::<f64>() * side]).collect()
}

pub fn random_metric(rng: &mut ChaCha8Rng, n: usize, side: f64) -> FiniteMetricSpace {
    FiniteMetricSpace::from_points(&random_points(rng, n, side)).unwrap()
}

pub fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> DiscreteMeasure {
    DiscreteMeasure::from_unnormalized((0..n).map(|_| rng.gen_range(0.05..1.0)).collect()).unwrap()
}

/// A measure with some points left empty.
pub fn random_sparse_measure(rng: &mut ChaCha8Rng, n: usize) -> DiscreteMeasure {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.05..1.0) })
            .collect();
        if w.iter().any(|&x| x > 0.0) {
            return DiscreteMeasure::from_unnormalized(w).unwrap();
        }
    }
}
