//! Acceptance suite. Runs without the default harness and prints one
//! PASS/FAIL line per criterion; exits nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ccc_transport::gauge::{self, jensen_compose, orlicz_distance, orlicz_distance_with_outer, JensenPhi};
use ccc_transport::scale::{minimal_factorization, Factorization, ScaleSpec, DEFAULT_GRID_POINTS, DEFAULT_R_MAX};
use ccc_transport::spaces::{DiscreteMeasure, FiniteMetricSpace, SampleFunction, WeightedSpace};
use ccc_transport::transport::{check_unit_ball_equivalence, solve_ot, wasserstein_distance, DEFAULT_TOLERANCE};
use common::*;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Grid nodes plus arithmetic and geometric cell midpoints.
fn probe_points(grid: &[f64]) -> Vec<f64> {
    let mut pts = grid.to_vec();
    for w in grid.windows(2) {
        pts.push(0.5 * (w[0] + w[1]));
        if w[0] > 0.0 {
            pts.push((w[0] * w[1]).sqrt());
        }
    }
    pts
}

fn factorization_correctness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for (name, closed) in CATALOG {
        let t0 = Instant::now();
        let fact = minimal_factorization(&spec(name), DEFAULT_GRID_POINTS, DEFAULT_R_MAX).unwrap();
        let report = fact.check_invariants().unwrap();
        slowest = slowest.max(t0.elapsed());
        assert!(report.holds(), "{name}: {report:?}");
        for x in probe_points(fact.grid()) {
            let theta = closed.theta(x);
            let composed = fact.phi_check(fact.psi_hat(x).unwrap()).unwrap();
            worst = worst.max((composed - theta).abs() / theta.max(1e-12));
        }
        // shape of psi_hat against dense quadrature, free of normalization
        let at_one = fact.psi_hat(1.0).unwrap();
        let oracle_one = concave_factor_by_quadrature(closed, 1.0, 1_000_000);
        for x in [0.05, 0.7, 2.5, 10.0] {
            let oracle = concave_factor_by_quadrature(closed, x, 1_000_000) / oracle_one;
            let got = fact.psi_hat(x).unwrap() / at_one;
            worst_oracle = worst_oracle.max((got - oracle).abs() / oracle);
        }
    }
    // closed form on [0, 1]: psi_hat(1) = 2 (1 - 1/e) with psi_hat'(1) = 1
    let es = fact("exp_sqrt");
    let analytic = 2.0 * (1.0 - (-1.0f64).exp());
    let analytic_err = (es.psi_hat(1.0).unwrap() - analytic).abs() / analytic;
    outcome(
        worst <= 1e-4 && worst_oracle <= 1e-6 && analytic_err <= 1e-8 && slowest < Duration::from_secs(1),
        format!(
            "composition rel err {worst:.2e}, quadrature oracle {worst_oracle:.2e}, exp_sqrt closed form {analytic_err:.2e}, slowest {slowest:.2?}"
        ),
    )
}

fn trivial_factors() -> Outcome {
    let mut convex_err: f64 = 0.0;
    let mut concave_err: f64 = 0.0;
    for (name, closed) in CATALOG {
        let fact = fact(name);
        if closed.is_convex() {
            for x in probe_points(fact.grid()) {
                convex_err = convex_err.max((fact.psi_hat(x).unwrap() - x).abs());
            }
        }
        if closed.is_concave() {
            let (ys, _) = fact.phi_check_table();
            for y in probe_points(ys) {
                concave_err = concave_err.max((fact.phi_check(y).unwrap() - y).abs());
            }
        }
    }
    outcome(
        convex_err <= 1e-6 && concave_err <= 1e-6,
        format!("convex |psi_hat - Id| {convex_err:.2e}, concave |phi_check - Id| {concave_err:.2e}"),
    )
}

fn random_function(rng: &mut impl Rng, n: usize, half_width: f64) -> SampleFunction {
    SampleFunction::new((0..n).map(|_| rng.gen_range(-half_width..half_width)).collect()).unwrap()
}

fn random_space(rng: &mut impl Rng, n: usize, zeros: bool) -> WeightedSpace {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| if zeros && rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.05..1.0) })
            .collect();
        if let Ok(s) = WeightedSpace::new(w) {
            return s;
        }
    }
}

fn probability_space(rng: &mut impl Rng, n: usize) -> WeightedSpace {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    WeightedSpace::new(w.iter().map(|x| x / total).collect()).unwrap()
}

fn orlicz_closed_form() -> Outcome {
    let mut rng = rng(3);
    let mut worst: f64 = 0.0;
    for p in [0.5, 1.0, 2.0, 3.0] {
        let fact = fact(&format!("power:{p}"));
        for _ in 0..100 {
            let n = rng.gen_range(1..=32);
            let space = random_space(&mut rng, n, true);
            let f = random_function(&mut rng, n, 5.0);
            let g = random_function(&mut rng, n, 5.0);
            let r = orlicz_distance(&f, &g, &fact, &space, gauge::DEFAULT_TOLERANCE).unwrap();
            let sum = compensated_sum(
                space
                    .weights()
                    .iter()
                    .zip(f.values().iter().zip(g.values()))
                    .map(|(w, (a, b))| w * (a - b).abs().powf(p)),
            );
            let expected = if p >= 1.0 { sum.powf(1.0 / p) } else { sum };
            worst = worst.max((r.distance - expected).abs() / expected);
        }
    }
    outcome(worst <= 1e-6, format!("worst rel err {worst:.2e} over 400 instances"))
}

fn gauge_metric_axioms() -> Outcome {
    let mut rng = rng(4);
    let fact = fact("exp_sqrt");
    let tol = 1e-12;
    let mut asymmetric = 0;
    let mut worst_triangle = f64::NEG_INFINITY;
    let mut identity_failures = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=16);
        let space = random_space(&mut rng, n, true);
        let f = random_function(&mut rng, n, 2.5);
        let g = random_function(&mut rng, n, 2.5);
        let h = random_function(&mut rng, n, 2.5);
        let d = |a: &SampleFunction, b: &SampleFunction| orlicz_distance(a, b, &fact, &space, tol).unwrap().distance;
        let (fg, gf) = (d(&f, &g), d(&g, &f));
        if fg != gf {
            asymmetric += 1;
        }
        worst_triangle = worst_triangle.max(d(&f, &h) - d(&f, &g) - d(&g, &h));
        // change f only where the weight vanishes
        let mut shadow = f.values().to_vec();
        for (v, w) in shadow.iter_mut().zip(space.weights()) {
            if *w == 0.0 {
                *v += 1.0;
            }
        }
        let shadow = SampleFunction::new(shadow).unwrap();
        let differs = f.values().iter().zip(g.values()).zip(space.weights()).any(|((a, b), w)| *w > 0.0 && a != b);
        if d(&f, &f) != 0.0 || d(&f, &shadow) != 0.0 || (fg > 0.0) != differs {
            identity_failures += 1;
        }
    }
    outcome(
        asymmetric == 0 && worst_triangle <= 1e-8 && identity_failures == 0,
        format!("asymmetric {asymmetric}, worst triangle excess {worst_triangle:.2e}, identity failures {identity_failures}"),
    )
}

fn homogeneity_and_jensen() -> Outcome {
    let mut rng = rng(5);
    let tol = 1e-12;
    let convex: Vec<Factorization> = ["power:2", "power:3", "exp_minus_one"].iter().map(|s| fact(s)).collect();
    let mut worst_hom: f64 = 0.0;
    for k in 0..100 {
        let fact = &convex[k % convex.len()];
        let n = rng.gen_range(1..=24);
        let space = probability_space(&mut rng, n);
        let f = random_function(&mut rng, n, 1.0);
        let zero = SampleFunction::zeros(n);
        let base = orlicz_distance(&f, &zero, fact, &space, tol).unwrap().distance;
        for lambda in [0.5, 2.0, 10.0] {
            let scaled = orlicz_distance(&f.scaled(lambda).unwrap(), &zero, fact, &space, tol).unwrap().distance;
            worst_hom = worst_hom.max((scaled - lambda * base).abs() / (lambda * base));
        }
    }
    let thetas = ["exp_sqrt", "power:0.5", "log1p", "power:2"];
    let mut cases = Vec::new();
    for t in thetas {
        for phi in JensenPhi::ALL {
            let outer = phi.spec();
            let minimal = minimal_factorization(&jensen_compose(&outer, &spec(t)).unwrap(), DEFAULT_GRID_POINTS, DEFAULT_R_MAX)
                .unwrap();
            cases.push((fact(t), outer, minimal));
        }
    }
    let mut worst_jensen = f64::NEG_INFINITY;
    // informational: the same comparison with the minimal factorization of Phi o theta
    let mut minimal_violations = 0;
    for k in 0..100 {
        let (inner, outer, minimal) = &cases[k % cases.len()];
        let n = rng.gen_range(1..=24);
        let space = probability_space(&mut rng, n);
        let f = random_function(&mut rng, n, 1.0);
        let g = random_function(&mut rng, n, 1.0);
        let d_inner = orlicz_distance(&f, &g, inner, &space, tol).unwrap().distance;
        let d_outer = orlicz_distance_with_outer(&f, &g, inner, outer, &space, tol).unwrap().distance;
        worst_jensen = worst_jensen.max(d_inner - d_outer);
        if orlicz_distance(&f, &g, minimal, &space, tol).unwrap().distance < d_inner - 1e-8 {
            minimal_violations += 1;
        }
    }
    outcome(
        worst_hom <= 1e-8 && worst_jensen <= 1e-8,
        format!(
            "homogeneity rel err {worst_hom:.2e}, worst d_theta - d_(Phi o theta) {worst_jensen:.2e} \
             (minimal factorization of Phi o theta would violate in {minimal_violations}/100)"
        ),
    )
}

fn ot_exactness() -> Outcome {
    let mut rng = rng(6);
    let mut worst: f64 = 0.0;
    let mut worst_cert: f64 = 0.0;
    for k in 0..200 {
        let n = 2 + k % 4;
        let cost: Vec<f64> = (0..n * n)
            .map(|_| if rng.gen_bool(0.3) { rng.gen_range(0..4) as f64 } else { rng.gen::<f64>() * 3.0 })
            .collect();
        let u = DiscreteMeasure::uniform(n);
        let r = solve_ot(&cost, &u, &u).unwrap();
        let got = compensated_sum(r.plan.entries().iter().zip(&cost).map(|(q, c)| q * c));
        let (best, _) = permutation_minimum(&cost, n);
        worst = worst.max((got - best).abs());
        worst_cert = worst_cert.max(r.certificate);
    }
    outcome(
        worst <= 1e-12 && worst_cert <= 1e-9,
        format!("max |solver - enumeration| {worst:.2e}, max certificate {worst_cert:.2e}"),
    )
}

fn wasserstein_p_norm() -> Outcome {
    let mut rng = rng(7);
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for p in [0.5, 1.0, 2.0, 3.0] {
        let fact = fact(&format!("power:{p}"));
        for _ in 0..50 {
            let space = random_metric(&mut rng, 8, 2.0);
            let mu = random_measure(&mut rng, 8);
            let nu = random_measure(&mut rng, 8);
            let w = wasserstein_distance(&mu, &nu, &space, &fact, DEFAULT_TOLERANCE).unwrap();
            let cost: Vec<f64> = space.distances().iter().map(|d| d.powf(p)).collect();
            let lp = lp_min_cost(&cost, mu.weights(), nu.weights());
            let expected = if p >= 1.0 { lp.powf(1.0 / p) } else { lp };
            worst = worst.max((w.distance - expected).abs() / expected);
        }
    }
    let elapsed = t0.elapsed();
    outcome(
        worst <= 1e-6 && elapsed < Duration::from_secs(30),
        format!("worst rel err vs LP oracle {worst:.2e}, 200 instances in {elapsed:.2?}"),
    )
}

fn wasserstein_metric_axioms() -> Outcome {
    let mut rng = rng(8);
    let fact = fact("exp_sqrt");
    let tol = 1e-9;
    let mut worst_triangle = f64::NEG_INFINITY;
    let mut worst_self: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for _ in 0..100 {
        let space = random_metric(&mut rng, 6, 3.0);
        let m: Vec<DiscreteMeasure> = (0..3).map(|_| random_sparse_measure(&mut rng, 6)).collect();
        let w = |a: &DiscreteMeasure, b: &DiscreteMeasure| wasserstein_distance(a, b, &space, &fact, tol).unwrap().distance;
        let (w01, w12, w02) = (w(&m[0], &m[1]), w(&m[1], &m[2]), w(&m[0], &m[2]));
        worst_triangle = worst_triangle.max(w02 - w01 - w12);
        worst_self = worst_self.max(w(&m[0], &m[0]));
        worst_sym = worst_sym.max((w01 - w(&m[1], &m[0])).abs());
    }
    outcome(
        worst_triangle <= 1e-6 && worst_self <= 1e-9 && worst_sym <= 1e-9,
        format!("triangle excess {worst_triangle:.2e}, W(mu,mu) {worst_self:.2e}, asymmetry {worst_sym:.2e}"),
    )
}

fn unit_ball_equivalence() -> Outcome {
    let mut rng = rng(9);
    let facts: Vec<(ScaleSpec, Factorization)> = CATALOG.iter().map(|(s, _)| (spec(s), fact(s))).collect();
    let (mut accepted, mut skipped, mut disagreements) = (0, 0, 0);
    let mut inside = 0;
    while accepted < 200 {
        let (spec, fact) = &facts[(accepted + skipped) % facts.len()];
        // log-uniform scale so that instances fall on both sides of the unit ball
        let side = rng.gen_range(0.3f64.ln()..7.0f64.ln()).exp();
        let space = random_metric(&mut rng, 6, side);
        // disjoint supports keep W comparable to the diameter
        let mut w: Vec<f64> = (0..6).map(|_| rng.gen_range(0.05..1.0)).collect();
        let mu = DiscreteMeasure::from_unnormalized([&w[..3], &[0.0; 3]].concat()).unwrap();
        w[..3].fill(0.0);
        let nu = DiscreteMeasure::from_unnormalized(w).unwrap();
        let c = check_unit_ball_equivalence(&mu, &nu, &space, spec, fact, DEFAULT_TOLERANCE).unwrap();
        if (c.distance - 1.0).abs() <= 1e-4 || (c.min_cost - 1.0).abs() <= 1e-4 {
            skipped += 1;
            continue;
        }
        accepted += 1;
        inside += c.distance_at_most_one as usize;
        if !c.agree() {
            disagreements += 1;
        }
    }
    outcome(
        disagreements == 0,
        format!("{disagreements} disagreements in {accepted} instances ({inside} inside the unit ball, {skipped} skipped at the margin)"),
    )
}

fn point_mass_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, _) in CATALOG {
        let fact = fact(name);
        for d in [0.1, 1.0, 3.0] {
            let space = FiniteMetricSpace::new(vec![vec![0.0, d], vec![d, 0.0]]).unwrap();
            let (x, y) = (DiscreteMeasure::dirac(2, 0), DiscreteMeasure::dirac(2, 1));
            let w = wasserstein_distance(&x, &y, &space, &fact, 1e-11).unwrap().distance;
            let expected = fact.psi_hat(d).unwrap() / fact.phi_check_inv_at_1();
            worst = worst.max((w - expected).abs() / expected);
        }
    }
    outcome(worst <= 1e-8, format!("worst rel err {worst:.2e}"))
}

fn performance() -> Outcome {
    let mut rng = rng(11);
    let fact = fact("exp_sqrt");
    let space = random_metric(&mut rng, 64, 2.0);
    let mu = random_measure(&mut rng, 64);
    let nu = random_measure(&mut rng, 64);
    let t0 = Instant::now();
    let r = wasserstein_distance(&mu, &nu, &space, &fact, 1e-6).unwrap();
    let elapsed = t0.elapsed();
    outcome(
        elapsed < Duration::from_secs(5) && r.transport_modular_at_w <= 1.0 + 1e-6,
        format!("64 points, {} LP solves in {elapsed:.2?}, W = {:.6}", r.lp_solves, r.distance),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("factorization correctness", factorization_correctness),
        ("trivial-factor cases", trivial_factors),
        ("Orlicz closed form", orlicz_closed_form),
        ("gauge metric axioms", gauge_metric_axioms),
        ("Luxemburg homogeneity and Jensen comparison", homogeneity_and_jensen),
        ("OT solver exactness", ot_exactness),
        ("Wasserstein p-norm reduction", wasserstein_p_norm),
        ("Wasserstein metric axioms", wasserstein_metric_axioms),
        ("unit-ball equivalence", unit_ball_equivalence),
        ("point-mass closed form", point_mass_closed_form),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} ({}; {:.2?})",
            k + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            t0.elapsed()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
