//! `W <= 1` exactly when some coupling has `sum q theta(d) <= 1`.
//! Prints both sides for measures drifting apart.
//!
//!     cargo run --example unit_ball

use ccc_transport::scale::{minimal_factorization, ScaleSpec, DEFAULT_GRID_POINTS, DEFAULT_R_MAX};
use ccc_transport::spaces::{DiscreteMeasure, FiniteMetricSpace};
use ccc_transport::transport::check_unit_ball_equivalence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScaleSpec::parse("exp_sqrt")?;
    let fact = minimal_factorization(&spec, DEFAULT_GRID_POINTS, DEFAULT_R_MAX)?;
    let points: Vec<Vec<f64>> = (0..6).map(|k| vec![0.25 * k as f64]).collect();
    let space = FiniteMetricSpace::from_points(&points)?;
    let mu = DiscreteMeasure::dirac(6, 0);
    for k in 0..6 {
        let nu = DiscreteMeasure::new((0..6).map(|j| if j == k { 0.6 } else { 0.08 }).collect())?;
        let c = check_unit_ball_equivalence(&mu, &nu, &space, &spec, &fact, 1e-9)?;
        println!(
            "mass at x{k}: W = {:.6} ({}), min cost = {:.6} ({}){}",
            c.distance,
            c.distance_at_most_one,
            c.min_cost,
            c.min_cost_at_most_one,
            if c.agree() { "" } else { "  DISAGREE" }
        );
    }
    Ok(())
}
