//! Wasserstein-type distance and optimal plan between two measures on a
//! random planar point cloud.
//!
//!     cargo run --example wasserstein [spec] [seed]

use ccc_transport::scale::{minimal_factorization, ScaleSpec, DEFAULT_GRID_POINTS, DEFAULT_R_MAX};
use ccc_transport::spaces::{DiscreteMeasure, FiniteMetricSpace};
use ccc_transport::transport::{transport_modular, wasserstein_distance, DEFAULT_TOLERANCE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let spec = args.next().unwrap_or_else(|| "exp_sqrt".into());
    let seed = args.next().map_or(Ok(7), |s| s.parse())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n = 8;
    let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)]).collect();
    let space = FiniteMetricSpace::from_points(&points)?;
    let mu = DiscreteMeasure::from_unnormalized((0..n).map(|_| rng.gen_range(0.1..1.0)).collect())?;
    let nu = DiscreteMeasure::from_unnormalized((0..n).map(|_| rng.gen_range(0.1..1.0)).collect())?;

    let fact = minimal_factorization(&ScaleSpec::parse(&spec)?, DEFAULT_GRID_POINTS, DEFAULT_R_MAX)?;
    let w = wasserstein_distance(&mu, &nu, &space, &fact, DEFAULT_TOLERANCE)?;
    println!("W_{spec} = {:.8} after {} LP solves", w.distance, w.lp_solves);
    println!("bracket [{:.8}, {:.8}]", w.bracket.0, w.bracket.1);
    println!("transport modular at W: {:.8}", w.transport_modular_at_w);
    for t in [0.5 * w.distance, 2.0 * w.distance] {
        let (m, _) = transport_modular(&mu, &nu, &space, t, &fact)?;
        println!("T({t:.4}) = {m:.6}");
    }
    println!("optimal plan:");
    for row in w.optimal_plan.rows() {
        println!("  {}", row.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>().join(" "));
    }
    Ok(())
}
