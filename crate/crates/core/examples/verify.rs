//! Checks a factorization against its source and compares the minimal
//! concave factor with another valid one.
//!
//!     cargo run --example verify

use ccc_transport::scale::{
    log_grid, minimal_factorization, minimality_gap, verify_factorization, ScaleSpec, DEFAULT_R_MAX,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta = ScaleSpec::parse("power:2")?;
    let fact = minimal_factorization(&theta, 2048, DEFAULT_R_MAX)?;
    let grid = log_grid(256, DEFAULT_R_MAX);
    let (phi, psi) = fact.as_scale_specs()?;
    let report = verify_factorization(&theta, &phi, &psi, &grid[1..])?;
    println!("minimal factorization of power:2: {report:?}");

    // x^2 = (x^4) o sqrt is a factorization too, with a more concave inner part
    let report = verify_factorization(&theta, &ScaleSpec::parse("power:4")?, &ScaleSpec::parse("power:0.5")?, &grid[1..])?;
    println!("power:4 o power:0.5: sup residual {:.2e}", report.sup_residual);
    let gaps = minimality_gap(&ScaleSpec::parse("power:0.5")?, &fact, &grid[1..])?;
    let worst = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("power:0.5 as candidate: max gap {worst:.3e} (<= 0 means the minimal factor is less concave)");

    let theta = ScaleSpec::parse("exp_sqrt")?;
    let fact = minimal_factorization(&theta, 2048, DEFAULT_R_MAX)?;
    let gaps = minimality_gap(&ScaleSpec::parse("power:0.5")?, &fact, &grid[1..])?;
    let worst = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("exp_sqrt against power:0.5: max gap {worst:.3e}");
    Ok(())
}
