//! Minimal factorization `theta = phi_check o psi_hat` for a few scale functions.
//!
//!     cargo run --example factorize [spec ...]

use ccc_transport::scale::{minimal_factorization, ScaleSpec, DEFAULT_GRID_POINTS, DEFAULT_R_MAX};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut specs: Vec<String> = std::env::args().skip(1).collect();
    if specs.is_empty() {
        specs = ["power:0.5", "power:2", "log1p", "exp_sqrt", "compose:log1p,power:2"]
            .map(String::from)
            .to_vec();
    }
    for s in &specs {
        let theta = ScaleSpec::parse(s)?;
        let fact = minimal_factorization(&theta, DEFAULT_GRID_POINTS, DEFAULT_R_MAX)?;
        let inv = fact.check_invariants()?;
        println!("{s}");
        println!(
            "  concave-normalized: {}, phi_check^-1(1) = {:.6}",
            fact.is_concave_normalized(),
            fact.phi_check_inv_at_1()
        );
        println!("  {:>6} {:>12} {:>12} {:>12}", "r", "theta", "psi_hat", "phi(psi)");
        for r in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let y = fact.psi_hat(r)?;
            println!("  {r:>6} {:>12.6} {y:>12.6} {:>12.6}", theta.eval(r, 0)?, fact.phi_check(y)?);
        }
        println!(
            "  composition error {:.1e}, concavity excess {:.1e}, convexity deficit {:.1e}",
            inv.composition_error, inv.concavity_excess, inv.convexity_deficit
        );
    }
    Ok(())
}
