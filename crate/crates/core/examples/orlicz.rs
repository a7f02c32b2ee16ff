//! Orlicz-type distances between two functions on a weighted five-point space.
//!
//!     cargo run --example orlicz

use ccc_transport::gauge::{orlicz_distance, orlicz_distance_concave, DEFAULT_TOLERANCE};
use ccc_transport::scale::{minimal_factorization, ScaleSpec, DEFAULT_GRID_POINTS, DEFAULT_R_MAX};
use ccc_transport::spaces::{SampleFunction, WeightedSpace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let space = WeightedSpace::new(vec![0.1, 0.2, 0.3, 0.25, 0.15])?;
    let f = SampleFunction::new(vec![0.0, 1.0, 2.5, 0.3, 4.0])?;
    let g = SampleFunction::new(vec![0.5, 1.0, 0.5, 0.0, 1.0])?;

    for s in ["power:0.5", "power:1", "power:2", "power:3", "log1p", "exp_minus_one", "exp_sqrt"] {
        let fact = minimal_factorization(&ScaleSpec::parse(s)?, DEFAULT_GRID_POINTS, DEFAULT_R_MAX)?;
        let r = orlicz_distance(&f, &g, &fact, &space, DEFAULT_TOLERANCE)?;
        print!(
            "{s:>14}: d = {:.9}  (modular {:.3e} below 1, {} bisections)",
            r.distance,
            1.0 - r.modular_at_t,
            r.bisection_iterations
        );
        // concave scales have phi_check = id and reduce to a weighted sum
        if let Ok(sum) = orlicz_distance_concave(&f, &g, &fact, &space) {
            print!("  sum mu theta|f-g| = {sum:.9}");
        }
        println!();
    }
    Ok(())
}
