//! Composing with a convex `Phi`, `Phi(1) = 1`, can only increase the
//! distance under probability weights, when `Phi o theta` inherits the
//! factorization `(Phi o phi_check, psi_hat)`.
//!
//!     cargo run --example jensen

use ccc_transport::gauge::{orlicz_distance, orlicz_distance_with_outer, JensenPhi};
use ccc_transport::scale::{minimal_factorization, ScaleSpec, DEFAULT_GRID_POINTS, DEFAULT_R_MAX};
use ccc_transport::spaces::{SampleFunction, WeightedSpace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let space = WeightedSpace::new(vec![0.5, 0.3, 0.2])?;
    let f = SampleFunction::new(vec![0.2, 0.7, 0.1])?;
    let g = SampleFunction::zeros(3);
    for s in ["power:0.5", "power:2", "log1p"] {
        let fact = minimal_factorization(&ScaleSpec::parse(s)?, DEFAULT_GRID_POINTS, DEFAULT_R_MAX)?;
        let base = orlicz_distance(&f, &g, &fact, &space, 1e-10)?.distance;
        for outer in JensenPhi::ALL {
            let d = orlicz_distance_with_outer(&f, &g, &fact, &outer.spec(), &space, 1e-10)?.distance;
            println!("{s:>10} {:>9}: {d:.8} >= {base:.8}", format!("{outer:?}"));
        }
    }
    Ok(())
}
