//! Round trip through the on-disk formats read by the `ccc` binary: metric
//! spaces as JSON or CSV, measures and functions as JSON, and scale
//! functions as `r,theta,d1,d2` tables.
//!
//!     cargo run --example files

use ccc_transport::scale::{minimal_factorization, ScaleSpec};
use ccc_transport::spaces::{DiscreteMeasure, FiniteMetricSpace, MetricCheck};
use ccc_transport::transport::wasserstein_distance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("ccc-files-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let space = FiniteMetricSpace::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.5]])?;
    std::fs::write(dir.join("metric.csv"), space.to_csv())?;
    std::fs::write(dir.join("mu.json"), r#"{"weights": [0.5, 0.5, 0.0]}"#)?;
    std::fs::write(dir.join("nu.json"), r#"{"weights": [0.0, 0.25, 0.75]}"#)?;

    // theta(r) = r^2 + r tabulated with exact derivatives
    let mut table = String::from("r,theta,d1,d2\n");
    for k in 0..=400 {
        let r = k as f64 * 0.025;
        table += &format!("{r},{},{},2\n", r * r + r, 2.0 * r + 1.0);
    }
    std::fs::write(dir.join("theta.csv"), table)?;

    let space = FiniteMetricSpace::load(dir.join("metric.csv"), MetricCheck::default())?;
    let mu = DiscreteMeasure::load(dir.join("mu.json"))?;
    let nu = DiscreteMeasure::load(dir.join("nu.json"))?;
    let spec = ScaleSpec::parse(&format!("tabulated:{}", dir.join("theta.csv").display()))?;
    let fact = minimal_factorization(&spec, 1024, 10.0)?;
    let w = wasserstein_distance(&mu, &nu, &space, &fact, 1e-8)?;
    println!("loaded {} points; W = {:.8}", space.len(), w.distance);
    println!("same run from the shell:");
    println!(
        "  ccc wasserstein --fn tabulated:{0}/theta.csv --mu {0}/mu.json --nu {0}/nu.json --metric {0}/metric.csv --grid-points 1024 --tol 1e-8",
        dir.display()
    );
    Ok(())
}
