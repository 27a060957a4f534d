//! Sparse precision estimates along a penalty path on a synthetic network.
//!
//! ```text
//! cargo run --example glasso_path
//! ```

use gaugenet::dataset::{generate_synthetic_panel, sample_covariance, standardized, EdgeSpec, LogTransform, SyntheticSpec};
use gaugenet::glasso::{glasso_fit, precision_to_coefficients, PenaltySpec};
use gaugenet::graph::graph_from_precision;

fn main() -> gaugenet::Result<()> {
    let spec = SyntheticSpec::new(6, 3000, EdgeSpec::List(vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]), 1);
    let (panel, truth) = generate_synthetic_panel(&spec)?;
    let (z, _) = standardized(&panel, &LogTransform::default())?;
    let s = sample_covariance(z.view())?;

    println!("true edges: {:?}", truth.edges().collect::<Vec<_>>());
    println!("{:>7} {:>8} {:>6} {:>9}", "lambda", "L1", "edges", "converged");
    for lambda in [0.0, 0.05, 0.1, 0.3, 0.6, 0.9] {
        let est = glasso_fit(s.view(), &PenaltySpec::new(lambda))?;
        let g = graph_from_precision(est.theta.view(), 1e-8, panel.gauge_ids().to_vec())?;
        println!("{lambda:>7.2} {:>8.3} {:>6} {:>9}", est.l1_norm(), g.edge_count(), est.converged);
    }

    let est = glasso_fit(s.view(), &PenaltySpec::with_pattern(0.0, truth))?;
    let a = precision_to_coefficients(&est)?;
    println!("\nregression weights of gauge 2 on its neighbours (column 2 of A):");
    for i in 0..6 {
        if a[[i, 2]] != 0.0 {
            println!("  from {}: {:.3}", panel.gauge_ids()[i], a[[i, 2]]);
        }
    }
    Ok(())
}
