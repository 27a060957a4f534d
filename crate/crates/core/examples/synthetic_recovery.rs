//! How well the selected graph recovers a planted network, by F1 score.
//!
//! ```text
//! cargo run --release --example synthetic_recovery
//! ```

use gaugenet::dataset::{generate_synthetic_panel, split, EdgeSpec, SyntheticSpec};
use gaugenet::sgm::{pareto_front, run_sgm, SgmConfig};

fn main() -> gaugenet::Result<()> {
    for seed in 0..5 {
        let (panel, truth) = generate_synthetic_panel(&SyntheticSpec::new(8, 4000, EdgeSpec::Probability(0.3), seed))?;
        let splits = split(&panel, seed)?;
        let front = pareto_front(&run_sgm(&splits, &SgmConfig { k_min: 1, res: 8, ..SgmConfig::default() })?)?;
        let (best, edges) = front
            .points
            .iter()
            .map(|c| {
                let tp = c.graph.edges().filter(|&(i, j)| truth.has_edge(i, j)).count() as f64;
                let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (c.edge_count + truth.edge_count()) as f64 };
                (f1, c.edge_count)
            })
            .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
        println!("seed {seed}: {} true edges, best front F1 {best:.3} at {edges} edges", truth.edge_count());
    }
    Ok(())
}
