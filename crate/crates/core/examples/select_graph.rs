//! Grid search over penalty and edge budget, Pareto front, and the three
//! selection policies.
//!
//! ```text
//! cargo run --release --example select_graph
//! ```

use gaugenet::dataset::{generate_synthetic_panel, split, EdgeSpec, SyntheticSpec};
use gaugenet::sgm::{pareto_front, run_sgm, select_graph, SelectionPolicy, SgmConfig};

fn main() -> gaugenet::Result<()> {
    let spec = SyntheticSpec::new(10, 2000, EdgeSpec::Probability(0.25), 4);
    let (panel, truth) = generate_synthetic_panel(&spec)?;
    let splits = split(&panel, 4)?;

    let cfg = SgmConfig { k_min: 1, res: 10, ..SgmConfig::default() };
    let points = run_sgm(&splits, &cfg)?;
    let front = pareto_front(&points)?;
    println!("{} candidate graphs, {} on the front (true graph has {} edges)", points.len(), front.points.len(), truth.edge_count());
    for c in &front.points {
        println!("  {:>3} edges  error {:.4}  lambda {:.3}", c.edge_count, c.error_val, c.lambda);
    }

    for policy in [SelectionPolicy::Knee, SelectionPolicy::Edges(truth.edge_count()), SelectionPolicy::MinError] {
        let c = select_graph(&front, policy)?;
        let hits = c.graph.edges().filter(|&(i, j)| truth.has_edge(i, j)).count();
        println!("{policy:?}: {} edges, {hits} of them true, validation error {:.4}", c.edge_count, c.error_val);
    }
    Ok(())
}
