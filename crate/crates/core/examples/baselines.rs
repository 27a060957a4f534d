//! Nearest-neighbour donor graphs by distance and by correlation.
//!
//! ```text
//! cargo run --example baselines
//! ```

use gaugenet::dataset::{generate_synthetic_network, planted_spatial_network, split, standardized, EdgeSpec, LogTransform, SyntheticSpec};
use gaugenet::graph::{corr_graph, dist_graph};

fn main() -> gaugenet::Result<()> {
    let (edges, coords) = planted_spatial_network(12, 16, 2)?;
    let net = generate_synthetic_network(&SyntheticSpec::new(12, 1500, EdgeSpec::List(edges), 2))?;
    let splits = split(&net.panel, 2)?;
    let (z_train, _) = standardized(&splits.train, &LogTransform::default())?;

    println!("true graph: {} edges", net.graph.edge_count());
    for m in 1..=3 {
        let d = dist_graph(&coords, m)?;
        let c = corr_graph(z_train.view(), net.panel.gauge_ids().to_vec(), m)?;
        let hit = |g: &gaugenet::graph::GaugeGraph| g.edges().filter(|&(i, j)| net.graph.has_edge(i, j)).count();
        println!(
            "m={m}: Dist({}) with {} true, Corr({}) with {} true",
            d.edge_count(),
            hit(&d),
            c.edge_count(),
            hit(&c)
        );
    }
    println!("G00 to G01: {:.1} km", coords.distance_km(0, 1));
    Ok(())
}
