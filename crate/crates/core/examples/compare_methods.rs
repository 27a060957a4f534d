//! SGM against the Dist and Corr baselines: resampled test errors, one-tailed
//! Welch tests, and graph scores over a shared number of removable gauges.
//!
//! ```text
//! cargo run --release --example compare_methods
//! ```

use gaugenet::dataset::{generate_synthetic_network, planted_spatial_network, split, standardized, EdgeSpec, LogTransform, SyntheticSpec};
use gaugenet::graph::{corr_graph, dist_graph, GaugeGraph};
use gaugenet::inference::evaluate;
use gaugenet::removal::{confident_removals, run_rg};
use gaugenet::scoring::{graph_score, one_tailed_t_test, resample_mean_error};
use gaugenet::sgm::{pareto_front, run_sgm, select_graph, SelectionPolicy, SgmConfig};

fn main() -> gaugenet::Result<()> {
    let (edges, coords) = planted_spatial_network(12, 18, 6)?;
    let net = generate_synthetic_network(&SyntheticSpec::new(12, 2000, EdgeSpec::List(edges), 6))?;
    let panel = &net.panel;
    let splits = split(panel, 6)?;
    let (z_train, _) = standardized(&splits.train, &LogTransform::default())?;

    let corr = corr_graph(z_train.view(), panel.gauge_ids().to_vec(), 2)?;
    let dist = dist_graph(&coords, 2)?;
    let front = pareto_front(&run_sgm(&splits, &SgmConfig { k_min: 1, res: 10, ..SgmConfig::default() })?)?;
    let sgm = select_graph(&front, SelectionPolicy::Edges(corr.edge_count()))?.graph.as_ref().clone();

    let methods: [(&str, &GaugeGraph); 3] = [("SGM", &sgm), ("Corr", &corr), ("Dist", &dist)];
    let mut runs = Vec::new();
    let mut nses = Vec::new();
    let mut m_rem = 0;
    for (name, g) in methods {
        let r = resample_mean_error(panel, g, 30, 0)?;
        let nse: Vec<f64> = evaluate(g, &splits, 0.7)?.nse_by_gauge().into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        m_rem = m_rem.max(confident_removals(&run_rg(&nse, g)?, 0.7).len());
        println!("{name}({}): mean test error {:.4} +- {:.4}", g.edge_count(), r.mean, r.stdev);
        runs.push(r.errors);
        nses.push(nse.into_iter().filter(|v| !v.is_nan()).collect::<Vec<_>>());
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let t = one_tailed_t_test(&runs[a], &runs[b])?;
        println!("{} < {}: t = {:.2}, p = {:.4}", methods[a].0, methods[b].0, t.t, t.p_value);
    }
    let m_rem = m_rem.max(1);
    for ((name, _), nse) in methods.iter().zip(&nses) {
        println!("{name} graph score over top {m_rem}: {:.3}", graph_score(nse, m_rem.min(nse.len()))?);
    }
    Ok(())
}
