//! Greedy removal plan: which gauges could be retired, and who would then
//! serve as their donors.
//!
//! ```text
//! cargo run --example remove_gauges
//! ```

use gaugenet::dataset::{generate_synthetic_panel, split, EdgeSpec, SyntheticSpec};
use gaugenet::inference::evaluate;
use gaugenet::removal::{confident_removals, nse_band, run_rg};

fn main() -> gaugenet::Result<()> {
    let (panel, graph) = generate_synthetic_panel(&SyntheticSpec::new(10, 2000, EdgeSpec::Probability(0.3), 5))?;
    let splits = split(&panel, 5)?;
    let report = evaluate(&graph, &splits, 0.7)?;
    let nse: Vec<f64> = report.nse_by_gauge().into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();

    let plan = run_rg(&nse, &graph)?;
    let ids = panel.gauge_ids();
    for (rank, e) in plan.queue.iter().enumerate() {
        let donors: Vec<&str> = e.donors.iter().map(|&d| ids[d].as_str()).collect();
        println!("{:>2}. {} NSE {:.3} ({}) donors {:?}", rank + 1, ids[e.gauge], e.nse, nse_band(e.nse), donors);
    }
    let sure: Vec<&str> = confident_removals(&plan, 0.8).iter().map(|&g| ids[g].as_str()).collect();
    println!("removable with NSE >= 0.8: {sure:?}");
    Ok(())
}
