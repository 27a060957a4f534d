//! Test-period streamflow estimates from a donor graph, with the three
//! inference approaches side by side.
//!
//! ```text
//! cargo run --example infer_flows
//! ```

use gaugenet::dataset::{generate_synthetic_panel, split, EdgeSpec, SyntheticSpec};
use gaugenet::inference::{evaluate_with, fit_mlr, InferenceApproach};
use gaugenet::dataset::to_log;

fn main() -> gaugenet::Result<()> {
    let edges = vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4)];
    let (panel, graph) = generate_synthetic_panel(&SyntheticSpec::new(6, 3000, EdgeSpec::List(edges), 9))?;
    let splits = split(&panel, 9)?;

    let model = fit_mlr(to_log(&splits.train).view(), &graph, 1)?;
    println!("gauge G01 ~ {:.3} + {:?} on donors {:?}", model.beta0, model.betas, model.donors);

    for approach in [InferenceApproach::ZScore, InferenceApproach::LogMlr, InferenceApproach::RawMlr] {
        let rep = evaluate_with(&graph, &splits, 0.7, approach)?;
        let nse: Vec<String> = rep.per_gauge_nse.iter().map(|v| format!("{v:.3}")).collect();
        println!("{approach:?}: NSE [{}], test error {:.3}", nse.join(", "), rep.error_test);
    }
    Ok(())
}
