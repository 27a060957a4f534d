//! Greedy gauge removal: repeatedly take the best-inferred remaining gauge
//! and lock its neighbours as its donors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{donors_of, GaugeGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeStatus {
    Removed,
    Isolated,
    NeighborOfRemoved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalEntry {
    pub gauge: usize,
    pub nse: f64,
    pub donors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalPlan {
    pub queue: Vec<RemovalEntry>,
    pub max_rem_rank: usize,
    /// Status of every gauge, by index.
    pub status: Vec<GaugeStatus>,
}

/// Colour band used for NSE in the removal maps.
pub fn nse_band(nse: f64) -> &'static str {
    if nse >= 0.9 {
        "blue"
    } else if nse >= 0.8 {
        "green"
    } else if nse >= 0.7 {
        "yellow"
    } else if nse >= 0.6 {
        "orange"
    } else {
        "red"
    }
}

/// Runs the removal loop over `nse_values` (one per gauge). Ties in NSE
/// go to the lower index. A NaN NSE sorts last.
pub fn run_rg(nse_values: &[f64], graph: &GaugeGraph) -> Result<RemovalPlan> {
    let p = graph.p();
    if nse_values.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{} NSE values for {p} gauges",
            nse_values.len()
        )));
    }
    let mut status: Vec<Option<GaugeStatus>> = (0..p)
        .map(|j| graph.is_isolated(j).then_some(GaugeStatus::Isolated))
        .collect();

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (nse_values[a], nse_values[b]);
        match (x.is_nan(), y.is_nan()) {
            (true, true) => a.cmp(&b),
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => y.total_cmp(&x).then(a.cmp(&b)),
        }
    });

    let mut queue = Vec::new();
    for r in order {
        if status[r].is_some() {
            continue;
        }
        let donors = donors_of(graph, r);
        for &d in &donors {
            if status[d].is_none() {
                status[d] = Some(GaugeStatus::NeighborOfRemoved);
            }
        }
        status[r] = Some(GaugeStatus::Removed);
        queue.push(RemovalEntry {
            gauge: r,
            nse: nse_values[r],
            donors,
        });
    }
    Ok(RemovalPlan {
        max_rem_rank: queue.len(),
        queue,
        status: status.into_iter().map(|s| s.expect("every gauge visited")).collect(),
    })
}

/// Queue members with NSE ≥ δ, in queue order.
pub fn confident_removals(plan: &RemovalPlan, delta: f64) -> Vec<usize> {
    plan.queue
        .iter()
        .filter(|e| e.nse >= delta)
        .map(|e| e.gauge)
        .collect()
}
