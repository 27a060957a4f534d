//! Donor gauge selection for streamflow networks.
//!
//! A gauge network is modelled as a Gaussian graphical model over
//! log-transformed, standardized daily flows. Sparse precision matrices are
//! estimated with the graphical lasso ([`glasso`]), thresholded into donor
//! graphs ([`graph`]) and selected by a two-objective search over edge count
//! and validation error ([`sgm`]). The chosen graph then drives
//! donor-restricted regressions for record extension ([`inference`]) and a
//! greedy plan for removing gauges with the least information loss
//! ([`removal`]).
//!
//! ```no_run
//! use gaugenet::dataset::{load_panel, split, MissingPolicy};
//! use gaugenet::sgm::{pareto_front, run_sgm, select_graph, SelectionPolicy, SgmConfig};
//!
//! let panel = load_panel("ohio.csv", MissingPolicy::Reject)?;
//! let splits = split(&panel, 42)?;
//! let points = run_sgm(&splits, &SgmConfig::default())?;
//! let front = pareto_front(&points)?;
//! let chosen = select_graph(&front, SelectionPolicy::Edges(47))?;
//! println!("{} edges, validation error {:.3}", chosen.edge_count, chosen.error_val);
//! # Ok::<(), gaugenet::Error>(())
//! ```

pub mod commands;
pub mod dataset;
pub mod error;
pub mod glasso;
pub mod graph;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod nwis;
pub mod removal;
pub mod scoring;
pub mod sgm;
pub mod svg;

pub use error::{Error, Result};
