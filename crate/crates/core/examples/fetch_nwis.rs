//! Downloads a few years of daily discharge for two Ohio gauges and prints
//! their summary. Needs network access.
//!
//! ```text
//! cargo run --example fetch_nwis -- 03234500 03237280
//! ```

use chrono::NaiveDate;
use gaugenet::nwis::{endpoint_from_env, fetch_panel, fetch_site_coords};

fn main() -> gaugenet::Result<()> {
    let mut sites: Vec<String> = std::env::args().skip(1).collect();
    if sites.is_empty() {
        sites = vec!["03234500".into(), "03237280".into()];
    }
    let start = NaiveDate::from_ymd_opt(1971, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(1973, 12, 31).unwrap();
    let endpoint = endpoint_from_env();
    let panel = fetch_panel(&sites, start, end, &endpoint)?;
    let coords = fetch_site_coords(&sites, &endpoint)?;
    println!("{} days x {} gauges", panel.n_days(), panel.n_gauges());
    for (j, id) in panel.gauge_ids().iter().enumerate() {
        let col = panel.q().column(j).to_owned();
        println!(
            "{id} at ({:.3}, {:.3}): mean {:.2} m3/s, max {:.2} m3/s",
            coords.lat[j],
            coords.lon[j],
            col.mean().unwrap_or(f64::NAN),
            col.fold(0.0f64, |m, &v| m.max(v))
        );
    }
    Ok(())
}
