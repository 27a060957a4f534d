//! Daily-values client for the USGS water services RDB format.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use ndarray::Array2;

use crate::dataset::StreamflowPanel;
use crate::error::{Error, Result};

pub const DEFAULT_ENDPOINT: &str = "https://waterservices.usgs.gov/nwis/dv/";

/// Overrides [`DEFAULT_ENDPOINT`] when set.
pub const ENDPOINT_ENV: &str = "GAUGENET_NWIS_ENDPOINT";

/// Cubic feet per second to cubic metres per second.
pub const CFS_TO_CMS: f64 = 0.028_316_846_592;

#[derive(Debug, Clone, PartialEq)]
pub struct DailyValue {
    pub date: NaiveDate,
    /// Discharge in m³/s; `None` for equipment or ice codes.
    pub value: Option<f64>,
    pub provisional: bool,
}

/// Parses one site's RDB response. Comment lines start with `#`; the first
/// remaining line is the header and the next one the column format line.
/// Columns are agency, site, datetime, value, qualifier.
pub fn parse_rdb(text: &str, site: &str) -> Result<Vec<DailyValue>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::NoData(site.to_string()))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < 4 || cols[0] != "agency_cd" || cols[1] != "site_no" || cols[2] != "datetime" {
        return Err(Error::MalformedHeader(format!("unexpected RDB header {header:?}")));
    }
    lines.next();

    let mut out = Vec::new();
    let mut provisional = 0usize;
    for (i, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 4 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected at least 4 fields, got {}", f.len()),
            });
        }
        if f[1] != site {
            continue;
        }
        let date = NaiveDate::parse_from_str(f[2], "%Y-%m-%d").map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("bad date {:?}: {e}", f[2]),
        })?;
        let value = match f[3].trim() {
            "" => None,
            v => match v.parse::<f64>() {
                Ok(x) => Some(x * CFS_TO_CMS),
                Err(_) => None,
            },
        };
        let is_prov = f.get(4).is_some_and(|q| q.split(':').any(|c| c == "P"));
        provisional += is_prov as usize;
        out.push(DailyValue {
            date,
            value,
            provisional: is_prov,
        });
    }
    if out.is_empty() {
        return Err(Error::NoData(site.to_string()));
    }
    if provisional > 0 {
        log::warn!("site {site}: {provisional} provisional values accepted");
    }
    Ok(out)
}

/// Parses a site-service RDB response into coordinates, keyed by the
/// `site_no` column and ordered like `sites`.
pub fn parse_site_rdb(text: &str, sites: &[String]) -> Result<crate::graph::GaugeCoords> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::MalformedHeader("empty site response".to_string()))?
        .split('\t')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::MalformedHeader(format!("site response lacks {name}")))
    };
    let (c_site, c_lat, c_lon) = (col("site_no")?, col("dec_lat_va")?, col("dec_long_va")?);
    lines.next();
    let mut found = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        let get = |c: usize| f.get(c).copied().unwrap_or("");
        let num = |c: usize| {
            get(c).parse::<f64>().map_err(|_| Error::Parse {
                line: i + 3,
                message: format!("bad coordinate {:?}", get(c)),
            })
        };
        found.insert(get(c_site).to_string(), (num(c_lat)?, num(c_lon)?));
    }
    let mut lat = Vec::with_capacity(sites.len());
    let mut lon = Vec::with_capacity(sites.len());
    for s in sites {
        let (a, o) = found.get(s).ok_or_else(|| Error::NoData(s.clone()))?;
        lat.push(*a);
        lon.push(*o);
    }
    crate::graph::GaugeCoords::new(sites.to_vec(), lat, lon)
}

/// Site coordinates from the site service that sits next to the
/// daily-values endpoint (`.../dv/` becomes `.../site/`).
pub fn fetch_site_coords(sites: &[String], dv_endpoint: &str) -> Result<crate::graph::GaugeCoords> {
    if sites.is_empty() {
        return Err(Error::MissingInput("site list is empty".to_string()));
    }
    let url = dv_endpoint.trim_end_matches('/').trim_end_matches("/dv").to_string() + "/site/";
    let text = reqwest::blocking::Client::new()
        .get(&url)
        .query(&[("format", "rdb"), ("sites", &sites.join(","))])
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.text())
        .map_err(|e| Error::Http(e.to_string()))?;
    parse_site_rdb(&text, sites)
}

pub fn endpoint_from_env() -> String {
    std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string())
}

/// Downloads mean daily discharge for each site, one request at a time,
/// and aligns the series on date. Every site must cover the same dates.
pub fn fetch_panel(sites: &[String], start: NaiveDate, end: NaiveDate, endpoint: &str) -> Result<StreamflowPanel> {
    if sites.is_empty() {
        return Err(Error::MissingInput("site list is empty".to_string()));
    }
    if start > end {
        return Err(Error::InvalidParameter(format!("start {start} after end {end}")));
    }
    let client = reqwest::blocking::Client::builder()
        .user_agent(concat!("gaugenet/", env!("CARGO_PKG_VERSION")))
        .build()
        .map_err(|e| Error::Http(e.to_string()))?;
    let mut series = Vec::with_capacity(sites.len());
    for site in sites {
        let resp = client
            .get(endpoint)
            .query(&[
                ("format", "rdb"),
                ("sites", site.as_str()),
                ("startDT", &start.to_string()),
                ("endDT", &end.to_string()),
                ("parameterCd", "00060"),
                ("statCd", "00003"),
            ])
            .send()
            .map_err(|e| Error::Http(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::Http(format!("site {site}: HTTP {status}")));
        }
        let text = resp.text().map_err(|e| Error::Http(e.to_string()))?;
        series.push(parse_rdb(&text, site)?);
    }
    assemble(sites, &series, start, end)
}

/// Builds a panel from per-site series, keeping dates in `[start, end]`.
pub fn assemble(sites: &[String], series: &[Vec<DailyValue>], start: NaiveDate, end: NaiveDate) -> Result<StreamflowPanel> {
    let mut maps: Vec<BTreeMap<NaiveDate, Option<f64>>> = Vec::with_capacity(series.len());
    for (site, s) in sites.iter().zip(series) {
        let m: BTreeMap<_, _> = s
            .iter()
            .filter(|d| d.date >= start && d.date <= end)
            .map(|d| (d.date, d.value))
            .collect();
        if m.is_empty() {
            return Err(Error::NoData(site.clone()));
        }
        maps.push(m);
    }
    let dates: Vec<NaiveDate> = maps[0].keys().copied().collect();
    for (site, m) in sites.iter().zip(&maps).skip(1) {
        if m.len() != dates.len() || !m.keys().zip(&dates).all(|(a, b)| a == b) {
            let (a, b) = (m.keys().next().unwrap(), m.keys().last().unwrap());
            return Err(Error::MisalignedDates(format!(
                "{} covers {}..{} ({} days), {site} covers {a}..{b} ({} days)",
                sites[0],
                dates[0],
                dates[dates.len() - 1],
                dates.len(),
                m.len()
            )));
        }
    }
    let mut q = Array2::<f64>::zeros((dates.len(), sites.len()));
    for (j, m) in maps.iter().enumerate() {
        for (t, v) in m.values().enumerate() {
            q[[t, j]] = v.ok_or(Error::MissingValue { row: t, col: j })?;
        }
    }
    StreamflowPanel::new(dates, sites.to_vec(), q)
}
