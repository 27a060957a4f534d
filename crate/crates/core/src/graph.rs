//! Undirected gauge graphs: thresholded precision supports, the
//! nearest-neighbour and max-correlation donor baselines, and role
//! constraints.

use std::collections::HashSet;
use std::sync::Arc;

use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeGraph {
    gauge_ids: Arc<[String]>,
    /// Sorted, deduplicated `(i, j)` pairs with `i < j`.
    edges: Vec<(usize, usize)>,
}

impl GaugeGraph {
    pub fn empty(gauge_ids: Vec<String>) -> Self {
        Self::empty_shared(gauge_ids.into())
    }

    pub(crate) fn empty_shared(gauge_ids: Arc<[String]>) -> Self {
        Self {
            gauge_ids,
            edges: Vec::new(),
        }
    }

    pub(crate) fn shared_ids(&self) -> Arc<[String]> {
        Arc::clone(&self.gauge_ids)
    }

    fn push_sorted(&mut self, i: usize, j: usize) {
        let e = (i.min(j), i.max(j));
        if let Err(pos) = self.edges.binary_search(&e) {
            self.edges.insert(pos, e);
        }
    }

    pub fn complete(gauge_ids: Vec<String>) -> Self {
        let p = gauge_ids.len();
        let mut g = Self::empty(gauge_ids);
        for i in 0..p {
            for j in (i + 1)..p {
                g.edges.push((i, j));
            }
        }
        g
    }

    /// Builds a graph from index pairs in either orientation. Self-loops and
    /// out-of-range indices are rejected; duplicates merge.
    pub fn from_edges(
        gauge_ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut g = Self::empty(gauge_ids);
        for (i, j) in edges {
            g.insert(i, j)?;
        }
        Ok(g)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<()> {
        let p = self.p();
        if i == j {
            return Err(Error::InvalidParameter(format!("self-loop at gauge {i}")));
        }
        if i >= p || j >= p {
            return Err(Error::InvalidParameter(format!(
                "edge ({i}, {j}) out of range for {p} gauges"
            )));
        }
        self.push_sorted(i, j);
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.gauge_ids.len()
    }

    pub fn gauge_ids(&self) -> &[String] {
        &self.gauge_ids
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    pub fn degree(&self, j: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == j || b == j).count()
    }

    pub fn is_isolated(&self, j: usize) -> bool {
        !self.edges.iter().any(|&(a, b)| a == j || b == j)
    }

    pub fn max_edges(p: usize) -> usize {
        p * p.saturating_sub(1) / 2
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.gauge_ids.iter().position(|g| g == id)
    }
}

/// Neighbours of `j` in ascending index order.
pub fn donors_of(g: &GaugeGraph, j: usize) -> Vec<usize> {
    let mut out: Vec<usize> = g
        .edges
        .iter()
        .filter_map(|&(a, b)| {
            if a == j {
                Some(b)
            } else if b == j {
                Some(a)
            } else {
                None
            }
        })
        .collect();
    out.sort_unstable();
    out
}

/// Edge `(i, j)` kept iff `|θ_ij| > τ`.
pub fn graph_from_precision(
    theta: ArrayView2<f64>,
    tau: f64,
    gauge_ids: Vec<String>,
) -> Result<GaugeGraph> {
    let p = theta.nrows();
    if theta.ncols() != p || gauge_ids.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "theta {}x{} with {} gauge ids",
            p,
            theta.ncols(),
            gauge_ids.len()
        )));
    }
    Ok(threshold_shared(theta, tau, gauge_ids.into()))
}

pub(crate) fn threshold_shared(theta: ArrayView2<f64>, tau: f64, gauge_ids: Arc<[String]>) -> GaugeGraph {
    let p = theta.nrows();
    let mut g = GaugeGraph::empty_shared(gauge_ids);
    for i in 0..p {
        for j in (i + 1)..p {
            if theta[[i, j]].abs() > tau {
                g.edges.push((i, j));
            }
        }
    }
    g
}

/// Smallest τ in `{0} ∪ {|θ_ij|}` leaving at most `k` edges. Entries tied
/// at the cut are dropped together, so the result may have fewer than `k`.
pub fn choose_tau_for_k(theta: ArrayView2<f64>, k: usize) -> f64 {
    let p = theta.nrows();
    let mut mags: Vec<f64> = Vec::with_capacity(GaugeGraph::max_edges(p));
    for i in 0..p {
        for j in (i + 1)..p {
            let m = theta[[i, j]].abs();
            if m > 0.0 {
                mags.push(m);
            }
        }
    }
    if mags.len() <= k {
        return 0.0;
    }
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    // Keeping the top k requires cutting at the (k+1)-th largest magnitude.
    mags[k]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeCoords {
    pub gauge_ids: Vec<String>,
    pub lat: Vec<f64>,
    pub lon: Vec<f64>,
}

impl GaugeCoords {
    pub fn new(gauge_ids: Vec<String>, lat: Vec<f64>, lon: Vec<f64>) -> Result<Self> {
        if lat.len() != gauge_ids.len() || lon.len() != gauge_ids.len() {
            return Err(Error::DimensionMismatch(
                "coordinate columns differ in length".to_string(),
            ));
        }
        for (k, (&la, &lo)) in lat.iter().zip(&lon).enumerate() {
            if !(-90.0..=90.0).contains(&la) || !(-180.0..=180.0).contains(&lo) {
                return Err(Error::InvalidParameter(format!(
                    "coordinates of {} out of range: ({la}, {lo})",
                    gauge_ids[k]
                )));
            }
        }
        Ok(Self { gauge_ids, lat, lon })
    }

    pub fn len(&self) -> usize {
        self.gauge_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gauge_ids.is_empty()
    }

    /// Reorders to match `order`; every id in `order` must be present.
    pub fn aligned_to(&self, order: &[String]) -> Result<Self> {
        let mut lat = Vec::with_capacity(order.len());
        let mut lon = Vec::with_capacity(order.len());
        for id in order {
            let k = self
                .gauge_ids
                .iter()
                .position(|g| g == id)
                .ok_or_else(|| Error::UnknownGauge(id.clone()))?;
            lat.push(self.lat[k]);
            lon.push(self.lon[k]);
        }
        Self::new(order.to_vec(), lat, lon)
    }

    pub fn distance_km(&self, i: usize, j: usize) -> f64 {
        haversine_km(self.lat[i], self.lon[i], self.lat[j], self.lon[j])
    }
}

/// Great-circle distance in kilometres.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlmb = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlmb / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Links every gauge to the `m` best-scoring others (ties to the lower
/// index).
fn m_best_graph<F>(gauge_ids: Vec<String>, m: usize, score: F, larger_is_better: bool) -> Result<GaugeGraph>
where
    F: Fn(usize, usize) -> f64,
{
    let p = gauge_ids.len();
    if m < 1 {
        return Err(Error::InvalidParameter("m must be at least 1".to_string()));
    }
    if p < m + 1 {
        return Err(Error::InvalidParameter(format!(
            "{m} donors per target need at least {} gauges, found {p}",
            m + 1
        )));
    }
    let mut g = GaugeGraph::empty(gauge_ids);
    for i in 0..p {
        let mut others: Vec<(f64, usize)> = (0..p).filter(|&j| j != i).map(|j| (score(i, j), j)).collect();
        others.sort_by(|a, b| {
            let ord = if larger_is_better {
                b.0.total_cmp(&a.0)
            } else {
                a.0.total_cmp(&b.0)
            };
            ord.then(a.1.cmp(&b.1))
        });
        for &(_, j) in others.iter().take(m) {
            g.push_sorted(i, j);
        }
    }
    Ok(g)
}

/// Each gauge linked to its `m` nearest neighbours by great-circle distance.
pub fn dist_graph(coords: &GaugeCoords, m: usize) -> Result<GaugeGraph> {
    m_best_graph(coords.gauge_ids.clone(), m, |i, j| coords.distance_km(i, j), false)
}

/// Each gauge linked to the `m` gauges with the highest Pearson correlation
/// over the columns of `z` (the training subset).
pub fn corr_graph(z: ArrayView2<f64>, gauge_ids: Vec<String>, m: usize) -> Result<GaugeGraph> {
    if z.ncols() != gauge_ids.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} columns with {} gauge ids",
            z.ncols(),
            gauge_ids.len()
        )));
    }
    let corr = correlation_matrix(z)?;
    m_best_graph(gauge_ids, m, |i, j| corr[[i, j]], true)
}

pub fn correlation_matrix(z: ArrayView2<f64>) -> Result<ndarray::Array2<f64>> {
    let n = z.nrows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let means = z.mean_axis(Axis(0)).expect("non-empty");
    let centered = &z - &means;
    let cov = centered.t().dot(&centered);
    let p = z.ncols();
    let mut corr = cov.clone();
    for i in 0..p {
        for j in 0..p {
            let d = (cov[[i, i]] * cov[[j, j]]).sqrt();
            if d == 0.0 {
                return Err(Error::ZeroVariance(if cov[[i, i]] == 0.0 { i } else { j }));
            }
            corr[[i, j]] = cov[[i, j]] / d;
        }
    }
    Ok(corr)
}

/// Drops donor–donor and target–target edges.
pub fn apply_role_constraints(
    g: &GaugeGraph,
    donors: &[String],
    targets: &[String],
) -> Result<GaugeGraph> {
    let resolve = |ids: &[String]| -> Result<HashSet<usize>> {
        ids.iter()
            .map(|id| g.index_of(id).ok_or_else(|| Error::UnknownGauge(id.clone())))
            .collect()
    };
    let d = resolve(donors)?;
    let t = resolve(targets)?;
    Ok(apply_role_constraints_idx(g, &d, &t))
}

pub(crate) fn apply_role_constraints_idx(
    g: &GaugeGraph,
    donors: &HashSet<usize>,
    targets: &HashSet<usize>,
) -> GaugeGraph {
    if donors.is_empty() && targets.is_empty() {
        return g.clone();
    }
    let edges = g
        .edges
        .iter()
        .copied()
        .filter(|(i, j)| {
            !(donors.contains(i) && donors.contains(j)) && !(targets.contains(i) && targets.contains(j))
        })
        .collect();
    GaugeGraph {
        gauge_ids: g.shared_ids(),
        edges,
    }
}
