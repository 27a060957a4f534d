//! Synthetic gauge networks with a known conditional-independence graph.

use chrono::NaiveDate;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::StreamflowPanel;
use crate::error::{Error, Result};
use crate::graph::{GaugeCoords, GaugeGraph};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSpec {
    /// Explicit `(i, j)` pairs.
    List(Vec<(usize, usize)>),
    /// Each pair included independently with this probability.
    Probability(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub p: usize,
    pub n: usize,
    pub true_edges: EdgeSpec,
    /// Off-diagonal precision entries on true edges are `-magnitude`
    /// (positive partial correlation, as between neighbouring catchments).
    pub precision_offdiag_magnitude: f64,
    /// Added to each row's absolute off-diagonal sum to form the diagonal.
    /// Smaller margins give stronger correlations.
    pub diagonal_margin: f64,
    pub seed: u64,
    pub mu_range: (f64, f64),
    pub sigma_range: (f64, f64),
}

impl SyntheticSpec {
    pub fn new(p: usize, n: usize, true_edges: EdgeSpec, seed: u64) -> Self {
        Self {
            p,
            n,
            true_edges,
            precision_offdiag_magnitude: 1.0,
            diagonal_margin: 0.05,
            seed,
            mu_range: (3.0, 6.0),
            sigma_range: (0.5, 1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticNetwork {
    pub panel: StreamflowPanel,
    pub graph: GaugeGraph,
    /// Precision of the unit-variance latent log-flows.
    pub theta: Array2<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn generate_synthetic_panel(spec: &SyntheticSpec) -> Result<(StreamflowPanel, GaugeGraph)> {
    let net = generate_synthetic_network(spec)?;
    Ok((net.panel, net.graph))
}

/// Samples `n` days from a zero-mean Gaussian whose precision has the
/// requested support, rescaled to unit variances, and maps each latent
/// column to discharge by `q = exp(z·σ + μ) − 1` (clamped at zero).
pub fn generate_synthetic_network(spec: &SyntheticSpec) -> Result<SyntheticNetwork> {
    let p = spec.p;
    if p < 2 || spec.n < 2 {
        return Err(Error::InvalidParameter(format!(
            "synthetic panel needs p >= 2 and n >= 2 (got p={p}, n={})",
            spec.n
        )));
    }
    if !(spec.precision_offdiag_magnitude > 0.0) || !(spec.diagonal_margin > 0.0) {
        return Err(Error::InvalidParameter(
            "precision magnitude and diagonal margin must be positive".to_string(),
        ));
    }
    let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
    if !range_ok(spec.mu_range) || !range_ok(spec.sigma_range) || spec.sigma_range.0 <= 0.0 {
        return Err(Error::InvalidParameter("bad mu/sigma range".to_string()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gauge_ids: Vec<String> = (0..p).map(|i| format!("G{i:02}")).collect();
    let graph = match &spec.true_edges {
        EdgeSpec::List(edges) => GaugeGraph::from_edges(gauge_ids.clone(), edges.iter().copied())?,
        EdgeSpec::Probability(prob) => {
            if !(0.0..=1.0).contains(prob) {
                return Err(Error::InvalidParameter(format!("edge probability {prob}")));
            }
            let mut g = GaugeGraph::empty(gauge_ids.clone());
            for i in 0..p {
                for j in (i + 1)..p {
                    if rng.random::<f64>() < *prob {
                        g.insert(i, j)?;
                    }
                }
            }
            g
        }
    };

    let mag = spec.precision_offdiag_magnitude;
    let mut raw = Array2::<f64>::zeros((p, p));
    for (i, j) in graph.edges() {
        raw[[i, j]] = -mag;
        raw[[j, i]] = -mag;
    }
    for i in 0..p {
        raw[[i, i]] = graph.degree(i) as f64 * mag + spec.diagonal_margin;
    }
    let cov = linalg::inverse_spd(raw.view())?;
    let scale: Array1<f64> = cov.diag().mapv(f64::sqrt);
    let corr = Array2::from_shape_fn((p, p), |(i, j)| cov[[i, j]] / (scale[i] * scale[j]));
    let theta = Array2::from_shape_fn((p, p), |(i, j)| raw[[i, j]] * scale[i] * scale[j]);
    let chol = linalg::cholesky(corr.view())?;

    let mu: Vec<f64> = (0..p)
        .map(|_| rng.random_range(spec.mu_range.0..=spec.mu_range.1))
        .collect();
    let sigma: Vec<f64> = (0..p)
        .map(|_| rng.random_range(spec.sigma_range.0..=spec.sigma_range.1))
        .collect();

    let mut q = Array2::<f64>::zeros((spec.n, p));
    let mut g = Array1::<f64>::zeros(p);
    for t in 0..spec.n {
        for v in g.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let z = chol.dot(&g);
        for j in 0..p {
            q[[t, j]] = (z[j] * sigma[j] + mu[j]).exp_m1().max(0.0);
        }
    }
    let start = NaiveDate::from_ymd_opt(1951, 1, 1).expect("valid date");
    let dates = (0..spec.n)
        .map(|t| start + chrono::Days::new(t as u64))
        .collect();
    let panel = StreamflowPanel::new(dates, gauge_ids, q)?;
    Ok(SyntheticNetwork {
        panel,
        graph,
        theta,
        mu,
        sigma,
    })
}

/// Random gauge locations plus `n_edges` edges drawn without replacement
/// with weight `exp(-d / ℓ)`, ℓ a third of the mean pairwise distance.
/// Nearby gauges tend to be linked, but nearest neighbours are not always
/// conditional neighbours.
pub fn planted_spatial_network(
    p: usize,
    n_edges: usize,
    seed: u64,
) -> Result<(Vec<(usize, usize)>, GaugeCoords)> {
    if n_edges > GaugeGraph::max_edges(p) {
        return Err(Error::InvalidParameter(format!(
            "{n_edges} edges exceed the complete graph on {p} gauges"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lat: Vec<f64> = (0..p).map(|_| rng.random_range(38.0..40.0)).collect();
    let lon: Vec<f64> = (0..p).map(|_| rng.random_range(-85.0..-83.0)).collect();
    let ids = (0..p).map(|i| format!("G{i:02}")).collect();
    let coords = GaugeCoords::new(ids, lat, lon)?;

    let mut pairs = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            pairs.push((i, j, coords.distance_km(i, j)));
        }
    }
    let mean_d = pairs.iter().map(|x| x.2).sum::<f64>() / pairs.len().max(1) as f64;
    let ell = (mean_d / 3.0).max(f64::MIN_POSITIVE);
    let mut weights: Vec<f64> = pairs.iter().map(|x| (-x.2 / ell).exp()).collect();
    let mut chosen = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = weights.iter().rposition(|&w| w > 0.0).expect("pairs remain");
        for (k, &w) in weights.iter().enumerate() {
            if w > 0.0 && u < w {
                pick = k;
                break;
            }
            u -= w;
        }
        chosen.push((pairs[pick].0, pairs[pick].1));
        weights[pick] = 0.0;
    }
    chosen.sort_unstable();
    Ok((chosen, coords))
}
