//! Graph model selection over a (λ, edge budget) grid.
//!
//! For every λ on a linear grid the training covariance is fitted once with
//! the graphical lasso. For every edge budget k the strongest k precision
//! entries are kept, donor/target role constraints are applied, and the
//! precision matrix is refitted with that zero pattern. The refit gives
//! regression coefficients that predict the validation rows, and the
//! thresholded R² error of those predictions is the second objective next
//! to the edge count. The non-dominated points form the candidate set.

use std::collections::HashSet;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{sample_covariance, standardize, DataSplits, LogTransform, TransformStats};
use crate::error::{Error, Result};
use crate::glasso::{glasso_fit_with, precision_to_coefficients, GlassoOptions, PenaltySpec, PrecisionEstimate};
use crate::graph::{apply_role_constraints_idx, choose_tau_for_k, threshold_shared, GaugeGraph};
use crate::inference::z_space_predict;
use crate::scoring::validation_error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgmConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub k_min: usize,
    /// Defaults to the complete graph, `(p² − p) / 2`.
    pub k_max: Option<usize>,
    pub res: usize,
    pub gamma: f64,
    pub donor_group: Vec<String>,
    pub target_group: Vec<String>,
    pub penalize_diagonal: bool,
}

impl Default for SgmConfig {
    fn default() -> Self {
        Self {
            lambda_min: 0.01,
            lambda_max: 0.10,
            k_min: 10,
            k_max: None,
            res: 30,
            gamma: 0.7,
            donor_group: Vec::new(),
            target_group: Vec::new(),
            penalize_diagonal: true,
        }
    }
}

impl SgmConfig {
    pub fn k_max_for(&self, p: usize) -> usize {
        self.k_max.unwrap_or_else(|| GaugeGraph::max_edges(p))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lambda_min >= 0.0 && self.lambda_min <= self.lambda_max && self.lambda_max.is_finite()) {
            return bad(format!(
                "need 0 <= lambda_min <= lambda_max, got [{}, {}]",
                self.lambda_min, self.lambda_max
            ));
        }
        let k_max = self.k_max_for(p);
        if self.k_min > k_max || k_max > GaugeGraph::max_edges(p) {
            return bad(format!(
                "need 0 <= k_min <= k_max <= {}, got k_min={} k_max={k_max}",
                GaugeGraph::max_edges(p),
                self.k_min
            ));
        }
        if self.res < 1 {
            return bad("res must be at least 1".to_string());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        Ok(())
    }

    /// `res` evenly spaced values from `lambda_min` to `lambda_max`
    /// inclusive.
    pub fn lambda_grid(&self) -> Vec<f64> {
        if self.res == 1 {
            return vec![self.lambda_min];
        }
        let step = (self.lambda_max - self.lambda_min) / (self.res - 1) as f64;
        (0..self.res)
            .map(|r| {
                if r == self.res - 1 {
                    self.lambda_max
                } else {
                    self.lambda_min + step * r as f64
                }
            })
            .collect()
    }

    pub fn point_count(&self, p: usize) -> usize {
        (self.k_max_for(p) + 1 - self.k_min) * self.res
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePoint {
    pub lambda_index: usize,
    pub k_requested: usize,
    pub edge_count: usize,
    pub error_val: f64,
    pub lambda: f64,
    pub tau: f64,
    pub converged: bool,
    pub graph: Arc<GaugeGraph>,
}

struct Prepared {
    s_train: Array2<f64>,
    z_val: Array2<f64>,
    stats_val: TransformStats,
    q_val: Array2<f64>,
    targets: Vec<usize>,
    donors: HashSet<usize>,
    target_set: HashSet<usize>,
    ids: Arc<[String]>,
}

fn prepare(splits: &DataSplits, config: &SgmConfig) -> Result<Prepared> {
    let transform = LogTransform::default();
    let (z_train, _) = standardize(transform.apply(splits.train.q()).view())?;
    let s_train = sample_covariance(z_train.view())?;
    let (z_val, stats_val) = standardize(transform.apply(splits.val.q()).view())?;
    let ids: Arc<[String]> = splits.train.gauge_ids().to_vec().into();
    let resolve = |group: &[String]| -> Result<Vec<usize>> {
        group
            .iter()
            .map(|id| {
                splits
                    .train
                    .gauge_index(id)
                    .ok_or_else(|| Error::UnknownGauge(id.clone()))
            })
            .collect()
    };
    let donors: HashSet<usize> = resolve(&config.donor_group)?.into_iter().collect();
    let target_list = resolve(&config.target_group)?;
    let target_set: HashSet<usize> = target_list.iter().copied().collect();
    let mut targets: Vec<usize> = if target_list.is_empty() {
        (0..ids.len()).collect()
    } else {
        target_list
    };
    targets.sort_unstable();
    targets.dedup();
    Ok(Prepared {
        s_train,
        z_val,
        stats_val,
        q_val: splits.val.q().to_owned(),
        targets,
        donors,
        target_set,
        ids,
    })
}

/// Evaluates every `(λ, k)` grid point. Points come back ordered by λ index
/// then k.
pub fn run_sgm(splits: &DataSplits, config: &SgmConfig) -> Result<Vec<CandidatePoint>> {
    let p = splits.train.n_gauges();
    config.validate(p)?;
    let prep = prepare(splits, config)?;
    let opts = GlassoOptions {
        penalize_diagonal: config.penalize_diagonal,
        ..Default::default()
    };
    let grid = config.lambda_grid();
    let k_max = config.k_max_for(p);

    let lanes = grid
        .par_iter()
        .enumerate()
        .map(|(r, &lambda)| run_lane(&prep, config, &opts, r, lambda, k_max))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<CandidatePoint> = lanes.into_iter().flatten().collect();
    let unconverged = points.iter().filter(|c| !c.converged).count();
    if unconverged > 0 {
        log::warn!("{unconverged} of {} grid points did not converge", points.len());
    }
    Ok(points)
}

fn run_lane(
    prep: &Prepared,
    config: &SgmConfig,
    opts: &GlassoOptions,
    r: usize,
    lambda: f64,
    k_max: usize,
) -> Result<Vec<CandidatePoint>> {
    let base = glasso_fit_with(prep.s_train.view(), &PenaltySpec::new(lambda), opts, None)?;
    let mut out = Vec::with_capacity(k_max + 1 - config.k_min);
    let mut prev: Option<(Arc<GaugeGraph>, PrecisionEstimate, f64)> = None;
    for k in config.k_min..=k_max {
        let tau = choose_tau_for_k(base.theta.view(), k);
        let raw = threshold_shared(base.theta.view(), tau, Arc::clone(&prep.ids));
        let graph = apply_role_constraints_idx(&raw, &prep.donors, &prep.target_set);
        let (graph, est, error_val) = match prev.take() {
            Some((g, est, err)) if *g == graph => (g, est, err),
            other => {
                let warm = other.as_ref().map(|(_, est, _)| est);
                let spec = PenaltySpec::with_pattern(lambda, graph.clone());
                let est = glasso_fit_with(prep.s_train.view(), &spec, opts, warm)?;
                let err = validation_error_for(prep, &est, config.gamma)?;
                (Arc::new(graph), est, err)
            }
        };
        out.push(CandidatePoint {
            lambda_index: r,
            k_requested: k,
            edge_count: graph.edge_count(),
            error_val,
            lambda,
            tau,
            converged: est.converged,
            graph: Arc::clone(&graph),
        });
        prev = Some((graph, est, error_val));
    }
    Ok(out)
}

fn validation_error_for(prep: &Prepared, est: &PrecisionEstimate, gamma: f64) -> Result<f64> {
    let a = precision_to_coefficients(est)?;
    let recon = z_space_predict(prep.z_val.view(), a.view(), &prep.stats_val)?;
    Ok(validation_error(prep.q_val.view(), recon.q.view(), gamma, &prep.targets)?.error_val)
}

/// Indices of the non-dominated `(edges, error)` pairs under joint
/// minimization, ordered by edge count. Among identical pairs only the
/// first survives.
pub fn non_dominated(objectives: &[(usize, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..objectives.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, xa) = objectives[a];
        let (eb, xb) = objectives[b];
        ea.cmp(&eb).then(xa.total_cmp(&xb)).then(a.cmp(&b))
    });
    let mut best = f64::INFINITY;
    let mut front = Vec::new();
    for i in order {
        if objectives[i].1 < best {
            best = objectives[i].1;
            front.push(i);
        }
    }
    front
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub points: Vec<CandidatePoint>,
    /// Positions of the front points in the input list.
    pub source_indices: Vec<usize>,
}

pub fn pareto_front(points: &[CandidatePoint]) -> Result<ParetoFront> {
    if points.is_empty() {
        return Err(Error::EmptyFront);
    }
    let objectives: Vec<(usize, f64)> = points.iter().map(|c| (c.edge_count, c.error_val)).collect();
    let source_indices = non_dominated(&objectives);
    Ok(ParetoFront {
        points: source_indices.iter().map(|&i| points[i].clone()).collect(),
        source_indices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Furthest point from the chord joining the front's endpoints, in
    /// range-normalized (edges, error) space.
    Knee,
    /// Largest front point with at most this many edges.
    Edges(usize),
    MinError,
}

impl FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "knee" => Ok(Self::Knee),
            "min_error" | "min-error" => Ok(Self::MinError),
            _ => {
                let k = s
                    .strip_prefix("edges=")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "policy {s:?} (expected knee, min_error or edges=<k>)"
                        ))
                    })?;
                Ok(Self::Edges(k))
            }
        }
    }
}

pub fn select_graph(front: &ParetoFront, policy: SelectionPolicy) -> Result<&CandidatePoint> {
    let pts = &front.points;
    if pts.is_empty() {
        return Err(Error::EmptyFront);
    }
    match policy {
        SelectionPolicy::MinError => Ok(pts.last().expect("non-empty")),
        SelectionPolicy::Edges(k) => pts
            .iter()
            .rev()
            .find(|c| c.edge_count <= k)
            .ok_or(Error::NoFrontPoint(k)),
        SelectionPolicy::Knee => {
            let objectives: Vec<(f64, f64)> =
                pts.iter().map(|c| (c.edge_count as f64, c.error_val)).collect();
            Ok(&pts[knee_index(&objectives)])
        }
    }
}

/// Index of the point furthest from the chord between the first and last
/// points after scaling both axes to [0, 1]. Ties go to the earlier point.
pub fn knee_index(points: &[(f64, f64)]) -> usize {
    if points.len() < 3 {
        return 0;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, if hi > lo { hi - lo } else { 1.0 })
    };
    let (x0, dx) = span(&xs);
    let (y0, dy) = span(&ys);
    let norm: Vec<(f64, f64)> = points.iter().map(|&(x, y)| ((x - x0) / dx, (y - y0) / dy)).collect();
    let (a, b) = (norm[0], norm[norm.len() - 1]);
    let (cx, cy) = (b.0 - a.0, b.1 - a.1);
    let len = (cx * cx + cy * cy).sqrt();
    if len == 0.0 {
        return 0;
    }
    let mut best = (0usize, -1.0f64);
    for (i, &(x, y)) in norm.iter().enumerate() {
        let d = ((x - a.0) * cy - (y - a.1) * cx).abs() / len;
        if d > best.1 {
            best = (i, d);
        }
    }
    best.0
}
