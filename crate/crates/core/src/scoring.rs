//! Goodness-of-fit metrics, the thresholded validation error, graph scores
//! and the resampling / t-test comparison harness.

use ndarray::{ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::{split_with_fraction, StreamflowPanel};
use crate::error::{Error, Result};
use crate::graph::GaugeGraph;
use crate::inference::{evaluate_with, InferenceApproach};

fn check_pair(obs: ArrayView1<f64>, pred: ArrayView1<f64>) -> Result<()> {
    if obs.len() != pred.len() {
        return Err(Error::DimensionMismatch(format!(
            "observed length {} vs predicted length {}",
            obs.len(),
            pred.len()
        )));
    }
    if obs.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: obs.len(),
        });
    }
    Ok(())
}

fn mean(x: ArrayView1<f64>) -> f64 {
    x.sum() / x.len() as f64
}

/// Squared Pearson correlation between observed and predicted series.
pub fn r2(obs: ArrayView1<f64>, pred: ArrayView1<f64>) -> Result<f64> {
    check_pair(obs, pred)?;
    let (mo, mp) = (mean(obs), mean(pred));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&o, &p) in obs.iter().zip(pred.iter()) {
        let (a, b) = (o - mo, p - mp);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 {
        return Err(Error::ConstantSeries("observed"));
    }
    if syy == 0.0 {
        return Err(Error::ConstantSeries("predicted"));
    }
    Ok((sxy * sxy / (sxx * syy)).clamp(0.0, 1.0))
}

/// Nash–Sutcliffe efficiency `1 − Σ(o−p)² / Σ(o−ō)²`.
pub fn nse(obs: ArrayView1<f64>, pred: ArrayView1<f64>) -> Result<f64> {
    check_pair(obs, pred)?;
    let mo = mean(obs);
    let sst: f64 = obs.iter().map(|o| (o - mo) * (o - mo)).sum();
    if sst == 0.0 {
        return Err(Error::ConstantSeries("observed"));
    }
    let sse: f64 = obs
        .iter()
        .zip(pred.iter())
        .map(|(o, p)| (o - p) * (o - p))
        .sum();
    Ok(1.0 - sse / sst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub targets: Vec<usize>,
    pub per_gauge_r2: Vec<f64>,
    pub per_gauge_nse: Vec<f64>,
    pub score_val: f64,
    pub error_val: f64,
    pub gamma: f64,
}

/// Thresholded R² score over the target columns: each target contributes
/// its R² when it exceeds `gamma`, otherwise zero, and the error is
/// `(q − score) / q`. A constant prediction (a target with no donors)
/// contributes zero.
pub fn validation_error(
    obs: ArrayView2<f64>,
    pred: ArrayView2<f64>,
    gamma: f64,
    targets: &[usize],
) -> Result<ScoreReport> {
    if obs.dim() != pred.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observed {:?} vs predicted {:?}",
            obs.dim(),
            pred.dim()
        )));
    }
    if targets.is_empty() {
        return Err(Error::NoTargets);
    }
    let mut per_gauge_r2 = Vec::with_capacity(targets.len());
    let mut per_gauge_nse = Vec::with_capacity(targets.len());
    let mut score = 0.0;
    for &j in targets {
        if j >= obs.ncols() {
            return Err(Error::DimensionMismatch(format!("target {j} out of range")));
        }
        let (o, p) = (obs.column(j), pred.column(j));
        let r = match r2(o, p) {
            Ok(r) => r,
            Err(Error::ConstantSeries("predicted")) => 0.0,
            Err(e) => return Err(e),
        };
        if r > gamma {
            score += r;
        }
        per_gauge_r2.push(r);
        per_gauge_nse.push(nse(o, p)?);
    }
    Ok(ScoreReport {
        targets: targets.to_vec(),
        error_val: thresholded_error(&per_gauge_r2, gamma),
        per_gauge_r2,
        per_gauge_nse,
        score_val: score,
        gamma,
    })
}

/// `(q − Σ_{R² > γ} R²) / q` over the `q` given R² values.
pub fn thresholded_error(r2_values: &[f64], gamma: f64) -> f64 {
    let q = r2_values.len() as f64;
    let score: f64 = r2_values.iter().filter(|&&r| r > gamma).sum();
    (q - score) / q
}

/// Mean of the `m_rem` largest NSE values.
pub fn graph_score(nse_values: &[f64], m_rem: usize) -> Result<f64> {
    if m_rem == 0 {
        return Err(Error::InvalidParameter("M_rem must be at least 1".to_string()));
    }
    if m_rem > nse_values.len() {
        return Err(Error::InvalidParameter(format!(
            "M_rem {m_rem} exceeds the {} available NSE values",
            nse_values.len()
        )));
    }
    let mut sorted = nse_values.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(sorted[..m_rem].iter().sum::<f64>() / m_rem as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleSummary {
    pub mean: f64,
    pub stdev: f64,
    pub errors: Vec<f64>,
    pub seed: u64,
}

/// Re-splits train/validation `n_runs` times (seed `seed + run`), keeps the
/// test suffix and the graph fixed, refits donor regressions and collects
/// the test error of each run.
pub fn resample_mean_error(
    panel: &StreamflowPanel,
    graph: &GaugeGraph,
    n_runs: usize,
    seed: u64,
) -> Result<ResampleSummary> {
    resample_mean_error_with(panel, graph, n_runs, seed, 0.7, InferenceApproach::default(), 0.5)
}

pub fn resample_mean_error_with(
    panel: &StreamflowPanel,
    graph: &GaugeGraph,
    n_runs: usize,
    seed: u64,
    gamma: f64,
    approach: InferenceApproach,
    train_fraction: f64,
) -> Result<ResampleSummary> {
    if n_runs == 0 {
        return Err(Error::InvalidParameter("n_runs must be at least 1".to_string()));
    }
    let errors = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let splits = split_with_fraction(panel, seed.wrapping_add(run as u64), train_fraction)?;
            Ok(evaluate_with(graph, &splits, gamma, approach)?.error_test)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stdev) = mean_stdev(&errors);
    Ok(ResampleSummary {
        mean,
        stdev,
        errors,
        seed,
    })
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_stdev(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, 0.0);
    }
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// One-tailed Welch t-test of `H1: mean(a) < mean(b)`.
pub fn one_tailed_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidParameter(
            "t-test samples need at least two values each".to_string(),
        ));
    }
    let (ma, sa) = mean_stdev(a);
    let (mb, sb) = mean_stdev(b);
    let (va, vb) = (sa * sa / a.len() as f64, sb * sb / b.len() as f64);
    let se2 = va + vb;
    if !(se2 > 0.0) {
        return Err(Error::InvalidParameter(
            "t-test samples have zero variance".to_string(),
        ));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidParameter(format!("t distribution: {e}")))?;
    Ok(WelchTest {
        t,
        df,
        p_value: dist.cdf(t),
    })
}

/// Column-wise NSE over `targets`.
pub fn nse_columns(obs: ArrayView2<f64>, pred: ArrayView2<f64>, targets: &[usize]) -> Result<Vec<f64>> {
    targets
        .iter()
        .map(|&j| nse(obs.index_axis(Axis(1), j), pred.index_axis(Axis(1), j)))
        .collect()
}
