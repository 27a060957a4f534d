//! Donor-restricted regressions and test-period streamflow estimates.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{invert_transform, DataSplits, LogTransform, Reconstruction, TransformStats};
use crate::error::{Error, Result};
use crate::glasso::{glasso_fit, precision_to_coefficients, PenaltySpec};
use crate::graph::{donors_of, GaugeGraph};
use crate::linalg;
use crate::scoring::{nse, validation_error};

/// How test-period flows are inferred from donors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceApproach {
    /// `Ẑ = Z·A` with `A` from an unpenalized precision fit constrained to
    /// the graph, inverted with training statistics.
    ZScore,
    /// Per-target least squares in log space on the donors.
    #[default]
    LogMlr,
    /// Per-target least squares on raw discharge.
    RawMlr,
}

impl InferenceApproach {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Self::ZScore),
            2 => Ok(Self::LogMlr),
            3 => Ok(Self::RawMlr),
            _ => Err(Error::InvalidParameter(format!("inference approach {n} (expected 1, 2 or 3)"))),
        }
    }
}

/// `y_target ≈ beta0 + Σ betas[k] · y_donors[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DonorModel {
    pub target: usize,
    pub donors: Vec<usize>,
    pub beta0: f64,
    pub betas: Vec<f64>,
}

impl DonorModel {
    pub fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        self.beta0
            + self
                .donors
                .iter()
                .zip(&self.betas)
                .map(|(&d, b)| b * row[d])
                .sum::<f64>()
    }
}

/// Least-squares fit of column `j` of `y` on its graph neighbours plus an
/// intercept, via Cholesky on the centred normal equations.
pub fn fit_mlr(y: ArrayView2<f64>, graph: &GaugeGraph, j: usize) -> Result<DonorModel> {
    let donors = donors_of(graph, j);
    fit_on_donors(y, j, donors)
}

pub fn fit_on_donors(y: ArrayView2<f64>, j: usize, donors: Vec<usize>) -> Result<DonorModel> {
    if donors.is_empty() {
        return Err(Error::IsolatedTarget(j));
    }
    let n = y.nrows();
    let m = donors.len();
    if n < m + 2 {
        return Err(Error::TooFewRows { needed: m + 2, got: n });
    }
    let ybar = y.column(j).sum() / n as f64;
    let xbar: Vec<f64> = donors.iter().map(|&d| y.column(d).sum() / n as f64).collect();

    let mut xtx = Array2::<f64>::zeros((m, m));
    let mut xty = Array1::<f64>::zeros(m);
    for row in y.axis_iter(Axis(0)) {
        let yt = row[j] - ybar;
        for a in 0..m {
            let xa = row[donors[a]] - xbar[a];
            xty[a] += xa * yt;
            for b in a..m {
                xtx[[a, b]] += xa * (row[donors[b]] - xbar[b]);
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            xtx[[a, b]] = xtx[[b, a]];
        }
    }
    let rank_deficient = || Error::RankDeficient {
        target: j,
        donors: donors.clone(),
    };
    let l = linalg::cholesky(xtx.view()).map_err(|_| rank_deficient())?;
    for a in 0..m {
        // pivot relative to the column's own sum of squares
        if l[[a, a]] * l[[a, a]] <= 1e-12 * xtx[[a, a]] {
            return Err(rank_deficient());
        }
    }
    let betas = linalg::cholesky_solve(l.view(), xty.view());
    let beta0 = ybar - betas.iter().zip(&xbar).map(|(b, x)| b * x).sum::<f64>();
    Ok(DonorModel {
        target: j,
        donors,
        beta0,
        betas: betas.to_vec(),
    })
}

/// Applies log-space donor models to test discharge: `Q̂ = exp(Ŷ) − 1`,
/// clamped at zero. Output column `k` belongs to `models[k]`.
pub fn predict_test(models: &[DonorModel], q_test: ArrayView2<f64>) -> Result<Reconstruction> {
    predict_with(models, q_test, &LogTransform::default())
}

fn predict_with(
    models: &[DonorModel],
    q_test: ArrayView2<f64>,
    transform: &LogTransform,
) -> Result<Reconstruction> {
    let y = transform.apply(q_test);
    let mut q = Array2::<f64>::zeros((q_test.nrows(), models.len()));
    let mut clamped = 0;
    for (k, model) in models.iter().enumerate() {
        if let Some(&bad) = model.donors.iter().find(|&&d| d >= q_test.ncols()) {
            return Err(Error::DimensionMismatch(format!(
                "donor column {bad} missing from test panel"
            )));
        }
        for (t, row) in y.axis_iter(Axis(0)).enumerate() {
            let v = transform.inverse(model.predict_row(row));
            if !v.is_finite() {
                return Err(Error::Overflow { row: t, col: k });
            }
            q[[t, k]] = if v < 0.0 {
                clamped += 1;
                0.0
            } else {
                v
            };
        }
    }
    Ok(Reconstruction { q, clamped })
}

/// `Ẑ = Z·A`, returned to discharge with the supplied statistics.
pub fn z_space_predict(
    z: ArrayView2<f64>,
    a: ArrayView2<f64>,
    stats: &TransformStats,
) -> Result<Reconstruction> {
    if z.ncols() != a.nrows() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Z has {} columns, A is {}x{}",
            z.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    let z_hat = z.dot(&a);
    invert_transform(z_hat.view(), stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub gauge_ids: Vec<String>,
    pub approach: InferenceApproach,
    /// Gauges with at least one donor, in index order.
    pub targets: Vec<usize>,
    /// Isolated gauges, not evaluated.
    pub skipped: Vec<usize>,
    pub per_gauge_nse: Vec<f64>,
    pub per_gauge_r2: Vec<f64>,
    pub score_test: f64,
    pub error_test: f64,
    pub gamma: f64,
    pub clamped: usize,
    /// Test-period predictions, one column per target.
    #[serde(skip)]
    pub predictions: Array2<f64>,
}

impl EvaluationReport {
    /// NSE for every gauge of the network; skipped gauges get `None`.
    pub fn nse_by_gauge(&self) -> Vec<Option<f64>> {
        let mut out = vec![None; self.gauge_ids.len()];
        for (k, &j) in self.targets.iter().enumerate() {
            out[j] = Some(self.per_gauge_nse[k]);
        }
        out
    }
}

pub fn evaluate(graph: &GaugeGraph, splits: &DataSplits, gamma: f64) -> Result<EvaluationReport> {
    evaluate_with(graph, splits, gamma, InferenceApproach::default())
}

/// Fits every non-isolated gauge on the training rows, predicts the test
/// rows and scores them with NSE and the thresholded R² error.
pub fn evaluate_with(
    graph: &GaugeGraph,
    splits: &DataSplits,
    gamma: f64,
    approach: InferenceApproach,
) -> Result<EvaluationReport> {
    let p = splits.train.n_gauges();
    if graph.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} gauges, panel has {p}",
            graph.p()
        )));
    }
    let (targets, skipped): (Vec<usize>, Vec<usize>) = (0..p).partition(|&j| !graph.is_isolated(j));
    if targets.is_empty() {
        return Err(Error::NoTargets);
    }
    let q_test = splits.test.q();
    let transform = LogTransform::default();

    let recon = match approach {
        InferenceApproach::LogMlr | InferenceApproach::RawMlr => {
            let (train, tf) = if approach == InferenceApproach::LogMlr {
                (transform.apply(splits.train.q()), transform)
            } else {
                (splits.train.q().to_owned(), LogTransform { offset: 0.0 })
            };
            let models = targets
                .iter()
                .map(|&j| fit_mlr(train.view(), graph, j))
                .collect::<Result<Vec<_>>>()?;
            if approach == InferenceApproach::LogMlr {
                predict_with(&models, q_test, &tf)?
            } else {
                predict_raw(&models, q_test)?
            }
        }
        InferenceApproach::ZScore => {
            let y_train = transform.apply(splits.train.q());
            let (z_train, stats) = crate::dataset::standardize(y_train.view())?;
            let s = crate::dataset::sample_covariance(z_train.view())?;
            let est = glasso_fit(s.view(), &PenaltySpec::with_pattern(0.0, graph.clone()))?;
            let a = precision_to_coefficients(&est)?;
            let z_test = stats.apply(transform.apply(q_test).view())?;
            let full = z_space_predict(z_test.view(), a.view(), &stats)?;
            Reconstruction {
                q: full.q.select(Axis(1), &targets),
                clamped: full.clamped,
            }
        }
    };

    // score the target columns against the observed test columns
    let observed = q_test.select(Axis(1), &targets);
    let idx: Vec<usize> = (0..targets.len()).collect();
    let report = validation_error(observed.view(), recon.q.view(), gamma, &idx)?;
    let per_gauge_nse = idx
        .iter()
        .map(|&k| nse(observed.column(k), recon.q.column(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport {
        gauge_ids: splits.train.gauge_ids().to_vec(),
        approach,
        targets,
        skipped,
        per_gauge_nse,
        per_gauge_r2: report.per_gauge_r2,
        score_test: report.score_val,
        error_test: report.error_val,
        gamma,
        clamped: recon.clamped,
        predictions: recon.q,
    })
}

fn predict_raw(models: &[DonorModel], q_test: ArrayView2<f64>) -> Result<Reconstruction> {
    let mut q = Array2::<f64>::zeros((q_test.nrows(), models.len()));
    let mut clamped = 0;
    for (k, model) in models.iter().enumerate() {
        for (t, row) in q_test.axis_iter(Axis(0)).enumerate() {
            let v = model.predict_row(row);
            q[[t, k]] = if v < 0.0 {
                clamped += 1;
                0.0
            } else {
                v
            };
        }
    }
    Ok(Reconstruction { q, clamped })
}
