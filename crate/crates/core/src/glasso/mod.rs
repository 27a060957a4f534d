//! Graphical lasso: L1-penalized Gaussian maximum likelihood for sparse
//! precision matrices, with an optional prescribed zero pattern.
//!
//! The solver is the block coordinate scheme of Friedman, Hastie and
//! Tibshirani: each column of the covariance estimate `W` is updated in
//! turn by solving a lasso problem against `W₁₁` (the matrix with that row
//! and column deleted). Coordinates outside the allowed pattern are masked
//! in the lasso, which is equivalent to an infinite penalty on them.

mod lasso;

use ndarray::{Array1, Array2, ArrayView2};

pub use lasso::{kkt_violation, lasso_cd, lasso_cd_with, LassoFit, LassoOptions};

use crate::error::{Error, Result};
use crate::graph::GaugeGraph;
use crate::linalg;

/// Penalty for one fit: λ and the optional set of edges allowed to be
/// non-zero.
#[derive(Debug, Clone, Default)]
pub struct PenaltySpec {
    pub lambda: f64,
    pub zero_pattern: Option<GaugeGraph>,
}

impl PenaltySpec {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            zero_pattern: None,
        }
    }

    pub fn with_pattern(lambda: f64, pattern: GaugeGraph) -> Self {
        Self {
            lambda,
            zero_pattern: Some(pattern),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlassoOptions {
    /// Penalize the diagonal too (`w_ii = s_ii + λ`). When false only the
    /// off-diagonal is penalized (`w_ii = s_ii`).
    pub penalize_diagonal: bool,
    /// Relative tolerance on the mean absolute change of the off-diagonal
    /// of `W` per sweep, scaled by the mean absolute off-diagonal of `S`.
    pub tol: f64,
    pub max_sweeps: usize,
    pub lasso: LassoOptions,
}

impl Default for GlassoOptions {
    fn default() -> Self {
        Self {
            penalize_diagonal: true,
            tol: 1e-4,
            max_sweeps: 1000,
            lasso: LassoOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    pub theta: Array2<f64>,
    pub w: Array2<f64>,
    pub lambda: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub max_kkt_violation: f64,
    /// Per-column lasso coefficients (column j holds β for target j, zero
    /// at row j); kept for warm starts.
    pub(crate) betas: Array2<f64>,
}

impl PrecisionEstimate {
    pub fn p(&self) -> usize {
        self.theta.nrows()
    }

    pub fn l1_norm(&self) -> f64 {
        self.theta.iter().map(|v| v.abs()).sum()
    }
}

pub fn glasso_fit(s: ArrayView2<f64>, spec: &PenaltySpec) -> Result<PrecisionEstimate> {
    glasso_fit_with(s, spec, &GlassoOptions::default(), None)
}

/// Full-control fit. `warm` seeds `W` and the per-column coefficients from
/// an earlier estimate of the same dimension.
pub fn glasso_fit_with(
    s: ArrayView2<f64>,
    spec: &PenaltySpec,
    opts: &GlassoOptions,
    warm: Option<&PrecisionEstimate>,
) -> Result<PrecisionEstimate> {
    let p = s.nrows();
    if s.ncols() != p || p == 0 {
        return Err(Error::DimensionMismatch(format!(
            "covariance must be square, got {}x{}",
            p,
            s.ncols()
        )));
    }
    let lambda = spec.lambda;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda {lambda}")));
    }
    let scale = s.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..p {
        for j in (i + 1)..p {
            if (s[[i, j]] - s[[j, i]]).abs() > 1e-10 * scale {
                return Err(Error::InvalidParameter("covariance is not symmetric".to_string()));
            }
        }
    }
    let allowed = allowed_mask(p, spec.zero_pattern.as_ref())?;

    let diag_shift = if opts.penalize_diagonal { lambda } else { 0.0 };
    let mut shifted = s.to_owned();
    for i in 0..p {
        shifted[[i, i]] += diag_shift;
    }
    if lambda == 0.0 || opts.penalize_diagonal {
        linalg::cholesky(shifted.view())?;
    }

    let mut w = shifted.clone();
    let mut betas = Array2::<f64>::zeros((p, p));
    if let Some(prev) = warm {
        if prev.p() == p && linalg::is_positive_definite(prev.w.view()) {
            w.assign(&prev.w);
            for i in 0..p {
                w[[i, i]] = shifted[[i, i]];
            }
            betas.assign(&prev.betas);
            for i in 0..p {
                for j in 0..p {
                    if i != j && !allowed[[i, j]] {
                        betas[[i, j]] = 0.0;
                    }
                }
            }
            // the warm W may carry edges the new pattern forbids
            if !linalg::is_positive_definite(w.view()) {
                w.assign(&shifted);
            }
        }
    }

    let offdiag_count = (p * p - p).max(1) as f64;
    let mean_abs_off = (0..p)
        .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| s[[i, j]].abs())
        .sum::<f64>()
        / offdiag_count;
    let mean_abs_diag = (0..p).map(|i| s[[i, i]].abs()).sum::<f64>() / p as f64;
    let threshold = opts.tol * mean_abs_off.max(1e-12 * mean_abs_diag);

    let mut sweeps = 0;
    let mut converged = p == 1;
    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut change = 0.0;
        for j in 0..p {
            let w11 = linalg::delete_row_col(w.view(), j);
            let s12 = linalg::column_without(s, j);
            let mask: Vec<bool> = (0..p).filter(|&i| i != j).map(|i| allowed[[i, j]]).collect();
            let init = linalg::column_without(betas.view(), j);
            let fit = lasso_cd_with(w11.view(), s12.view(), lambda, &mask, Some(init.view()), &opts.lasso)?;
            let w12 = w11.dot(&fit.beta);
            for (k, i) in (0..p).filter(|&i| i != j).enumerate() {
                change += 2.0 * (w[[i, j]] - w12[k]).abs();
                w[[i, j]] = w12[k];
                w[[j, i]] = w12[k];
                betas[[i, j]] = fit.beta[k];
            }
        }
        if change / offdiag_count < threshold {
            converged = true;
        }
    }

    let mut theta = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let beta: Array1<f64> = linalg::column_without(betas.view(), j);
        let w12 = linalg::column_without(w.view(), j);
        let denom = w[[j, j]] - w12.dot(&beta);
        if !(denom > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let t22 = 1.0 / denom;
        theta[[j, j]] = t22;
        for (k, i) in (0..p).filter(|&i| i != j).enumerate() {
            theta[[i, j]] = -beta[k] * t22;
        }
    }
    linalg::symmetrize(&mut theta);
    for i in 0..p {
        for j in 0..p {
            if i != j && !allowed[[i, j]] {
                theta[[i, j]] = 0.0;
            }
        }
    }
    if !linalg::is_positive_definite(theta.view()) {
        return Err(Error::NotPositiveDefinite { pivot: 0 });
    }

    let max_kkt_violation = glasso_kkt_violation(s, &w, &theta, lambda, &allowed);
    if !converged {
        log::warn!("glasso reached {sweeps} sweeps at lambda={lambda} without converging");
    }
    Ok(PrecisionEstimate {
        theta,
        w,
        lambda,
        sweeps,
        converged,
        max_kkt_violation,
        betas,
    })
}

fn allowed_mask(p: usize, pattern: Option<&GaugeGraph>) -> Result<Array2<bool>> {
    match pattern {
        None => Ok(Array2::from_elem((p, p), true)),
        Some(g) => {
            if g.p() != p {
                return Err(Error::DimensionMismatch(format!(
                    "zero pattern has {} gauges, covariance has {p}",
                    g.p()
                )));
            }
            let mut m = Array2::from_elem((p, p), false);
            for i in 0..p {
                m[[i, i]] = true;
            }
            for (i, j) in g.edges() {
                m[[i, j]] = true;
                m[[j, i]] = true;
            }
            Ok(m)
        }
    }
}

/// Off-diagonal subgradient conditions `w_ij − s_ij = λ·sign(θ_ij)` for
/// non-zero entries and `|w_ij − s_ij| ≤ λ` otherwise, over allowed pairs.
fn glasso_kkt_violation(
    s: ArrayView2<f64>,
    w: &Array2<f64>,
    theta: &Array2<f64>,
    lambda: f64,
    allowed: &Array2<bool>,
) -> f64 {
    let p = s.nrows();
    let mut worst = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            if i == j || !allowed[[i, j]] {
                continue;
            }
            let r = w[[i, j]] - s[[i, j]];
            let v = if theta[[i, j]] == 0.0 {
                (r.abs() - lambda).max(0.0)
            } else {
                (r - lambda * theta[[i, j]].signum()).abs()
            };
            worst = worst.max(v);
        }
    }
    worst
}

/// Regression coefficient matrix with `a_ij = −θ_ij / θ_jj` (zero
/// diagonal); column j predicts gauge j from the others.
pub fn precision_to_coefficients(est: &PrecisionEstimate) -> Result<Array2<f64>> {
    theta_to_coefficients(est.theta.view())
}

pub fn theta_to_coefficients(theta: ArrayView2<f64>) -> Result<Array2<f64>> {
    let p = theta.nrows();
    let mut a = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let d = theta[[j, j]];
        if !(d > 0.0) {
            return Err(Error::NonPositiveDiagonal(j));
        }
        for i in 0..p {
            if i != j {
                a[[i, j]] = -theta[[i, j]] / d;
            }
        }
    }
    Ok(a)
}

/// `S₁₁⁻¹ s₁₂` for target `j`: the least-squares coefficients of gauge j
/// on all others, computed from the covariance directly.
pub fn covariance_to_coefficients(s: ArrayView2<f64>, j: usize) -> Result<Array1<f64>> {
    let p = s.nrows();
    if j >= p || s.ncols() != p {
        return Err(Error::DimensionMismatch(format!("target {j} for {p}x{} matrix", s.ncols())));
    }
    let s11 = linalg::delete_row_col(s, j);
    let s12 = linalg::column_without(s, j);
    linalg::solve_spd(s11.view(), s12.view())
}
