use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Result of a coordinate-descent lasso solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub beta: Array1<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub max_kkt_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// Stop once no coordinate moves more than `tol · max(1, ‖β‖∞)` in a
    /// full sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_sweeps: 10_000,
        }
    }
}

fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// Minimizes `½ βᵀGβ − bᵀβ + λ‖β‖₁` with coordinates outside `active`
/// held at zero. Returns an error when the sweep cap is reached.
pub fn lasso_cd(
    gram: ArrayView2<f64>,
    target: ArrayView1<f64>,
    lambda: f64,
    active: &[bool],
) -> Result<Array1<f64>> {
    let fit = lasso_cd_with(gram, target, lambda, active, None, &LassoOptions::default())?;
    if !fit.converged {
        return Err(Error::NonConvergence {
            iterations: fit.sweeps,
        });
    }
    Ok(fit.beta)
}

/// Warm-startable variant of [`lasso_cd`] that reports non-convergence in
/// the returned fit rather than as an error.
pub fn lasso_cd_with(
    gram: ArrayView2<f64>,
    target: ArrayView1<f64>,
    lambda: f64,
    active: &[bool],
    init: Option<ArrayView1<f64>>,
    opts: &LassoOptions,
) -> Result<LassoFit> {
    let m = target.len();
    if gram.nrows() != m || gram.ncols() != m || active.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "gram {}x{}, target {}, mask {}",
            gram.nrows(),
            gram.ncols(),
            m,
            active.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} < 0")));
    }
    for i in 0..m {
        if active[i] && !(gram[[i, i]] > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
    }

    let mut beta = match init {
        Some(b) if b.len() == m => b.to_owned(),
        _ => Array1::zeros(m),
    };
    for i in 0..m {
        if !active[i] {
            beta[i] = 0.0;
        }
    }
    // gb = G β, maintained incrementally
    let mut gb = gram.dot(&beta);

    let update = |i: usize, beta: &mut Array1<f64>, gb: &mut Array1<f64>| -> f64 {
        let gii = gram[[i, i]];
        let partial = target[i] - (gb[i] - gii * beta[i]);
        let new = soft_threshold(partial, lambda) / gii;
        let delta = new - beta[i];
        if delta != 0.0 {
            beta[i] = new;
            for k in 0..m {
                gb[k] += delta * gram[[k, i]];
            }
        }
        delta.abs()
    };

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        // full pass over every allowed coordinate
        sweeps += 1;
        let mut max_delta = 0.0f64;
        for i in 0..m {
            if active[i] {
                max_delta = max_delta.max(update(i, &mut beta, &mut gb));
            }
        }
        let scale = beta.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if max_delta <= opts.tol * scale {
            converged = true;
            break;
        }
        // then iterate on the current support until it settles
        let support: Vec<usize> = (0..m).filter(|&i| active[i] && beta[i] != 0.0).collect();
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            let mut inner = 0.0f64;
            for &i in &support {
                inner = inner.max(update(i, &mut beta, &mut gb));
            }
            let scale = beta.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            if inner <= opts.tol * scale {
                break;
            }
        }
    }

    let max_kkt_violation = kkt_violation(gram, target, lambda, active, beta.view());
    Ok(LassoFit {
        beta,
        sweeps,
        converged,
        max_kkt_violation,
    })
}

/// Largest deviation from the lasso optimality conditions over the active
/// coordinates.
pub fn kkt_violation(
    gram: ArrayView2<f64>,
    target: ArrayView1<f64>,
    lambda: f64,
    active: &[bool],
    beta: ArrayView1<f64>,
) -> f64 {
    let grad = gram.dot(&beta) - &target;
    let mut worst = 0.0f64;
    for i in 0..beta.len() {
        if !active[i] {
            continue;
        }
        let v = if beta[i] == 0.0 {
            (grad[i].abs() - lambda).max(0.0)
        } else {
            (grad[i] + lambda * beta[i].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}
