//! L1-penalized regression by pathwise coordinate descent.
//!
//! The solver minimizes (1/n) sum_i loss(y_i, eta_i) + lambda * ||beta||_1
//! with an unpenalized intercept. Columns are centered and scaled to unit
//! variance internally; reported coefficients are on the original scale.
//! Fits along a decreasing lambda grid are warm-started, and model size is
//! chosen by K-fold cross-validation with a one-sided sequential rule.

mod cv;
mod solver;

pub use cv::{cross_validate, cross_validate_with_folds, default_folds, make_folds, CvLassoFit};
pub use solver::{fit_path, kkt_correlations, loss_value, LassoFit};

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Logistic,
}

impl LossKind {
    /// Loss used when distilling or testing a response of the given kind.
    pub fn for_response(kind: crate::data::ResponseKind) -> LossKind {
        match kind {
            crate::data::ResponseKind::Continuous => LossKind::Squared,
            crate::data::ResponseKind::Binary => LossKind::Logistic,
        }
    }
}

/// Solver and cross-validation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoConfig {
    /// Number of grid points G.
    pub grid_size: usize,
    /// Smallest-to-largest lambda ratio; `None` picks 1e-3, or 1e-2 when n < p.
    pub grid_ratio: Option<f64>,
    /// Cross-validation fold count K.
    pub folds: usize,
    /// Look-ahead width of the sequential rule.
    pub delta: usize,
    /// Stop a fit when no coordinate moves more than this in a sweep.
    pub tol: f64,
    /// Total sweep budget per path.
    pub max_sweeps: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            grid_size: 100,
            grid_ratio: None,
            folds: 10,
            delta: 5,
            tol: 1e-7,
            max_sweeps: 100_000,
        }
    }
}

/// Soft-thresholding operator: sign(w) * max(|w| - t, 0).
pub fn soft_threshold(w: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if w > t {
        w - t
    } else if w < -t {
        w + t
    } else {
        0.0
    }
}

/// Geometric lambda grid from the smallest value that zeroes every
/// coefficient down to `ratio` times that value.
pub fn default_grid(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    grid_size: usize,
    grid_ratio: Option<f64>,
) -> Result<Vec<f64>> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::invalid("y length does not match X rows"));
    }
    if grid_size < 1 {
        return Err(Error::invalid("grid size must be at least 1"));
    }
    let ratio = grid_ratio.unwrap_or(if n < p { 1e-2 } else { 1e-3 });
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid("grid ratio must lie in (0, 1)"));
    }
    let ym = y.sum() / n as f64;
    let mut lambda_max = 0.0f64;
    for j in 0..p {
        let col = x.column(j);
        let m = col.sum() / n as f64;
        let mut var = 0.0;
        let mut dot = 0.0;
        for i in 0..n {
            let c = col[i] - m;
            var += c * c;
            dot += c * (y[i] - ym);
        }
        var /= n as f64;
        let sd = var.sqrt();
        if sd <= 1e-14 * m.abs().max(1.0) {
            continue;
        }
        lambda_max = lambda_max.max((dot / sd / n as f64).abs());
    }
    if lambda_max <= 1e-300 {
        return Err(Error::invalid(
            "response has no variation against the covariates; cannot build a lambda grid",
        ));
    }
    if grid_size == 1 {
        return Ok(vec![lambda_max]);
    }
    let g = grid_size as f64;
    Ok((0..grid_size)
        .map(|i| lambda_max * ratio.powf(i as f64 / (g - 1.0)))
        .collect())
}

/// Outcome of the sequential grid-point rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequentialSelection {
    /// Chosen grid index (0-based).
    pub g_hat: usize,
    /// Last grid index whose fold fits feed the union active set.
    pub g_tilde: usize,
    /// True when no local minimum existed and the tail convention applied.
    pub fell_back: bool,
}

/// First grid index whose error is no larger than each of the next `delta`
/// errors; falls back to (G-1-delta, G-1) when the errors keep improving.
pub fn sequential_select(cv_errors: &[f64], delta: usize) -> Result<SequentialSelection> {
    let g = cv_errors.len();
    if delta == 0 {
        return Err(Error::invalid("sequential rule needs delta >= 1"));
    }
    if g <= delta {
        return Err(Error::invalid(format!(
            "sequential rule needs more than delta={delta} grid points, got {g}"
        )));
    }
    if cv_errors.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite cross-validation error"));
    }
    for i in 0..(g - delta) {
        let ahead = &cv_errors[i + 1..=i + delta];
        if ahead.iter().all(|&e| cv_errors[i] <= e) {
            return Ok(SequentialSelection { g_hat: i, g_tilde: i + delta, fell_back: false });
        }
    }
    Ok(SequentialSelection { g_hat: g - 1 - delta, g_tilde: g - 1, fell_back: true })
}
