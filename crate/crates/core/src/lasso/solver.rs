//! The coordinate-descent engine behind `fit_path`.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{soft_threshold, LassoConfig, LossKind};
use crate::error::{Error, Result};

/// One point on a lasso path, reported on the original data scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoFit {
    pub lambda: f64,
    pub beta: Array1<f64>,
    pub intercept: f64,
    /// Indices with nonzero coefficients, ascending.
    pub active: Vec<usize>,
}

impl LassoFit {
    /// Linear predictor `intercept + X beta` (the log-odds under logistic loss).
    pub fn linear_predictor(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let mut eta = Array1::from_elem(x.nrows(), self.intercept);
        for &j in &self.active {
            let b = self.beta[j];
            for (e, v) in eta.iter_mut().zip(x.column(j).iter()) {
                *e += b * v;
            }
        }
        eta
    }
}

/// Per-observation loss at a linear predictor value.
pub fn loss_value(loss: LossKind, y: f64, eta: f64) -> f64 {
    match loss {
        LossKind::Squared => 0.5 * (y - eta) * (y - eta),
        // log(1 + e^eta) - y*eta, computed without overflow
        LossKind::Logistic => eta.max(0.0) + (-eta.abs()).exp().ln_1p() - y * eta,
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Centered, unit-variance columns over a row subset.
struct Workspace {
    n: usize,
    p: usize,
    cols: Vec<Vec<f64>>,
    /// sum(col^2)/n per column; 0 flags a constant column that never activates.
    v: Vec<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    y: Vec<f64>,
}

impl Workspace {
    fn build(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, rows: Option<&[usize]>) -> Workspace {
        let p = x.ncols();
        let gather: Vec<usize> = match rows {
            Some(r) => r.to_vec(),
            None => (0..x.nrows()).collect(),
        };
        let n = gather.len();
        let nf = n as f64;
        let mut cols = Vec::with_capacity(p);
        let mut v = Vec::with_capacity(p);
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        for j in 0..p {
            let src = x.column(j);
            let mut col: Vec<f64> = gather.iter().map(|&i| src[i]).collect();
            let m = col.iter().sum::<f64>() / nf;
            let var = col.iter().map(|&c| (c - m) * (c - m)).sum::<f64>() / nf;
            let sd = var.sqrt();
            if sd <= 1e-14 * m.abs().max(1.0) {
                col.iter_mut().for_each(|c| *c = 0.0);
                cols.push(col);
                v.push(0.0);
                means.push(m);
                scales.push(1.0);
            } else {
                col.iter_mut().for_each(|c| *c = (*c - m) / sd);
                let vj = col.iter().map(|c| c * c).sum::<f64>() / nf;
                cols.push(col);
                v.push(vj);
                means.push(m);
                scales.push(sd);
            }
        }
        let yv: Vec<f64> = gather.iter().map(|&i| y[i]).collect();
        Workspace { n, p, cols, v, means, scales, y: yv }
    }

    fn to_fit(&self, lambda: f64, beta_std: &[f64], b0_std: f64) -> LassoFit {
        let mut beta = Array1::<f64>::zeros(self.p);
        let mut active = Vec::new();
        let mut intercept = b0_std;
        for j in 0..self.p {
            if beta_std[j] != 0.0 {
                let b = beta_std[j] / self.scales[j];
                beta[j] = b;
                intercept -= b * self.means[j];
                active.push(j);
            }
        }
        LassoFit { lambda, beta, intercept, active }
    }
}

struct SweepBudget {
    used: usize,
    max: usize,
}

impl SweepBudget {
    fn spend(&mut self, grid_index: usize) -> Result<()> {
        self.used += 1;
        if self.used > self.max {
            Err(Error::numerical(format!(
                "coordinate descent exceeded {} sweeps at grid point {}",
                self.max, grid_index
            )))
        } else {
            Ok(())
        }
    }
}

/// One coordinate-descent pass over `subset`. Returns the largest
/// standardized-coefficient move.
fn cd_sweep(
    ws: &Workspace,
    subset: &[usize],
    beta: &mut [f64],
    r: &mut [f64],
    weights: Option<(&[f64], &[f64])>, // (w, vw) for the logistic inner problem
    lambda: f64,
) -> f64 {
    let nf = ws.n as f64;
    let mut change = 0.0f64;
    for &j in subset {
        let (vj, dot) = match weights {
            None => {
                if ws.v[j] <= 0.0 {
                    continue;
                }
                let d: f64 = ws.cols[j].iter().zip(r.iter()).map(|(c, ri)| c * ri).sum();
                (ws.v[j], d)
            }
            Some((w, vw)) => {
                if vw[j] <= 0.0 {
                    continue;
                }
                let d: f64 = ws.cols[j]
                    .iter()
                    .zip(r.iter())
                    .zip(w.iter())
                    .map(|((c, ri), wi)| c * ri * wi)
                    .sum();
                (vw[j], d)
            }
        };
        let z = beta[j] * vj + dot / nf;
        let nb = soft_threshold(z, lambda) / vj;
        let d = nb - beta[j];
        if d != 0.0 {
            for (ri, c) in r.iter_mut().zip(ws.cols[j].iter()) {
                *ri -= d * c;
            }
            beta[j] = nb;
            change = change.max(d.abs());
        }
    }
    change
}

#[cfg(debug_assertions)]
fn squared_objective(ws: &Workspace, beta: &[f64], r: &[f64], lambda: f64) -> f64 {
    let rss: f64 = r.iter().map(|v| v * v).sum();
    rss / (2.0 * ws.n as f64) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

fn solve_squared(
    ws: &Workspace,
    grid: &[f64],
    cfg: &LassoConfig,
) -> Result<Vec<LassoFit>> {
    let ym = ws.y.iter().sum::<f64>() / ws.n as f64;
    let mut r: Vec<f64> = ws.y.iter().map(|v| v - ym).collect();
    let mut beta = vec![0.0f64; ws.p];
    let mut budget = SweepBudget { used: 0, max: cfg.max_sweeps };
    let all: Vec<usize> = (0..ws.p).collect();
    let mut fits = Vec::with_capacity(grid.len());
    for (gi, &lambda) in grid.iter().enumerate() {
        #[cfg(debug_assertions)]
        let mut prev_obj = squared_objective(ws, &beta, &r, lambda);
        loop {
            budget.spend(gi)?;
            let change = cd_sweep(ws, &all, &mut beta, &mut r, None, lambda);
            #[cfg(debug_assertions)]
            {
                let obj = squared_objective(ws, &beta, &r, lambda);
                debug_assert!(
                    obj <= prev_obj + 1e-8 * (1.0 + prev_obj.abs()),
                    "objective increased: {prev_obj} -> {obj}"
                );
                prev_obj = obj;
            }
            if change < cfg.tol {
                break;
            }
            let active: Vec<usize> =
                (0..ws.p).filter(|&j| beta[j] != 0.0).collect();
            loop {
                budget.spend(gi)?;
                let c = cd_sweep(ws, &active, &mut beta, &mut r, None, lambda);
                #[cfg(debug_assertions)]
                {
                    let obj = squared_objective(ws, &beta, &r, lambda);
                    debug_assert!(
                        obj <= prev_obj + 1e-8 * (1.0 + prev_obj.abs()),
                        "objective increased: {prev_obj} -> {obj}"
                    );
                    prev_obj = obj;
                }
                if c < cfg.tol {
                    break;
                }
            }
        }
        fits.push(ws.to_fit(lambda, &beta, ym));
    }
    Ok(fits)
}

fn solve_logistic(
    ws: &Workspace,
    grid: &[f64],
    cfg: &LassoConfig,
) -> Result<Vec<LassoFit>> {
    const WEIGHT_FLOOR: f64 = 1e-5;
    const MAX_IRLS: usize = 50;
    let nf = ws.n as f64;
    let ym = ws.y.iter().sum::<f64>() / nf;
    if !(ym > 0.0 && ym < 1.0) {
        return Err(Error::invalid("binary response is constant"));
    }
    let mut b0 = (ym / (1.0 - ym)).ln();
    let mut beta = vec![0.0f64; ws.p];
    let mut eta = vec![b0; ws.n];
    let mut budget = SweepBudget { used: 0, max: cfg.max_sweeps };
    let all: Vec<usize> = (0..ws.p).collect();
    let mut fits = Vec::with_capacity(grid.len());
    let mut w = vec![0.0f64; ws.n];
    let mut r = vec![0.0f64; ws.n];
    let mut vw = vec![0.0f64; ws.p];
    for (gi, &lambda) in grid.iter().enumerate() {
        let mut settled = false;
        for _irls in 0..MAX_IRLS {
            let mut wsum = 0.0;
            for i in 0..ws.n {
                let p = sigmoid(eta[i]);
                w[i] = (p * (1.0 - p)).max(WEIGHT_FLOOR);
                r[i] = (ws.y[i] - p) / w[i];
                wsum += w[i];
            }
            for j in 0..ws.p {
                vw[j] = if ws.v[j] <= 0.0 {
                    0.0
                } else {
                    ws.cols[j].iter().zip(w.iter()).map(|(c, wi)| c * c * wi).sum::<f64>() / nf
                };
            }
            let beta_before = beta.clone();
            let b0_before = b0;
            // weighted least squares on the working response, by CD
            loop {
                budget.spend(gi)?;
                let d0 = r.iter().zip(w.iter()).map(|(ri, wi)| ri * wi).sum::<f64>() / wsum;
                if d0 != 0.0 {
                    b0 += d0;
                    r.iter_mut().for_each(|ri| *ri -= d0);
                }
                let change = cd_sweep(ws, &all, &mut beta, &mut r, Some((&w, &vw)), lambda)
                    .max(d0.abs());
                if change < cfg.tol {
                    break;
                }
                let active: Vec<usize> =
                    (0..ws.p).filter(|&j| beta[j] != 0.0).collect();
                loop {
                    budget.spend(gi)?;
                    let d0 = r.iter().zip(w.iter()).map(|(ri, wi)| ri * wi).sum::<f64>() / wsum;
                    if d0 != 0.0 {
                        b0 += d0;
                        r.iter_mut().for_each(|ri| *ri -= d0);
                    }
                    let c = cd_sweep(ws, &active, &mut beta, &mut r, Some((&w, &vw)), lambda)
                        .max(d0.abs());
                    if c < cfg.tol {
                        break;
                    }
                }
            }
            // refresh the linear predictor exactly before re-weighting
            for i in 0..ws.n {
                let mut e = b0;
                for j in 0..ws.p {
                    if beta[j] != 0.0 {
                        e += beta[j] * ws.cols[j][i];
                    }
                }
                eta[i] = e;
            }
            let moved = beta
                .iter()
                .zip(beta_before.iter())
                .map(|(a, b)| (a - b).abs())
                .fold((b0 - b0_before).abs(), f64::max);
            if moved < cfg.tol.max(1e-9) {
                settled = true;
                break;
            }
        }
        if !settled {
            log::warn!("logistic IRLS did not settle at grid point {gi}; keeping last iterate");
        }
        fits.push(ws.to_fit(lambda, &beta, b0));
    }
    Ok(fits)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("empty lambda grid"));
    }
    for w in grid.windows(2) {
        if !(w[1] <= w[0]) {
            return Err(Error::invalid("lambda grid must be non-increasing"));
        }
    }
    if grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::invalid("lambda grid values must be finite and non-negative"));
    }
    Ok(())
}

/// Fit the whole path over a decreasing lambda grid with warm starts.
pub fn fit_path(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    loss: LossKind,
    grid: &[f64],
    cfg: &LassoConfig,
) -> Result<Vec<LassoFit>> {
    fit_path_rows(x, y, loss, grid, cfg, None)
}

/// As `fit_path`, restricted to a row subset (used by cross-validation).
pub(crate) fn fit_path_rows(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    loss: LossKind,
    grid: &[f64],
    cfg: &LassoConfig,
    rows: Option<&[usize]>,
) -> Result<Vec<LassoFit>> {
    validate_grid(grid)?;
    if y.len() != x.nrows() {
        return Err(Error::invalid("y length does not match X rows"));
    }
    if let Some(r) = rows {
        if r.iter().any(|&i| i >= x.nrows()) {
            return Err(Error::invalid("row index out of range"));
        }
        if r.len() < 2 {
            return Err(Error::invalid("need at least 2 rows to fit"));
        }
    } else if x.nrows() < 2 {
        return Err(Error::invalid("need at least 2 rows to fit"));
    }
    if loss == LossKind::Logistic {
        let bad = match rows {
            Some(r) => r.iter().any(|&i| y[i] != 0.0 && y[i] != 1.0),
            None => y.iter().any(|&v| v != 0.0 && v != 1.0),
        };
        if bad {
            return Err(Error::invalid("logistic loss requires a 0/1 response"));
        }
    }
    let ws = Workspace::build(x, y, rows);
    match loss {
        LossKind::Squared => solve_squared(&ws, grid, cfg),
        LossKind::Logistic => solve_logistic(&ws, grid, cfg),
    }
}

/// Gradient correlations `x_std_j . residual / n` on the solver's internal
/// standardized scale, for stationarity checks: inactive coordinates satisfy
/// |c_j| <= lambda, active ones c_j = lambda * sign(beta_j).
pub fn kkt_correlations(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    loss: LossKind,
    fit: &LassoFit,
) -> Result<Vec<f64>> {
    let ws = Workspace::build(x, y, None);
    let eta = fit.linear_predictor(x);
    let resid: Vec<f64> = match loss {
        LossKind::Squared => y.iter().zip(eta.iter()).map(|(yi, e)| yi - e).collect(),
        LossKind::Logistic => {
            y.iter().zip(eta.iter()).map(|(yi, e)| yi - sigmoid(*e)).collect()
        }
    };
    let nf = ws.n as f64;
    Ok((0..ws.p)
        .map(|j| ws.cols[j].iter().zip(resid.iter()).map(|(c, r)| c * r).sum::<f64>() / nf)
        .collect())
}
