//! Baseline tests the distilled engines are compared against: the original
//! CRT statistic family built on the joint lasso (with its soft-threshold-
//! free and centered two-tailed modifications), the asymptotically normal
//! residual-covariance test, and the data-splitting holdout randomization
//! test.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::ResponseKind;
use crate::distill::Distillation;
use crate::error::{Error, Result};
use crate::lasso::{
    cross_validate_with_folds, default_grid, kkt_correlations, loss_value, make_folds,
    LassoConfig, LossKind,
};
use crate::model::{sample_rows, XModel};

use super::TestOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcrtVariant {
    /// |beta_x| from the cross-validated joint lasso of y on [x, Z].
    Original,
    /// The same fit's KKT quantity for x before soft-thresholding,
    /// |x_c'(y - yhat_{-x})| / ||x_c||^2 with x centered.
    NoSoft,
    /// Signed version of `NoSoft`; calibrated two-tailed.
    Centered,
}

impl OcrtVariant {
    pub fn method_tag(self) -> &'static str {
        match self {
            OcrtVariant::Original => "ocrt_original",
            OcrtVariant::NoSoft => "ocrt_no_soft",
            OcrtVariant::Centered => "ocrt_centered",
        }
    }
}

/// Joint-lasso statistic of the original CRT. Every call refits the
/// cross-validated lasso of y on [x, Z] from scratch, including the grid —
/// this is exactly the per-resample cost the distilled statistics avoid.
pub fn ocrt_statistic(
    y: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    z: ArrayView2<'_, f64>,
    variant: OcrtVariant,
    kind: ResponseKind,
    cfg: &LassoConfig,
    folds: &[Vec<usize>],
) -> Result<f64> {
    let n = y.len();
    let mut design = Array2::<f64>::zeros((n, z.ncols() + 1));
    design.column_mut(0).assign(&x);
    design.slice_mut(s![.., 1..]).assign(&z);
    let loss = LossKind::for_response(kind);
    let grid = default_grid(design.view(), y, cfg.grid_size, cfg.grid_ratio)?;
    let cv = cross_validate_with_folds(design.view(), y, loss, &grid, folds, cfg)?;
    let fit = cv.selected();
    match variant {
        OcrtVariant::Original => Ok(fit.beta[0].abs()),
        OcrtVariant::NoSoft | OcrtVariant::Centered => {
            let mean = x.sum() / n as f64;
            let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
            if sd <= 1e-14 * mean.abs().max(1.0) {
                return Err(Error::invalid("tested column is constant"));
            }
            // unsoft-thresholded KKT quantity on the solver's standardized
            // scale, mapped back to the original coefficient scale
            let c = kkt_correlations(design.view(), y, loss, fit)?[0];
            let w = c + fit.beta[0] * sd;
            let signed = w / sd;
            Ok(if variant == OcrtVariant::NoSoft { signed.abs() } else { signed })
        }
    }
}

/// Resampling CRT around the joint-lasso statistic. The centered variant is
/// two-tailed: each tail gets its own +1-corrected rank p-value and the
/// doubled minimum is capped at 1.
#[allow(clippy::too_many_arguments)]
pub fn ocrt_p_value(
    y: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    z: ArrayView2<'_, f64>,
    rows: &[crate::model::RowLaw],
    variant: OcrtVariant,
    kind: ResponseKind,
    cfg: &LassoConfig,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TestOutcome> {
    if m == 0 {
        return Err(Error::invalid("resampling needs M >= 1"));
    }
    let folds = crate::lasso::default_folds(y.len(), cfg.folds)?;
    let observed = ocrt_statistic(y, x, z, variant, kind, cfg, &folds)?;
    let mut hi = 0usize;
    let mut lo = 0usize;
    for i in 0..m {
        let draw = sample_rows(rows, rng);
        let t = ocrt_statistic(y, draw.view(), z, variant, kind, cfg, &folds)
            .map_err(|e| Error::numerical(format!("resample {i}: {e}")))?;
        if t >= observed {
            hi += 1;
        }
        if t <= observed {
            lo += 1;
        }
    }
    let mf = m as f64 + 1.0;
    let p_value = match variant {
        OcrtVariant::Original | OcrtVariant::NoSoft => (1.0 + hi as f64) / mf,
        OcrtVariant::Centered => {
            (2.0 * ((1.0 + hi as f64) / mf).min((1.0 + lo as f64) / mf)).min(1.0)
        }
    };
    Ok(TestOutcome::new(p_value, observed, variant.method_tag(), m))
}

/// Residual-covariance test: R_i = (x - d_x)_i (y - d_y)_i referred to its
/// asymptotic normal law, z = sqrt(n) mean(R) / sd(R).
pub fn gcm_p_value(
    y: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    dist: &Distillation,
) -> Result<TestOutcome> {
    let n = y.len();
    if n < 3 {
        return Err(Error::invalid("the normal-calibration test needs n >= 3"));
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for i in 0..n {
        let r = (x[i] - dist.d_x[i]) * (y[i] - dist.d_y[i]);
        sum += r;
        sumsq += r * r;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = sumsq / nf - mean * mean;
    if var <= 0.0 {
        return Err(Error::numerical("residual products have zero variance"));
    }
    let z = nf.sqrt() * mean / var.sqrt();
    let norm = Normal::new(0.0, 1.0).map_err(|e| Error::numerical(e.to_string()))?;
    let p_value = (2.0 * (1.0 - norm.cdf(z.abs()))).clamp(super::P_FLOOR, 1.0);
    Ok(TestOutcome::new(p_value, z, "gcm", 0))
}

/// Shared context of the holdout test: one seeded split, one cross-validated
/// lasso on the first half, held-out linear predictor and risk on the second.
pub struct HrtContext {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub beta: Array1<f64>,
    pub eta_test: Array1<f64>,
    pub risk_observed: f64,
    loss: LossKind,
}

impl HrtContext {
    /// Split the data and fit the penalized model on the training half.
    pub fn build(
        y: ArrayView1<'_, f64>,
        x: ArrayView2<'_, f64>,
        kind: ResponseKind,
        cfg: &LassoConfig,
        split_fraction: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let n = y.len();
        if n < 4 {
            return Err(Error::invalid("the holdout test needs n >= 4"));
        }
        if !(0.0 < split_fraction && split_fraction < 1.0) {
            return Err(Error::invalid("split fraction must lie in (0, 1)"));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let n1 = ((n as f64 * split_fraction).floor() as usize).clamp(2, n - 2);
        let train_rows = perm[..n1].to_vec();
        let test_rows = perm[n1..].to_vec();

        let take = |rows: &[usize]| {
            let xs = Array2::from_shape_fn((rows.len(), x.ncols()), |(i, j)| x[(rows[i], j)]);
            let ys = Array1::from_shape_fn(rows.len(), |i| y[rows[i]]);
            (xs, ys)
        };
        let (x1, y1) = take(&train_rows);
        let (x2, y2) = take(&test_rows);
        let loss = LossKind::for_response(kind);
        let grid = default_grid(x1.view(), y1.view(), cfg.grid_size, cfg.grid_ratio)?;
        let folds = make_folds(x1.nrows(), cfg.folds.min(x1.nrows()), rng)?;
        let cv = cross_validate_with_folds(x1.view(), y1.view(), loss, &grid, &folds, cfg)?;
        let fit = cv.selected();
        let eta_test = fit.linear_predictor(x2.view());
        let risk_observed = held_out_risk(loss, y2.view(), eta_test.view());
        Ok(HrtContext {
            train_rows,
            test_rows,
            beta: fit.beta.clone(),
            eta_test,
            risk_observed,
            loss,
        })
    }

    /// Test one variable by resampling its held-out column; the fitted model
    /// enters only through that variable's coefficient, so each resample
    /// costs O(n) rather than a refit.
    pub fn test_variable(
        &self,
        y: ArrayView1<'_, f64>,
        x: ArrayView2<'_, f64>,
        j: usize,
        model: &XModel,
        m: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<TestOutcome> {
        if m == 0 {
            return Err(Error::invalid("resampling needs M >= 1"));
        }
        let bj = self.beta[j];
        if bj == 0.0 {
            // resampling an unused column cannot move the held-out risk;
            // every resample ties and the rank formula returns 1
            return Ok(TestOutcome::new(1.0, self.risk_observed, "hrt", m));
        }
        let law = model.law_for(j)?;
        let nt = self.test_rows.len();
        let mut z2 = Array2::<f64>::zeros((nt, x.ncols() - 1));
        let mut xj = Array1::<f64>::zeros(nt);
        let mut y2 = Array1::<f64>::zeros(nt);
        for (i, &r) in self.test_rows.iter().enumerate() {
            xj[i] = x[(r, j)];
            y2[i] = y[r];
            let mut c = 0;
            for col in 0..x.ncols() {
                if col != j {
                    z2[(i, c)] = x[(r, col)];
                    c += 1;
                }
            }
        }
        let rows = law.row_laws(z2.view())?;
        let mut at_most = 0usize;
        let mut eta = Array1::<f64>::zeros(nt);
        for i in 0..m {
            let draw = sample_rows(&rows, rng);
            for t in 0..nt {
                eta[t] = self.eta_test[t] + bj * (draw[t] - xj[t]);
            }
            let risk = held_out_risk(self.loss, y2.view(), eta.view());
            if !risk.is_finite() {
                return Err(Error::numerical(format!("resample {i}: non-finite held-out risk")));
            }
            if risk <= self.risk_observed {
                at_most += 1;
            }
        }
        Ok(TestOutcome::new(
            (1.0 + at_most as f64) / (m as f64 + 1.0),
            self.risk_observed,
            "hrt",
            m,
        ))
    }
}

fn held_out_risk(loss: LossKind, y: ArrayView1<'_, f64>, eta: ArrayView1<'_, f64>) -> f64 {
    let n = y.len() as f64;
    y.iter().zip(eta.iter()).map(|(yi, ei)| loss_value(loss, *yi, *ei)).sum::<f64>() / n
}

/// Holdout randomization test for one variable: split, fit on one half,
/// compare the held-out risk of the observed column against resampled ones.
#[allow(clippy::too_many_arguments)]
pub fn hrt_p_value(
    y: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    j: usize,
    model: &XModel,
    kind: ResponseKind,
    cfg: &LassoConfig,
    m: usize,
    split_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<TestOutcome> {
    if j >= x.ncols() {
        return Err(Error::invalid(format!("column {j} out of range")));
    }
    let ctx = HrtContext::build(y, x, kind, cfg, split_fraction, rng)?;
    ctx.test_variable(y, x, j, model, m, rng)
}
