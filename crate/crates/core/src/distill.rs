//! Distillation: the one-shot low-dimensional summaries of the response and
//! of the tested covariate that every test statistic consumes. `d_y` is the
//! cross-validated lasso prediction of y from Z (linear predictor for binary
//! responses); `d_x` is the conditional mean of x given Z, computed from the
//! covariate law alone so it never sees the observed x.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::ResponseKind;
use crate::error::{Error, Result};
use crate::lasso::{
    cross_validate_with_folds, default_grid, CvLassoFit, LassoConfig, LossKind,
};
use crate::model::ConditionalLaw;

/// Summaries for one tested covariate: the response distillation `d_y`, the
/// k top Z columns kept for interaction terms (none for the plain scalar
/// statistic), and the covariate distillation `d_x` with its conditional sd.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Distillation {
    pub d_y: Array1<f64>,
    pub top_cols: Array2<f64>,
    pub top_idx: Vec<usize>,
    pub d_x: Array1<f64>,
    pub sigma_x: f64,
    pub k: usize,
}

impl Distillation {
    pub fn new(
        d_y: Array1<f64>,
        top_cols: Array2<f64>,
        top_idx: Vec<usize>,
        d_x: Array1<f64>,
        sigma_x: f64,
    ) -> Result<Self> {
        let n = d_y.len();
        if d_x.len() != n || top_cols.nrows() != n {
            return Err(Error::invalid("distillation pieces disagree on n"));
        }
        let k = top_cols.ncols();
        if top_idx.len() != k {
            return Err(Error::invalid("top_idx length does not match top_cols"));
        }
        if !(sigma_x > 0.0) {
            return Err(Error::invalid("sigma_x must be positive"));
        }
        Ok(Distillation { d_y, top_cols, top_idx, d_x, sigma_x, k })
    }
}

/// Default interaction count: ceil(2 log p) for p covariates.
pub fn default_k(p: usize) -> usize {
    if p <= 1 {
        return 0;
    }
    (2.0 * (p as f64).ln()).ceil() as usize
}

/// Response distillation for the scalar statistic: cross-validated lasso of
/// y on Z with the supplied fold partition; returns the fitted values (the
/// linear predictor for binary y) and the full fit.
pub fn distill_y_d0(
    z: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    kind: ResponseKind,
    cfg: &LassoConfig,
    folds: &[Vec<usize>],
) -> Result<(Array1<f64>, CvLassoFit)> {
    let loss = LossKind::for_response(kind);
    let grid = default_grid(z, y, cfg.grid_size, cfg.grid_ratio)?;
    let cv = cross_validate_with_folds(z, y, loss, &grid, folds, cfg)?;
    let d_y = cv.selected().linear_predictor(z);
    Ok((d_y, cv))
}

/// Response distillation plus the k top Z columns ranked by |coefficient|
/// in the selected fit (ties to the lower index); if fewer than k
/// coefficients are nonzero the rest are filled by largest absolute marginal
/// correlation with y.
pub fn distill_y_di(
    z: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    kind: ResponseKind,
    k: usize,
    cfg: &LassoConfig,
    folds: &[Vec<usize>],
) -> Result<(Array1<f64>, Array2<f64>, Vec<usize>, CvLassoFit)> {
    if k > z.ncols() {
        return Err(Error::invalid(format!(
            "k={k} interaction columns requested but Z has only {}",
            z.ncols()
        )));
    }
    let (d_y, cv) = distill_y_d0(z, y, kind, cfg, folds)?;
    let top_idx = top_k_columns(cv.selected().beta.view(), z, y, k);
    let mut top_cols = Array2::<f64>::zeros((z.nrows(), k));
    for (c, &j) in top_idx.iter().enumerate() {
        top_cols.column_mut(c).assign(&z.column(j));
    }
    Ok((d_y, top_cols, top_idx, cv))
}

/// Covariate distillation: row-wise conditional mean of x given Z plus the
/// law's conditional sd. Takes only the law and Z — not the observed x.
pub fn distill_x(law: &ConditionalLaw, z: ArrayView2<'_, f64>) -> Result<(Array1<f64>, f64)> {
    let rows = law.row_laws(z)?;
    let d_x = Array1::from_iter(rows.iter().map(|r| r.mean()));
    Ok((d_x, law.sigma))
}

/// Rank Z columns for the interaction statistic: nonzero coefficients by
/// descending magnitude (ties to the lower index), then pad with the largest
/// absolute marginal correlations with y among the remaining columns.
pub fn top_k_columns(
    beta: ArrayView1<'_, f64>,
    z: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    k: usize,
) -> Vec<usize> {
    let k = k.min(z.ncols());
    let mut ranked: Vec<(f64, usize)> = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, b)| (b.abs(), j))
        .collect();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut idx: Vec<usize> = ranked.into_iter().take(k).map(|(_, j)| j).collect();
    if idx.len() < k {
        let taken: std::collections::HashSet<usize> = idx.iter().copied().collect();
        let n = y.len() as f64;
        let ym = y.sum() / n;
        let ysd = y.iter().map(|v| (v - ym) * (v - ym)).sum::<f64>().sqrt();
        let mut rest: Vec<(f64, usize)> = (0..z.ncols())
            .filter(|j| !taken.contains(j))
            .map(|j| {
                let col = z.column(j);
                let cm = col.sum() / n;
                let csd = col.iter().map(|v| (v - cm) * (v - cm)).sum::<f64>().sqrt();
                let corr = if csd <= 0.0 || ysd <= 0.0 {
                    0.0
                } else {
                    col.iter()
                        .zip(y.iter())
                        .map(|(a, b)| (a - cm) * (b - ym))
                        .sum::<f64>()
                        / (csd * ysd)
                };
                (corr.abs(), j)
            })
            .collect();
        rest.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        idx.extend(rest.into_iter().take(k - idx.len()).map(|(_, j)| j));
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasso::default_folds;
    use crate::model::{CovariateModel, ModelSource};
    use crate::rng::substream;
    use ndarray::array;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noise(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = substream(seed, &[60]);
        Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn default_k_matches_formula() {
        assert_eq!(default_k(1), 0);
        assert_eq!(default_k(3), 3); // 2 ln 3 = 2.197
        assert_eq!(default_k(100), 10); // 2 ln 100 = 9.210
        assert_eq!(default_k(500), 13); // 2 ln 500 = 12.429
    }

    #[test]
    fn strong_signal_distills_to_high_correlation() {
        let n = 200;
        let z = noise(n, 10, 1);
        let y = z.column(0).to_owned();
        let folds = default_folds(n, 5).unwrap();
        let (d_y, _) = distill_y_d0(
            z.view(),
            y.view(),
            ResponseKind::Continuous,
            &LassoConfig { folds: 5, ..LassoConfig::default() },
            &folds,
        )
        .unwrap();
        let ym = y.sum() / n as f64;
        let dm = d_y.sum() / n as f64;
        let num: f64 = y.iter().zip(d_y.iter()).map(|(a, b)| (a - ym) * (b - dm)).sum();
        let den = y.iter().map(|v| (v - ym) * (v - ym)).sum::<f64>().sqrt()
            * d_y.iter().map(|v| (v - dm) * (v - dm)).sum::<f64>().sqrt();
        assert!(num / den >= 0.99, "corr = {}", num / den);
    }

    #[test]
    fn pure_noise_with_heavy_penalty_gives_constant_d_y() {
        let n = 60;
        let z = noise(n, 8, 2);
        let mut rng = substream(3, &[61]);
        let y = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
        // short grid that stays near lambda_max
        let cfg = LassoConfig {
            folds: 5,
            grid_size: 2,
            grid_ratio: Some(0.95),
            delta: 1,
            ..LassoConfig::default()
        };
        let folds = default_folds(n, 5).unwrap();
        let (d_y, cv) =
            distill_y_d0(z.view(), y.view(), ResponseKind::Continuous, &cfg, &folds).unwrap();
        if cv.selected().active.is_empty() {
            let first = d_y[0];
            assert!(d_y.iter().all(|v| (v - first).abs() < 1e-12));
        }
    }

    #[test]
    fn continuous_residuals_are_centered() {
        let n = 120;
        let z = noise(n, 15, 4);
        let mut rng = substream(5, &[62]);
        let y = Array1::from_shape_fn(n, |i| {
            z[(i, 2)] * 1.5 + rng.sample::<f64, _>(StandardNormal)
        });
        let folds = default_folds(n, 5).unwrap();
        let (d_y, _) = distill_y_d0(
            z.view(),
            y.view(),
            ResponseKind::Continuous,
            &LassoConfig { folds: 5, ..LassoConfig::default() },
            &folds,
        )
        .unwrap();
        let resid_mean = y.iter().zip(d_y.iter()).map(|(a, b)| a - b).sum::<f64>() / n as f64;
        assert!(resid_mean.abs() < 1e-10, "residual mean = {resid_mean}");
    }

    #[test]
    fn distillation_is_deterministic() {
        let n = 80;
        let z = noise(n, 12, 6);
        let mut rng = substream(7, &[63]);
        let y = Array1::from_shape_fn(n, |i| z[(i, 0)] - z[(i, 3)] + rng.sample::<f64, _>(StandardNormal));
        let folds = default_folds(n, 5).unwrap();
        let cfg = LassoConfig { folds: 5, ..LassoConfig::default() };
        let a = distill_y_d0(z.view(), y.view(), ResponseKind::Continuous, &cfg, &folds).unwrap();
        let b = distill_y_d0(z.view(), y.view(), ResponseKind::Continuous, &cfg, &folds).unwrap();
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn binary_distillation_returns_linear_predictor() {
        let n = 150;
        let z = noise(n, 6, 8);
        let mut rng = substream(9, &[64]);
        let y = Array1::from_shape_fn(n, |i| {
            let eta = 2.0 * z[(i, 1)];
            let pr = 1.0 / (1.0 + (-eta).exp());
            f64::from(rng.random::<f64>() < pr)
        });
        let folds = default_folds(n, 5).unwrap();
        let (d_y, cv) = distill_y_d0(
            z.view(),
            y.view(),
            ResponseKind::Binary,
            &LassoConfig { folds: 5, ..LassoConfig::default() },
            &folds,
        )
        .unwrap();
        // linear predictor, not probabilities: must escape (0, 1)
        assert!(d_y.iter().any(|v| *v < 0.0 || *v > 1.0));
        assert_eq!(d_y, cv.selected().linear_predictor(z.view()));
    }

    #[test]
    fn top_k_orders_nonzeros_by_magnitude() {
        let beta = array![0.0, -2.0, 0.5, 1.0, 0.0];
        let z = noise(30, 5, 10);
        let y = z.column(0).to_owned();
        assert_eq!(top_k_columns(beta.view(), z.view(), y.view(), 3), vec![1, 3, 2]);
    }

    #[test]
    fn top_k_breaks_ties_by_lower_index() {
        let beta = array![0.5, -0.5, 0.2];
        let z = noise(30, 3, 11);
        let y = z.column(2).to_owned();
        assert_eq!(top_k_columns(beta.view(), z.view(), y.view(), 2), vec![0, 1]);
    }

    #[test]
    fn top_k_pads_by_marginal_correlation() {
        let n = 100;
        let z = noise(n, 4, 12);
        // y tracks column 2 most strongly
        let mut rng = substream(13, &[65]);
        let y = Array1::from_shape_fn(n, |i| {
            3.0 * z[(i, 2)] + 0.1 * rng.sample::<f64, _>(StandardNormal)
        });
        let beta = Array1::<f64>::zeros(4);
        let idx = top_k_columns(beta.view(), z.view(), y.view(), 2);
        assert_eq!(idx.len(), 2);
        assert_eq!(idx[0], 2);
    }

    #[test]
    fn di_distillation_shapes_and_indices() {
        let n = 90;
        let z = noise(n, 10, 14);
        let mut rng = substream(15, &[66]);
        let y = Array1::from_shape_fn(n, |i| {
            2.0 * z[(i, 4)] - 1.0 * z[(i, 7)] + 0.3 * rng.sample::<f64, _>(StandardNormal)
        });
        let folds = default_folds(n, 5).unwrap();
        let (_, top_cols, top_idx, cv) = distill_y_di(
            z.view(),
            y.view(),
            ResponseKind::Continuous,
            3,
            &LassoConfig { folds: 5, ..LassoConfig::default() },
            &folds,
        )
        .unwrap();
        assert_eq!(top_cols.ncols(), 3);
        assert_eq!(top_idx.len(), 3);
        assert!(top_idx.contains(&4) && top_idx.contains(&7));
        for (c, &j) in top_idx.iter().enumerate() {
            assert_eq!(top_cols.column(c), z.column(j));
        }
        // ordered by descending |beta|
        let b = &cv.selected().beta;
        assert!(b[top_idx[0]].abs() >= b[top_idx[1]].abs());
    }

    #[test]
    fn distill_x_is_the_conditional_mean() {
        let law = ConditionalLaw::gaussian(Array1::zeros(2), 3.5, 1.0).unwrap();
        let z = noise(20, 2, 16);
        let (d_x, sigma) = distill_x(&law, z.view()).unwrap();
        assert!(d_x.iter().all(|v| (v - 3.5).abs() < 1e-14));
        assert_eq!(sigma, 1.0);

        let m = CovariateModel::new(Array1::zeros(3), Array2::eye(3), ModelSource::Exact).unwrap();
        let law = m.conditional_law(2).unwrap();
        let (d_x, sigma) = distill_x(&law, z.view()).unwrap();
        assert!(d_x.iter().all(|v| v.abs() < 1e-14));
        assert!((sigma - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distill_x_matches_monte_carlo_means() {
        let law = ConditionalLaw::gaussian(array![1.2, -0.7], 0.4, 0.8).unwrap();
        let z = noise(5, 2, 17);
        let (d_x, _) = distill_x(&law, z.view()).unwrap();
        let rows = law.row_laws(z.view()).unwrap();
        let mut rng = substream(18, &[67]);
        let draws = 200_000;
        for (i, row) in rows.iter().enumerate() {
            let mut acc = 0.0;
            for _ in 0..draws {
                acc += row.sample(&mut rng);
            }
            let mc = acc / draws as f64;
            let se = row.var().sqrt() / (draws as f64).sqrt();
            assert!((mc - d_x[i]).abs() < 3.0 * se + 1e-3, "row {i}: {mc} vs {}", d_x[i]);
        }
    }
}
