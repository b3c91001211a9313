//! K-fold cross-validation over a lasso path and the union active set that
//! later powers distillation recycling.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::solver::{fit_path_rows, loss_value, LassoFit};
use super::{sequential_select, LassoConfig, LossKind, SequentialSelection};
use crate::error::{Error, Result};

/// A full cross-validated lasso: the all-data path, per-fold paths, summed
/// held-out errors, the sequential-rule choice, and the union active set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvLassoFit {
    pub loss: LossKind,
    pub grid: Vec<f64>,
    pub path: Vec<LassoFit>,
    pub fold_paths: Vec<Vec<LassoFit>>,
    pub cv_errors: Vec<f64>,
    pub selection: SequentialSelection,
    /// Variables active in the selected all-data fit or in any fold fit at a
    /// grid point up to `selection.g_tilde`, ascending.
    pub union_active: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
}

impl CvLassoFit {
    /// The all-data fit at the selected grid point.
    pub fn selected(&self) -> &LassoFit {
        &self.path[self.selection.g_hat]
    }

    pub fn g_hat(&self) -> usize {
        self.selection.g_hat
    }

    pub fn g_tilde(&self) -> usize {
        self.selection.g_tilde
    }
}

/// Contiguous fold blocks over a seeded shuffle of the row indices.
pub fn make_folds(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if k > n {
        return Err(Error::invalid(format!("{k} folds but only {n} rows")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(perm[at..at + size].to_vec());
        at += size;
    }
    Ok(folds)
}

fn validate_folds(n: usize, folds: &[Vec<usize>]) -> Result<()> {
    let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
    all.sort_unstable();
    if all.len() != n || all.iter().enumerate().any(|(i, &v)| i != v) {
        return Err(Error::invalid("folds must partition the row indices"));
    }
    if folds.iter().any(|f| f.is_empty()) {
        return Err(Error::invalid("empty cross-validation fold"));
    }
    Ok(())
}

/// Fold partition keyed by the data shape alone (via `FOLD_BASE_SEED`), so
/// every pipeline that avoids Monte Carlo is a deterministic function of the
/// data regardless of the user seed.
pub fn default_folds(n: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    let mut rng = crate::rng::substream(
        crate::rng::FOLD_BASE_SEED,
        &[crate::rng::TAG_FOLDS, n as u64, k as u64],
    );
    make_folds(n, k, &mut rng)
}

/// Cross-validate with folds drawn from `rng`.
pub fn cross_validate(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    loss: LossKind,
    grid: &[f64],
    cfg: &LassoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CvLassoFit> {
    let folds = make_folds(x.nrows(), cfg.folds, rng)?;
    cross_validate_with_folds(x, y, loss, grid, &folds, cfg)
}

/// Cross-validate reusing an existing fold partition. Recycled refits call
/// this so every subproblem sees identical folds and grid.
pub fn cross_validate_with_folds(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    loss: LossKind,
    grid: &[f64],
    folds: &[Vec<usize>],
    cfg: &LassoConfig,
) -> Result<CvLassoFit> {
    let n = x.nrows();
    validate_folds(n, folds)?;
    let mut cv_errors = vec![0.0f64; grid.len()];
    let mut fold_paths = Vec::with_capacity(folds.len());
    for fold in folds {
        let held: BTreeSet<usize> = fold.iter().copied().collect();
        let train: Vec<usize> = (0..n).filter(|i| !held.contains(i)).collect();
        let path = fit_path_rows(x, y, loss, grid, cfg, Some(&train))?;
        for (g, fit) in path.iter().enumerate() {
            let mut err = 0.0;
            for &i in fold {
                let mut eta = fit.intercept;
                for &j in &fit.active {
                    eta += fit.beta[j] * x[(i, j)];
                }
                err += loss_value(loss, y[i], eta);
            }
            cv_errors[g] += err;
        }
        fold_paths.push(path);
    }
    let path = fit_path_rows(x, y, loss, grid, cfg, None)?;
    let selection = sequential_select(&cv_errors, cfg.delta)?;
    let mut union: BTreeSet<usize> = path[selection.g_hat].active.iter().copied().collect();
    for fp in &fold_paths {
        for fit in &fp[..=selection.g_tilde] {
            union.extend(fit.active.iter().copied());
        }
    }
    Ok(CvLassoFit {
        loss,
        grid: grid.to_vec(),
        path,
        fold_paths,
        cv_errors,
        selection,
        union_active: union.into_iter().collect(),
        folds: folds.to_vec(),
    })
}
