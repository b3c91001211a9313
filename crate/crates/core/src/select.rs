//! Variable-selection pipeline: optional lasso screening, recycled response
//! distillation, per-variable p-values from a chosen engine, and a BH or
//! Bonferroni correction, with per-phase timings.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::crt::{
    d0_resampling, d0_rf_p_value, d0_rf_transformed, di_resampling, di_rf_p_value,
    di_rf_transformed, gauss_transform, gcm_p_value, ocrt_p_value, row_sigmas, HrtContext,
    OcrtVariant, TestOutcome,
};
use crate::data::{drop_column, DataSet, ResponseKind};
use crate::distill::{default_k, distill_x, distill_y_d0, top_k_columns, Distillation};
use crate::error::{Error, Result};
use crate::lasso::{
    cross_validate_with_folds, default_folds, default_grid, CvLassoFit, LassoConfig, LossKind,
};
use crate::model::{LawFamily, XModel};
use crate::rng::{substream, TAG_RESAMPLE, TAG_SPLIT, TAG_TRANSFORM, TAG_VARIABLE};

/// Statistic family driving the per-variable tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    D0,
    Di,
    OcrtOriginal,
    OcrtNoSoft,
    OcrtCentered,
    Hrt,
    Gcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Resampling,
    ResamplingFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorRate {
    FdrBh,
    FwerBonferroni,
}

/// Pipeline settings. `k` applies to the interaction statistic (default
/// ceil(2 ln p)); `m` is the resample count (default ceil(5 p / alpha));
/// `jobs` = 0 uses all available cores, 1 runs sequentially.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub method: Method,
    pub engine: Engine,
    pub k: Option<usize>,
    pub alpha: f64,
    pub error_rate: ErrorRate,
    pub screening: bool,
    pub recycling: bool,
    pub m: Option<usize>,
    pub seed: u64,
    pub lasso: LassoConfig,
    pub jobs: usize,
    pub split_fraction: f64,
}

impl SelectionConfig {
    pub fn new(method: Method, engine: Engine, seed: u64) -> Self {
        SelectionConfig {
            method,
            engine,
            k: None,
            alpha: 0.1,
            error_rate: ErrorRate::FdrBh,
            screening: true,
            recycling: true,
            m: None,
            seed,
            lasso: LassoConfig::default(),
            jobs: 1,
            split_fraction: 0.5,
        }
    }
}

/// Batch outcome: one TestOutcome per covariate in column order (p = 1 with
/// method "screened_out" for variables the screen dropped), the screened and
/// rejected label sets, and wall-clock per phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub alpha: f64,
    pub error_rate: ErrorRate,
    pub results: Vec<TestOutcome>,
    pub screened: Vec<String>,
    pub rejected: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
    #[serde(skip)]
    pub screened_idx: Vec<usize>,
    #[serde(skip)]
    pub rejected_idx: Vec<usize>,
}

/// Screening set: the active set of the full-data cross-validated lasso at
/// the selected penalty. Folds are keyed by the data shape, so the screen is
/// a deterministic function of the data.
pub fn screen(
    x: &Array2<f64>,
    y: ArrayView1<'_, f64>,
    kind: ResponseKind,
    cfg: &LassoConfig,
) -> Result<Vec<usize>> {
    Ok(full_fit(x, y, kind, cfg)?.selected().active.clone())
}

fn full_fit(
    x: &Array2<f64>,
    y: ArrayView1<'_, f64>,
    kind: ResponseKind,
    cfg: &LassoConfig,
) -> Result<CvLassoFit> {
    let folds = default_folds(x.nrows(), cfg.folds)?;
    let grid = default_grid(x.view(), y, cfg.grid_size, cfg.grid_ratio)?;
    cross_validate_with_folds(x.view(), y, LossKind::for_response(kind), &grid, &folds, cfg)
}

/// Raw p-values on the screened subset padded to the full length with ones.
pub fn screened_p_values(p_raw: &[f64], s: &[usize], p: usize) -> Vec<f64> {
    let mut out = vec![1.0; p];
    for (value, &j) in p_raw.iter().zip(s.iter()) {
        out[j] = *value;
    }
    out
}

/// One leave-one-covariate-out response fit: fitted values d_y and the
/// coefficient vector on X without column j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocoFit {
    pub d_y: Array1<f64>,
    pub beta: Array1<f64>,
    /// True when the fit was read off the full-data lasso instead of refit.
    pub recycled: bool,
}

/// Per-variable response distillations with the full-fit recycling shortcut.
#[derive(Debug, Clone)]
pub struct Recycled {
    /// Indexed by column; `None` outside `targets`.
    pub fits: Vec<Option<LocoFit>>,
    /// Union active set of the full fit (selected fit plus every fold fit up
    /// to the stopping time) — exactly the columns that needed a refit.
    pub union_active: Vec<usize>,
    pub refits: usize,
}

/// Distill the response once per target variable: one full cross-validated
/// lasso, then genuine refits only for columns in its union active set; for
/// every other column the full fit's predictions and coefficients are reused
/// unchanged. All refits share the full fit's fold partition and grid.
pub fn recycle_distillations(
    x: &Array2<f64>,
    y: ArrayView1<'_, f64>,
    kind: ResponseKind,
    cfg: &LassoConfig,
    targets: &[usize],
) -> Result<Recycled> {
    let full = full_fit(x, y, kind, cfg)?;
    recycle_with_fit(x, y, kind, cfg, targets, &full)
}

fn recycle_with_fit(
    x: &Array2<f64>,
    y: ArrayView1<'_, f64>,
    kind: ResponseKind,
    cfg: &LassoConfig,
    targets: &[usize],
    full: &CvLassoFit,
) -> Result<Recycled> {
    let p = x.ncols();
    let loss = LossKind::for_response(kind);
    let selected = full.selected();
    let full_pred = selected.linear_predictor(x.view());
    let active: BTreeSet<usize> = full.union_active.iter().copied().collect();
    let mut fits: Vec<Option<LocoFit>> = vec![None; p];
    let mut refits = 0usize;
    for &j in targets {
        if j >= p {
            return Err(Error::invalid(format!("target column {j} out of range")));
        }
        let fit = if p == 1 {
            // no conditioning columns left: intercept-only fit
            LocoFit {
                d_y: constant_response_fit(y, kind),
                beta: Array1::zeros(0),
                recycled: false,
            }
        } else if active.contains(&j) {
            let z = drop_column(x, j);
            let cv = cross_validate_with_folds(z.view(), y, loss, &full.grid, &full.folds, cfg)?;
            refits += 1;
            LocoFit {
                d_y: cv.selected().linear_predictor(z.view()),
                beta: cv.selected().beta.clone(),
                recycled: false,
            }
        } else {
            // j never entered any fit considered by the selection rule, so
            // dropping its column perturbs neither the path nor the chosen
            // penalty: the full-fit prediction is the loco fit's
            LocoFit {
                d_y: full_pred.clone(),
                beta: Array1::from_iter(
                    selected.beta.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, b)| *b),
                ),
                recycled: true,
            }
        };
        fits[j] = Some(fit);
    }
    Ok(Recycled { fits, union_active: full.union_active.clone(), refits })
}

fn constant_response_fit(y: ArrayView1<'_, f64>, kind: ResponseKind) -> Array1<f64> {
    let n = y.len();
    let mean = y.sum() / n as f64;
    let value = match kind {
        ResponseKind::Continuous => mean,
        ResponseKind::Binary => {
            // intercept-only logistic fit: the logit of the rate, kept
            // finite for all-0 or all-1 responses
            let q = mean.clamp(1.0 / (n as f64 + 1.0), n as f64 / (n as f64 + 1.0));
            (q / (1.0 - q)).ln()
        }
    };
    Array1::from_elem(n, value)
}

/// Benjamini-Hochberg step-up at level `alpha`: reject the k largest-ranked
/// p-values where k = max{k : p_(k) <= k alpha / p}. Returns ascending
/// indices.
pub fn bh(p_values: &[f64], alpha: f64) -> Vec<usize> {
    let p = p_values.len();
    if p == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut threshold = f64::NEG_INFINITY;
    for (rank, &j) in order.iter().enumerate() {
        if p_values[j] <= (rank + 1) as f64 * alpha / p as f64 {
            threshold = p_values[j];
        }
    }
    (0..p).filter(|&j| p_values[j] <= threshold).collect()
}

/// Bonferroni: reject {j : p_j <= alpha / p}. Returns ascending indices.
pub fn bonferroni(p_values: &[f64], alpha: f64) -> Vec<usize> {
    let p = p_values.len();
    if p == 0 {
        return Vec::new();
    }
    let cut = alpha / p as f64;
    (0..p).filter(|&j| p_values[j] <= cut).collect()
}

/// Average pairwise Jaccard similarity of the rejection sets produced by
/// `run` over seeds 0..r. A pair of empty sets counts as perfectly stable.
pub fn jaccard_stability<F>(mut run: F, r: usize) -> Result<f64>
where
    F: FnMut(u64) -> Result<Vec<usize>>,
{
    if r < 2 {
        return Err(Error::invalid("stability needs at least 2 runs"));
    }
    let mut sets: Vec<BTreeSet<usize>> = Vec::with_capacity(r);
    for i in 0..r {
        sets.push(run(i as u64)?.into_iter().collect());
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..r {
        for b in (a + 1)..r {
            let inter = sets[a].intersection(&sets[b]).count();
            let union = sets[a].union(&sets[b]).count();
            total += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Run `count` independent tasks on up to `jobs` worker threads (0 = all
/// cores). Results depend only on the task index, never on scheduling.
pub(crate) fn run_tasks<T, F>(jobs: usize, count: usize, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let jobs = if jobs == 0 {
        std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1)
    } else {
        jobs
    };
    if jobs <= 1 || count <= 1 {
        return (0..count).map(task).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..count).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(count) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = task(i);
                *slots[i].lock().expect("result slot") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot").expect("task ran"))
        .collect()
}

fn method_tag(method: Method, engine: Engine) -> &'static str {
    match (method, engine) {
        (Method::D0, Engine::Resampling) => "d0_resampling",
        (Method::D0, Engine::ResamplingFree) => "d0_rf",
        (Method::Di, Engine::Resampling) => "di_resampling",
        (Method::Di, Engine::ResamplingFree) => "di_rf",
        (Method::OcrtOriginal, _) => "ocrt_original",
        (Method::OcrtNoSoft, _) => "ocrt_no_soft",
        (Method::OcrtCentered, _) => "ocrt_centered",
        (Method::Hrt, _) => "hrt",
        (Method::Gcm, _) => "gcm",
    }
}

fn default_m(p: usize, alpha: f64) -> usize {
    if alpha > 0.0 {
        (5.0 * p as f64 / alpha).ceil() as usize
    } else {
        // alpha = 0 rejects nothing whatever the resolution
        2000
    }
}

/// Test one distilled variable with the configured engine.
#[allow(clippy::too_many_arguments)]
fn test_one_distilled(
    data: &DataSet,
    model: &XModel,
    cfg: &SelectionConfig,
    j: usize,
    loco: &LocoFit,
    k: usize,
    m: usize,
) -> Result<TestOutcome> {
    let y = data.y.view();
    let x_j = data.x.column(j);
    let z = data.without_column(j);
    let law = model.law_for(j)?;
    let (d_x, sigma_x) = distill_x(&law, z.view())?;
    let (top_cols, top_idx) = if cfg.method == Method::Di {
        let idx = top_k_columns(loco.beta.view(), z.view(), y, k);
        let mut cols = Array2::<f64>::zeros((data.n(), idx.len()));
        for (c, &src) in idx.iter().enumerate() {
            cols.column_mut(c).assign(&z.column(src));
        }
        (cols, idx)
    } else {
        (Array2::zeros((data.n(), 0)), Vec::new())
    };
    let dist = Distillation::new(loco.d_y.clone(), top_cols, top_idx, d_x, sigma_x)?;

    match (cfg.method, cfg.engine) {
        (Method::Gcm, _) => gcm_p_value(y, x_j, &dist),
        (Method::D0, Engine::Resampling) | (Method::Di, Engine::Resampling) => {
            let rows = law.row_laws(z.view())?;
            let mut rng = substream(cfg.seed, &[TAG_VARIABLE, j as u64, TAG_RESAMPLE]);
            if cfg.method == Method::D0 {
                d0_resampling(y, x_j, &dist, &rows, m, &mut rng)
            } else {
                di_resampling(y, x_j, &dist, &rows, m, &mut rng)
            }
        }
        (Method::D0, Engine::ResamplingFree) | (Method::Di, Engine::ResamplingFree) => {
            if matches!(law.family, LawFamily::Gaussian) {
                if cfg.method == Method::D0 {
                    d0_rf_p_value(y, x_j, &dist)
                } else {
                    di_rf_p_value(y, x_j, &dist)
                }
            } else {
                // non-Gaussian law: transform the column to an exact
                // Gaussian null first
                let rows = law.row_laws(z.view())?;
                let mut rng = substream(cfg.seed, &[TAG_VARIABLE, j as u64, TAG_TRANSFORM]);
                let u = gauss_transform(x_j, &rows, &mut rng)?;
                let sigmas = row_sigmas(&rows);
                if cfg.method == Method::D0 {
                    d0_rf_transformed(y, dist.d_y.view(), u.view(), sigmas.view())
                } else {
                    di_rf_transformed(
                        y,
                        dist.d_y.view(),
                        u.view(),
                        dist.top_cols.view(),
                        sigmas.view(),
                    )
                }
            }
        }
        _ => unreachable!("non-distilled methods dispatch elsewhere"),
    }
}

fn validate_method_engine(method: Method, engine: Engine) -> Result<()> {
    match (method, engine) {
        (Method::OcrtOriginal | Method::OcrtNoSoft | Method::OcrtCentered | Method::Hrt,
            Engine::ResamplingFree) => {
            Err(Error::invalid("this method only has a resampling engine"))
        }
        (Method::Gcm, Engine::Resampling) => Err(Error::invalid(
            "the residual-covariance test is calibrated in closed form; use the \
             resampling-free engine",
        )),
        _ => Ok(()),
    }
}

fn effective_k(method: Method, k: Option<usize>, p: usize) -> Result<usize> {
    match (method, k) {
        (Method::Di, Some(0)) => {
            Err(Error::invalid("the interaction statistic needs k >= 1"))
        }
        (Method::Di, Some(k)) => Ok(k.min(p - 1)),
        (Method::Di, None) => Ok(default_k(p).min(p - 1).max(1)),
        _ => Ok(0),
    }
}

/// Test one variable in isolation with the configured method and engine.
/// The resample count defaults to 2000 for single tests.
pub fn test_single(
    data: &DataSet,
    model: &XModel,
    j: usize,
    cfg: &SelectionConfig,
) -> Result<TestOutcome> {
    let p = data.p();
    if model.p() != p {
        return Err(Error::invalid(format!(
            "model covers {} columns but the data has {p}",
            model.p()
        )));
    }
    if j >= p {
        return Err(Error::invalid(format!("variable index {j} out of range for p={p}")));
    }
    validate_method_engine(cfg.method, cfg.engine)?;
    if cfg.method == Method::Di && p < 2 {
        return Err(Error::invalid("the interaction statistic needs at least 2 covariates"));
    }
    let m = match cfg.m {
        Some(0) => return Err(Error::invalid("resampling needs M >= 1")),
        Some(m) => m,
        None => 2000,
    };
    let k = effective_k(cfg.method, cfg.k, p)?;
    let outcome = match cfg.method {
        Method::D0 | Method::Di | Method::Gcm => {
            let loco = if p == 1 {
                LocoFit {
                    d_y: constant_response_fit(data.y.view(), data.response_kind),
                    beta: Array1::zeros(0),
                    recycled: false,
                }
            } else {
                let z = data.without_column(j);
                let folds = default_folds(data.n(), cfg.lasso.folds)?;
                let (d_y, cv) = distill_y_d0(
                    z.view(),
                    data.y.view(),
                    data.response_kind,
                    &cfg.lasso,
                    &folds,
                )?;
                LocoFit { d_y, beta: cv.selected().beta.clone(), recycled: false }
            };
            test_one_distilled(data, model, cfg, j, &loco, k, m)?
        }
        Method::OcrtOriginal | Method::OcrtNoSoft | Method::OcrtCentered => {
            let variant = match cfg.method {
                Method::OcrtOriginal => OcrtVariant::Original,
                Method::OcrtNoSoft => OcrtVariant::NoSoft,
                _ => OcrtVariant::Centered,
            };
            let z = data.without_column(j);
            let law = model.law_for(j)?;
            let rows = law.row_laws(z.view())?;
            let mut rng = substream(cfg.seed, &[TAG_VARIABLE, j as u64, TAG_RESAMPLE]);
            ocrt_p_value(
                data.y.view(),
                data.x.column(j),
                z.view(),
                &rows,
                variant,
                data.response_kind,
                &cfg.lasso,
                m,
                &mut rng,
            )?
        }
        Method::Hrt => {
            let mut split_rng = substream(cfg.seed, &[TAG_SPLIT]);
            let ctx = HrtContext::build(
                data.y.view(),
                data.x.view(),
                data.response_kind,
                &cfg.lasso,
                cfg.split_fraction,
                &mut split_rng,
            )?;
            let mut rng = substream(cfg.seed, &[TAG_VARIABLE, j as u64, TAG_RESAMPLE]);
            ctx.test_variable(data.y.view(), data.x.view(), j, model, m, &mut rng)?
        }
    };
    Ok(outcome.with_variable(&data.names[j]))
}

/// Full selection pipeline. Per-variable failures downgrade to p = 1 with a
/// logged warning; configuration and model errors abort.
pub fn select(data: &DataSet, model: &XModel, cfg: &SelectionConfig) -> Result<SelectionResult> {
    let p = data.p();
    if model.p() != p {
        return Err(Error::invalid(format!(
            "model covers {} columns but the data has {p}",
            model.p()
        )));
    }
    if !(0.0..1.0).contains(&cfg.alpha) {
        return Err(Error::invalid("alpha must lie in [0, 1)"));
    }
    let distilled = matches!(cfg.method, Method::D0 | Method::Di | Method::Gcm);
    validate_method_engine(cfg.method, cfg.engine)?;
    if cfg.method == Method::Di && p < 2 {
        return Err(Error::invalid("the interaction statistic needs at least 2 covariates"));
    }
    let m = match cfg.m {
        Some(0) => return Err(Error::invalid("resampling needs M >= 1")),
        Some(m) => m,
        None => default_m(p, cfg.alpha),
    };
    let k = effective_k(cfg.method, cfg.k, p)?;
    let mut timings = BTreeMap::new();

    // screening; its full fit is shared with recycling when both are on
    let t0 = Instant::now();
    let mut shared_fit: Option<CvLassoFit> = None;
    let s: Vec<usize> = if cfg.screening {
        let fit = full_fit(&data.x, data.y.view(), data.response_kind, &cfg.lasso)?;
        let s = fit.selected().active.clone();
        shared_fit = Some(fit);
        s
    } else {
        (0..p).collect()
    };
    timings.insert("screen".to_string(), t0.elapsed().as_secs_f64() * 1e3);

    // response distillation (or the holdout split fit)
    let t0 = Instant::now();
    let mut loco: Vec<Option<LocoFit>> = vec![None; p];
    let mut hrt_ctx: Option<HrtContext> = None;
    if distilled {
        if cfg.recycling {
            let rec = match shared_fit {
                Some(ref fit) => recycle_with_fit(
                    &data.x,
                    data.y.view(),
                    data.response_kind,
                    &cfg.lasso,
                    &s,
                    fit,
                )?,
                None => recycle_distillations(
                    &data.x,
                    data.y.view(),
                    data.response_kind,
                    &cfg.lasso,
                    &s,
                )?,
            };
            loco = rec.fits;
        } else {
            let fits = run_tasks(cfg.jobs, s.len(), |ti| -> Result<LocoFit> {
                let j = s[ti];
                if p == 1 {
                    return Ok(LocoFit {
                        d_y: constant_response_fit(data.y.view(), data.response_kind),
                        beta: Array1::zeros(0),
                        recycled: false,
                    });
                }
                let z = data.without_column(j);
                let folds = default_folds(data.n(), cfg.lasso.folds)?;
                let (d_y, cv) = distill_y_d0(
                    z.view(),
                    data.y.view(),
                    data.response_kind,
                    &cfg.lasso,
                    &folds,
                )?;
                Ok(LocoFit { d_y, beta: cv.selected().beta.clone(), recycled: false })
            });
            for (ti, fit) in fits.into_iter().enumerate() {
                loco[s[ti]] = Some(fit?);
            }
        }
    } else if cfg.method == Method::Hrt && !s.is_empty() {
        let mut rng = substream(cfg.seed, &[TAG_SPLIT]);
        hrt_ctx = Some(HrtContext::build(
            data.y.view(),
            data.x.view(),
            data.response_kind,
            &cfg.lasso,
            cfg.split_fraction,
            &mut rng,
        )?);
    }
    timings.insert("distill".to_string(), t0.elapsed().as_secs_f64() * 1e3);

    // per-variable tests over the screened set
    let t0 = Instant::now();
    let tag = method_tag(cfg.method, cfg.engine);
    let loco_ref = &loco;
    let hrt_ref = &hrt_ctx;
    let outcomes: Vec<TestOutcome> = run_tasks(cfg.jobs, s.len(), |ti| {
        let j = s[ti];
        let run = || -> Result<TestOutcome> {
            match cfg.method {
                Method::D0 | Method::Di | Method::Gcm => {
                    let fit = loco_ref[j]
                        .as_ref()
                        .ok_or_else(|| Error::invalid("missing distillation"))?;
                    test_one_distilled(data, model, cfg, j, fit, k, m)
                }
                Method::OcrtOriginal | Method::OcrtNoSoft | Method::OcrtCentered => {
                    let variant = match cfg.method {
                        Method::OcrtOriginal => OcrtVariant::Original,
                        Method::OcrtNoSoft => OcrtVariant::NoSoft,
                        _ => OcrtVariant::Centered,
                    };
                    let z = data.without_column(j);
                    let law = model.law_for(j)?;
                    let rows = law.row_laws(z.view())?;
                    let mut rng = substream(cfg.seed, &[TAG_VARIABLE, j as u64, TAG_RESAMPLE]);
                    ocrt_p_value(
                        data.y.view(),
                        data.x.column(j),
                        z.view(),
                        &rows,
                        variant,
                        data.response_kind,
                        &cfg.lasso,
                        m,
                        &mut rng,
                    )
                }
                Method::Hrt => {
                    let ctx =
                        hrt_ref.as_ref().ok_or_else(|| Error::invalid("missing split fit"))?;
                    let mut rng = substream(cfg.seed, &[TAG_VARIABLE, j as u64, TAG_RESAMPLE]);
                    ctx.test_variable(data.y.view(), data.x.view(), j, model, m, &mut rng)
                }
            }
        };
        run().unwrap_or_else(|e| {
            log::warn!("variable `{}`: {e}; reporting p = 1", data.names[j]);
            TestOutcome::new(1.0, 0.0, tag, 0)
        })
    });
    timings.insert("test".to_string(), t0.elapsed().as_secs_f64() * 1e3);

    // pad to full length and correct
    let t0 = Instant::now();
    let raw: Vec<f64> = outcomes.iter().map(|o| o.p_value).collect();
    let p_values = screened_p_values(&raw, &s, p);
    let rejected_idx = match cfg.error_rate {
        ErrorRate::FdrBh => bh(&p_values, cfg.alpha),
        ErrorRate::FwerBonferroni => bonferroni(&p_values, cfg.alpha),
    };
    timings.insert("correct".to_string(), t0.elapsed().as_secs_f64() * 1e3);

    let mut results: Vec<TestOutcome> = (0..p)
        .map(|j| TestOutcome::new(1.0, 0.0, "screened_out", 0).with_variable(&data.names[j]))
        .collect();
    for (ti, &j) in s.iter().enumerate() {
        results[j] = outcomes[ti].clone().with_variable(&data.names[j]);
    }
    Ok(SelectionResult {
        alpha: cfg.alpha,
        error_rate: cfg.error_rate,
        results,
        screened: s.iter().map(|&j| data.names[j].clone()).collect(),
        rejected: rejected_idx.iter().map(|&j| data.names[j].clone()).collect(),
        timings_ms: timings,
        screened_idx: s,
        rejected_idx,
    })
}
