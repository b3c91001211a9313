//! Synthetic-data generators and the experiment harness: draw covariates
//! with a known model, attach a response with a known support, run each
//! configured pipeline over many replicates, and report power / FDR / FWER /
//! type-I rates with standard errors.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::model::{ConditionalLaw, CovariateModel, LawFamily, ModelSource, XModel};
use crate::rng::{derive_seed, substream, TAG_GENERATE, TAG_REP};
use crate::select::{run_tasks, select, SelectionConfig};

/// Where the nonzero coefficients sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    Adjacent,
    EquallySpaced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceSpec {
    Ar1 { rho: f64 },
    Equicorrelated { c: f64 },
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateFamily {
    Gaussian,
    /// I.i.d. unit-variance Laplace entries.
    Laplace,
    /// I.i.d. Gamma(shape, rate) entries (uncentered).
    Gamma { shape: f64, rate: f64 },
    /// I.i.d. Bernoulli(q) entries.
    Bernoulli { q: f64 },
    /// Column 0 is a standardized Poisson residual plus a +/-0.15 linear
    /// lean on the first 50 remaining columns; the rest are Gaussian with
    /// the configured covariance. Lower r means a more skewed, more
    /// discrete column.
    PoissonResidual { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponseModel {
    /// y = X beta + N(0,1), |beta_j| = nu on the support.
    Linear { nu: f64 },
    /// P(y=1) = logistic(X beta).
    Logistic { nu: f64 },
    /// y ~ Poisson(exp(X beta)), linear predictor clipped to [-20, 20].
    Poisson { nu: f64 },
    /// Linear plus `cubic_weight` times the cube of each signal covariate.
    Polynomial { nu: f64, cubic_weight: f64 },
    /// mu = nu (x0 + sum z_J + 1.5 x0 sum z_J) with J drawn uniformly
    /// without replacement from the other columns; y = mu + N(0,1).
    Interaction { nu: f64, n_interactions: usize },
    /// mu = nu (0.5 x0^2 + sin(0.5 pi x0)) (0.3 + sum z_J), five random
    /// interacting columns; y = mu + N(0,1).
    RfNonlinear { nu: f64 },
}

impl ResponseModel {
    fn nu(&self) -> f64 {
        match *self {
            ResponseModel::Linear { nu }
            | ResponseModel::Logistic { nu }
            | ResponseModel::Poisson { nu }
            | ResponseModel::Polynomial { nu, .. }
            | ResponseModel::Interaction { nu, .. }
            | ResponseModel::RfNonlinear { nu } => nu,
        }
    }
}

/// One simulation scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimDesign {
    pub n: usize,
    pub p: usize,
    /// Support size for the additive responses (ignored by the interaction
    /// and nonlinear designs, which fix their own support around column 0).
    pub s: usize,
    pub support: SupportKind,
    pub covariance: CovarianceSpec,
    pub response: ResponseModel,
    pub covariate_family: CovariateFamily,
    pub seed: u64,
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(Error::invalid("design needs n >= 2 and p >= 1"));
        }
        if self.s == 0 || self.s > self.p {
            return Err(Error::invalid("design needs 1 <= s <= p"));
        }
        if self.response.nu() < 0.0 {
            return Err(Error::invalid("signal magnitude nu must be >= 0"));
        }
        match self.covariance {
            CovarianceSpec::Ar1 { rho } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::invalid("ar1 needs |rho| < 1"));
                }
            }
            CovarianceSpec::Equicorrelated { c } => {
                let lower = if self.p > 1 { -1.0 / (self.p as f64 - 1.0) } else { -1.0 };
                if !(c < 1.0 && c > lower) {
                    return Err(Error::invalid(
                        "equicorrelation must keep the covariance positive definite",
                    ));
                }
            }
            CovarianceSpec::Independent => {}
        }
        match self.covariate_family {
            CovariateFamily::Gaussian => {}
            CovariateFamily::Laplace | CovariateFamily::Gamma { .. }
            | CovariateFamily::Bernoulli { .. } => {
                if self.covariance != CovarianceSpec::Independent {
                    return Err(Error::invalid(
                        "this covariate family is sampled i.i.d.; use the independent covariance",
                    ));
                }
                if let CovariateFamily::Gamma { shape, rate } = self.covariate_family {
                    if !(shape > 0.0 && rate > 0.0) {
                        return Err(Error::invalid("gamma covariates need positive shape, rate"));
                    }
                }
                if let CovariateFamily::Bernoulli { q } = self.covariate_family {
                    if !(q > 0.0 && q < 1.0) {
                        return Err(Error::invalid("bernoulli covariates need q in (0,1)"));
                    }
                }
            }
            CovariateFamily::PoissonResidual { r } => {
                if !(r > 0.0) {
                    return Err(Error::invalid("poisson residual covariates need r > 0"));
                }
                if self.p < 2 {
                    return Err(Error::invalid("poisson residual covariates need p >= 2"));
                }
            }
        }
        if let ResponseModel::Interaction { n_interactions, .. } = self.response {
            if n_interactions >= self.p {
                return Err(Error::invalid("interaction count must be below p"));
            }
        }
        if matches!(self.response, ResponseModel::RfNonlinear { .. }) && self.p < 2 {
            return Err(Error::invalid("the nonlinear design needs p >= 2"));
        }
        Ok(())
    }
}

fn covariance_matrix(spec: CovarianceSpec, p: usize) -> Array2<f64> {
    match spec {
        CovarianceSpec::Ar1 { rho } => {
            Array2::from_shape_fn((p, p), |(i, j)| rho.powi((i as i64 - j as i64).abs() as i32))
        }
        CovarianceSpec::Equicorrelated { c } => {
            Array2::from_shape_fn((p, p), |(i, j)| if i == j { 1.0 } else { c })
        }
        CovarianceSpec::Independent => Array2::eye(p),
    }
}

fn mvn_rows(sigma: &Array2<f64>, n: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let p = sigma.nrows();
    let chol = Cholesky::new(sigma.view())?;
    let l = chol.factor();
    let g = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    Ok(g.dot(&l.t()))
}

/// Draw the covariate matrix together with the exact model that generated
/// it, so tests can run well-specified or deliberately misspecified.
pub fn gen_covariates(
    design: &SimDesign,
    rng: &mut ChaCha8Rng,
) -> Result<(Array2<f64>, XModel)> {
    design.validate()?;
    let (n, p) = (design.n, design.p);
    match design.covariate_family {
        CovariateFamily::Gaussian => {
            let sigma = covariance_matrix(design.covariance, p);
            let x = mvn_rows(&sigma, n, rng)?;
            let model =
                XModel::Gaussian(CovariateModel::new(Array1::zeros(p), sigma, ModelSource::Exact)?);
            Ok((x, model))
        }
        CovariateFamily::Laplace => {
            let law = ConditionalLaw::new(
                Array1::zeros(p.saturating_sub(1)),
                0.0,
                1.0,
                LawFamily::Laplace,
            )?;
            iid_columns(n, p, &law, rng)
        }
        CovariateFamily::Gamma { shape, rate } => {
            let law = ConditionalLaw::new(
                Array1::zeros(p.saturating_sub(1)),
                shape / rate,
                shape.sqrt() / rate,
                LawFamily::Gamma { shape, rate },
            )?;
            iid_columns(n, p, &law, rng)
        }
        CovariateFamily::Bernoulli { q } => {
            let law = ConditionalLaw::new(
                Array1::zeros(p.saturating_sub(1)),
                0.0,
                (q * (1.0 - q)).sqrt(),
                LawFamily::EmpiricalDiscrete {
                    support: vec![0.0, 1.0],
                    pmf: vec![vec![1.0 - q, q]; n],
                },
            )?;
            iid_columns(n, p, &law, rng)
        }
        CovariateFamily::PoissonResidual { r } => poisson_residual_design(design, r, rng),
    }
}

fn iid_columns(
    n: usize,
    p: usize,
    law: &ConditionalLaw,
    rng: &mut ChaCha8Rng,
) -> Result<(Array2<f64>, XModel)> {
    // marginal law: conditioning weights are zero, so any z works
    let z = Array2::<f64>::zeros((n, p.saturating_sub(1)));
    let rows = law.row_laws(z.view())?;
    let mut x = Array2::<f64>::zeros((n, p));
    for j in 0..p {
        for (i, row) in rows.iter().enumerate() {
            x[(i, j)] = row.sample(rng);
        }
    }
    let model = XModel::PerColumn(vec![law.clone(); p]);
    Ok((x, model))
}

/// Column 0 = 0.15 sum of +/- the first 50 z-columns plus (O - r)/sqrt(r),
/// O ~ Poisson(r); the other columns are Gaussian with the configured
/// covariance. Only column 0 is meant to be tested under this family: the
/// other columns' laws ignore the information x carries about them.
fn poisson_residual_design(
    design: &SimDesign,
    r: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Array2<f64>, XModel)> {
    let (n, p) = (design.n, design.p);
    let pz = p - 1;
    let sigma_z = covariance_matrix(design.covariance, pz);
    let z = mvn_rows(&sigma_z, n, rng)?;
    let lean = 50.min(pz);
    let mut gamma = Array1::<f64>::zeros(pz);
    for g in gamma.iter_mut().take(lean) {
        *g = if rng.random::<bool>() { 0.15 } else { -0.15 };
    }
    let x_law =
        ConditionalLaw::new(gamma, 0.0, 1.0, LawFamily::PoissonResidual { rate: r })?;
    let x0 = x_law.resample(z.view(), rng)?;
    let mut x = Array2::<f64>::zeros((n, p));
    x.column_mut(0).assign(&x0);
    for m in 0..pz {
        x.column_mut(m + 1).assign(&z.column(m));
    }
    let z_model = CovariateModel::new(Array1::zeros(pz), sigma_z, ModelSource::Exact)?;
    let mut laws = Vec::with_capacity(p);
    laws.push(x_law);
    for m in 0..pz {
        let law_z = z_model.conditional_law(m)?;
        // remaining columns of column m+1 are [x, other z's]; x gets zero
        // weight, the z weights keep their relative order
        let mut g = Array1::<f64>::zeros(p - 1);
        for (t, v) in law_z.gamma.iter().enumerate() {
            g[t + 1] = *v;
        }
        laws.push(ConditionalLaw::new(g, law_z.intercept, law_z.sigma, law_z.family)?);
    }
    Ok((x, XModel::PerColumn(laws)))
}

fn support_indices(p: usize, s: usize, kind: SupportKind) -> Vec<usize> {
    match kind {
        SupportKind::Adjacent => (0..s).collect(),
        SupportKind::EquallySpaced => {
            let step = p / s;
            (0..s).map(|k| k * step).collect()
        }
    }
}

fn draw_interactors(p: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // uniform without replacement from the non-tested columns 1..p
    let mut pool: Vec<usize> = (1..p).collect();
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count.min(pool.len()) {
        let i = rng.random_range(0..pool.len());
        picked.push(pool.swap_remove(i));
    }
    picked.sort_unstable();
    picked
}

/// Generate the response and the set of columns it actually depends on
/// (empty under the global null nu = 0).
pub fn gen_response(
    design: &SimDesign,
    x: ArrayView2<'_, f64>,
    rng: &mut ChaCha8Rng,
) -> Result<(Array1<f64>, Vec<usize>)> {
    design.validate()?;
    let n = x.nrows();
    let p = x.ncols();
    if n != design.n || p != design.p {
        return Err(Error::invalid("covariate matrix does not match the design shape"));
    }
    let nu = design.response.nu();
    match design.response {
        ResponseModel::Linear { .. }
        | ResponseModel::Logistic { .. }
        | ResponseModel::Poisson { .. }
        | ResponseModel::Polynomial { .. } => {
            let support = support_indices(p, design.s, design.support);
            let signs: Vec<f64> = support
                .iter()
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let cubic = match design.response {
                ResponseModel::Polynomial { cubic_weight, .. } => cubic_weight,
                _ => 0.0,
            };
            let mut eta = Array1::<f64>::zeros(n);
            if nu > 0.0 {
                for (&j, &sg) in support.iter().zip(signs.iter()) {
                    let col = x.column(j);
                    for (e, &v) in eta.iter_mut().zip(col.iter()) {
                        *e += sg * nu * v + cubic * v * v * v;
                    }
                }
            }
            let y = match design.response {
                ResponseModel::Logistic { .. } => Array1::from_shape_fn(n, |i| {
                    let q = 1.0 / (1.0 + (-eta[i]).exp());
                    if rng.random::<f64>() < q {
                        1.0
                    } else {
                        0.0
                    }
                }),
                ResponseModel::Poisson { .. } => Array1::from_shape_fn(n, |i| {
                    let lambda = eta[i].clamp(-20.0, 20.0).exp();
                    rand_distr::Poisson::new(lambda.max(1e-12))
                        .expect("valid poisson rate")
                        .sample(rng)
                }),
                _ => Array1::from_shape_fn(n, |i| eta[i] + rng.sample::<f64, _>(StandardNormal)),
            };
            Ok((y, if nu > 0.0 { support } else { Vec::new() }))
        }
        ResponseModel::Interaction { n_interactions, .. } => {
            let inter = draw_interactors(p, n_interactions, rng);
            let mut y = Array1::<f64>::zeros(n);
            for i in 0..n {
                let zsum: f64 = inter.iter().map(|&j| x[(i, j)]).sum();
                let mu = nu * (x[(i, 0)] + zsum + 1.5 * x[(i, 0)] * zsum);
                y[i] = mu + rng.sample::<f64, _>(StandardNormal);
            }
            let mut support = vec![0];
            support.extend(inter);
            Ok((y, if nu > 0.0 { support } else { Vec::new() }))
        }
        ResponseModel::RfNonlinear { .. } => {
            let inter = draw_interactors(p, 5, rng);
            let mut y = Array1::<f64>::zeros(n);
            for i in 0..n {
                let x0 = x[(i, 0)];
                let zsum: f64 = inter.iter().map(|&j| x[(i, j)]).sum();
                let mu = nu
                    * (0.5 * x0 * x0 + (0.5 * std::f64::consts::PI * x0).sin())
                    * (0.3 + zsum);
                y[i] = mu + rng.sample::<f64, _>(StandardNormal);
            }
            let mut support = vec![0];
            support.extend(inter);
            Ok((y, if nu > 0.0 { support } else { Vec::new() }))
        }
    }
}

/// Per-replicate selection quality against the true support.
#[derive(Debug, Clone, Copy)]
pub struct RepMetrics {
    pub power: f64,
    pub fdr: f64,
    pub false_rejection: bool,
    pub type_i: f64,
}

/// Score one rejection set: power = recalled fraction of the support, FDR =
/// false fraction of the rejections, type-I = rejected fraction of the
/// nulls; all use max(1, denominator).
pub fn tally(rejected: &[usize], support: &[usize], p: usize) -> RepMetrics {
    let sup: BTreeSet<usize> = support.iter().copied().collect();
    let tp = rejected.iter().filter(|j| sup.contains(j)).count();
    let fp = rejected.len() - tp;
    RepMetrics {
        power: tp as f64 / sup.len().max(1) as f64,
        fdr: fp as f64 / rejected.len().max(1) as f64,
        false_rejection: fp > 0,
        type_i: fp as f64 / (p - sup.len()).max(1) as f64,
    }
}

/// One pipeline configuration to benchmark; the seed inside `config` is
/// replaced by a replicate-derived seed on every run.
#[derive(Debug, Clone)]
pub struct HarnessMethod {
    pub label: String,
    pub config: SelectionConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub se: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len();
    if n == 0 {
        return MetricSummary { mean: f64::NAN, se: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return MetricSummary { mean, se: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    MetricSummary { mean, se: (var / n as f64).sqrt() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodReport {
    pub label: String,
    pub power: MetricSummary,
    pub fdr: MetricSummary,
    pub fwer: MetricSummary,
    #[serde(rename = "type_I")]
    pub type_i: MetricSummary,
    pub runtime_ms: MetricSummary,
    pub reps_used: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub design: SimDesign,
    pub reps: usize,
    pub methods: Vec<MethodReport>,
}

impl ExperimentReport {
    /// Plot-ready CSV: one row per method and metric. Wall-clock summaries
    /// stay in the JSON report so the CSV is byte-stable for a fixed seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,metric,mean,se,reps\n");
        for m in &self.methods {
            for (name, s) in
                [("power", m.power), ("fdr", m.fdr), ("fwer", m.fwer), ("type_I", m.type_i)]
            {
                out.push_str(&format!(
                    "{},{},{:.6},{:.6},{}\n",
                    m.label, name, s.mean, s.se, m.reps_used
                ));
            }
        }
        out
    }
}

/// Run every method on `reps` independent replicates of the design. Each
/// replicate draws fresh data from a seed derived from (base_seed, rep) and
/// runs each method with a seed derived from (base_seed, rep, method), so
/// the report depends only on the arguments, not on `jobs`. Method failures
/// on a replicate are logged and excluded from that method's averages.
pub fn run_experiment(
    design: &SimDesign,
    methods: &[HarnessMethod],
    reps: usize,
    base_seed: u64,
    jobs: usize,
) -> Result<ExperimentReport> {
    design.validate()?;
    if reps < 2 {
        return Err(Error::invalid("the harness needs reps >= 2"));
    }
    if methods.is_empty() {
        return Err(Error::invalid("no methods to run"));
    }
    for m in methods {
        if m.label.contains([',', '\n']) {
            return Err(Error::invalid("method labels must be CSV-safe"));
        }
    }

    struct RepOutcome {
        // per method: metrics + runtime, or None on failure
        cells: Vec<Option<(RepMetrics, f64)>>,
    }

    let rep_results: Vec<Result<RepOutcome>> = run_tasks(jobs, reps, |r| {
        let mut rng = substream(base_seed, &[TAG_REP, r as u64, TAG_GENERATE]);
        let (x, model) = gen_covariates(design, &mut rng)?;
        let (y, support) = gen_response(design, x.view(), &mut rng)?;
        let names: Vec<String> = (0..design.p).map(|j| format!("x{j}")).collect();
        let data = DataSet::new(y, x, names, "y")?;
        let mut cells = Vec::with_capacity(methods.len());
        for (i, hm) in methods.iter().enumerate() {
            let mut cfg = hm.config.clone();
            // offset keeps the method tag clear of the TAG_* namespace
            cfg.seed = derive_seed(base_seed, &[TAG_REP, r as u64, 1000 + i as u64]);
            cfg.jobs = 1; // replicates are the unit of parallelism here
            let started = std::time::Instant::now();
            match select(&data, &model, &cfg) {
                Ok(res) => {
                    let metrics = tally(&res.rejected_idx, &support, design.p);
                    cells.push(Some((metrics, started.elapsed().as_secs_f64() * 1e3)));
                }
                Err(e) => {
                    log::warn!("rep {r}, method `{}` failed: {e}", hm.label);
                    cells.push(None);
                }
            }
        }
        Ok(RepOutcome { cells })
    });

    let mut per_method: Vec<Vec<(RepMetrics, f64)>> = vec![Vec::new(); methods.len()];
    let mut failures = vec![0usize; methods.len()];
    for rep in rep_results {
        let rep = rep?;
        for (i, cell) in rep.cells.into_iter().enumerate() {
            match cell {
                Some(v) => per_method[i].push(v),
                None => failures[i] += 1,
            }
        }
    }

    let mut reports = Vec::with_capacity(methods.len());
    for (i, hm) in methods.iter().enumerate() {
        let rows = &per_method[i];
        let power: Vec<f64> = rows.iter().map(|(m, _)| m.power).collect();
        let fdr: Vec<f64> = rows.iter().map(|(m, _)| m.fdr).collect();
        let fwer: Vec<f64> =
            rows.iter().map(|(m, _)| if m.false_rejection { 1.0 } else { 0.0 }).collect();
        let type_i: Vec<f64> = rows.iter().map(|(m, _)| m.type_i).collect();
        let runtime: Vec<f64> = rows.iter().map(|(_, t)| *t).collect();
        reports.push(MethodReport {
            label: hm.label.clone(),
            power: summarize(&power),
            fdr: summarize(&fdr),
            fwer: summarize(&fwer),
            type_i: summarize(&type_i),
            runtime_ms: summarize(&runtime),
            reps_used: rows.len(),
            failures: failures[i],
        });
    }
    Ok(ExperimentReport { design: design.clone(), reps, methods: reports })
}
