//! Covariate models: what is known (or estimated) about each covariate's
//! conditional law given the others. This knowledge drives resampling,
//! conditional-mean distillation, and the Gaussian transformation.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, DiscreteCDF};

use crate::error::{Error, Result};
use crate::lasso::{cross_validate_with_folds, default_folds, default_grid, LassoConfig, LossKind};
use crate::linalg::Cholesky;

/// Provenance of a covariate model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Exact,
    LedoitWolf,
    Nodewise,
}

impl std::fmt::Display for ModelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelSource::Exact => "exact",
            ModelSource::LedoitWolf => "ledoit_wolf",
            ModelSource::Nodewise => "nodewise",
        };
        f.write_str(s)
    }
}

/// Joint Gaussian description of the covariates.
#[derive(Debug, Clone)]
pub struct CovariateModel {
    mean: Array1<f64>,
    covariance: Array2<f64>,
    pub source: ModelSource,
}

/// Smallest acceptable Cholesky pivot, relative to the largest.
const PIVOT_GUARD: f64 = 1e-12;

impl CovariateModel {
    pub fn new(mean: Array1<f64>, covariance: Array2<f64>, source: ModelSource) -> Result<Self> {
        let p = mean.len();
        if covariance.nrows() != p || covariance.ncols() != p {
            return Err(Error::invalid(format!(
                "covariance is {}x{} but mean has length {p}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if p == 0 {
            return Err(Error::invalid("empty covariate model"));
        }
        if mean.iter().any(|v| !v.is_finite()) || covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite entry in covariate model"));
        }
        let scale = covariance.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..p {
            if covariance[(i, i)] <= 0.0 {
                return Err(Error::invalid(format!("non-positive variance at column {i}")));
            }
            for j in (i + 1)..p {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-10 * scale.max(1.0) {
                    return Err(Error::invalid(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = Cholesky::new(covariance.view())
            .map_err(|e| Error::numerical(format!("covariance is not positive definite: {e}")))?;
        let piv = chol.pivots();
        let max = piv.iter().cloned().fold(f64::MIN, f64::max);
        let min = piv.iter().cloned().fold(f64::MAX, f64::min);
        if min < PIVOT_GUARD * max {
            return Err(Error::numerical(format!(
                "covariance is numerically singular: pivot ratio {:.3e}",
                max / min
            )));
        }
        Ok(CovariateModel { mean, covariance, source })
    }

    pub fn p(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &Array2<f64> {
        &self.covariance
    }

    /// Conditional law of column `j` given the remaining columns, by Gaussian
    /// conditioning of the joint model.
    pub fn conditional_law(&self, j: usize) -> Result<ConditionalLaw> {
        let p = self.p();
        if j >= p {
            return Err(Error::invalid(format!("column {j} out of range for p={p}")));
        }
        if p == 1 {
            return ConditionalLaw::new(
                Array1::zeros(0),
                self.mean[0],
                self.covariance[(0, 0)].sqrt(),
                LawFamily::Gaussian,
            );
        }
        let others: Vec<usize> = (0..p).filter(|&c| c != j).collect();
        let q = p - 1;
        let mut sub = Array2::<f64>::zeros((q, q));
        let mut cross = Array1::<f64>::zeros(q);
        for (a, &ra) in others.iter().enumerate() {
            cross[a] = self.covariance[(ra, j)];
            for (b, &rb) in others.iter().enumerate() {
                sub[(a, b)] = self.covariance[(ra, rb)];
            }
        }
        let chol = Cholesky::new(sub.view()).map_err(|_| {
            Error::numerical(format!(
                "conditioning on column {j} failed: covariance block is singular"
            ))
        })?;
        let gamma = chol.solve(cross.view());
        let var = self.covariance[(j, j)] - cross.dot(&gamma);
        if !(var > 0.0) {
            return Err(Error::numerical(format!(
                "non-positive conditional variance {var:.3e} for column {j} (pivot ratio {:.3e})",
                chol.pivot_ratio()
            )));
        }
        let mut intercept = self.mean[j];
        for (a, &ra) in others.iter().enumerate() {
            intercept -= gamma[a] * self.mean[ra];
        }
        ConditionalLaw::new(gamma, intercept, var.sqrt(), LawFamily::Gaussian)
    }
}

/// Residual family of a conditional law. For parametric families the law of
/// X given Z is `intercept + Z gamma` plus a centered residual scaled to
/// standard deviation `sigma`; the discrete family instead carries one pmf
/// row per observation over a shared support.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawFamily {
    Gaussian,
    Laplace,
    Gamma { shape: f64, rate: f64 },
    PoissonResidual { rate: f64 },
    EmpiricalDiscrete { support: Vec<f64>, pmf: Vec<Vec<f64>> },
}

/// Conditional law of one covariate given the others.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionalLaw {
    pub gamma: Array1<f64>,
    pub intercept: f64,
    pub sigma: f64,
    pub family: LawFamily,
}

impl ConditionalLaw {
    pub fn new(
        gamma: Array1<f64>,
        intercept: f64,
        sigma: f64,
        family: LawFamily,
    ) -> Result<Self> {
        if gamma.iter().any(|v| !v.is_finite()) || !intercept.is_finite() {
            return Err(Error::invalid("non-finite conditional-law coefficient"));
        }
        match &family {
            LawFamily::Gaussian | LawFamily::Laplace => {
                if !(sigma > 0.0) {
                    return Err(Error::invalid("conditional sd must be positive"));
                }
            }
            LawFamily::Gamma { shape, rate } => {
                if !(*shape > 0.0 && *rate > 0.0) {
                    return Err(Error::invalid("gamma family needs positive shape and rate"));
                }
                let implied = shape.sqrt() / rate;
                if (sigma - implied).abs() > 1e-8 * implied {
                    return Err(Error::invalid(
                        "gamma family sigma must equal sqrt(shape)/rate",
                    ));
                }
            }
            LawFamily::PoissonResidual { rate } => {
                if !(*rate > 0.0) {
                    return Err(Error::invalid("poisson residual needs a positive rate"));
                }
                if (sigma - 1.0).abs() > 1e-8 {
                    return Err(Error::invalid("poisson residual family has unit sigma"));
                }
            }
            LawFamily::EmpiricalDiscrete { support, pmf } => {
                if support.len() < 2 {
                    return Err(Error::invalid("discrete support needs at least 2 atoms"));
                }
                if support.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::invalid("discrete support must be strictly increasing"));
                }
                for (i, row) in pmf.iter().enumerate() {
                    if row.len() != support.len() {
                        return Err(Error::invalid(format!(
                            "pmf row {i} has {} entries for {} atoms",
                            row.len(),
                            support.len()
                        )));
                    }
                    if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                        return Err(Error::invalid(format!("negative mass in pmf row {i}")));
                    }
                    let s: f64 = row.iter().sum();
                    if (s - 1.0).abs() > 1e-9 {
                        return Err(Error::invalid(format!(
                            "pmf row {i} sums to {s}, not 1"
                        )));
                    }
                }
                if !(sigma > 0.0) {
                    return Err(Error::invalid("conditional sd must be positive"));
                }
            }
        }
        Ok(ConditionalLaw { gamma, intercept, sigma, family })
    }

    /// Gaussian law with mean `intercept + Z gamma` and sd `sigma`.
    pub fn gaussian(gamma: Array1<f64>, intercept: f64, sigma: f64) -> Result<Self> {
        ConditionalLaw::new(gamma, intercept, sigma, LawFamily::Gaussian)
    }

    /// Law per observation row. `z` must have `gamma.len()` columns (its
    /// values are ignored by the discrete family, which is indexed by row).
    pub fn row_laws(&self, z: ArrayView2<'_, f64>) -> Result<Vec<RowLaw>> {
        let n = z.nrows();
        if let LawFamily::EmpiricalDiscrete { support, pmf } = &self.family {
            if pmf.len() != n {
                return Err(Error::invalid(format!(
                    "discrete law has {} pmf rows for {n} observations",
                    pmf.len()
                )));
            }
            return Ok(pmf
                .iter()
                .map(|row| RowLaw::Discrete { support: support.clone(), pmf: row.clone() })
                .collect());
        }
        if z.ncols() != self.gamma.len() {
            return Err(Error::invalid(format!(
                "law conditions on {} covariates but Z has {}",
                self.gamma.len(),
                z.ncols()
            )));
        }
        let mut means = vec![self.intercept; n];
        for (j, g) in self.gamma.iter().enumerate() {
            if *g != 0.0 {
                for (m, v) in means.iter_mut().zip(z.column(j).iter()) {
                    *m += g * v;
                }
            }
        }
        Ok(means
            .into_iter()
            .map(|m| match &self.family {
                LawFamily::Gaussian => RowLaw::Gaussian { mean: m, sd: self.sigma },
                LawFamily::Laplace => {
                    RowLaw::Laplace { mean: m, scale: self.sigma / std::f64::consts::SQRT_2 }
                }
                LawFamily::Gamma { shape, rate } => RowLaw::ShiftedGamma {
                    shift: m - shape / rate,
                    shape: *shape,
                    rate: *rate,
                },
                LawFamily::PoissonResidual { rate } => {
                    RowLaw::PoissonResidual { mean: m, rate: *rate }
                }
                LawFamily::EmpiricalDiscrete { .. } => unreachable!(),
            })
            .collect())
    }

    /// Draw one vector of the covariate under this law, row by row.
    pub fn resample(&self, z: ArrayView2<'_, f64>, rng: &mut ChaCha8Rng) -> Result<Array1<f64>> {
        let rows = self.row_laws(z)?;
        Ok(sample_rows(&rows, rng))
    }
}

/// The law of a single observation's covariate value.
#[derive(Debug, Clone)]
pub enum RowLaw {
    Gaussian { mean: f64, sd: f64 },
    Laplace { mean: f64, scale: f64 },
    /// `shift + G` with `G ~ Gamma(shape, rate)`.
    ShiftedGamma { shift: f64, shape: f64, rate: f64 },
    /// `mean + (O - rate)/sqrt(rate)` with `O ~ Poisson(rate)`.
    PoissonResidual { mean: f64, rate: f64 },
    Discrete { support: Vec<f64>, pmf: Vec<f64> },
}

/// CDF evaluated at an observed value, split so discrete laws can expose the
/// probability strictly below the atom alongside the inclusive value.
pub enum CdfParts {
    Continuous(f64),
    Discrete { below: f64, at_or_below: f64 },
}

impl RowLaw {
    pub fn mean(&self) -> f64 {
        match self {
            RowLaw::Gaussian { mean, .. } => *mean,
            RowLaw::Laplace { mean, .. } => *mean,
            RowLaw::ShiftedGamma { shift, shape, rate } => shift + shape / rate,
            RowLaw::PoissonResidual { mean, .. } => *mean,
            RowLaw::Discrete { support, pmf } => {
                support.iter().zip(pmf.iter()).map(|(a, p)| a * p).sum()
            }
        }
    }

    pub fn var(&self) -> f64 {
        match self {
            RowLaw::Gaussian { sd, .. } => sd * sd,
            RowLaw::Laplace { scale, .. } => 2.0 * scale * scale,
            RowLaw::ShiftedGamma { shape, rate, .. } => shape / (rate * rate),
            RowLaw::PoissonResidual { .. } => 1.0,
            RowLaw::Discrete { support, pmf } => {
                let m = self.mean();
                support.iter().zip(pmf.iter()).map(|(a, p)| p * (a - m) * (a - m)).sum()
            }
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            RowLaw::Gaussian { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            RowLaw::Laplace { mean, scale } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                mean - scale * u.signum() * (1.0 - 2.0 * u.abs()).max(1e-300).ln()
            }
            RowLaw::ShiftedGamma { shift, shape, rate } => {
                let g = rand_distr::Gamma::new(*shape, 1.0 / rate).expect("valid gamma");
                shift + g.sample(rng)
            }
            RowLaw::PoissonResidual { mean, rate } => {
                let o = rand_distr::Poisson::new(*rate).expect("valid poisson").sample(rng);
                mean + (o - rate) / rate.sqrt()
            }
            RowLaw::Discrete { support, pmf } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (a, p) in support.iter().zip(pmf.iter()) {
                    acc += p;
                    if u < acc {
                        return *a;
                    }
                }
                *support.last().unwrap()
            }
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, RowLaw::PoissonResidual { .. } | RowLaw::Discrete { .. })
    }

    pub fn cdf_parts(&self, x: f64) -> Result<CdfParts> {
        match self {
            RowLaw::Gaussian { mean, sd } => {
                let d = statrs::distribution::Normal::new(*mean, *sd)
                    .map_err(|e| Error::numerical(format!("normal cdf: {e}")))?;
                Ok(CdfParts::Continuous(d.cdf(x)))
            }
            RowLaw::Laplace { mean, scale } => {
                let z = (x - mean) / scale;
                let f = if z < 0.0 { 0.5 * z.exp() } else { 1.0 - 0.5 * (-z).exp() };
                Ok(CdfParts::Continuous(f))
            }
            RowLaw::ShiftedGamma { shift, shape, rate } => {
                let d = statrs::distribution::Gamma::new(*shape, *rate)
                    .map_err(|e| Error::numerical(format!("gamma cdf: {e}")))?;
                let v = x - shift;
                Ok(CdfParts::Continuous(if v <= 0.0 { 0.0 } else { d.cdf(v) }))
            }
            RowLaw::PoissonResidual { mean, rate } => {
                let d = statrs::distribution::Poisson::new(*rate)
                    .map_err(|e| Error::numerical(format!("poisson cdf: {e}")))?;
                let o = (rate + rate.sqrt() * (x - mean)).round();
                if o < 0.0 {
                    return Ok(CdfParts::Discrete { below: 0.0, at_or_below: 0.0 });
                }
                let o = o as u64;
                let below = if o == 0 { 0.0 } else { d.cdf(o - 1) };
                Ok(CdfParts::Discrete { below, at_or_below: d.cdf(o) })
            }
            RowLaw::Discrete { support, pmf } => {
                let tol = 1e-9;
                let mut below = 0.0;
                let mut at = 0.0;
                for (a, p) in support.iter().zip(pmf.iter()) {
                    if (*a - x).abs() <= tol * a.abs().max(1.0) {
                        at = *p;
                    } else if *a < x {
                        below += p;
                    }
                }
                Ok(CdfParts::Discrete { below, at_or_below: below + at })
            }
        }
    }
}

/// Sample one value per row law.
pub fn sample_rows(rows: &[RowLaw], rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_iter(rows.iter().map(|law| law.sample(rng)))
}

/// Model-X knowledge consumed by the testing pipelines: either a joint
/// Gaussian model or an explicit conditional law per column.
#[derive(Debug, Clone)]
pub enum XModel {
    Gaussian(CovariateModel),
    /// `laws[j]` is the law of column j given the others; its `gamma` is
    /// indexed by the remaining columns in original order.
    PerColumn(Vec<ConditionalLaw>),
}

impl XModel {
    pub fn p(&self) -> usize {
        match self {
            XModel::Gaussian(m) => m.p(),
            XModel::PerColumn(laws) => laws.len(),
        }
    }

    pub fn law_for(&self, j: usize) -> Result<ConditionalLaw> {
        match self {
            XModel::Gaussian(m) => m.conditional_law(j),
            XModel::PerColumn(laws) => laws
                .get(j)
                .cloned()
                .ok_or_else(|| Error::invalid(format!("column {j} out of range"))),
        }
    }

    pub fn source(&self) -> ModelSource {
        match self {
            XModel::Gaussian(m) => m.source,
            XModel::PerColumn(_) => ModelSource::Nodewise,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        let v = match self {
            XModel::Gaussian(m) => {
                let cov: Vec<Vec<f64>> =
                    m.covariance.rows().into_iter().map(|r| r.to_vec()).collect();
                serde_json::json!({
                    "mean": m.mean.to_vec(),
                    "covariance": cov,
                    "source": m.source.to_string(),
                })
            }
            XModel::PerColumn(laws) => serde_json::json!({
                "source": "nodewise",
                "columns": laws,
            }),
        };
        serde_json::to_string_pretty(&v).map_err(|e| Error::invalid(format!("model json: {e}")))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("model json: {e}")))?;
        if v.get("covariance").is_some() {
            #[derive(Deserialize)]
            struct GaussianFile {
                mean: Vec<f64>,
                covariance: Vec<Vec<f64>>,
                source: ModelSource,
            }
            let g: GaussianFile = serde_json::from_value(v)
                .map_err(|e| Error::invalid(format!("model json: {e}")))?;
            let p = g.mean.len();
            let mut cov = Array2::<f64>::zeros((p, p));
            if g.covariance.len() != p {
                return Err(Error::invalid("covariance row count does not match mean"));
            }
            for (i, row) in g.covariance.iter().enumerate() {
                if row.len() != p {
                    return Err(Error::invalid(format!("covariance row {i} has wrong length")));
                }
                for (j, val) in row.iter().enumerate() {
                    cov[(i, j)] = *val;
                }
            }
            Ok(XModel::Gaussian(CovariateModel::new(Array1::from_vec(g.mean), cov, g.source)?))
        } else if v.get("columns").is_some() {
            #[derive(Deserialize)]
            struct ColumnsFile {
                columns: Vec<ConditionalLaw>,
            }
            let c: ColumnsFile = serde_json::from_value(v)
                .map_err(|e| Error::invalid(format!("model json: {e}")))?;
            let p = c.columns.len();
            if p == 0 {
                return Err(Error::invalid("model has no columns"));
            }
            let laws: Result<Vec<ConditionalLaw>> = c
                .columns
                .into_iter()
                .map(|l| ConditionalLaw::new(l.gamma, l.intercept, l.sigma, l.family))
                .collect();
            let laws = laws?;
            for (j, l) in laws.iter().enumerate() {
                if !matches!(l.family, LawFamily::EmpiricalDiscrete { .. })
                    && l.gamma.len() != p - 1
                {
                    return Err(Error::invalid(format!(
                        "law for column {j} conditions on {} covariates, expected {}",
                        l.gamma.len(),
                        p - 1
                    )));
                }
            }
            Ok(XModel::PerColumn(laws))
        } else {
            Err(Error::invalid(
                "model json needs either a `covariance` or a `columns` field",
            ))
        }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), &e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()?)
            .map_err(|e| Error::io(path.display().to_string(), &e))
    }
}

/// Ledoit-Wolf shrinkage of the sample covariance toward a scaled identity,
/// followed by a diagonal rescaling that matches each column's implied
/// conditional variance to the mean squared residual of regressing that
/// column on the others (with the model's own regression coefficients).
pub fn estimate_ledoit_wolf(x: ArrayView2<'_, f64>) -> Result<CovariateModel> {
    let (cov, _rho) = ledoit_wolf_raw(x)?;
    let (n, p) = x.dim();
    let nf = n as f64;
    let mean = Array1::from_iter((0..p).map(|j| x.column(j).sum() / nf));

    // precision-matrix identities give every column's conditional law at once
    let chol = Cholesky::new(cov.view())
        .map_err(|e| Error::numerical(format!("shrunk covariance not positive definite: {e}")))?;
    let omega = chol.solve_mat(Array2::<f64>::eye(p).view());
    let mut d = Array1::<f64>::ones(p);
    for j in 0..p {
        let vj = 1.0 / omega[(j, j)]; // implied conditional variance
        let mut msr = 0.0;
        for i in 0..n {
            // residual of x_ij on the other columns: gamma = -omega[-j,j]/omega[j,j]
            let mut pred = mean[j];
            for c in 0..p {
                if c != j {
                    let g = -omega[(c, j)] / omega[(j, j)];
                    pred += g * (x[(i, c)] - mean[c]);
                }
            }
            let r = x[(i, j)] - pred;
            msr += r * r;
        }
        msr /= nf;
        if msr <= 0.0 || vj <= 0.0 {
            return Err(Error::numerical(format!(
                "degenerate conditional variance while rescaling column {j}"
            )));
        }
        d[j] = (msr / vj).sqrt();
    }
    let mut rescaled = cov;
    for i in 0..p {
        for j in 0..p {
            rescaled[(i, j)] *= d[i] * d[j];
        }
    }
    CovariateModel::new(mean, rescaled, ModelSource::LedoitWolf)
}

/// Shrunk covariance plus the shrinkage intensity in [0, 1].
pub(crate) fn ledoit_wolf_raw(x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, f64)> {
    let (n, p) = x.dim();
    if n < 2 || p < 1 {
        return Err(Error::invalid("need at least 2 rows and 1 column"));
    }
    let nf = n as f64;
    let pf = p as f64;
    let mut centered = x.to_owned();
    for j in 0..p {
        let m = centered.column(j).sum() / nf;
        let mut col = centered.column_mut(j);
        col.iter_mut().for_each(|v| *v -= m);
        let var = col.iter().map(|v| v * v).sum::<f64>() / nf;
        if var <= 0.0 {
            return Err(Error::invalid(format!("column {j} has zero variance")));
        }
    }
    let s = centered.t().dot(&centered) / nf;
    let m = (0..p).map(|i| s[(i, i)]).sum::<f64>() / pf;
    let mut d2 = 0.0;
    for i in 0..p {
        for j in 0..p {
            let v = s[(i, j)] - if i == j { m } else { 0.0 };
            d2 += v * v;
        }
    }
    d2 /= pf;
    let mut b_bar2 = 0.0;
    for k in 0..n {
        let row = centered.row(k);
        let mut acc = 0.0;
        for i in 0..p {
            for j in 0..p {
                let v = row[i] * row[j] - s[(i, j)];
                acc += v * v;
            }
        }
        b_bar2 += acc / pf;
    }
    b_bar2 /= nf * nf;
    let (rho, shrunk) = if d2 <= 1e-300 {
        (0.0, s)
    } else {
        let b2 = b_bar2.min(d2);
        let rho = (b2 / d2).clamp(0.0, 1.0);
        let mut out = s * (1.0 - rho);
        for i in 0..p {
            out[(i, i)] += rho * m;
        }
        (rho, out)
    };
    Ok((shrunk, rho))
}

/// Per-column conditional-Gaussian laws from cross-validated lasso
/// regressions of each column on the rest. The conditional sd is the root
/// mean squared residual of the selected fit.
pub fn estimate_nodewise_lasso(
    x: ArrayView2<'_, f64>,
    cfg: &LassoConfig,
) -> Result<Vec<ConditionalLaw>> {
    let (n, p) = x.dim();
    if n < 2 || p < 1 {
        return Err(Error::invalid("need at least 2 rows and 1 column"));
    }
    if p == 1 {
        let m = x.column(0).sum() / n as f64;
        let var = x.column(0).iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        if var <= 0.0 {
            return Err(Error::invalid("column 0 has zero variance"));
        }
        return Ok(vec![ConditionalLaw::gaussian(Array1::zeros(0), m, var.sqrt())?]);
    }
    let folds = default_folds(n, cfg.folds)?;
    let mut laws = Vec::with_capacity(p);
    for j in 0..p {
        let z = crate::data::drop_column(&x.to_owned(), j);
        let xj = x.column(j).to_owned();
        let grid = default_grid(z.view(), xj.view(), cfg.grid_size, cfg.grid_ratio)?;
        let cv =
            cross_validate_with_folds(z.view(), xj.view(), LossKind::Squared, &grid, &folds, cfg)?;
        let fit = cv.selected();
        let eta = fit.linear_predictor(z.view());
        let mut msr = 0.0;
        for i in 0..n {
            let r = xj[i] - eta[i];
            msr += r * r;
        }
        msr /= n as f64;
        let sigma = if msr <= 1e-24 {
            log::warn!(
                "nodewise regression for column {j} is numerically exact; \
                 the column is collinear with the others"
            );
            1e-12
        } else {
            msr.sqrt()
        };
        laws.push(ConditionalLaw::gaussian(fit.beta.clone(), fit.intercept, sigma)?);
    }
    Ok(laws)
}
