//! P-value engines. The generic resampling test compares a statistic on the
//! observed column against draws from its conditional law; the
//! resampling-free variants calibrate the same distilled statistics in
//! closed form under the Gaussian null of x - d_x (normal tail for the
//! scalar statistic, weighted chi-square tail for the interaction one).

mod baselines;
mod imhof;
mod transform;

pub use baselines::{gcm_p_value, hrt_p_value, ocrt_p_value, ocrt_statistic, HrtContext, OcrtVariant};
pub use imhof::{imhof_tail, QuadFormSpec};
pub use transform::{gauss_transform, row_sigmas};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::distill::Distillation;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, solve_sym, Cholesky};
use crate::model::{sample_rows, RowLaw};

/// Smallest resampling-free p-value reported; keeps outcomes inside (0, 1].
const P_FLOOR: f64 = 1e-300;

/// One test's result: p-value, the statistic it was computed from, a method
/// tag, and the resample count (0 for resampling-free engines). The variable
/// label is attached by batch pipelines and the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOutcome {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variable: Option<String>,
    pub p_value: f64,
    pub statistic: f64,
    pub method: String,
    #[serde(rename = "M")]
    pub m_used: usize,
}

impl TestOutcome {
    pub fn new(p_value: f64, statistic: f64, method: impl Into<String>, m_used: usize) -> Self {
        TestOutcome { variable: None, p_value, statistic, method: method.into(), m_used }
    }

    pub fn with_variable(mut self, label: impl Into<String>) -> Self {
        self.variable = Some(label.into());
        self
    }
}

/// Generic resampling CRT: p = (1 + #{m : T(x_m) >= T(x)}) / (M + 1). The
/// statistic closure must carry any fitted context, which is therefore
/// computed once and shared across all resamples.
pub fn crt_p_value<F>(
    statistic: F,
    x: ArrayView1<'_, f64>,
    rows: &[RowLaw],
    m: usize,
    rng: &mut ChaCha8Rng,
    method: &str,
) -> Result<TestOutcome>
where
    F: Fn(ArrayView1<'_, f64>) -> Result<f64>,
{
    if m == 0 {
        return Err(Error::invalid("resampling needs M >= 1"));
    }
    if rows.len() != x.len() {
        return Err(Error::invalid("row laws do not match the observation count"));
    }
    let observed = statistic(x)?;
    let mut at_least = 0usize;
    for i in 0..m {
        let draw = sample_rows(rows, rng);
        let t = statistic(draw.view())
            .map_err(|e| Error::numerical(format!("resample {i}: {e}")))?;
        if t >= observed {
            at_least += 1;
        }
    }
    Ok(TestOutcome::new(
        (1.0 + at_least as f64) / (m as f64 + 1.0),
        observed,
        method,
        m,
    ))
}

/// Scalar distilled statistic |(y - d_y)'(x - d_x)| / ||x - d_x||^2.
pub fn d0_statistic(
    y: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    dist: &Distillation,
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.len() {
        let ex = x[i] - dist.d_x[i];
        num += (y[i] - dist.d_y[i]) * ex;
        den += ex * ex;
    }
    if den <= 0.0 {
        return Err(Error::numerical("x - d_x has zero norm"));
    }
    Ok(num.abs() / den)
}

/// Interaction statistic: least squares of (y - d_y) on the k+1 columns
/// [(x - d_x), (x - d_x) * Z_top], returning the squared main effect plus
/// the mean squared interaction coefficient. Rank-deficient designs fall
/// back to the pseudoinverse with a warning.
pub fn di_statistic(
    y: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    dist: &Distillation,
) -> Result<f64> {
    let n = y.len();
    let k = dist.k;
    let mut design = Array2::<f64>::zeros((n, k + 1));
    for i in 0..n {
        let ex = x[i] - dist.d_x[i];
        design[(i, 0)] = ex;
        for c in 0..k {
            design[(i, c + 1)] = ex * dist.top_cols[(i, c)];
        }
    }
    let resid = Array1::from_shape_fn(n, |i| y[i] - dist.d_y[i]);
    let gram = design.t().dot(&design);
    let rhs = design.t().dot(&resid);
    let (beta, fell_back) = solve_sym(gram.view(), rhs.view())?;
    if fell_back {
        log::warn!("interaction design is rank deficient; using the pseudoinverse solution");
    }
    let main = beta[0] * beta[0];
    if k == 0 {
        return Ok(main);
    }
    let inter: f64 = beta.iter().skip(1).map(|b| b * b).sum();
    Ok(main + inter / k as f64)
}

/// Resampling CRT with the scalar distilled statistic.
pub fn d0_resampling(
    y: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    dist: &Distillation,
    rows: &[RowLaw],
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TestOutcome> {
    crt_p_value(|xc| d0_statistic(y, xc, dist), x, rows, m, rng, "d0_resampling")
}

/// Resampling CRT with the interaction statistic.
pub fn di_resampling(
    y: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    dist: &Distillation,
    rows: &[RowLaw],
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TestOutcome> {
    crt_p_value(|xc| di_statistic(y, xc, dist), x, rows, m, rng, "di_resampling")
}

fn two_sided_normal(z: f64) -> f64 {
    let norm = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - norm.cdf(z))).clamp(P_FLOOR, 1.0)
}

fn d0_rf_core(
    eps_y: &Array1<f64>,
    eps_x: &Array1<f64>,
    var_of: impl Fn(usize) -> f64,
    method: &str,
) -> TestOutcome {
    let t_prime = eps_y.dot(eps_x).abs();
    let denom2: f64 = eps_y.iter().enumerate().map(|(i, e)| var_of(i) * e * e).sum();
    if denom2 <= 0.0 {
        log::warn!("y - d_y is identically zero; the statistic carries no information");
        return TestOutcome::new(1.0, t_prime, method, 0);
    }
    TestOutcome::new(two_sided_normal(t_prime / denom2.sqrt()), t_prime, method, 0)
}

/// Resampling-free scalar test: T' = |(y - d_y)'(x - d_x)| referred to its
/// exact Gaussian null, p = 2(1 - Phi(T' / (sigma_x ||y - d_y||))).
pub fn d0_rf_p_value(
    y: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    dist: &Distillation,
) -> Result<TestOutcome> {
    let eps_y = Array1::from_shape_fn(y.len(), |i| y[i] - dist.d_y[i]);
    let eps_x = Array1::from_shape_fn(x.len(), |i| x[i] - dist.d_x[i]);
    let v = dist.sigma_x * dist.sigma_x;
    Ok(d0_rf_core(&eps_y, &eps_x, |_| v, "d0_rf"))
}

/// Resampling-free scalar test on a transformed column u ~ N(0, sigma_i^2):
/// the heteroscedastic generalization with per-row null variances.
pub fn d0_rf_transformed(
    y: ArrayView1<'_, f64>,
    d_y: ArrayView1<'_, f64>,
    u: ArrayView1<'_, f64>,
    sigmas: ArrayView1<'_, f64>,
) -> Result<TestOutcome> {
    if y.len() != u.len() || y.len() != sigmas.len() || y.len() != d_y.len() {
        return Err(Error::invalid("transformed test inputs disagree on n"));
    }
    let eps_y = Array1::from_shape_fn(y.len(), |i| y[i] - d_y[i]);
    let u = u.to_owned();
    Ok(d0_rf_core(&eps_y, &u, |i| sigmas[i] * sigmas[i], "d0_rf"))
}

/// Observed quadratic form and its null eigenvalue weights for the
/// resampling-free interaction test. `vars[i]` is the null variance of
/// component i of eps_x.
fn di_quad_form(
    eps_y: &Array1<f64>,
    eps_x: &Array1<f64>,
    top_cols: ArrayView2<'_, f64>,
    vars: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let n = eps_y.len();
    let k = top_cols.ncols();
    // W = [1, Z_top] enters H; S = [1, k^{-1/2} Z_top] enters the statistic
    let kscale = if k > 0 { 1.0 / (k as f64).sqrt() } else { 1.0 };
    let mut h = Array2::<f64>::zeros((k + 1, k + 1));
    let mut c = Array2::<f64>::zeros((k + 1, k + 1));
    let mut b = Array1::<f64>::zeros(k + 1);
    let mut w_row = vec![0.0f64; k + 1];
    let mut s_row = vec![0.0f64; k + 1];
    for i in 0..n {
        w_row[0] = 1.0;
        s_row[0] = 1.0;
        for cix in 0..k {
            w_row[cix + 1] = top_cols[(i, cix)];
            s_row[cix + 1] = kscale * top_cols[(i, cix)];
        }
        let ey = eps_y[i];
        for a in 0..=k {
            b[a] += s_row[a] * ey * eps_x[i];
            for bx in a..=k {
                h[(a, bx)] += vars[i] * w_row[a] * w_row[bx];
                c[(a, bx)] += vars[i] * ey * ey * s_row[a] * s_row[bx];
            }
        }
    }
    for a in 0..=k {
        for bx in 0..a {
            h[(a, bx)] = h[(bx, a)];
            c[(a, bx)] = c[(bx, a)];
        }
    }
    let chol = Cholesky::new(h.view()).map_err(|_| {
        Error::numerical(format!(
            "interaction design matrix H is singular (k = {k}); \
             the top columns are linearly dependent"
        ))
    })?;
    let q = chol.solve(b.view());
    let t = q.dot(&q);
    // weights: eigenvalues of H^{-1} C H^{-1} (nonzero spectrum of the
    // full quadratic form's n x n matrix)
    let x1 = chol.solve_mat(c.view());
    let mut m = chol.solve_mat(x1.t().to_owned().view());
    for a in 0..=k {
        for bx in (a + 1)..=k {
            let avg = 0.5 * (m[(a, bx)] + m[(bx, a)]);
            m[(a, bx)] = avg;
            m[(bx, a)] = avg;
        }
    }
    let (evs, _) = sym_eigen(m.view())?;
    let top = evs.iter().cloned().fold(0.0f64, f64::max);
    let weights: Vec<f64> =
        evs.into_iter().rev().filter(|e| *e > 1e-12 * top.max(1e-300)).collect();
    Ok((t, weights))
}

fn di_rf_outcome(
    eps_y: &Array1<f64>,
    eps_x: &Array1<f64>,
    top_cols: ArrayView2<'_, f64>,
    vars: &[f64],
) -> Result<TestOutcome> {
    let (t, weights) = di_quad_form(eps_y, eps_x, top_cols, vars)?;
    let p_value = if weights.is_empty() {
        log::warn!("all quadratic-form weights vanish; the statistic carries no information");
        1.0
    } else {
        imhof_tail(&weights, t)?
    };
    Ok(TestOutcome::new(p_value, t, "di_rf", 0))
}

/// Resampling-free interaction test: the observed statistic is a quadratic
/// form in the Gaussian vector x - d_x, so its null tail is a weighted
/// chi-square probability evaluated by characteristic-function inversion.
pub fn di_rf_p_value(
    y: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    dist: &Distillation,
) -> Result<TestOutcome> {
    let n = y.len();
    let eps_y = Array1::from_shape_fn(n, |i| y[i] - dist.d_y[i]);
    let eps_x = Array1::from_shape_fn(n, |i| x[i] - dist.d_x[i]);
    let vars = vec![dist.sigma_x * dist.sigma_x; n];
    di_rf_outcome(&eps_y, &eps_x, dist.top_cols.view(), &vars)
}

/// Resampling-free interaction test on a transformed column with per-row
/// null variances.
pub fn di_rf_transformed(
    y: ArrayView1<'_, f64>,
    d_y: ArrayView1<'_, f64>,
    u: ArrayView1<'_, f64>,
    top_cols: ArrayView2<'_, f64>,
    sigmas: ArrayView1<'_, f64>,
) -> Result<TestOutcome> {
    if y.len() != u.len() || y.len() != sigmas.len() || y.len() != d_y.len() {
        return Err(Error::invalid("transformed test inputs disagree on n"));
    }
    let eps_y = Array1::from_shape_fn(y.len(), |i| y[i] - d_y[i]);
    let vars: Vec<f64> = sigmas.iter().map(|s| s * s).collect();
    di_rf_outcome(&eps_y, &u.to_owned(), top_cols, &vars)
}
