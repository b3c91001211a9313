//! Tail probabilities of nonnegative weighted sums of chi-square(1)
//! variables by numerical inversion of the characteristic function:
//! P(Q >= t) = 1/2 + (1/pi) * integral_0^inf sin(theta(u)) / (u rho(u)) du
//! with theta(u) = 0.5 * sum_j atan(lambda_j u) - 0.5 t u and
//! rho(u) = prod_j (1 + lambda_j^2 u^2)^(1/4).
//!
//! The integrand oscillates forever with an envelope that can decay as
//! slowly as u^(-3/2), so plain truncation is hopeless for small t. Instead
//! the phase theta is followed until it is strictly decreasing; up to there
//! the integral is done by adaptive Simpson over oscillation-sized segments,
//! and beyond it the half-waves between consecutive zeros of sin(theta) form
//! an alternating series whose partial sums are accelerated by iterated
//! averaging.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A weighted chi-square tail query: eigenvalue weights plus the observed
/// quadratic-form value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadFormSpec {
    pub weights: Vec<f64>,
    pub observed: f64,
}

const TOL: f64 = 1e-6;
const CLIP_LO: f64 = 1e-12;
const MAX_SEGMENTS: usize = 400_000;
const MAX_EVALS: usize = 8_000_000;
const MAX_HALF_WAVES: usize = 400;
/// Weights below this fraction of the largest shift the distribution by less
/// than the quadrature tolerance and only slow the phase down.
const WEIGHT_CUTOFF: f64 = 1e-9;

struct Integrand<'a> {
    lambda: &'a [f64],
    t: f64,
}

impl Integrand<'_> {
    fn theta(&self, u: f64) -> f64 {
        let s: f64 = self.lambda.iter().map(|l| (l * u).atan()).sum();
        0.5 * s - 0.5 * self.t * u
    }

    fn theta_prime(&self, u: f64) -> f64 {
        let s: f64 = self.lambda.iter().map(|l| l / (1.0 + l * l * u * u)).sum();
        0.5 * s - 0.5 * self.t
    }

    fn log_rho(&self, u: f64) -> f64 {
        self.lambda.iter().map(|l| 0.25 * (l * l * u * u).ln_1p()).sum()
    }

    fn eval(&self, u: f64) -> f64 {
        if u < 1e-100 {
            // sin(theta)/(u rho) -> theta/u -> (sum lambda - t)/2
            return 0.5 * (self.lambda.iter().sum::<f64>() - self.t);
        }
        self.theta(u).sin() / (u * self.log_rho(u).exp())
    }

    /// First u past which theta' <= -t/4, so theta strictly decreases and
    /// every later half-wave is bracketed analytically. The arctan slopes
    /// only shrink with u, making the condition monotone.
    fn oscillation_start(&self) -> Result<f64> {
        let drops = |u: f64| self.theta_prime(u) <= -0.25 * self.t;
        if drops(0.0) {
            return Ok(0.0);
        }
        let mut u = 1.0f64;
        if drops(u) {
            while u > 1e-8 && drops(0.5 * u) {
                u *= 0.5;
            }
            return Ok(u);
        }
        for _ in 0..200 {
            u *= 2.0;
            if drops(u) {
                return Ok(u);
            }
        }
        Err(Error::numerical("quadrature phase never turned oscillatory"))
    }

    /// Next u >= lo with theta(u) == target, given theta(lo) > target and
    /// theta' <= -t/4 throughout: safeguarded Newton inside [lo, hi] where
    /// hi comes from the slope floor.
    fn phase_crossing(&self, lo: f64, target: f64) -> f64 {
        let mut a = lo;
        let mut b = lo + (self.theta(lo) - target) / (0.25 * self.t);
        let mut x = 0.5 * (a + b);
        for _ in 0..80 {
            let g = self.theta(x) - target;
            if g.abs() <= 1e-12 * (1.0 + target.abs()) {
                return x;
            }
            if g > 0.0 {
                a = x;
            } else {
                b = x;
            }
            let d = self.theta_prime(x);
            let newton = x - g / d;
            x = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if b - a <= f64::EPSILON * b {
                break;
            }
        }
        x
    }
}

fn simpson(f: &Integrand<'_>, a: f64, fa: f64, b: f64, fb: f64, evals: &mut usize) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f.eval(m);
    *evals += 1;
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &Integrand<'_>,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    fm: f64,
    tol: f64,
    depth: usize,
    evals: &mut usize,
) -> Result<f64> {
    if *evals > MAX_EVALS {
        return Err(Error::numerical(format!(
            "quadrature did not converge within the evaluation budget \
             (residual tolerance {tol:.3e} unmet)"
        )));
    }
    let m = 0.5 * (a + b);
    let (left, flm) = simpson(f, a, fa, m, fm, evals);
    let (right, frm) = simpson(f, m, fm, b, fb, evals);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || depth == 0 {
        return Ok(left + right + err / 15.0);
    }
    let l = adaptive(f, a, fa, m, fm, left, flm, 0.5 * tol, depth - 1, evals)?;
    let r = adaptive(f, m, fm, b, fb, right, frm, 0.5 * tol, depth - 1, evals)?;
    Ok(l + r)
}

/// Integrate over [a, b] with a given budget, pre-split into segments no
/// longer than an oscillation half-period so the adaptive pass never aliases.
fn integrate_segmented(
    f: &Integrand<'_>,
    a0: f64,
    b0: f64,
    seg_len: f64,
    tol_total: f64,
    evals: &mut usize,
) -> Result<f64> {
    let span = b0 - a0;
    let want = (span / seg_len).ceil();
    if want > MAX_SEGMENTS as f64 {
        return Err(Error::numerical(format!(
            "quadrature needs {want:.1e} oscillation segments"
        )));
    }
    let n_seg = (want as usize).clamp(4, MAX_SEGMENTS);
    let tol = tol_total / n_seg as f64;
    let h = span / n_seg as f64;
    let mut integral = 0.0;
    let mut a = a0;
    let mut fa = f.eval(a);
    *evals += 1;
    for i in 0..n_seg {
        let b = if i + 1 == n_seg { b0 } else { a0 + (i + 1) as f64 * h };
        let fb = f.eval(b);
        *evals += 1;
        let (whole, fm) = simpson(f, a, fa, b, fb, evals);
        integral += adaptive(f, a, fa, b, fb, whole, fm, tol, 40, evals)?;
        a = b;
        fa = fb;
    }
    Ok(integral)
}

/// Sum the alternating half-wave series from `start`, accelerating the
/// partial sums by iterated averaging and stopping once the deepest
/// averages settle.
fn oscillating_tail(f: &Integrand<'_>, start: f64, evals: &mut usize) -> Result<f64> {
    let tol_wave = TOL / 400.0;
    let mut target = (f.theta(start) / std::f64::consts::PI).floor();
    if f.theta(start) - target * std::f64::consts::PI <= 1e-12 * (1.0 + f.theta(start).abs()) {
        target -= 1.0;
    }
    let mut lo = start;
    let mut diag: Vec<f64> = Vec::new();
    let mut sum = 0.0;
    let mut prev_estimate = f64::NAN;
    let mut settled = 0;
    for _ in 0..MAX_HALF_WAVES {
        let hi = f.phase_crossing(lo, target * std::f64::consts::PI);
        // one half-wave: sin(theta) keeps a single sign here, so a short
        // pre-split is enough for the adaptive pass
        let term = integrate_segmented(f, lo, hi, (hi - lo) / 8.0, tol_wave, evals)?;
        sum += term;
        let mut next = Vec::with_capacity(diag.len() + 1);
        next.push(sum);
        for j in 0..diag.len() {
            let v = 0.5 * (diag[j] + next[j]);
            next.push(v);
        }
        diag = next;
        let estimate = *diag.last().unwrap();
        if (estimate - prev_estimate).abs() <= 0.2 * TOL {
            settled += 1;
            if settled >= 2 {
                return Ok(estimate);
            }
        } else {
            settled = 0;
        }
        prev_estimate = estimate;
        lo = hi;
        target -= 1.0;
    }
    Err(Error::numerical(format!(
        "oscillating tail did not settle within {MAX_HALF_WAVES} half-waves"
    )))
}

/// P(sum_j lambda_j chi^2_1 >= t), clipped to [1e-12, 1], to absolute
/// tolerance 1e-6.
pub fn imhof_tail(weights: &[f64], t: f64) -> Result<f64> {
    let mut kept: Vec<f64> = Vec::with_capacity(weights.len());
    let mut wmax = 0.0f64;
    for w in weights {
        if !w.is_finite() || *w < -1e-10 {
            return Err(Error::invalid(format!("invalid quadratic-form weight {w}")));
        }
        wmax = wmax.max(*w);
    }
    if wmax <= 0.0 {
        return Err(Error::invalid("quadratic form needs at least one positive weight"));
    }
    for w in weights {
        if *w > WEIGHT_CUTOFF * wmax {
            kept.push(*w);
        }
    }
    let mut lambda = kept;
    lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if !t.is_finite() {
        return Err(Error::invalid("observed quadratic-form value is not finite"));
    }
    if t <= 0.0 {
        return Ok(1.0);
    }
    // the integral is invariant under joint scaling of weights and t
    let scale = lambda[0];
    for l in lambda.iter_mut() {
        *l /= scale;
    }
    let t = t / scale;
    // Q dominates lambda_max chi^2_1, so P(Q <= t) <= sqrt(2 t / pi): below
    // that mass the answer is 1 to within tolerance and the phase would
    // oscillate too slowly to chase
    if (2.0 * t / std::f64::consts::PI).sqrt() <= 0.4 * TOL {
        return Ok(1.0);
    }
    let f = Integrand { lambda: &lambda, t };

    let mut evals = 0usize;
    let u0 = f.oscillation_start()?;
    let mut integral = 0.0;
    if u0 > 0.0 {
        let sum_l: f64 = f.lambda.iter().sum();
        let max_slope = (0.5 * (sum_l - t).abs()).max(0.5 * t).max(1e-12);
        let seg_len = std::f64::consts::PI / max_slope;
        integral += integrate_segmented(&f, 0.0, u0, seg_len, 0.4 * TOL, &mut evals)?;
    }
    integral += oscillating_tail(&f, u0, &mut evals)?;

    let p = 0.5 + integral / std::f64::consts::PI;
    Ok(p.clamp(CLIP_LO, 1.0))
}
