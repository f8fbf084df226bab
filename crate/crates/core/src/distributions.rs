//! Probability laws used by the model.
//!
//! * [`TruncatedPareto`]: user waiting times between consecutive comments,
//!   density `c / (a^-c - b^-c) * x^(-c-1)` on `[a, b]`.
//! * [`ExponentialLaw`] and [`ParetoLaw`]: topic exposure durations.
//! * [`WeibullLaw`]: thread sizes under exponential exposure.
//!
//! Each law has a density, a CDF and an inverse-transform sampler, and each
//! has a maximum-likelihood estimator returning a [`FitResult`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::error::{Diagnostics, Error, Result};

/// `expm1(e * s) / e`, continuous through `e = 0` where it equals `s`.
///
/// This is `∫_0^s exp(e * u) du`; all truncated-Pareto moments reduce to it.
pub(crate) fn exp_integral(e: f64, s: f64) -> f64 {
    if (e * s).abs() < 1e-10 {
        s * (1.0 + 0.5 * e * s)
    } else {
        (e * s).exp_m1() / e
    }
}

/// Uniform draw on `[0, 1)`.
#[inline]
fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Standard exponential draw, `-ln(1 - u)`.
#[inline]
fn standard_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(-unit(rng)).ln_1p()
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub names: Vec<&'static str>,
    pub params: Vec<f64>,
    /// Standard errors from the observed Fisher information. Parameters that
    /// are fixed rather than estimated report zero.
    pub stderr: Vec<f64>,
    pub loglik: f64,
    pub n: usize,
}

impl FitResult {
    /// Estimate of the parameter called `name`.
    pub fn param(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|i| self.params[i])
    }

    pub fn stderr_of(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|i| self.stderr[i])
    }
}

fn require_samples(samples: &[f64], min: usize, what: &str) -> Result<()> {
    if samples.len() < min {
        return Err(Error::data(format!(
            "{what} needs at least {min} samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::data(format!("{what}: non-finite sample {bad}")));
    }
    Ok(())
}

fn require_positive(samples: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = samples.iter().find(|&&x| x <= 0.0) {
        return Err(Error::data(format!("{what}: non-positive sample {bad}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Upper-truncated Pareto
// ---------------------------------------------------------------------------

/// Power law with density proportional to `x^(-c-1)` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedPareto {
    a: f64,
    b: f64,
    c: f64,
    // Cached for the sampler: ln(b/a) and expm1(-c ln(b/a)) = (b/a)^-c - 1.
    log_span: f64,
    tail_gap: f64,
}

impl TruncatedPareto {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::param("truncated Pareto parameters must be finite"));
        }
        if a <= 0.0 || b <= a {
            return Err(Error::param(format!(
                "truncated Pareto needs 0 < a < b, got a={a}, b={b}"
            )));
        }
        if c <= 0.0 {
            return Err(Error::param(format!(
                "truncated Pareto needs c > 0, got c={c}"
            )));
        }
        let log_span = (b / a).ln();
        Ok(Self {
            a,
            b,
            c,
            log_span,
            tail_gap: (-c * log_span).exp_m1(),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `1 - (b/a)^-c`, i.e. `(a^-c - b^-c) / a^-c`.
    fn mass(&self) -> f64 {
        -self.tail_gap
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.a || x > self.b {
            return 0.0;
        }
        self.c / self.a * (x / self.a).powf(-self.c - 1.0) / self.mass()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.a {
            0.0
        } else if x >= self.b {
            1.0
        } else {
            (-self.c * (x / self.a).ln()).exp_m1() / self.tail_gap
        }
    }

    /// Survival function `1 - cdf(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= self.a {
            1.0
        } else if x >= self.b {
            0.0
        } else {
            (x / self.a).powf(-self.c) * -(-self.c * (self.b / x).ln()).exp_m1() / self.mass()
        }
    }

    /// Inverse CDF; `quantile(0) = a` and `quantile(1) = b`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u >= 1.0 {
            return self.b;
        }
        let x = self.a * (-(u * self.tail_gap).ln_1p() / self.c).exp();
        x.clamp(self.a, self.b)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(unit(rng))
    }

    /// Expectation of the law.
    ///
    /// Uses the closed form `c/(c-1) (a^(1-c) - b^(1-c)) / (a^-c - b^-c)`,
    /// rewritten so that it stays finite through `c = 1`, where it becomes
    /// `ln(b/a) / (a^-1 (1 - a/b))`.
    pub fn mean(&self) -> f64 {
        self.c * self.a * exp_integral(1.0 - self.c, self.log_span) / self.mass()
    }

    /// `∫_a^y x^-c dx / (a^-c - b^-c)`, the building block of the
    /// integrated survival function.
    pub(crate) fn integrated_power(&self, y: f64) -> f64 {
        self.a * exp_integral(1.0 - self.c, (y / self.a).ln()) / self.mass()
    }

    /// Log-likelihood of `samples` (all assumed inside `[a, b]`).
    pub fn loglik(&self, samples: &[f64]) -> f64 {
        let n = samples.len() as f64;
        let sum_ln: f64 = samples.iter().map(|x| x.ln()).sum();
        n * self.c.ln() + n * (self.c * self.a.ln() - self.mass().ln()) - (self.c + 1.0) * sum_ln
    }
}

/// Bracket searched by [`tp_mle`].
pub const TP_MLE_BRACKET: (f64, f64) = (0.01, 20.0);
/// Bisection tolerance of [`tp_mle`].
pub const TP_MLE_TOL: f64 = 1e-8;

/// Maximum-likelihood tail exponent `c` of a truncated Pareto with fixed
/// bounds `[a, b]`.
///
/// The per-sample score is `1/c - L/expm1(c L) - mean(ln(x/a))` with
/// `L = ln(b/a)`; it is strictly decreasing in `c`, so the root is found by
/// bisection on [`TP_MLE_BRACKET`]. Callers following the usual convention
/// pass `b = max(samples)`, see [`tp_mle_observed_max`].
pub fn tp_mle(samples: &[f64], a: f64, b: f64) -> Result<FitResult> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::param(format!(
            "truncated Pareto fit needs 0 < a < b, got a={a}, b={b}"
        )));
    }
    require_samples(samples, 10, "truncated Pareto fit")?;
    if let Some(bad) = samples.iter().find(|&&x| x < a || x > b) {
        return Err(Error::data(format!("sample {bad} lies outside [{a}, {b}]")));
    }
    let n = samples.len() as f64;
    let span = (b / a).ln();
    let mean_log = samples.iter().map(|x| (x / a).ln()).sum::<f64>() / n;
    let score = |c: f64| 1.0 / c - span / (c * span).exp_m1() - mean_log;

    let (mut lo, mut hi) = TP_MLE_BRACKET;
    let (s_lo, s_hi) = (score(lo), score(hi));
    if !(s_lo > 0.0 && s_hi < 0.0) {
        return Err(Error::numeric(
            "truncated Pareto score has no root in the search bracket",
            Diagnostics::new()
                .with("c_lo", lo)
                .with("score_lo", s_lo)
                .with("c_hi", hi)
                .with("score_hi", s_hi)
                .with("mean_log_ratio", mean_log)
                .with("log_span", span),
        ));
    }
    while hi - lo > TP_MLE_TOL {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    // Observed information per sample: 1/c^2 - L^2 e^{cL} / expm1(cL)^2.
    let sinh = (0.5 * c * span).sinh();
    let info = 1.0 / (c * c) - span * span / (4.0 * sinh * sinh);
    let stderr = if info > 0.0 {
        1.0 / (n * info).sqrt()
    } else {
        f64::INFINITY
    };
    let law = TruncatedPareto::new(a, b, c)?;
    Ok(FitResult {
        names: vec!["c"],
        params: vec![c],
        stderr: vec![stderr],
        loglik: law.loglik(samples),
        n: samples.len(),
    })
}

/// [`tp_mle`] with the upper bound set to the largest observation.
pub fn tp_mle_observed_max(samples: &[f64], a: f64) -> Result<FitResult> {
    let b = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(b > a) {
        // Everything sits at (or below) the lower bound; the likelihood has
        // no interior maximum.
        return Err(Error::numeric(
            "degenerate truncated Pareto likelihood: no sample exceeds the lower bound",
            Diagnostics::new().with("a", a).with("max_sample", b),
        ));
    }
    tp_mle(samples, a, b)
}

// ---------------------------------------------------------------------------
// Exposure laws
// ---------------------------------------------------------------------------

/// Exponential law with rate `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialLaw {
    lambda: f64,
}

impl ExponentialLaw {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::param(format!(
                "exponential rate must be positive, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.lambda * (-self.lambda * x).exp()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.lambda * x).exp_m1()
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        standard_exponential(rng) / self.lambda
    }

    pub fn mle(samples: &[f64]) -> Result<FitResult> {
        require_samples(samples, 2, "exponential fit")?;
        require_positive(samples, "exponential fit")?;
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let lambda = 1.0 / mean;
        Ok(FitResult {
            names: vec!["lambda"],
            params: vec![lambda],
            stderr: vec![lambda / n.sqrt()],
            loglik: n * lambda.ln() - n,
            n: samples.len(),
        })
    }
}

/// Pareto law `P(T < x) = 1 - (x / t_min)^-alpha` for `x > t_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoLaw {
    t_min: f64,
    alpha: f64,
}

impl ParetoLaw {
    pub fn new(t_min: f64, alpha: f64) -> Result<Self> {
        if !(t_min.is_finite() && t_min > 0.0 && alpha.is_finite() && alpha > 0.0) {
            return Err(Error::param(format!(
                "Pareto law needs t_min > 0 and alpha > 0, got t_min={t_min}, alpha={alpha}"
            )));
        }
        Ok(Self { t_min, alpha })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.t_min {
            0.0
        } else {
            self.alpha / self.t_min * (x / self.t_min).powf(-self.alpha - 1.0)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.t_min {
            0.0
        } else {
            1.0 - (x / self.t_min).powf(-self.alpha)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.t_min * (standard_exponential(rng) / self.alpha).exp()
    }

    /// Fit with `t_min` pinned to the smallest sample.
    pub fn mle(samples: &[f64]) -> Result<FitResult> {
        require_samples(samples, 2, "Pareto fit")?;
        require_positive(samples, "Pareto fit")?;
        let n = samples.len() as f64;
        let t_min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let sum_log_ratio: f64 = samples.iter().map(|x| (x / t_min).ln()).sum();
        if sum_log_ratio <= 0.0 {
            return Err(Error::numeric(
                "degenerate Pareto likelihood: all samples equal",
                Diagnostics::new().with("t_min", t_min).with("n", n),
            ));
        }
        let alpha = n / sum_log_ratio;
        let sum_ln: f64 = samples.iter().map(|x| x.ln()).sum();
        Ok(FitResult {
            names: vec!["t_min", "alpha"],
            params: vec![t_min, alpha],
            stderr: vec![0.0, alpha / n.sqrt()],
            loglik: n * alpha.ln() + n * alpha * t_min.ln() - (alpha + 1.0) * sum_ln,
            n: samples.len(),
        })
    }
}

/// Exposure-duration law of a site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ExposureLaw {
    Exponential(ExponentialLaw),
    Pareto(ParetoLaw),
}

impl ExposureLaw {
    pub fn exponential(lambda: f64) -> Result<Self> {
        ExponentialLaw::new(lambda).map(ExposureLaw::Exponential)
    }

    pub fn pareto(t_min: f64, alpha: f64) -> Result<Self> {
        ParetoLaw::new(t_min, alpha).map(ExposureLaw::Pareto)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ExposureLaw::Exponential(law) => law.cdf(x),
            ExposureLaw::Pareto(law) => law.cdf(x),
        }
    }

    pub fn family(&self) -> ExposureFamily {
        match self {
            ExposureLaw::Exponential(_) => ExposureFamily::Exponential,
            ExposureLaw::Pareto(_) => ExposureFamily::Pareto,
        }
    }
}

/// Draw an exposure duration `T` from `law`.
pub fn exposure_sample<R: Rng + ?Sized>(law: &ExposureLaw, rng: &mut R) -> f64 {
    match law {
        ExposureLaw::Exponential(l) => l.sample(rng),
        ExposureLaw::Pareto(l) => l.sample(rng),
    }
}

/// Parses `exp:<lambda>` or `pareto:<t_min>:<alpha>`.
impl FromStr for ExposureLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| -> Result<f64> {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::param(format!("bad number {p:?} in exposure spec {s:?}")))
        };
        match parts.as_slice() {
            ["exp", lambda] => ExposureLaw::exponential(num(lambda)?),
            ["pareto", t_min, alpha] => ExposureLaw::pareto(num(t_min)?, num(alpha)?),
            _ => Err(Error::param(format!(
                "exposure spec must be exp:<lambda> or pareto:<t_min>:<alpha>, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for ExposureLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExposureLaw::Exponential(l) => write!(f, "exp:{}", l.lambda),
            ExposureLaw::Pareto(l) => write!(f, "pareto:{}:{}", l.t_min, l.alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExposureFamily {
    Exponential,
    Pareto,
}

impl fmt::Display for ExposureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExposureFamily::Exponential => "exponential",
            ExposureFamily::Pareto => "pareto",
        })
    }
}

/// Both candidate fits plus the selected family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExposureFit {
    pub family: ExposureFamily,
    pub fit: FitResult,
    /// Winning log-likelihood minus the losing one (never negative).
    pub loglik_gap: f64,
    pub exponential: FitResult,
    pub pareto: FitResult,
}

impl ExposureFit {
    /// The selected law with its fitted parameters.
    pub fn law(&self) -> Result<ExposureLaw> {
        match self.family {
            ExposureFamily::Exponential => ExposureLaw::exponential(self.fit.params[0]),
            ExposureFamily::Pareto => ExposureLaw::pareto(self.fit.params[0], self.fit.params[1]),
        }
    }
}

/// Fit exponential and Pareto (with `t_min = min(sample)`) exposure laws and
/// keep the one with the larger raw log-likelihood.
pub fn fit_exposure(samples: &[f64]) -> Result<ExposureFit> {
    require_samples(samples, 30, "exposure fit")?;
    let exponential = ExponentialLaw::mle(samples)?;
    let pareto = ParetoLaw::mle(samples)?;
    let gap = pareto.loglik - exponential.loglik;
    let (family, fit) = if gap > 0.0 {
        (ExposureFamily::Pareto, pareto.clone())
    } else {
        (ExposureFamily::Exponential, exponential.clone())
    };
    Ok(ExposureFit {
        family,
        fit,
        loglik_gap: gap.abs(),
        exponential,
        pareto,
    })
}

// ---------------------------------------------------------------------------
// Weibull
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeibullLaw {
    shape: f64,
    scale: f64,
}

impl WeibullLaw {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0) {
            return Err(Error::param(format!(
                "Weibull law needs shape > 0 and scale > 0, got shape={shape}, scale={scale}"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let z = x / self.scale;
        self.shape / self.scale * z.powf(self.shape - 1.0) * (-z.powf(self.shape)).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-(x / self.scale).powf(self.shape)).exp_m1()
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.scale * (-(-u).ln_1p()).powf(1.0 / self.shape)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * standard_exponential(rng).powf(1.0 / self.shape)
    }
}

pub const WEIBULL_MAX_ITER: usize = 200;
pub const WEIBULL_TOL: f64 = 1e-10;

/// Maximum-likelihood Weibull shape and scale.
///
/// Solves the profile equation
/// `1/k + mean(ln x) - Σ x^k ln x / Σ x^k = 0` with a bracketed Newton
/// iteration, then sets `scale = (Σ x^k / n)^(1/k)`. Samples are rescaled
/// by their maximum first so `x^k` cannot overflow.
pub fn weibull_mle(samples: &[f64]) -> Result<FitResult> {
    require_samples(samples, 10, "Weibull fit")?;
    require_positive(samples, "Weibull fit")?;
    let n = samples.len() as f64;
    let top = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let logs: Vec<f64> = samples.iter().map(|x| (x / top).ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / n;
    let var_log = logs.iter().map(|l| (l - mean_log).powi(2)).sum::<f64>() / n;
    if var_log <= 1e-24 {
        return Err(Error::numeric(
            "degenerate Weibull likelihood: all samples equal",
            Diagnostics::new().with("value", top).with("n", n),
        ));
    }

    // g(k) = 1/k + mean_log - S1/S0 is strictly decreasing in k.
    let moments = |k: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &logs {
            let w = (k * l).exp();
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        (s0, s1, s2)
    };
    let mut k = std::f64::consts::PI / (6.0 * var_log).sqrt();
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut converged = false;
    let mut last_step = f64::NAN;
    for _ in 0..WEIBULL_MAX_ITER {
        let (s0, s1, s2) = moments(k);
        let g = 1.0 / k + mean_log - s1 / s0;
        let dg = -1.0 / (k * k) - (s2 * s0 - s1 * s1) / (s0 * s0);
        if g > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let mut next = k - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * k
            };
        }
        last_step = (next - k).abs();
        k = next;
        if last_step <= WEIBULL_TOL * k.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged || !k.is_finite() {
        return Err(Error::numeric(
            "Weibull shape iteration did not converge",
            Diagnostics::new()
                .with("shape", k)
                .with("last_step", last_step)
                .with("max_iter", WEIBULL_MAX_ITER as f64),
        ));
    }
    let (s0, _, _) = moments(k);
    let scale = top * (s0 / n).powf(1.0 / k);
    let (loglik, stderr) = weibull_loglik_and_stderr(samples, k, scale);
    Ok(FitResult {
        names: vec!["shape", "scale"],
        params: vec![k, scale],
        stderr,
        loglik,
        n: samples.len(),
    })
}

fn weibull_loglik_and_stderr(samples: &[f64], k: f64, scale: f64) -> (f64, Vec<f64>) {
    let n = samples.len() as f64;
    let (mut sum_ln, mut sum_z, mut sum_zr, mut sum_zr2) = (0.0, 0.0, 0.0, 0.0);
    for &x in samples {
        let r = (x / scale).ln();
        let z = (k * r).exp();
        sum_ln += x.ln();
        sum_z += z;
        sum_zr += z * r;
        sum_zr2 += z * r * r;
    }
    let loglik = n * k.ln() - n * k * scale.ln() + (k - 1.0) * sum_ln - sum_z;
    // Observed information = minus the Hessian in (shape, scale).
    let i_kk = n / (k * k) + sum_zr2;
    let i_ss = -(n * k) / (scale * scale) + k * (k + 1.0) / (scale * scale) * sum_z;
    let i_ks = n / scale - (sum_z + k * sum_zr) / scale;
    let det = i_kk * i_ss - i_ks * i_ks;
    let stderr = if det > 0.0 {
        vec![(i_ss / det).sqrt(), (i_kk / det).sqrt()]
    } else {
        vec![f64::INFINITY, f64::INFINITY]
    };
    (loglik, stderr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    /// Composite Simpson rule, used as an independent oracle.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let n = if n % 2 == 0 { n } else { n + 1 };
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    /// Simpson in log space, which suits power laws spanning decades.
    fn log_simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        simpson(
            |s| {
                let x = s.exp().clamp(lo, hi);
                f(x) * x
            },
            lo.ln(),
            hi.ln(),
            20_000,
        )
    }

    fn ks(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn tp_pdf_examples() {
        let d = TruncatedPareto::new(1.0, 100.0, 1.5).unwrap();
        assert_eq!(d.pdf(0.5), 0.0);
        assert_relative_eq!(
            d.pdf(1.0),
            1.5 / (1.0 - 100f64.powf(-1.5)),
            max_relative = 1e-14
        );
        assert_relative_eq!(d.pdf(1.0), 1.5015015, max_relative = 1e-6);
        let d = TruncatedPareto::new(1.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(d.pdf(1.5), 2.0 / 2.25, max_relative = 1e-14);
        assert_eq!(d.pdf(2.5), 0.0);
    }

    #[test]
    fn tp_pdf_integrates_to_one() {
        for &(a, b) in &[(1.0, 2.0), (1.0, 100.0), (0.01, 1e5), (3.0, 3.5)] {
            for &c in &[0.3, 1.0, 1.1262, 1.5, 1.567, 4.0] {
                let d = TruncatedPareto::new(a, b, c).unwrap();
                let total = log_simpson(|x| d.pdf(x), a, b);
                assert!((total - 1.0).abs() < 1e-9, "a={a} b={b} c={c}: {total}");
            }
        }
    }

    #[test]
    fn tp_cdf_examples_and_bounds() {
        let d = TruncatedPareto::new(1.0, 100.0, 1.5).unwrap();
        assert_eq!(d.cdf(1.0), 0.0);
        assert_eq!(d.cdf(100.0), 1.0);
        let d = TruncatedPareto::new(1.0, 4.0, 1.0).unwrap();
        assert_relative_eq!(d.cdf(2.0), 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(d.sf(2.0), 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn tp_cdf_monotone_on_grid() {
        let d = TruncatedPareto::new(1.0, 1e4, 1.5).unwrap();
        let mut prev = -1.0;
        for i in 0..=10_000 {
            let x = 0.5 * (2e4f64).powf(i as f64 / 10_000.0);
            let f = d.cdf(x);
            assert!(f >= prev, "cdf decreased at {x}");
            prev = f;
        }
    }

    #[test]
    fn tp_mean_examples() {
        let d = TruncatedPareto::new(1.0, 100.0, 1.5).unwrap();
        let expected = 3.0 * (1.0 - 0.1) / (1.0 - 100f64.powf(-1.5));
        assert_relative_eq!(d.mean(), expected, max_relative = 1e-13);
        assert_relative_eq!(d.mean(), 2.7027, max_relative = 1e-4);

        let d = TruncatedPareto::new(1.0, 10.0, 1.0).unwrap();
        assert_relative_eq!(d.mean(), 10f64.ln() / 0.9, max_relative = 1e-13);
        assert_relative_eq!(d.mean(), 2.5584, max_relative = 1e-4);

        let d = TruncatedPareto::new(2.0, 2.0 * (1.0 + 1e-12), 1.7).unwrap();
        assert_relative_eq!(d.mean(), 2.0, max_relative = 1e-9);
    }

    #[test]
    fn tp_mean_matches_numeric_integral() {
        for &(a, b) in &[(1.0, 10.0), (1.0, 100.0), (0.5, 1e4)] {
            for &c in &[0.5, 0.999_999, 1.0, 1.000_001, 1.5, 3.0] {
                let d = TruncatedPareto::new(a, b, c).unwrap();
                let numeric = log_simpson(|x| x * d.pdf(x), a, b);
                assert_relative_eq!(d.mean(), numeric, max_relative = 1e-6);
                assert!(d.mean() > a && d.mean() < b);
            }
        }
    }

    #[test]
    fn tp_quantile_endpoints() {
        let d = TruncatedPareto::new(1.0, 100.0, 1.5).unwrap();
        assert_eq!(d.quantile(0.0), 1.0);
        assert_eq!(d.quantile(1.0), 100.0);
        assert_relative_eq!(d.cdf(d.quantile(0.37)), 0.37, max_relative = 1e-12);
    }

    #[test]
    fn tp_sampler_matches_cdf() {
        let d = TruncatedPareto::new(1.0, 100.0, 1.5).unwrap();
        let mut rng = stream(11, 0);
        let mut xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&x| (1.0..=100.0).contains(&x)));
        assert!(ks(&mut xs, |x| d.cdf(x)) < 0.01);
    }

    #[test]
    fn tp_sampler_is_deterministic() {
        let d = TruncatedPareto::new(1.0, 100.0, 1.5).unwrap();
        let a: Vec<f64> = {
            let mut r = stream(5, 5);
            (0..10).map(|_| d.sample(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = stream(5, 5);
            (0..10).map(|_| d.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn tp_rejects_bad_parameters() {
        assert!(matches!(
            TruncatedPareto::new(0.0, 1.0, 1.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            TruncatedPareto::new(2.0, 1.0, 1.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            TruncatedPareto::new(1.0, 2.0, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            TruncatedPareto::new(1.0, f64::NAN, 1.0),
            Err(Error::Parameter(_))
        ));
    }

    fn recover_tp(c: f64, b_true: f64, seed: u64) -> FitResult {
        let d = TruncatedPareto::new(1.0, b_true, c).unwrap();
        let mut rng = stream(seed, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        tp_mle_observed_max(&xs, 1.0).unwrap()
    }

    #[test]
    fn tp_mle_recovers_reference_exponents() {
        let fit = recover_tp(1.5670, 1e4, 21);
        let c = fit.params[0];
        assert!((1.52..=1.62).contains(&c), "c = {c}");
        let fit = recover_tp(1.1262, 1e5, 22);
        let c = fit.params[0];
        assert!((1.08..=1.18).contains(&c), "c = {c}");
        assert!(fit.stderr[0] > 0.0 && fit.stderr[0] < 0.05);
    }

    #[test]
    fn tp_mle_score_vanishes_at_estimate() {
        // Finite-difference oracle: the log-likelihood peaks at the estimate.
        let d = TruncatedPareto::new(1.0, 50.0, 0.8).unwrap();
        let mut rng = stream(3, 1);
        let xs: Vec<f64> = (0..2_000).map(|_| d.sample(&mut rng)).collect();
        let fit = tp_mle(&xs, 1.0, 50.0).unwrap();
        let c = fit.params[0];
        let ll = |c: f64| TruncatedPareto::new(1.0, 50.0, c).unwrap().loglik(&xs);
        assert!(ll(c) >= ll(c + 1e-4) && ll(c) >= ll(c - 1e-4));
        // Observed information against a second difference.
        let h = 1e-4;
        let curvature = -(ll(c + h) - 2.0 * ll(c) + ll(c - h)) / (h * h);
        assert_relative_eq!(fit.stderr[0], 1.0 / curvature.sqrt(), max_relative = 1e-3);
        assert_relative_eq!(fit.loglik, ll(c), max_relative = 1e-12);
    }

    #[test]
    fn tp_mle_degenerate_and_out_of_range() {
        let xs = vec![1.0; 50];
        assert!(matches!(tp_mle(&xs, 1.0, 10.0), Err(Error::Numeric { .. })));
        assert!(matches!(
            tp_mle_observed_max(&xs, 1.0),
            Err(Error::Numeric { .. })
        ));
        let mut ys = vec![2.0; 20];
        ys.push(0.5);
        assert!(matches!(tp_mle(&ys, 1.0, 10.0), Err(Error::Data(_))));
        assert!(matches!(tp_mle(&[2.0; 5], 1.0, 10.0), Err(Error::Data(_))));
    }

    #[test]
    fn weibull_mle_recovers_parameters() {
        let law = WeibullLaw::new(1.439, 10.834).unwrap();
        let mut rng = stream(31, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| law.sample(&mut rng)).collect();
        let fit = weibull_mle(&xs).unwrap();
        let (k, s) = (fit.params[0], fit.params[1]);
        assert!((1.41..=1.47).contains(&k), "shape {k}");
        assert!((10.6..=11.1).contains(&s), "scale {s}");
    }

    #[test]
    fn weibull_mle_on_exponential_data_has_unit_shape() {
        let law = ExponentialLaw::new(1.0).unwrap();
        let mut rng = stream(32, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| law.sample(&mut rng)).collect();
        let k = weibull_mle(&xs).unwrap().params[0];
        assert!((0.97..=1.03).contains(&k), "shape {k}");
    }

    #[test]
    fn weibull_mle_stationary_point_and_information() {
        let law = WeibullLaw::new(0.7, 3.0).unwrap();
        let mut rng = stream(33, 0);
        let xs: Vec<f64> = (0..3_000).map(|_| law.sample(&mut rng)).collect();
        let fit = weibull_mle(&xs).unwrap();
        let (k, s) = (fit.params[0], fit.params[1]);
        let ll = |k: f64, s: f64| weibull_loglik_and_stderr(&xs, k, s).0;
        let h = 1e-5;
        let dk = (ll(k + h, s) - ll(k - h, s)) / (2.0 * h);
        let ds = (ll(k, s + h) - ll(k, s - h)) / (2.0 * h);
        assert!(dk.abs() < 1e-3 && ds.abs() < 1e-3, "gradient {dk} {ds}");
        // Numeric Hessian oracle for the standard errors.
        let hkk = (ll(k + h, s) - 2.0 * ll(k, s) + ll(k - h, s)) / (h * h);
        let hss = (ll(k, s + h) - 2.0 * ll(k, s) + ll(k, s - h)) / (h * h);
        let hks = (ll(k + h, s + h) - ll(k + h, s - h) - ll(k - h, s + h) + ll(k - h, s - h))
            / (4.0 * h * h);
        let det = hkk * hss - hks * hks;
        assert_relative_eq!(fit.stderr[0], (-hss / det).sqrt(), max_relative = 1e-3);
        assert_relative_eq!(fit.stderr[1], (-hkk / det).sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn weibull_mle_errors() {
        assert!(matches!(
            weibull_mle(&[4.0; 20]),
            Err(Error::Numeric { .. })
        ));
        let mut xs = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        xs.push(0.0);
        assert!(matches!(weibull_mle(&xs), Err(Error::Data(_))));
        assert!(matches!(weibull_mle(&[1.0, 2.0]), Err(Error::Data(_))));
    }

    #[test]
    fn exposure_exponential_mean() {
        let law = ExposureLaw::exponential(0.25).unwrap();
        let mut rng = stream(41, 0);
        let mean = (0..100_000)
            .map(|_| exposure_sample(&law, &mut rng))
            .sum::<f64>()
            / 1e5;
        assert!((mean - 4.0).abs() < 0.02 * 4.0, "mean {mean}");
    }

    #[test]
    fn exposure_pareto_support_and_slope() {
        let law = ExposureLaw::pareto(1.0, 2.0).unwrap();
        let mut rng = stream(42, 0);
        assert!((0..10_000).all(|_| exposure_sample(&law, &mut rng) >= 1.0));

        // CCDF slope oracle: regress ln P(T > x) on ln x over the bulk.
        let law = ExposureLaw::pareto(1.0, 1.5).unwrap();
        let mut xs: Vec<f64> = (0..100_000)
            .map(|_| exposure_sample(&law, &mut rng))
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        let pts: Vec<(f64, f64)> = (0..n - 100)
            .step_by(97)
            .map(|i| (xs[i].ln(), ((n - i - 1) as f64 / n as f64).ln()))
            .collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (mx, my) = (sx / m, sy / m);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope + 1.5).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn exposure_spec_parsing() {
        let e: ExposureLaw = "exp:0.001".parse().unwrap();
        assert_eq!(e, ExposureLaw::exponential(0.001).unwrap());
        let p: ExposureLaw = "pareto:1:1.5".parse().unwrap();
        assert_eq!(p, ExposureLaw::pareto(1.0, 1.5).unwrap());
        assert_eq!(p.to_string().parse::<ExposureLaw>().unwrap(), p);
        assert!("exp:-1".parse::<ExposureLaw>().is_err());
        assert!("gamma:1".parse::<ExposureLaw>().is_err());
        assert!("pareto:1".parse::<ExposureLaw>().is_err());
    }

    #[test]
    fn fit_exposure_selects_generating_family() {
        let mut rng = stream(51, 0);
        let law = ExposureLaw::exponential(0.01).unwrap();
        let xs: Vec<f64> = (0..10_000)
            .map(|_| exposure_sample(&law, &mut rng))
            .collect();
        let fit = fit_exposure(&xs).unwrap();
        assert_eq!(fit.family, ExposureFamily::Exponential);
        assert!(fit.loglik_gap > 0.0);

        let law = ExposureLaw::pareto(1.0, 1.2).unwrap();
        let xs: Vec<f64> = (0..10_000)
            .map(|_| exposure_sample(&law, &mut rng))
            .collect();
        let fit = fit_exposure(&xs).unwrap();
        assert_eq!(fit.family, ExposureFamily::Pareto);
        assert!((fit.fit.params[1] - 1.2).abs() < 0.05);
    }

    #[test]
    fn fit_exposure_errors() {
        assert!(matches!(
            fit_exposure(&[3.0; 40]),
            Err(Error::Numeric { .. })
        ));
        assert!(matches!(fit_exposure(&[3.0; 10]), Err(Error::Data(_))));
    }

    #[test]
    fn laws_match_their_samplers() {
        let mut rng = stream(61, 0);
        let e = ExponentialLaw::new(2.0).unwrap();
        let mut xs: Vec<f64> = (0..100_000).map(|_| e.sample(&mut rng)).collect();
        assert!(ks(&mut xs, |x| e.cdf(x)) < 0.01);
        let p = ParetoLaw::new(2.0, 1.3).unwrap();
        let mut xs: Vec<f64> = (0..100_000).map(|_| p.sample(&mut rng)).collect();
        assert!(ks(&mut xs, |x| p.cdf(x)) < 0.01);
        let w = WeibullLaw::new(0.6, 5.0).unwrap();
        let mut xs: Vec<f64> = (0..100_000).map(|_| w.sample(&mut rng)).collect();
        assert!(ks(&mut xs, |x| w.cdf(x)) < 0.01);
        assert_relative_eq!(w.cdf(w.quantile(0.3)), 0.3, max_relative = 1e-12);
    }

    /// Coverage of ±3 standard errors over 50 replicates of 10^4 samples.
    #[test]
    fn mle_standard_errors_are_calibrated() {
        let replicates = 50;
        let covered = |f: &dyn Fn(u64) -> (f64, f64), truth: f64| {
            (0..replicates)
                .filter(|&r| {
                    let (est, se) = f(r);
                    (est - truth).abs() <= 3.0 * se
                })
                .count()
        };
        let tp = TruncatedPareto::new(1.0, 1e3, 1.3).unwrap();
        let n_tp = covered(
            &|r| {
                let mut rng = stream(700, r);
                let xs: Vec<f64> = (0..10_000).map(|_| tp.sample(&mut rng)).collect();
                let f = tp_mle(&xs, 1.0, 1e3).unwrap();
                (f.params[0], f.stderr[0])
            },
            1.3,
        );
        let wb = WeibullLaw::new(1.439, 10.834).unwrap();
        let n_wb = covered(
            &|r| {
                let mut rng = stream(701, r);
                let xs: Vec<f64> = (0..10_000).map(|_| wb.sample(&mut rng)).collect();
                let f = weibull_mle(&xs).unwrap();
                (f.params[0], f.stderr[0])
            },
            1.439,
        );
        let n_wb_scale = covered(
            &|r| {
                let mut rng = stream(701, r);
                let xs: Vec<f64> = (0..10_000).map(|_| wb.sample(&mut rng)).collect();
                let f = weibull_mle(&xs).unwrap();
                (f.params[1], f.stderr[1])
            },
            10.834,
        );
        let ex = ExponentialLaw::new(0.01).unwrap();
        let n_ex = covered(
            &|r| {
                let mut rng = stream(702, r);
                let xs: Vec<f64> = (0..10_000).map(|_| ex.sample(&mut rng)).collect();
                let f = ExponentialLaw::mle(&xs).unwrap();
                (f.params[0], f.stderr[0])
            },
            0.01,
        );
        let pa = ParetoLaw::new(1.0, 1.2).unwrap();
        let n_pa = covered(
            &|r| {
                let mut rng = stream(703, r);
                let xs: Vec<f64> = (0..10_000).map(|_| pa.sample(&mut rng)).collect();
                let f = ParetoLaw::mle(&xs).unwrap();
                (f.params[1], f.stderr[1])
            },
            1.2,
        );
        for (name, hits) in [
            ("truncated pareto", n_tp),
            ("weibull shape", n_wb),
            ("weibull scale", n_wb_scale),
            ("exponential", n_ex),
            ("pareto", n_pa),
        ] {
            assert!(hits >= 45, "{name}: {hits}/50 covered");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tp_quantile_inverts_cdf(a in 0.01f64..10.0, ratio in 1.01f64..1e4, c in 0.05f64..6.0, u in 0.0f64..1.0) {
                let d = TruncatedPareto::new(a, a * ratio, c).unwrap();
                let x = d.quantile(u);
                prop_assert!(x >= d.a() && x <= d.b());
                prop_assert!((d.cdf(x) - u).abs() < 1e-9);
                prop_assert!((d.cdf(x) + d.sf(x) - 1.0).abs() < 1e-9);
            }

            #[test]
            fn weibull_mle_is_scale_equivariant(k in 0.3f64..4.0, s in 0.1f64..100.0, factor in 0.01f64..100.0, seed in 0u64..1000) {
                let law = WeibullLaw::new(k, s).unwrap();
                let mut rng = stream(seed, 9);
                let xs: Vec<f64> = (0..200).map(|_| law.sample(&mut rng)).collect();
                let ys: Vec<f64> = xs.iter().map(|x| x * factor).collect();
                let fx = weibull_mle(&xs).unwrap();
                let fy = weibull_mle(&ys).unwrap();
                prop_assert!((fx.params[0] - fy.params[0]).abs() < 1e-7 * fx.params[0].max(1.0));
                prop_assert!((fx.params[1] * factor - fy.params[1]).abs() < 1e-7 * fy.params[1]);
            }
        }
    }
}
