//! Empirical distributions, regressions and growth curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::conversation::{yule_indegree_ccdf, Thread};
use crate::distributions::{weibull_mle, FitResult, WeibullLaw};
use crate::error::{Diagnostics, Error, Result};

/// A sampled curve with strictly increasing `x`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CurvePoints {
    pub points: Vec<(f64, f64)>,
}

impl CurvePoints {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Points with `lo <= x <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> CurvePoints {
        CurvePoints {
            points: self
                .points
                .iter()
                .copied()
                .filter(|&(x, _)| x >= lo && x <= hi)
                .collect(),
        }
    }

    /// CSV with a one-line header.
    pub fn to_csv(&self, x_name: &str, y_name: &str) -> String {
        let mut out = format!("{x_name},{y_name}\n");
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr_slope: f64,
    pub r2: f64,
    pub n: usize,
}

/// OLS of `y` on `x`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    if x.len() != y.len() {
        return Err(Error::data("regression inputs differ in length"));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::data(format!(
            "regression needs at least 3 points, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::data("regression inputs must be finite"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx <= 0.0 {
        return Err(Error::data(
            "regression needs at least two distinct x values",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2))
        .sum::<f64>();
    let stderr_slope = (sse / (nf - 2.0) / sxx).sqrt();
    let r2 = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RegressionFit {
        slope,
        intercept,
        stderr_slope,
        r2,
        n,
    })
}

/// OLS on `(ln x, ln y)`.
pub fn loglog_regression(curve: &CurvePoints) -> Result<RegressionFit> {
    if let Some(&(x, y)) = curve.points.iter().find(|&&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::data(format!(
            "log-log regression needs positive coordinates, got ({x}, {y})"
        )));
    }
    let lx: Vec<f64> = curve.points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = curve.points.iter().map(|p| p.1.ln()).collect();
    linear_regression(&lx, &ly)
}

/// OLS on `(x, ln y)`; points with `y <= 0` are skipped.
pub fn semilog_regression(curve: &CurvePoints) -> Result<RegressionFit> {
    let (x, ly): (Vec<f64>, Vec<f64>) = curve
        .points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(x, y)| (x, y.ln()))
        .unzip();
    linear_regression(&x, &ly)
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::data("empty sample"));
    }
    if let Some(bad) = samples.iter().find(|x| x.is_nan()) {
        return Err(Error::data(format!("sample contains {bad}")));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// `P(X > v)` at every distinct sample value `v`.
pub fn ccdf(samples: &[f64]) -> Result<CurvePoints> {
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        points.push((v, (xs.len() - j) as f64 / n));
        i = j;
    }
    Ok(CurvePoints { points })
}

/// One geometric bin of [`log_binned_histogram`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// `count / (n * (hi - lo))`.
    pub density: f64,
}

impl LogBin {
    /// Geometric midpoint.
    pub fn center(&self) -> f64 {
        (self.lo * self.hi).sqrt()
    }
}

/// Histogram on bins `[10^(j/k), 10^((j+1)/k))` with `k = bins_per_decade`.
/// Empty bins are omitted.
pub fn log_binned_histogram(samples: &[f64], bins_per_decade: u32) -> Result<Vec<LogBin>> {
    if bins_per_decade == 0 {
        return Err(Error::param("bins_per_decade must be positive"));
    }
    if samples.is_empty() {
        return Err(Error::data("empty sample"));
    }
    if let Some(bad) = samples.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::data(format!(
            "log binning needs positive samples, got {bad}"
        )));
    }
    let k = bins_per_decade as f64;
    let edge = |j: i64| 10f64.powf(j as f64 / k);
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &x in samples {
        let mut j = (x.log10() * k).floor() as i64;
        // Guard against rounding at the edges.
        if x < edge(j) {
            j -= 1;
        } else if x >= edge(j + 1) {
            j += 1;
        }
        *counts.entry(j).or_insert(0) += 1;
    }
    let n = samples.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(j, count)| {
            let (lo, hi) = (edge(j), edge(j + 1));
            LogBin {
                lo,
                hi,
                count,
                density: count as f64 / (n * (hi - lo)),
            }
        })
        .collect())
}

/// Log-binned density, `x` at each bin's geometric midpoint.
pub fn log_binned_density(samples: &[f64], bins_per_decade: u32) -> Result<CurvePoints> {
    Ok(CurvePoints {
        points: log_binned_histogram(samples, bins_per_decade)?
            .iter()
            .map(|b| (b.center(), b.density))
            .collect(),
    })
}

/// Log-log density slope using only bins with at least `min_count`
/// samples and midpoints in `[lo, hi]`.
pub fn density_slope(
    samples: &[f64],
    bins_per_decade: u32,
    lo: f64,
    hi: f64,
    min_count: u64,
) -> Result<RegressionFit> {
    let bins = log_binned_histogram(samples, bins_per_decade)?;
    let curve = CurvePoints {
        points: bins
            .iter()
            .filter(|b| b.count >= min_count && b.center() >= lo && b.center() <= hi)
            .map(|b| (b.center(), b.density))
            .collect(),
    };
    loglog_regression(&curve)
}

/// Kolmogorov-Smirnov distance `sup |F_n(x) - F(x)|`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max))
}

/// KS distance between integer-valued samples and a continuous law for the
/// unrounded quantity. The count `v` stands for the interval
/// `[v - 1/2, v + 1/2)`, so `F_n(v)` is compared with `F(v + 1/2)` and
/// `F_n(v-)` with `F(v - 1/2)`.
pub fn ks_distance_rounded(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        sup = sup
            .max((i as f64 / n - cdf(v - 0.5)).abs())
            .max((j as f64 / n - cdf(v + 0.5)).abs());
        i = j;
    }
    Ok(sup)
}

/// Value at sorted index `ceil(q n) - 1`.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailClass {
    Heavy,
    Light,
    Exponential,
}

impl std::fmt::Display for TailClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TailClass::Heavy => "heavy",
            TailClass::Light => "light",
            TailClass::Exponential => "exponential",
        })
    }
}

/// Dead band around Weibull shape 1 in [`tail_classify`].
pub const TAIL_EPSILON: f64 = 0.05;

/// Verdict of [`tail_classify`] with the supporting fits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub class: TailClass,
    /// Weibull fit to the excesses over the sample minimum.
    pub weibull: FitResult,
    /// Shifted exponential `P(X > x) = exp(-rate (x - location))` fitted by
    /// maximum likelihood.
    pub exp_location: f64,
    pub exp_rate: f64,
    /// Mean of `ln(empirical CCDF / exponential CCDF)` at the 0.99, 0.995
    /// and 0.999 quantiles; positive when the tail lies above the line.
    pub tail_log_ratio: f64,
    /// Straight-line fit of `ln P(X > x)` against `x`.
    pub ccdf_semilog: RegressionFit,
}

impl TailReport {
    pub fn weibull_law(&self) -> WeibullLaw {
        WeibullLaw::new(self.weibull.params[0], self.weibull.params[1])
            .expect("fitted Weibull parameters are positive")
    }

    pub fn above_exponential_line(&self) -> bool {
        self.tail_log_ratio > 0.0
    }
}

/// Classify a sample's tail by the Weibull shape of its excesses over the
/// minimum: below `1 - ε` heavy, above `1 + ε` light, otherwise
/// exponential.
///
/// Working with excesses makes the verdict insensitive to a location
/// offset: a Pareto sample starting at `x_min` is heavy, while its raw
/// values would fit a Weibull with a large shape.
pub fn tail_classify(samples: &[f64]) -> Result<TailReport> {
    if samples.len() < 100 {
        return Err(Error::data(format!(
            "tail classification needs at least 100 samples, got {}",
            samples.len()
        )));
    }
    let xs = sorted(samples)?;
    let location = xs[0];
    let excesses: Vec<f64> = xs
        .iter()
        .map(|x| x - location)
        .filter(|&e| e > 0.0)
        .collect();
    if excesses.len() < 10 {
        return Err(Error::numeric(
            "tail classification: fewer than 10 samples exceed the minimum",
            Diagnostics::new()
                .with("minimum", location)
                .with("n_excess", excesses.len() as f64),
        ));
    }
    let weibull = weibull_mle(&excesses)?;
    let shape = weibull.params[0];
    let class = if shape < 1.0 - TAIL_EPSILON {
        TailClass::Heavy
    } else if shape > 1.0 + TAIL_EPSILON {
        TailClass::Light
    } else {
        TailClass::Exponential
    };

    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let rate = 1.0 / (mean - location);
    let ratio_at = |q: f64| {
        let v = empirical_quantile(&xs, q);
        let above = xs.len() - xs.partition_point(|&x| x <= v);
        let emp = (above.max(1)) as f64 / n;
        emp.ln() + rate * (v - location)
    };
    let tail_log_ratio = [0.99, 0.995, 0.999]
        .iter()
        .map(|&q| ratio_at(q))
        .sum::<f64>()
        / 3.0;
    let ccdf_semilog = semilog_regression(&ccdf(&xs)?)?;
    Ok(TailReport {
        class,
        weibull,
        exp_location: location,
        exp_rate: rate,
        tail_log_ratio,
        ccdf_semilog,
    })
}

/// `(ln x, ln(-ln(1 - F_n(x))))` pairs; a Weibull sample lies on a line of
/// slope `shape`. Uses plotting positions `(i + 0.5) / n`.
pub fn weibull_plot(samples: &[f64]) -> Result<CurvePoints> {
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        let p = (i as f64 + 0.5) / n;
        let pt = (x.ln(), (-(-p).ln_1p()).ln());
        match points.last_mut() {
            Some(last) if last.0 == pt.0 => *last = pt,
            _ => points.push(pt),
        }
    }
    Ok(CurvePoints { points })
}

/// Quantile-quantile pairs `(theoretical, empirical)` at plotting positions
/// `(i + 0.5) / n`, thinned to at most `max_points`.
pub fn qq_points(
    samples: &[f64],
    quantile: impl Fn(f64) -> f64,
    max_points: usize,
) -> Result<Vec<(f64, f64)>> {
    let xs = sorted(samples)?;
    let n = xs.len();
    let step = n.div_ceil(max_points.max(1));
    Ok((0..n)
        .step_by(step)
        .map(|i| (quantile((i as f64 + 0.5) / n as f64), xs[i]))
        .collect())
}

/// Comment times of one thread observed up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSample {
    pub times: Vec<f64>,
    pub horizon: f64,
}

impl From<&Thread> for GrowthSample {
    fn from(thread: &Thread) -> Self {
        GrowthSample {
            times: thread.comment_times(),
            horizon: thread.exposure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCurves {
    /// Cumulative count at each grid node.
    pub n_of_t: CurvePoints,
    /// Rate on each grid cell, placed at the cell's geometric midpoint.
    pub dn_dt: CurvePoints,
}

/// `n_grid + 1` geometric nodes from `lo` to `hi` (the last node is `hi`).
pub fn geometric_grid(lo: f64, hi: f64, n_grid: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n_grid == 0 {
        return Err(Error::param(format!(
            "growth grid needs 0 < lo < hi and at least one cell, got lo={lo}, hi={hi}, cells={n_grid}"
        )));
    }
    let step = (hi / lo).ln() / n_grid as f64;
    let mut grid: Vec<f64> = (0..n_grid)
        .map(|j| (lo.ln() + j as f64 * step).exp())
        .collect();
    grid.push(hi);
    Ok(grid)
}

/// Growth curves of one thread on a geometric grid from its first positive
/// comment time to its last.
pub fn growth_curves(thread: &Thread, n_grid: usize) -> Result<GrowthCurves> {
    let times = thread.comment_times();
    if times.len() < 2 {
        return Err(Error::data(format!(
            "growth curves need at least 2 comments, got {}",
            times.len()
        )));
    }
    let lo = times
        .iter()
        .copied()
        .filter(|&t| t > 0.0)
        .fold(f64::INFINITY, f64::min);
    let hi = times.iter().copied().fold(0.0, f64::max);
    if !(lo < hi) {
        return Err(Error::data(
            "growth curves need comments at two distinct positive times",
        ));
    }
    pooled_growth_curves(&[GrowthSample { times, horizon: hi }], lo, hi, n_grid)
}

/// Growth curves pooled over threads, each observed only up to its own
/// horizon.
///
/// `N(t_j)` averages the cumulative count over threads still observed at
/// `t_j`. The rate on cell `(t_j, t_{j+1}]` is the number of comments in the
/// cell from threads observed through `t_{j+1}`, divided by their number
/// and the cell width. Nodes and cells with a zero value are left out so
/// the curves can go straight into [`loglog_regression`].
pub fn pooled_growth_curves(
    samples: &[GrowthSample],
    lo: f64,
    hi: f64,
    n_grid: usize,
) -> Result<GrowthCurves> {
    let grid = geometric_grid(lo, hi, n_grid)?;
    let cells = grid.len() - 1;
    let mut cum = vec![0.0f64; grid.len()];
    let mut alive_at = vec![0usize; grid.len()];
    let mut cell_counts = vec![0.0f64; cells];
    for s in samples {
        let mut times = s.times.clone();
        times.sort_by(f64::total_cmp);
        let counts: Vec<usize> = grid
            .iter()
            .map(|&t| times.partition_point(|&x| x <= t))
            .collect();
        for (j, &t) in grid.iter().enumerate() {
            if s.horizon >= t {
                alive_at[j] += 1;
                cum[j] += counts[j] as f64;
                if j > 0 {
                    cell_counts[j - 1] += (counts[j] - counts[j - 1]) as f64;
                }
            }
        }
    }
    let mut n_of_t = Vec::new();
    let mut dn_dt = Vec::new();
    for j in 0..grid.len() {
        if alive_at[j] > 0 && cum[j] > 0.0 {
            n_of_t.push((grid[j], cum[j] / alive_at[j] as f64));
        }
        if j < cells && alive_at[j + 1] > 0 && cell_counts[j] > 0.0 {
            let width = grid[j + 1] - grid[j];
            dn_dt.push((
                (grid[j] * grid[j + 1]).sqrt(),
                cell_counts[j] / (alive_at[j + 1] as f64 * width),
            ));
        }
    }
    Ok(GrowthCurves {
        n_of_t: CurvePoints { points: n_of_t },
        dn_dt: CurvePoints { points: dn_dt },
    })
}

/// Empirical `P(K >= l)` for every `l` from 0 to the largest degree.
pub fn indegree_ccdf(hist: &BTreeMap<u32, u64>) -> CurvePoints {
    let total: u64 = hist.values().sum();
    let Some(&max) = hist.keys().next_back() else {
        return CurvePoints::default();
    };
    let mut at_least = total;
    let mut points = Vec::with_capacity(max as usize + 1);
    for l in 0..=max {
        points.push((l as f64, at_least as f64 / total as f64));
        at_least -= hist.get(&l).copied().unwrap_or(0);
    }
    CurvePoints { points }
}

/// `sup_l |P_n(K >= l) - ccdf(l)|` over `l = 0..=max + 1`.
pub fn indegree_sup_distance(hist: &BTreeMap<u32, u64>, ccdf_law: impl Fn(f64) -> f64) -> f64 {
    let emp = indegree_ccdf(hist);
    let beyond = emp.points.last().map(|p| p.0 + 1.0).unwrap_or(0.0);
    emp.points
        .iter()
        .map(|&(l, p)| (p - ccdf_law(l)).abs())
        .chain(std::iter::once(ccdf_law(beyond).abs()))
        .fold(0.0, f64::max)
}

/// Tail exponent of an in-degree distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailExponentFit {
    /// Slope of `ln P(K >= l)` against `ln(l + 3δ0/2)`; the Yule law
    /// predicts `-(1 + δ0)`.
    pub exponent: f64,
    pub stderr: f64,
    pub delta0: f64,
    /// Zero when `δ0` was supplied rather than estimated.
    pub delta0_stderr: f64,
    pub regression: RegressionFit,
}

/// Log-spaced degrees at which the tail regression is evaluated.
fn tail_degrees(l_min: u32, max: u32) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    let mut j = 0;
    loop {
        let l = 10f64.powf(j as f64 / 20.0).round() as u32;
        j += 1;
        if l > max {
            break;
        }
        if l >= l_min && out.last() != Some(&l) {
            out.push(l);
        }
    }
    out
}

/// Fit the in-degree tail by regressing `ln P(K >= l)` on `ln(l + 3δ0/2)`
/// over log-spaced `l >= l_min` where at least `min_count` nodes have
/// degree `>= l`.
///
/// The shift makes the regressor exact to second order for the discrete
/// law `Γ(l+δ0)/Γ(l+1+2δ0) ≈ (l + 3δ0/2)^-(1+δ0)`, so small degrees can
/// enter the fit without bending it. When `delta0` is `None` it is estimated by maximum
/// likelihood under the discrete Yule law.
pub fn indegree_tail_exponent(
    hist: &BTreeMap<u32, u64>,
    delta0: Option<f64>,
    l_min: u32,
    min_count: u64,
) -> Result<TailExponentFit> {
    let total: u64 = hist.values().sum();
    if total == 0 {
        return Err(Error::data("empty in-degree histogram"));
    }
    let (delta0, delta0_stderr) = match delta0 {
        Some(d) if d > 0.0 => (d, 0.0),
        Some(d) => return Err(Error::param(format!("delta0 must be > 0, got {d}"))),
        None => yule_delta0_mle(hist)?,
    };
    let emp = indegree_ccdf(hist);
    let max = hist.keys().next_back().copied().unwrap_or(0);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for l in tail_degrees(l_min.max(1), max) {
        let p = emp.points[l as usize].1;
        if (p * total as f64).round() as u64 >= min_count {
            x.push((l as f64 + 1.5 * delta0).ln());
            y.push(p.ln());
        }
    }
    let regression = linear_regression(&x, &y)?;
    Ok(TailExponentFit {
        exponent: regression.slope,
        stderr: regression.stderr_slope,
        delta0,
        delta0_stderr,
        regression,
    })
}

fn yule_loglik(hist: &BTreeMap<u32, u64>, delta0: f64) -> f64 {
    // p_k = P(K >= k) (1 - (k + δ0)/(k + 1 + 2δ0)); accumulate the product
    // in log space.
    let mut ll = 0.0;
    let mut log_tail = 0.0;
    let mut k = 0u32;
    for (&deg, &count) in hist {
        while k < deg {
            let kf = k as f64;
            log_tail += ((kf + delta0) / (kf + 1.0 + 2.0 * delta0)).ln();
            k += 1;
        }
        let kf = deg as f64;
        let stop = (1.0 + delta0) / (kf + 1.0 + 2.0 * delta0);
        ll += count as f64 * (log_tail + stop.ln());
    }
    ll
}

/// Maximum-likelihood `δ0` under the discrete Yule in-degree law, found by
/// golden-section search on `ln δ0 ∈ [ln 0.01, ln 100]`.
pub fn yule_delta0_mle(hist: &BTreeMap<u32, u64>) -> Result<(f64, f64)> {
    if hist.values().sum::<u64>() < 2 {
        return Err(Error::data("delta0 fit needs at least 2 nodes"));
    }
    let f = |s: f64| yule_loglik(hist, s.exp());
    let (mut lo, mut hi) = (0.01f64.ln(), 100f64.ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-10 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let d = (0.5 * (lo + hi)).exp();
    if d < 0.0101 || d > 99.0 {
        return Err(Error::numeric(
            "delta0 estimate ran into the search bracket",
            Diagnostics::new().with("delta0", d),
        ));
    }
    let h = 1e-4 * d;
    let ll = |x: f64| yule_loglik(hist, x);
    let curvature = -(ll(d + h) - 2.0 * ll(d) + ll(d - h)) / (h * h);
    let se = if curvature > 0.0 {
        1.0 / curvature.sqrt()
    } else {
        f64::INFINITY
    };
    Ok((d, se))
}

/// Exact discrete Yule tail `P(K >= l)` as a function usable with
/// [`indegree_sup_distance`].
pub fn yule_ccdf_fn(delta0: f64) -> impl Fn(f64) -> f64 {
    move |l: f64| yule_indegree_ccdf(delta0, l.max(0.0).round() as u64)
}
