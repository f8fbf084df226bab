//! Acceptance checks over the whole model, shared by `threadgrowth validate`
//! and the `acceptance` test target.
//!
//! Each criterion returns a list of [`Check`]s: a measured value, the bound
//! it must satisfy and the verdict. The closed-form laws under test are
//! reached through [`Predictors`] so that a broken predictor can be swapped
//! in and shown to fail.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::analytics::{
    density_slope, indegree_sup_distance, indegree_tail_exponent, ks_distance, ks_distance_rounded,
    loglog_regression, pooled_growth_curves, tail_classify, yule_ccdf_fn, GrowthSample, TailClass,
};
use crate::cli::{
    analyze_corpus, cmd_simulate, fit_corpus, AnalyzeSettings, FitTarget, SimulateArgs,
    SimulateConfig,
};
use crate::conversation::{
    indegree_histogram, predicted_indegree_cdf, predicted_size_cdf, simulate_size_analytic,
    simulate_thread_analytic, simulate_threads, ArrivalModel, Thread, ThreadModel, TopicParams,
};
use crate::distributions::{tp_mle, weibull_mle, ExposureLaw, TruncatedPareto};
use crate::error::{Error, Result};
use crate::ingestion::{parse_corpus, Format};
use crate::renewal::{forward_recurrence_sample, ForwardRecurrence};
use crate::rng::{stream, AUX_NAMESPACE};

/// Sample sizes and tolerances of a validation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Default,
    /// Smaller samples, every tolerance doubled.
    Tiny,
}

impl Scale {
    /// Multiplier applied to tolerances.
    pub fn tolerance(&self) -> f64 {
        match self {
            Scale::Default => 1.0,
            Scale::Tiny => 2.0,
        }
    }

    fn pick<T>(&self, default: T, tiny: T) -> T {
        match self {
            Scale::Default => default,
            Scale::Tiny => tiny,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Scale::Default),
            "tiny" => Ok(Scale::Tiny),
            _ => Err(Error::param(format!(
                "scale must be default or tiny, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Default => "default",
            Scale::Tiny => "tiny",
        })
    }
}

/// What a check's value must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Below(f64),
    AtLeast(f64),
    Within {
        target: f64,
        tol: f64,
    },
    Equals(f64),
    /// Reported only.
    Info,
}

impl Bound {
    fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::Below(limit) => v < limit,
            Bound::AtLeast(limit) => v >= limit,
            Bound::Within { target, tol } => (v - target).abs() <= tol,
            Bound::Equals(target) => v == target,
            Bound::Info => true,
        }
    }

    /// Distance to the edge of the bound; negative when violated.
    fn margin(&self, v: f64) -> Option<f64> {
        match *self {
            Bound::Below(limit) => Some(limit - v),
            Bound::AtLeast(limit) => Some(v - limit),
            Bound::Within { target, tol } => Some(tol - (v - target).abs()),
            Bound::Equals(target) => Some(0.0 - (v - target).abs()),
            Bound::Info => None,
        }
    }
}

/// Up to six decimals, trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Bound::Below(l) => write!(f, "< {}", short(l)),
            Bound::AtLeast(l) => write!(f, ">= {}", short(l)),
            Bound::Within { target, tol } => write!(f, "{} ± {}", short(target), short(tol)),
            Bound::Equals(t) => write!(f, "= {}", short(t)),
            Bound::Info => f.write_str("info"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl Check {
    pub fn new(criterion: u8, name: impl Into<String>, value: f64, bound: Bound) -> Check {
        Check {
            criterion,
            name: name.into(),
            value,
            pass: bound.holds(value),
            bound,
        }
    }

    fn flag(criterion: u8, name: impl Into<String>, ok: bool) -> Check {
        Check::new(
            criterion,
            name,
            if ok { 1.0 } else { 0.0 },
            Bound::Equals(1.0),
        )
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.bound, self.pass) {
            (Bound::Info, _) => "INFO",
            (_, true) => "PASS",
            (_, false) => "FAIL",
        };
        write!(
            f,
            "{verdict} [{}] {:<40} value {:<12} bound {}",
            self.criterion,
            self.name,
            short(self.value),
            self.bound
        )?;
        if let Some(m) = self.bound.margin(self.value) {
            write!(f, "  margin {m:.4}")?;
        }
        Ok(())
    }
}

/// Closed-form laws the checks compare against.
#[derive(Debug, Clone, Copy)]
pub struct Predictors {
    pub truncated_pareto_cdf: fn(&TruncatedPareto, f64) -> f64,
    pub forward_recurrence_cdf: fn(&ForwardRecurrence, f64) -> f64,
    pub size_cdf: fn(&TopicParams, f64) -> Result<f64>,
    pub indegree_cdf: fn(f64, f64) -> f64,
}

impl Default for Predictors {
    fn default() -> Self {
        Predictors {
            truncated_pareto_cdf: |law, x| law.cdf(x),
            forward_recurrence_cdf: |fr, y| fr.cdf(y),
            size_cdf: predicted_size_cdf,
            indegree_cdf: predicted_indegree_cdf,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationConfig {
    pub seed: u64,
    pub scale: Scale,
    pub predictors: Predictors,
}

impl ValidationConfig {
    pub fn new(seed: u64, scale: Scale) -> Self {
        ValidationConfig {
            seed,
            scale,
            predictors: Predictors::default(),
        }
    }

    fn tol(&self, t: f64) -> f64 {
        t * self.scale.tolerance()
    }

    fn rng(&self, criterion: u64, index: u64) -> crate::rng::StreamRng {
        stream(self.seed, AUX_NAMESPACE + criterion * 1_000_000 + index)
    }

    fn sub_seed(&self, criterion: u64) -> u64 {
        crate::rng::stream_seed(self.seed, AUX_NAMESPACE + criterion * 1_000_000 + 999_999)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.failed() == 0
    }
}

/// Run criteria 1 through 8 in order, handing each check to `on_check` as
/// soon as its criterion finishes.
pub fn run_all(cfg: &ValidationConfig, mut on_check: impl FnMut(&Check)) -> Result<Report> {
    let criteria: [fn(&ValidationConfig) -> Result<Vec<Check>>; 8] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
    ];
    let mut report = Report::default();
    for run in criteria {
        for check in run(cfg)? {
            on_check(&check);
            report.checks.push(check);
        }
    }
    Ok(report)
}

fn runtime(criterion: u8, start: Instant, limit: f64) -> Check {
    Check::new(
        criterion,
        "runtime_s",
        start.elapsed().as_secs_f64(),
        Bound::Below(limit),
    )
}

/// Draws in parallel chunks, chunk `j` on its own stream.
fn parallel_draws(
    cfg: &ValidationConfig,
    criterion: u64,
    n: usize,
    draw: impl Fn(&mut crate::rng::StreamRng) -> f64 + Sync,
) -> Vec<f64> {
    const CHUNK: usize = 1000;
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut rng = cfg.rng(criterion, j as u64);
            let len = CHUNK.min(n - j * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Truncated-Pareto sampler against its CDF, and recovery of two reference
/// exponents.
pub fn criterion_1(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let law = TruncatedPareto::new(1.0, 100.0, 1.5)?;
    let n = cfg.scale.pick(100_000, 10_000);
    let xs = parallel_draws(cfg, 1, n, |rng| law.sample(rng));
    let cdf = cfg.predictors.truncated_pareto_cdf;
    let mut out = vec![Check::new(
        1,
        "tp_sampler_ks",
        ks_distance(&xs, |x| cdf(&law, x))?,
        Bound::Below(cfg.tol(0.01)),
    )];
    for (k, &(b, c)) in [(1e4, 1.5670), (1e5, 1.1262)].iter().enumerate() {
        let truth = TruncatedPareto::new(1.0, b, c)?;
        let mut rng = cfg.rng(1, 1000 + k as u64);
        let xs: Vec<f64> = (0..10_000).map(|_| truth.sample(&mut rng)).collect();
        let fit = tp_mle(&xs, 1.0, b)?;
        out.push(Check::new(
            1,
            format!("tp_mle_c{c}"),
            fit.params[0],
            Bound::Within {
                target: c,
                tol: cfg.tol(0.05),
            },
        ));
    }
    out.push(runtime(1, start, 10.0));
    Ok(out)
}

/// Excess time of a long-running renewal process against the limiting law.
pub fn criterion_2(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let law = TruncatedPareto::new(1.0, 100.0, 1.5)?;
    let fr = ForwardRecurrence::new(law);
    let t0 = 1e4 * law.mean();
    let n = cfg.scale.pick(100_000, 10_000);
    let ys = parallel_draws(cfg, 2, n, |rng| forward_recurrence_sample(&law, t0, rng));
    let cdf = cfg.predictors.forward_recurrence_cdf;
    let ks = ks_distance(&ys, |y| cdf(&fr, y))?;
    let slope = density_slope(&ys, 10, law.a(), law.b() / 10.0, 10)?;
    Ok(vec![
        Check::new(2, "excess_ks_t0_1e4_mean", ks, Bound::Below(cfg.tol(0.02))),
        Check::new(
            2,
            "excess_density_log_slope",
            slope.slope,
            Bound::Within {
                target: -law.c(),
                tol: cfg.tol(0.1),
            },
        ),
        runtime(2, start, 60.0),
    ])
}

/// Parameters of the growth-law check.
pub fn growth_params() -> Result<TopicParams> {
    Ok(TopicParams {
        gamma: 0.05,
        c0: 0.5,
        m: 200,
        delta0: 1.0,
        exposure: ExposureLaw::exponential(0.001)?,
        waiting: TruncatedPareto::new(0.01, 1e5, 1.2)?,
    })
}

/// Pooled growth slopes of agent-simulated threads.
pub fn criterion_3(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let p = growth_params()?;
    let topics = cfg.scale.pick(500, 500);
    let threads = simulate_threads(
        &p,
        ThreadModel::Agent(ArrivalModel::FirstResponse),
        topics,
        cfg.sub_seed(3),
    )?;
    let samples: Vec<GrowthSample> = threads.iter().map(GrowthSample::from).collect();
    let curves = pooled_growth_curves(&samples, 10.0, 400.0, 20)?;
    let n_fit = loglog_regression(&curves.n_of_t)?;
    let r_fit = loglog_regression(&curves.dn_dt)?;
    let cp = p.c_prime();
    Ok(vec![
        Check::new(
            3,
            "slope_dN_dt",
            r_fit.slope,
            Bound::Within {
                target: cp - 1.0,
                tol: cfg.tol(0.1),
            },
        ),
        Check::new(
            3,
            "slope_N",
            n_fit.slope,
            Bound::Within {
                target: cp,
                tol: cfg.tol(0.05),
            },
        ),
        Check::new(
            3,
            "slope_difference",
            n_fit.slope - r_fit.slope,
            Bound::Within {
                target: 1.0,
                tol: cfg.tol(0.1),
            },
        ),
        runtime(3, start, 120.0),
    ])
}

/// Analytic-size parameters with exponential exposure and growth exponent
/// `c_prime`.
pub fn trichotomy_params(c_prime: f64) -> Result<TopicParams> {
    Ok(TopicParams {
        gamma: 1e6,
        c0: 1.5,
        m: 1,
        delta0: 1.0,
        exposure: ExposureLaw::exponential(1.0)?,
        waiting: TruncatedPareto::new(1.0, 1e4, 2.5 - c_prime)?,
    })
}

fn analytic_sizes(
    cfg: &ValidationConfig,
    criterion: u64,
    p: &TopicParams,
    n: usize,
) -> Result<Vec<f64>> {
    p.validate()?;
    Ok(parallel_draws(cfg, criterion, n, |rng| {
        simulate_size_analytic(p, rng)
            .map(|s| s as f64)
            .unwrap_or(f64::NAN)
    }))
}

/// Weibull shape, size-law KS and tail verdicts for `c' ∈ {0.5, 1, 2}`.
pub fn criterion_4(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut out = Vec::new();
    let cases = [
        (0.5, TailClass::Light),
        (1.0, TailClass::Exponential),
        (2.0, TailClass::Heavy),
    ];
    for (k, &(cp, expected)) in cases.iter().enumerate() {
        let p = trichotomy_params(cp)?;
        let n = cfg.scale.pick(100_000, 20_000);
        let sizes = analytic_sizes(cfg, 40 + k as u64, &p, n)?;
        let positive: Vec<f64> = sizes.iter().copied().filter(|&s| s > 0.0).collect();
        let shape = weibull_mle(&positive)?.params[0];
        out.push(Check::new(
            4,
            format!("weibull_shape_cprime_{cp}"),
            shape,
            Bound::Within {
                target: 1.0 / cp,
                tol: cfg.tol(0.05) / cp,
            },
        ));
        let size_cdf = cfg.predictors.size_cdf;
        let ks = ks_distance_rounded(&sizes, |x| size_cdf(&p, x).unwrap_or(f64::NAN))?;
        out.push(Check::new(
            4,
            format!("size_law_ks_cprime_{cp}"),
            ks,
            Bound::Below(cfg.tol(0.015)),
        ));

        let reps = 100u64;
        let per = cfg.scale.pick(5000, 2000);
        let hits = (0..reps)
            .into_par_iter()
            .map(|r| -> Result<bool> {
                let mut rng = cfg.rng(45 + k as u64, r);
                let xs: Vec<f64> = (0..per)
                    .map(|_| simulate_size_analytic(&p, &mut rng).map(|s| s as f64))
                    .collect::<Result<_>>()?;
                Ok(tail_classify(&xs)?.class == expected)
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&h| h)
            .count();
        let need = 100.0 - 5.0 * cfg.scale.tolerance();
        out.push(Check::new(
            4,
            format!("tail_{expected}_cprime_{cp}_of_100"),
            hits as f64,
            Bound::AtLeast(need),
        ));
    }
    out.push(runtime(4, start, 120.0));
    Ok(out)
}

/// Analytic-size parameters with Pareto exposure `(1, 1.5)` and `c' = 0.5`.
pub fn pareto_size_params() -> Result<TopicParams> {
    Ok(TopicParams {
        gamma: 1000.0,
        c0: 0.5,
        m: 1,
        delta0: 1.0,
        exposure: ExposureLaw::pareto(1.0, 1.5)?,
        waiting: TruncatedPareto::new(1.0, 1e4, 1.0)?,
    })
}

/// Size density slope and heavy-tail verdict under Pareto exposure.
pub fn criterion_5(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let p = pareto_size_params()?;
    let n = cfg.scale.pick(100_000, 20_000);
    let sizes = analytic_sizes(cfg, 5, &p, n)?;
    let alpha = 1.5;
    let slope = density_slope(&sizes, 10, 2.0 * p.gamma_prime(), f64::INFINITY, 10)?;
    let tail = tail_classify(&sizes)?;
    Ok(vec![
        Check::new(
            5,
            "size_density_log_slope",
            slope.slope,
            Bound::Within {
                target: -(alpha / p.c_prime() + 1.0),
                tol: cfg.tol(0.2),
            },
        ),
        Check::flag(5, "tail_verdict_heavy", tail.class == TailClass::Heavy),
        Check::flag(
            5,
            "ccdf_above_exponential_line",
            tail.above_exponential_line(),
        ),
        Check::new(5, "tail_log_ratio", tail.tail_log_ratio, Bound::Info),
        runtime(5, start, 60.0),
    ])
}

/// Analytic-thread parameters for the in-degree checks.
pub fn indegree_params(exposure: ExposureLaw) -> Result<TopicParams> {
    Ok(TopicParams {
        gamma: 2000.0,
        c0: 0.5,
        m: 1,
        delta0: 1.0,
        exposure,
        waiting: TruncatedPareto::new(1.0, 1e4, 1.0)?,
    })
}

/// Analytic threads, thread `k` on stream `k`, until at least `target`
/// comments are pooled.
fn threads_until(
    cfg: &ValidationConfig,
    criterion: u64,
    p: &TopicParams,
    target: usize,
) -> Result<Vec<Thread>> {
    let mut threads = Vec::new();
    let mut total = 0usize;
    let mut next = 0u64;
    while total < target {
        let batch: Vec<Thread> = (next..next + 32)
            .into_par_iter()
            .map(|k| simulate_thread_analytic(p, &mut cfg.rng(criterion, k)))
            .collect::<Result<_>>()?;
        next += 32;
        for t in batch {
            if total >= target {
                break;
            }
            total += t.size();
            threads.push(t);
        }
    }
    Ok(threads)
}

/// Pooled in-degree law of analytic threads under both exposure families.
pub fn criterion_6(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let target = cfg.scale.pick(100_000, 30_000);
    let mut out = Vec::new();
    let mut verdicts = Vec::new();
    let families = [
        ("exponential", ExposureLaw::exponential(1.0)?),
        ("pareto", ExposureLaw::pareto(1.0, 1.5)?),
    ];
    for (k, (name, law)) in families.into_iter().enumerate() {
        let p = indegree_params(law)?;
        let threads = threads_until(cfg, 60 + k as u64, &p, target)?;
        let hist = indegree_histogram(&threads, true);
        let d0 = p.delta0;
        let cdf = cfg.predictors.indegree_cdf;
        let sup = Check::new(
            6,
            format!("indegree_sup_{name}"),
            indegree_sup_distance(&hist, |l| 1.0 - cdf(d0, l)),
            Bound::Below(cfg.tol(0.02)),
        );
        let discrete = Check::new(
            6,
            format!("indegree_sup_discrete_yule_{name}"),
            indegree_sup_distance(&hist, yule_ccdf_fn(d0)),
            Bound::Info,
        );
        let fit = indegree_tail_exponent(&hist, Some(d0), 1, 10)?;
        let exponent = Check::new(
            6,
            format!("indegree_tail_exponent_{name}"),
            fit.exponent,
            Bound::Within {
                target: -(1.0 + d0),
                tol: cfg.tol(0.1),
            },
        );
        verdicts.push((sup.pass, exponent.pass));
        out.extend([sup, discrete, exponent]);
    }
    out.push(Check::flag(
        6,
        "verdict_unchanged_by_exposure",
        verdicts[0] == verdicts[1],
    ));
    out.push(runtime(6, start, 120.0));
    Ok(out)
}

/// `simulate` arguments of the end-to-end check.
pub fn pipeline_args(cfg: &ValidationConfig) -> SimulateArgs {
    SimulateArgs {
        topics: Some(100),
        seed: Some(cfg.sub_seed(7)),
        gamma: Some(1e-3),
        c: Some(1.2),
        c0: Some(1.0),
        m: Some(cfg.scale.pick(6000, 2000)),
        delta0: Some(1.0),
        exposure: Some("exp:0.0001".into()),
        a: Some(1.0),
        b: Some(1e5),
        model: Some("site".into()),
        spacing: Some(60.0),
        activity_users: Some(20),
        ..SimulateArgs::default()
    }
}

/// Simulate to files, parse them back and recover the generating
/// parameters.
pub fn criterion_7(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let dir = tempfile::tempdir()?;
    let mut args = pipeline_args(cfg);
    args.out = Some(dir.path().to_path_buf());
    let sim = SimulateConfig::resolve(args)?;
    let p = sim.params;
    cmd_simulate(&sim)?;
    let events = parse_corpus(&dir.path().join("events.jsonl"), Format::Jsonl)?;
    let activity = parse_corpus(&dir.path().join("activity.jsonl"), Format::Jsonl)?;

    let mut out = Vec::new();
    let waiting = fit_corpus(&activity, FitTarget::Waiting, Some(p.waiting.a()))?;
    let c_hat = waiting
        .iter()
        .find(|r| r.parameter == "c")
        .map(|r| r.estimate)
        .unwrap_or(f64::NAN);
    out.push(Check::new(
        7,
        "waiting_c",
        c_hat,
        Bound::Within {
            target: p.c(),
            tol: cfg.tol(0.05),
        },
    ));

    let exposure = fit_corpus(&events, FitTarget::Exposure, None)?;
    let selected = exposure
        .iter()
        .find(|r| r.selected)
        .map(|r| r.family.clone())
        .unwrap_or_default();
    out.push(Check::flag(
        7,
        "exposure_family_exponential",
        selected == "exponential",
    ));

    let settings = AnalyzeSettings {
        t_lo: 30.0,
        t_hi: 1000.0,
        ..AnalyzeSettings::default()
    };
    let an = analyze_corpus(&events, &settings)?;
    let get = |k: &str| an.value(k).unwrap_or(f64::NAN);
    let cp = p.c_prime();
    out.push(Check::new(
        7,
        "slope_N",
        get("slope_N"),
        Bound::Within {
            target: cp,
            tol: cfg.tol(0.05),
        },
    ));
    out.push(Check::new(
        7,
        "slope_dN_dt",
        get("slope_dN_dt"),
        Bound::Within {
            target: cp - 1.0,
            tol: cfg.tol(0.1),
        },
    ));
    out.push(Check::new(
        7,
        "indegree_tail_exponent",
        get("indegree_exponent"),
        Bound::Within {
            target: -(1.0 + p.delta0),
            tol: cfg.tol(0.1),
        },
    ));
    out.push(Check::new(7, "delta0_mle", get("delta0_mle"), Bound::Info));
    out.push(Check::new(7, "comments", get("comments"), Bound::Info));
    out.push(Check::new(
        7,
        "before_after_min",
        get("before_after_min"),
        Bound::Equals(1.0),
    ));
    out.push(Check::new(
        7,
        "before_after_max",
        get("before_after_max"),
        Bound::Equals(1.0),
    ));
    out.push(runtime(7, start, 120.0));
    Ok(out)
}

fn read_dir_sorted(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            files.push((
                entry.file_name().to_string_lossy().into_owned(),
                std::fs::read(entry.path())?,
            ));
        }
    }
    files.sort();
    Ok(files)
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Every command twice, with one and with several workers; outputs must be
/// byte-identical.
pub fn criterion_8(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    use crate::cli::{cmd_analyze, cmd_fit, AnalyzeArgs, FitArgs};

    let root = tempfile::tempdir()?;
    let mut out = Vec::new();
    let models = [
        ("site", None),
        ("agent", Some("first-response")),
        ("intensity", None),
        ("analytic", None),
    ];
    for (model, arrivals) in models {
        let mut runs = Vec::new();
        for (i, workers) in [1usize, 3].into_iter().enumerate() {
            let dir = root.path().join(format!("{model}-{i}"));
            let args = SimulateArgs {
                topics: Some(10),
                seed: Some(7),
                model: Some(model.into()),
                arrivals: arrivals.map(String::from),
                out: Some(dir.clone()),
                ..SimulateArgs::default()
            };
            let sim = SimulateConfig::resolve(args)?;
            in_pool(workers, || cmd_simulate(&sim))??;
            runs.push(read_dir_sorted(&dir)?);
        }
        out.push(Check::flag(
            8,
            format!("simulate_{model}_identical"),
            runs[0] == runs[1],
        ));
    }

    // Downstream commands on one shared input.
    let input_dir = root.path().join("input");
    let mut args = pipeline_args(cfg);
    args.m = Some(500);
    args.gamma = Some(0.01);
    args.out = Some(input_dir.clone());
    let sim = SimulateConfig::resolve(args)?;
    cmd_simulate(&sim)?;
    let mut fits = Vec::new();
    let mut analyses = Vec::new();
    for (i, workers) in [1usize, 3].into_iter().enumerate() {
        let mut fit_files = Vec::new();
        for (target, input) in [
            (FitTarget::Waiting, "activity.jsonl"),
            (FitTarget::Exposure, "events.jsonl"),
            (FitTarget::Size, "events.jsonl"),
        ] {
            let path = root.path().join(format!("fit-{target}-{i}.csv"));
            let args = FitArgs {
                input: input_dir.join(input),
                target,
                a: None,
                format: None,
                out: Some(path.clone()),
            };
            in_pool(workers, || cmd_fit(&args))??;
            fit_files.push(std::fs::read(path)?);
        }
        fits.push(fit_files);
        let dir = root.path().join(format!("analysis-{i}"));
        let args = AnalyzeArgs {
            input: input_dir.join("events.jsonl"),
            format: None,
            out: dir.clone(),
            t_lo: 10.0,
            t_hi: 300.0,
            grid: 20,
            bins_per_decade: 10,
            q: 0.95,
            delta0: None,
            l_min: 1,
            min_count: 10,
            exclude_root: false,
        };
        in_pool(workers, || cmd_analyze(&args))??;
        analyses.push(read_dir_sorted(&dir)?);
    }
    out.push(Check::flag(8, "fit_identical", fits[0] == fits[1]));
    out.push(Check::flag(
        8,
        "analyze_identical",
        analyses[0] == analyses[1],
    ));

    // The library drivers directly, beyond the command line.
    let p = growth_params()?;
    let a = in_pool(1, || {
        simulate_threads(
            &p,
            ThreadModel::Agent(ArrivalModel::FirstResponse),
            64,
            cfg.seed,
        )
    })??;
    let b = in_pool(4, || {
        simulate_threads(
            &p,
            ThreadModel::Agent(ArrivalModel::FirstResponse),
            64,
            cfg.seed,
        )
    })??;
    out.push(Check::flag(8, "thread_driver_identical", a == b));
    let draw = |w| in_pool(w, || parallel_draws(cfg, 8, 10_000, |rng| rng.gen::<f64>()));
    out.push(Check::flag(
        8,
        "parallel_draws_identical",
        draw(1)? == draw(4)?,
    ));
    Ok(out)
}
