//! Command-line front end: `simulate`, `fit`, `analyze` and `validate`.
//!
//! Every file a command writes starts with a `#` line holding the effective
//! invocation (defaults filled in, seed included). `--workers` and `--out`
//! are left out of that line because they never change the content.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    ccdf, indegree_ccdf, indegree_sup_distance, indegree_tail_exponent, ks_distance_rounded,
    log_binned_density, loglog_regression, pooled_growth_curves, qq_points, tail_classify,
    weibull_plot, yule_ccdf_fn, yule_delta0_mle, CurvePoints, GrowthSample, RegressionFit,
};
use crate::conversation::{
    indegree_histogram, predicted_indegree_cdf, simulate_site, simulate_threads, ArrivalModel,
    SiteOptions, Thread, ThreadModel, TopicParams,
};
use crate::distributions::{
    fit_exposure, tp_mle, weibull_mle, ExposureLaw, FitResult, ParetoLaw, TruncatedPareto,
    WeibullLaw,
};
use crate::error::{Error, Result};
use crate::ingestion::{
    before_after_ratio, detect_inflection, exposure_durations, parse_corpus, to_seconds,
    waiting_times, Corpus, Format, ParseReport, RawComment, Topic, SECONDS_PER_UNIT,
};
use crate::validation::{self, Scale, ValidationConfig};

#[derive(Debug, Parser)]
#[command(
    name = "threadgrowth",
    version,
    about = "Simulate, fit and analyze the growth of conversation threads"
)]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate topics and write events, summary and user activity.
    Simulate(SimulateArgs),
    /// Fit waiting-time, exposure or size laws to a corpus.
    Fit(FitArgs),
    /// Growth curves, size and in-degree laws of a corpus.
    Analyze(AnalyzeArgs),
    /// Run the acceptance checks.
    Validate(ValidateArgs),
}

/// Flags of `simulate`. Each may also come from the flat JSON object given
/// by `--config`; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of topics [default: 100].
    #[arg(long)]
    pub topics: Option<usize>,
    /// Base seed [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Interestingness scale γ [default: 0.05].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Waiting-time exponent [default: 1.2].
    #[arg(long)]
    pub c: Option<f64>,
    /// Social-feedback exponent [default: 0.5].
    #[arg(long)]
    pub c0: Option<f64>,
    /// Number of users [default: 200].
    #[arg(long = "M")]
    #[serde(rename = "M", alias = "m")]
    pub m: Option<usize>,
    /// Yule offset [default: 1.0].
    #[arg(long)]
    pub delta0: Option<f64>,
    /// `exp:<lambda>` or `pareto:<t_min>:<alpha>` [default: exp:0.001].
    #[arg(long)]
    pub exposure: Option<String>,
    /// Waiting-time lower bound, minutes [default: 1].
    #[arg(long)]
    pub a: Option<f64>,
    /// Waiting-time upper bound, minutes [default: 10000].
    #[arg(long)]
    pub b: Option<f64>,
    /// site, agent, intensity or analytic [default: site].
    #[arg(long)]
    pub model: Option<String>,
    /// Arrival rule of the agent model [default: first-response].
    #[arg(long)]
    pub arrivals: Option<String>,
    /// Minutes between topic releases [default: 60].
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Site warm-up before the first release, minutes.
    #[arg(long)]
    pub warmup: Option<f64>,
    /// Users whose full comment history goes to activity.jsonl [default: 20].
    #[arg(long)]
    #[serde(alias = "activity-users")]
    pub activity_users: Option<usize>,
    /// jsonl or csv [default: jsonl].
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SimulateArgs {
    fn or(self, other: SimulateArgs) -> SimulateArgs {
        SimulateArgs {
            config: self.config,
            topics: self.topics.or(other.topics),
            seed: self.seed.or(other.seed),
            gamma: self.gamma.or(other.gamma),
            c: self.c.or(other.c),
            c0: self.c0.or(other.c0),
            m: self.m.or(other.m),
            delta0: self.delta0.or(other.delta0),
            exposure: self.exposure.or(other.exposure),
            a: self.a.or(other.a),
            b: self.b.or(other.b),
            model: self.model.or(other.model),
            arrivals: self.arrivals.or(other.arrivals),
            spacing: self.spacing.or(other.spacing),
            warmup: self.warmup.or(other.warmup),
            activity_users: self.activity_users.or(other.activity_users),
            format: self.format.or(other.format),
            out: self.out.or(other.out),
        }
    }
}

/// Generator behind `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimModel {
    /// Users with shared renewal clocks across all topics.
    Site,
    Thread(ThreadModel),
}

/// Fully resolved `simulate` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub topics: usize,
    pub seed: u64,
    pub params: TopicParams,
    pub model: SimModel,
    pub spacing: f64,
    pub warmup: Option<f64>,
    pub activity_users: usize,
    pub format: Format,
    pub out: PathBuf,
}

impl SimulateConfig {
    pub fn resolve(args: SimulateArgs) -> Result<SimulateConfig> {
        let args = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let file: SimulateArgs = serde_json::from_str(&text)
                    .map_err(|e| Error::param(format!("config {}: {e}", path.display())))?;
                args.or(file)
            }
            None => args,
        };
        let exposure: ExposureLaw = args.exposure.as_deref().unwrap_or("exp:0.001").parse()?;
        let waiting = TruncatedPareto::new(
            args.a.unwrap_or(1.0),
            args.b.unwrap_or(1e4),
            args.c.unwrap_or(1.2),
        )?;
        let params = TopicParams {
            gamma: args.gamma.unwrap_or(0.05),
            c0: args.c0.unwrap_or(0.5),
            m: args.m.unwrap_or(200),
            delta0: args.delta0.unwrap_or(1.0),
            exposure,
            waiting,
        };
        params.validate()?;
        let arrivals: ArrivalModel = args
            .arrivals
            .as_deref()
            .unwrap_or("first-response")
            .parse()?;
        let model = match args.model.as_deref().unwrap_or("site") {
            "site" => SimModel::Site,
            "agent" => SimModel::Thread(ThreadModel::Agent(arrivals)),
            "intensity" => SimModel::Thread(ThreadModel::Intensity),
            "analytic" => SimModel::Thread(ThreadModel::Analytic),
            other => {
                return Err(Error::param(format!(
                    "model must be site, agent, intensity or analytic, got {other:?}"
                )))
            }
        };
        let topics = args.topics.unwrap_or(100);
        if topics == 0 {
            return Err(Error::param("at least one topic is required"));
        }
        let spacing = args.spacing.unwrap_or(60.0);
        if !(spacing.is_finite() && spacing >= 0.0) {
            return Err(Error::param(format!("spacing must be >= 0, got {spacing}")));
        }
        if let Some(w) = args.warmup {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::param(format!("warmup must be >= 0, got {w}")));
            }
        }
        Ok(SimulateConfig {
            topics,
            seed: args.seed.unwrap_or(42),
            params,
            model,
            spacing,
            warmup: args.warmup,
            activity_users: args.activity_users.unwrap_or(20),
            format: args.format.as_deref().unwrap_or("jsonl").parse()?,
            out: args.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// Canonical command line for the output headers.
    pub fn invocation(&self) -> String {
        let p = &self.params;
        let w = &p.waiting;
        let mut s = format!(
            "threadgrowth simulate --topics {} --seed {} --gamma {} --c {} --c0 {} --M {} --delta0 {} --exposure {} --a {} --b {}",
            self.topics, self.seed, p.gamma, w.c(), p.c0, p.m, p.delta0, p.exposure, w.a(), w.b()
        );
        match self.model {
            SimModel::Site => s.push_str(" --model site"),
            SimModel::Thread(ThreadModel::Agent(arr)) => {
                let _ = write!(s, " --model agent --arrivals {arr}");
            }
            SimModel::Thread(ThreadModel::Intensity) => s.push_str(" --model intensity"),
            SimModel::Thread(ThreadModel::Analytic) => s.push_str(" --model analytic"),
        }
        let _ = write!(s, " --spacing {}", self.spacing);
        if let Some(w) = self.warmup {
            let _ = write!(s, " --warmup {w}");
        }
        if self.model == SimModel::Site {
            let _ = write!(s, " --activity-users {}", self.activity_users);
        }
        let _ = write!(s, " --format {}", format_name(self.format));
        s
    }
}

fn format_name(format: Format) -> &'static str {
    match format {
        Format::Jsonl => "jsonl",
        Format::Csv => "csv",
    }
}

fn extension(format: Format) -> &'static str {
    format_name(format)
}

/// In-memory result of `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub releases: Vec<f64>,
    pub threads: Vec<Thread>,
    pub corpus: Corpus,
    /// Site runs only: the tracked users' comment histories as a one-topic
    /// corpus.
    pub activity: Option<Corpus>,
}

pub fn simulate(cfg: &SimulateConfig) -> Result<Simulation> {
    let (releases, threads, activity) = match cfg.model {
        SimModel::Site => {
            let opts = SiteOptions {
                topics: cfg.topics,
                spacing: cfg.spacing,
                warmup: cfg.warmup,
                activity_users: cfg.activity_users,
            };
            let run = simulate_site(&cfg.params, &opts, cfg.seed)?;
            let activity = activity_corpus(run.releases[0], &run.activity);
            (run.releases, run.threads, Some(activity))
        }
        SimModel::Thread(model) => {
            let mut threads = simulate_threads(&cfg.params, model, cfg.topics, cfg.seed)?;
            // Users are not shared between independently simulated topics.
            for t in &mut threads {
                for e in &mut t.events {
                    e.user = None;
                }
            }
            let releases = (0..cfg.topics).map(|k| k as f64 * cfg.spacing).collect();
            (releases, threads, None)
        }
    };
    let ids: Vec<String> = (0..threads.len()).map(|k| format!("t{k}")).collect();
    let created: Vec<i64> = releases.iter().map(|&r| to_seconds(r)).collect();
    let corpus = Corpus::from_threads(&ids, &created, &threads);
    Ok(Simulation {
        releases,
        threads,
        corpus,
        activity,
    })
}

fn activity_corpus(start: f64, activity: &[(usize, Vec<f64>)]) -> Corpus {
    let mut comments: Vec<RawComment> = Vec::new();
    for (user, times) in activity {
        for &t in times {
            comments.push(RawComment {
                comment_id: String::new(),
                parent_id: String::new(),
                user_id: format!("u{user}"),
                ts: to_seconds(t),
                line: 0,
            });
        }
    }
    comments.sort_by(|x, y| x.ts.cmp(&y.ts).then_with(|| x.user_id.cmp(&y.user_id)));
    for (i, c) in comments.iter_mut().enumerate() {
        c.comment_id = (i + 1).to_string();
    }
    let mut topics = IndexMap::new();
    topics.insert(
        "activity".to_string(),
        Topic {
            created_at: to_seconds(start),
            removed_at: None,
            category: None,
            comments,
        },
    );
    Corpus {
        topics,
        report: ParseReport::default(),
    }
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    topic: &'a str,
    created_at: i64,
    #[serde(rename = "T")]
    exposure: f64,
    #[serde(rename = "N")]
    size: usize,
    max_indegree: u32,
}

fn create(dir: &Path, name: &str, header: &str) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    writeln!(w, "# {header}")?;
    Ok(w)
}

/// Run `simulate` and write its files; returns the paths written.
pub fn cmd_simulate(cfg: &SimulateConfig) -> Result<Vec<PathBuf>> {
    let sim = simulate(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let header = cfg.invocation();
    let ext = extension(cfg.format);
    let mut written = Vec::new();

    let name = format!("events.{ext}");
    let mut w = create(&cfg.out, &name, &header)?;
    sim.corpus.write(&mut w, cfg.format)?;
    w.flush()?;
    written.push(cfg.out.join(name));

    if let Some(activity) = &sim.activity {
        let name = format!("activity.{ext}");
        let mut w = create(&cfg.out, &name, &header)?;
        activity.write(&mut w, cfg.format)?;
        w.flush()?;
        written.push(cfg.out.join(name));
    }

    let mut w = create(&cfg.out, "summary.csv", &header)?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        for ((id, topic), thread) in sim.corpus.topics.iter().zip(&sim.threads) {
            csv.serialize(SummaryRow {
                topic: id,
                created_at: topic.created_at,
                exposure: thread.exposure,
                size: thread.size(),
                max_indegree: thread.max_indegree(),
            })?;
        }
        csv.flush()?;
    }
    w.flush()?;
    written.push(cfg.out.join("summary.csv"));
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitTarget {
    /// Per-user gaps between consecutive comments (truncated Pareto).
    Waiting,
    /// Topic exposure durations (exponential vs Pareto).
    Exposure,
    /// Comments per topic (Weibull vs Pareto).
    Size,
}

impl std::fmt::Display for FitTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitTarget::Waiting => "waiting",
            FitTarget::Exposure => "exposure",
            FitTarget::Size => "size",
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Corpus (JSONL or CSV).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub target: FitTarget,
    /// Lower bound for waiting times, minutes [default: smallest gap].
    #[arg(long)]
    pub a: Option<f64>,
    /// jsonl or csv [default: from the file extension].
    #[arg(long)]
    pub format: Option<String>,
    /// Output CSV [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One row of the `fit` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub target: String,
    pub family: String,
    pub selected: bool,
    pub parameter: String,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub loglik: f64,
    pub n: usize,
    pub loglik_gap: Option<f64>,
}

fn input_format(path: &Path, flag: Option<&str>) -> Result<Format> {
    match flag {
        Some(f) => f.parse(),
        None => Ok(Format::from_path(path)),
    }
}

fn warn(report: &ParseReport) {
    for w in report.warnings() {
        eprintln!("warning: {w}");
    }
}

fn fit_rows(
    target: FitTarget,
    family: &str,
    selected: bool,
    fit: &FitResult,
    gap: Option<f64>,
) -> Vec<FitRow> {
    fit.names
        .iter()
        .zip(&fit.params)
        .zip(&fit.stderr)
        .map(|((name, &est), &se)| FitRow {
            target: target.to_string(),
            family: family.to_string(),
            selected,
            parameter: name.to_string(),
            estimate: est,
            stderr: Some(se),
            loglik: fit.loglik,
            n: fit.n,
            loglik_gap: gap,
        })
        .collect()
}

/// Estimates for one target of a parsed corpus.
pub fn fit_corpus(corpus: &Corpus, target: FitTarget, a: Option<f64>) -> Result<Vec<FitRow>> {
    match target {
        FitTarget::Waiting => {
            let gaps = waiting_times(corpus);
            if gaps.samples.is_empty() {
                return Err(Error::data(
                    "no user has two comments with distinct timestamps",
                ));
            }
            let min = gaps.samples.iter().copied().fold(f64::INFINITY, f64::min);
            let a = a.unwrap_or(min);
            if !(a > 0.0) {
                return Err(Error::param(format!(
                    "waiting-time lower bound must be > 0, got {a}"
                )));
            }
            // Stamps are whole seconds, so a gap can read up to one second
            // short of the bound.
            let quantum = 1.0 / SECONDS_PER_UNIT;
            let mut below = 0usize;
            let samples: Vec<f64> = gaps
                .samples
                .iter()
                .filter_map(|&x| {
                    if x >= a {
                        Some(x)
                    } else if x >= a - quantum {
                        Some(a)
                    } else {
                        below += 1;
                        None
                    }
                })
                .collect();
            if below > 0 {
                eprintln!("warning: {below} waiting times below a = {a} left out");
            }
            let b = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(b > a) {
                return Err(Error::numeric(
                    "degenerate truncated Pareto likelihood: no waiting time exceeds the lower bound",
                    crate::error::Diagnostics::new().with("a", a).with("max_sample", b),
                ));
            }
            let fit = tp_mle(&samples, a, b)?;
            let mut rows = fit_rows(target, "truncated_pareto", true, &fit, None);
            for (name, value) in [("a", a), ("b", b)] {
                rows.push(FitRow {
                    parameter: name.to_string(),
                    estimate: value,
                    stderr: None,
                    ..rows[0].clone()
                });
            }
            Ok(rows)
        }
        FitTarget::Exposure => {
            let durations = exposure_durations(corpus);
            let fit = fit_exposure(&durations.samples)?;
            let exp_sel = fit.family == crate::distributions::ExposureFamily::Exponential;
            let mut rows = fit_rows(
                target,
                "exponential",
                exp_sel,
                &fit.exponential,
                Some(fit.loglik_gap),
            );
            rows.extend(fit_rows(
                target,
                "pareto",
                !exp_sel,
                &fit.pareto,
                Some(fit.loglik_gap),
            ));
            Ok(rows)
        }
        FitTarget::Size => {
            let sizes: Vec<f64> = corpus
                .topics
                .values()
                .map(|t| t.comments.len() as f64)
                .filter(|&n| n > 0.0)
                .collect();
            if sizes.len() < 30 {
                return Err(Error::data(format!(
                    "size fit needs at least 30 topics with comments, got {}",
                    sizes.len()
                )));
            }
            let weibull = weibull_mle(&sizes)?;
            let pareto = ParetoLaw::mle(&sizes)?;
            let gap = (weibull.loglik - pareto.loglik).abs();
            let weibull_sel = weibull.loglik >= pareto.loglik;
            let mut rows = fit_rows(target, "weibull", weibull_sel, &weibull, Some(gap));
            rows.extend(fit_rows(target, "pareto", !weibull_sel, &pareto, Some(gap)));
            Ok(rows)
        }
    }
}

fn fit_invocation(args: &FitArgs, format: Format) -> String {
    let mut s = format!(
        "threadgrowth fit --input {} --target {} --format {}",
        args.input.display(),
        args.target,
        format_name(format)
    );
    if let Some(a) = args.a {
        let _ = write!(s, " --a {a}");
    }
    s
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let format = input_format(&args.input, args.format.as_deref())?;
    let corpus = parse_corpus(&args.input, format)?;
    warn(&corpus.report);
    let rows = fit_corpus(&corpus, args.target, args.a)?;
    let mut buf = Vec::new();
    writeln!(buf, "# {}", fit_invocation(args, format))?;
    {
        let mut csv = csv::Writer::from_writer(&mut buf);
        for row in &rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
    }
    match &args.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, buf)?;
        }
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Corpus (JSONL or CSV).
    #[arg(long)]
    pub input: PathBuf,
    /// jsonl or csv [default: from the file extension].
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "analysis")]
    pub out: PathBuf,
    /// Start of the growth-regression window, minutes.
    #[arg(long, default_value_t = 10.0)]
    pub t_lo: f64,
    /// End of the growth-regression window, minutes.
    #[arg(long, default_value_t = 300.0)]
    pub t_hi: f64,
    /// Grid cells of the growth curves.
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    #[arg(long, default_value_t = 10)]
    pub bins_per_decade: u32,
    /// Share of comments defining the inflection point of topics without a
    /// removal stamp.
    #[arg(long, default_value_t = 0.95)]
    pub q: f64,
    /// Yule offset for the in-degree regression [default: estimated].
    #[arg(long)]
    pub delta0: Option<f64>,
    /// Smallest degree in the in-degree regression.
    #[arg(long, default_value_t = 1)]
    pub l_min: u32,
    /// Fewest nodes at or above a degree for it to enter the regression.
    #[arg(long, default_value_t = 10)]
    pub min_count: u64,
    /// Leave root posts out of the in-degree histogram.
    #[arg(long)]
    pub exclude_root: bool,
}

/// Settings of [`analyze_corpus`], the numeric part of [`AnalyzeArgs`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeSettings {
    pub t_lo: f64,
    pub t_hi: f64,
    pub grid: usize,
    pub bins_per_decade: u32,
    pub q: f64,
    pub delta0: Option<f64>,
    pub l_min: u32,
    pub min_count: u64,
    pub include_root: bool,
}

impl Default for AnalyzeSettings {
    fn default() -> Self {
        AnalyzeSettings {
            t_lo: 10.0,
            t_hi: 300.0,
            grid: 20,
            bins_per_decade: 10,
            q: 0.95,
            delta0: None,
            l_min: 1,
            min_count: 10,
            include_root: true,
        }
    }
}

impl From<&AnalyzeArgs> for AnalyzeSettings {
    fn from(a: &AnalyzeArgs) -> Self {
        AnalyzeSettings {
            t_lo: a.t_lo,
            t_hi: a.t_hi,
            grid: a.grid,
            bins_per_decade: a.bins_per_decade,
            q: a.q,
            delta0: a.delta0,
            l_min: a.l_min,
            min_count: a.min_count,
            include_root: !a.exclude_root,
        }
    }
}

/// Everything `analyze` computes. Report values are kept as text; parts
/// that could not be computed read `na` and leave a note.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Analysis {
    pub n_of_t: CurvePoints,
    pub dn_dt: CurvePoints,
    pub size_ccdf: CurvePoints,
    pub size_density: CurvePoints,
    pub weibull_plot: CurvePoints,
    pub qq: Vec<(f64, f64)>,
    /// `(l, empirical, discrete Yule, continuum)` rows.
    pub indegree: Vec<(f64, f64, f64, f64)>,
    pub regressions: Vec<(String, RegressionFit)>,
    pub report: IndexMap<String, String>,
    pub notes: Vec<String>,
}

impl Analysis {
    fn set(&mut self, key: &str, value: impl ToString) {
        self.report.insert(key.to_string(), value.to_string());
    }

    fn na(&mut self, keys: &[&str], why: String) {
        for k in keys {
            self.set(k, "na");
        }
        self.notes.push(why);
    }

    /// Numeric report value, if present.
    pub fn value(&self, key: &str) -> Option<f64> {
        self.report.get(key).and_then(|v| v.parse().ok())
    }
}

pub fn analyze_corpus(corpus: &Corpus, s: &AnalyzeSettings) -> Result<Analysis> {
    if corpus.is_empty() {
        return Err(Error::data("analysis needs at least one topic"));
    }
    let mut an = Analysis::default();
    an.set("topics", corpus.len());
    an.set("comments", corpus.comment_count());

    // Observation horizon per topic: removal stamp, else the q-rule.
    let mut samples = Vec::new();
    let mut threads = Vec::new();
    let mut ratios = Vec::new();
    let (mut from_removal, mut from_rule, mut skipped) = (0usize, 0usize, 0usize);
    for topic in corpus.topics.values() {
        let times = topic.times();
        let horizon = match topic.exposure() {
            Some(t) => {
                from_removal += 1;
                Some(t)
            }
            None => match detect_inflection(&times, s.q) {
                Ok(t) => {
                    from_rule += 1;
                    Some(t)
                }
                Err(_) => None,
            },
        };
        match horizon {
            Some(h) => {
                if let Ok(r) = before_after_ratio(&times, h) {
                    ratios.push(r);
                }
                threads.push(topic.to_thread(h));
                samples.push(GrowthSample { times, horizon: h });
            }
            None => {
                skipped += 1;
                threads.push(topic.to_thread(times.iter().copied().fold(0.0, f64::max)));
            }
        }
    }
    an.set("horizon_from_removal", from_removal);
    an.set("horizon_from_inflection", from_rule);
    an.set("horizon_unknown", skipped);

    // Exposure law.
    let durations = exposure_durations(corpus);
    match fit_exposure(&durations.samples) {
        Ok(fit) => {
            an.set("exposure_family", fit.family);
            an.set("exposure_loglik_gap", fit.loglik_gap);
        }
        Err(e) => an.na(
            &["exposure_family", "exposure_loglik_gap"],
            format!("exposure fit: {e}"),
        ),
    }

    // Growth curves.
    an.set("growth_t_lo", s.t_lo);
    an.set("growth_t_hi", s.t_hi);
    let growth_keys = [
        "slope_N",
        "slope_N_stderr",
        "slope_dN_dt",
        "slope_dN_dt_stderr",
        "slope_difference",
        "c_prime_from_N",
        "c_prime_from_rate",
    ];
    match growth(&samples, s) {
        Ok((curves, n_fit, r_fit)) => {
            an.n_of_t = curves.0;
            an.dn_dt = curves.1;
            an.set("slope_N", n_fit.slope);
            an.set("slope_N_stderr", n_fit.stderr_slope);
            an.set("slope_dN_dt", r_fit.slope);
            an.set("slope_dN_dt_stderr", r_fit.stderr_slope);
            an.set("slope_difference", n_fit.slope - r_fit.slope);
            an.set("c_prime_from_N", n_fit.slope);
            an.set("c_prime_from_rate", r_fit.slope + 1.0);
            an.regressions.push(("N_of_t".into(), n_fit));
            an.regressions.push(("dN_dt".into(), r_fit));
        }
        Err(e) => an.na(&growth_keys, format!("growth curves: {e}")),
    }

    // Size law.
    let sizes: Vec<f64> = corpus
        .topics
        .values()
        .map(|t| t.comments.len() as f64)
        .collect();
    if let Ok(c) = ccdf(&sizes) {
        an.size_ccdf = c;
    }
    let positive: Vec<f64> = sizes.iter().copied().filter(|&n| n > 0.0).collect();
    if let Ok(d) = log_binned_density(&positive, s.bins_per_decade) {
        an.size_density = d;
    }
    if let Ok(w) = weibull_plot(&positive) {
        an.weibull_plot = w;
    }
    match tail_classify(&sizes) {
        Ok(rep) => {
            an.set("size_tail_class", rep.class);
            an.set("size_excess_weibull_shape", rep.weibull.params[0]);
            an.set("size_tail_log_ratio", rep.tail_log_ratio);
            an.set("size_above_exponential_line", rep.above_exponential_line());
            an.regressions
                .push(("size_ccdf_semilog".into(), rep.ccdf_semilog));
        }
        Err(e) => an.na(
            &[
                "size_tail_class",
                "size_excess_weibull_shape",
                "size_tail_log_ratio",
                "size_above_exponential_line",
            ],
            format!("size tail: {e}"),
        ),
    }
    match weibull_mle(&positive).and_then(|fit| WeibullLaw::new(fit.params[0], fit.params[1])) {
        Ok(law) => {
            an.set("size_weibull_shape", law.shape());
            an.set("size_weibull_scale", law.scale());
            if let Ok(ks) = ks_distance_rounded(&positive, |x| law.cdf(x)) {
                an.set("size_weibull_ks", ks);
            }
            if let Ok(qq) = qq_points(&positive, |u| law.quantile(u), 200) {
                an.qq = qq;
            }
        }
        Err(e) => an.na(
            &[
                "size_weibull_shape",
                "size_weibull_scale",
                "size_weibull_ks",
            ],
            format!("size Weibull fit: {e}"),
        ),
    }

    // In-degree law.
    let hist = indegree_histogram(&threads, s.include_root);
    let in_keys = [
        "indegree_exponent",
        "indegree_exponent_stderr",
        "indegree_delta0",
    ];
    match indegree_tail_exponent(&hist, s.delta0, s.l_min, s.min_count) {
        Ok(fit) => {
            an.set("indegree_exponent", fit.exponent);
            an.set("indegree_exponent_stderr", fit.stderr);
            an.set("indegree_delta0", fit.delta0);
            an.regressions
                .push(("indegree_tail".into(), fit.regression));
        }
        Err(e) => an.na(&in_keys, format!("in-degree tail: {e}")),
    }
    match yule_delta0_mle(&hist) {
        Ok((d, se)) => {
            an.set("delta0_mle", d);
            an.set("delta0_mle_stderr", se);
        }
        Err(e) => an.na(
            &["delta0_mle", "delta0_mle_stderr"],
            format!("delta0 fit: {e}"),
        ),
    }
    if !hist.is_empty() {
        let d0 = s.delta0.or_else(|| an.value("delta0_mle")).unwrap_or(1.0);
        let yule = yule_ccdf_fn(d0);
        let cont = |l: f64| 1.0 - predicted_indegree_cdf(d0, l);
        an.set("indegree_sup_yule", indegree_sup_distance(&hist, &yule));
        an.set("indegree_sup_continuum", indegree_sup_distance(&hist, cont));
        an.indegree = indegree_ccdf(&hist)
            .points
            .iter()
            .map(|&(l, p)| (l, p, yule(l), cont(l)))
            .collect();
    }

    // Share of comments before the horizon.
    if ratios.is_empty() {
        an.na(
            &["before_after_mean", "before_after_min", "before_after_max"],
            "before/after: no topic with comments and a horizon".into(),
        );
    } else {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        an.set("before_after_mean", mean);
        an.set(
            "before_after_min",
            ratios.iter().copied().fold(f64::INFINITY, f64::min),
        );
        an.set(
            "before_after_max",
            ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
    }
    an.set("before_after_topics", ratios.len());
    Ok(an)
}

type Growth = ((CurvePoints, CurvePoints), RegressionFit, RegressionFit);

fn growth(samples: &[GrowthSample], s: &AnalyzeSettings) -> Result<Growth> {
    if samples.is_empty() {
        return Err(Error::data("no topic has an observation horizon"));
    }
    let curves = pooled_growth_curves(samples, s.t_lo, s.t_hi, s.grid)?;
    let n_fit = loglog_regression(&curves.n_of_t)?;
    let r_fit = loglog_regression(&curves.dn_dt)?;
    Ok(((curves.n_of_t, curves.dn_dt), n_fit, r_fit))
}

fn analyze_invocation(args: &AnalyzeArgs, format: Format) -> String {
    let mut s = format!(
        "threadgrowth analyze --input {} --format {} --t-lo {} --t-hi {} --grid {} --bins-per-decade {} --q {}",
        args.input.display(),
        format_name(format),
        args.t_lo,
        args.t_hi,
        args.grid,
        args.bins_per_decade,
        args.q
    );
    if let Some(d) = args.delta0 {
        let _ = write!(s, " --delta0 {d}");
    }
    let _ = write!(s, " --l-min {} --min-count {}", args.l_min, args.min_count);
    if args.exclude_root {
        s.push_str(" --exclude-root");
    }
    s
}

fn write_text(dir: &Path, name: &str, header: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = create(dir, name, header)?;
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(path)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<Vec<PathBuf>> {
    let format = input_format(&args.input, args.format.as_deref())?;
    let corpus = parse_corpus(&args.input, format)?;
    warn(&corpus.report);
    let an = analyze_corpus(&corpus, &AnalyzeSettings::from(args))?;
    let header = analyze_invocation(args, format);
    let dir = &args.out;
    fs::create_dir_all(dir)?;
    let mut written = vec![
        write_text(dir, "N_of_t.csv", &header, &an.n_of_t.to_csv("t", "N"))?,
        write_text(dir, "dN_dt.csv", &header, &an.dn_dt.to_csv("t", "dN_dt"))?,
        write_text(
            dir,
            "size_ccdf.csv",
            &header,
            &an.size_ccdf.to_csv("N", "ccdf"),
        )?,
        write_text(
            dir,
            "size_density.csv",
            &header,
            &an.size_density.to_csv("N", "density"),
        )?,
        write_text(
            dir,
            "weibull_plot.csv",
            &header,
            &an.weibull_plot.to_csv("ln_N", "ln_neg_ln_sf"),
        )?,
    ];
    let mut qq = String::from("weibull_quantile,size\n");
    for (x, y) in &an.qq {
        let _ = writeln!(qq, "{x},{y}");
    }
    written.push(write_text(dir, "qq.csv", &header, &qq)?);
    let mut deg = String::from("l,ccdf,yule,continuum\n");
    for (l, p, y, c) in &an.indegree {
        let _ = writeln!(deg, "{l},{p},{y},{c}");
    }
    written.push(write_text(dir, "indegree_ccdf.csv", &header, &deg)?);
    let mut reg = String::from("curve,slope,intercept,stderr_slope,r2,n\n");
    for (name, f) in &an.regressions {
        let _ = writeln!(
            reg,
            "{name},{},{},{},{},{}",
            f.slope, f.intercept, f.stderr_slope, f.r2, f.n
        );
    }
    written.push(write_text(dir, "regressions.csv", &header, &reg)?);
    let mut csv = String::from("key,value\n");
    for (k, v) in &an.report {
        let _ = writeln!(csv, "{k},{v}");
    }
    written.push(write_text(dir, "report.csv", &header, &csv)?);
    written.push(write_text(dir, "report.txt", &header, &report_text(&an))?);
    Ok(written)
}

fn report_text(an: &Analysis) -> String {
    let width = an.report.keys().map(String::len).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in &an.report {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    if !an.notes.is_empty() {
        out.push_str("\nnotes:\n");
        for n in &an.notes {
            let _ = writeln!(out, "  {n}");
        }
    }
    out
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Base seed [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
    /// default, or tiny (smaller samples, tolerances doubled).
    #[arg(long, default_value = "default")]
    pub scale: String,
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let scale: Scale = args.scale.parse()?;
    let seed = args.seed.unwrap_or(42);
    println!("seed {seed}, scale {scale}");
    let cfg = ValidationConfig::new(seed, scale);
    let report = validation::run_all(&cfg, |check| println!("{check}"))?;
    let failed = report.failed();
    println!(
        "{} of {} checks passed",
        report.checks.len() - failed,
        report.checks.len()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let Cli { workers, command } = cli;
    let exec = move || -> Result<i32> {
        match command {
            Command::Simulate(args) => {
                let cfg = SimulateConfig::resolve(args)?;
                println!("seed {}", cfg.seed);
                for path in cmd_simulate(&cfg)? {
                    println!("wrote {}", path.display());
                }
                Ok(0)
            }
            Command::Fit(args) => cmd_fit(&args).map(|()| 0),
            Command::Analyze(args) => {
                for path in cmd_analyze(&args)? {
                    println!("wrote {}", path.display());
                }
                Ok(0)
            }
            Command::Validate(args) => cmd_validate(&args),
        }
    };
    match workers {
        Some(0) => Err(Error::param("--workers must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::param(format!("worker pool: {e}")))?
            .install(exec),
        None => exec(),
    }
}
