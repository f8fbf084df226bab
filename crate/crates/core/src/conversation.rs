//! Thread simulators and the closed-form laws they should reproduce.
//!
//! A thread starts with a root post at time 0 and stays exposed for a
//! duration `T` drawn from the site's exposure law. Users reply to it with
//! probability `min(1, γ t^c0)` at elapsed time `t`; each reply attaches to
//! an earlier comment with probability proportional to `k_i + δ0`.
//!
//! Three generators are provided:
//!
//! * [`simulate_thread_agent`] runs `M` users' renewal processes;
//! * [`simulate_thread_intensity`] draws a Poisson count with mean
//!   `γ' T^c'` and places comments with density `∝ t^(c'-1)`;
//! * [`simulate_size_analytic`] returns `round(γ' T^c')` directly.
//!
//! Sizes follow a Weibull law under exponential exposure and a Pareto law
//! under Pareto exposure ([`predicted_size_law`]); in-degrees follow the
//! Yule law ([`predicted_indegree_cdf`], [`yule_indegree_ccdf`]).

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::distributions::{exposure_sample, ExposureLaw, ParetoLaw, TruncatedPareto, WeibullLaw};
use crate::error::{Error, Result};
use crate::renewal::{forward_recurrence_sample, ForwardRecurrence};
use crate::rng::{stream, StreamRng, TOPIC_NAMESPACE, USER_NAMESPACE};

/// Generative parameters shared by every topic of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicParams {
    /// Interestingness scale: a reply at elapsed time `t` is kept with
    /// probability `min(1, gamma * t^c0)`.
    pub gamma: f64,
    /// Social-feedback exponent.
    pub c0: f64,
    /// Number of users.
    pub m: usize,
    /// Attachment offset of the Yule process.
    pub delta0: f64,
    pub exposure: ExposureLaw,
    /// Per-user waiting-time law; its exponent is the model's `c`.
    pub waiting: TruncatedPareto,
}

impl TopicParams {
    pub fn c(&self) -> f64 {
        self.waiting.c()
    }

    /// Growth exponent `c' = 1 - c + c0`, so that `N(t) ∼ t^c'`.
    pub fn c_prime(&self) -> f64 {
        1.0 - self.c() + self.c0
    }

    /// `γ' = γ M`.
    pub fn gamma_prime(&self) -> f64 {
        self.gamma * self.m as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::param(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.c0.is_finite() && self.c0 >= 0.0) {
            return Err(Error::param(format!("c0 must be >= 0, got {}", self.c0)));
        }
        if self.m == 0 {
            return Err(Error::param("M must be at least 1"));
        }
        if !(self.delta0.is_finite() && self.delta0 > 0.0) {
            return Err(Error::param(format!(
                "delta0 must be > 0, got {}",
                self.delta0
            )));
        }
        let cp = self.c_prime();
        if cp <= 0.0 {
            return Err(Error::param(format!(
                "non-growing regime: c' = 1 - c + c0 = {cp} must be > 0 (c={}, c0={})",
                self.c(),
                self.c0
            )));
        }
        Ok(())
    }

    /// Probability that a reply arriving at elapsed time `t` is kept.
    pub fn acceptance(&self, t: f64) -> f64 {
        (self.gamma * t.powf(self.c0)).min(1.0)
    }
}

/// One node of a thread. Node 0 is the root post.
#[derive(Debug, Clone, PartialEq)]
pub struct CommentEvent {
    pub id: usize,
    /// Id of the replied-to node; the root points at itself.
    pub parent: usize,
    /// Elapsed time since topic creation.
    pub time: f64,
    /// Simulated user index, when the generator tracks users.
    pub user: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thread {
    /// Exposure duration `T`.
    pub exposure: f64,
    /// Root first, then comments in time order.
    pub events: Vec<CommentEvent>,
}

impl Thread {
    pub fn root_only(exposure: f64) -> Self {
        Thread {
            exposure,
            events: vec![CommentEvent {
                id: 0,
                parent: 0,
                time: 0.0,
                user: None,
            }],
        }
    }

    /// Build a thread from `(time, user)` arrivals (sorted by time), wiring
    /// parents with the Yule rule.
    pub fn from_arrivals<R: Rng + ?Sized>(
        exposure: f64,
        arrivals: &[(f64, Option<usize>)],
        delta0: f64,
        rng: &mut R,
    ) -> Self {
        let mut thread = Thread::root_only(exposure);
        thread.events.reserve(arrivals.len());
        let mut tree = YuleTree::new(delta0);
        for (i, &(time, user)) in arrivals.iter().enumerate() {
            let parent = tree.attach(rng);
            thread.events.push(CommentEvent {
                id: i + 1,
                parent,
                time,
                user,
            });
        }
        thread
    }

    /// Number of comments, root excluded.
    pub fn size(&self) -> usize {
        self.events.len().saturating_sub(1)
    }

    /// Comment times, root excluded.
    pub fn comment_times(&self) -> Vec<f64> {
        self.events.iter().skip(1).map(|e| e.time).collect()
    }

    /// In-degree of every node, root included at index 0.
    pub fn indegrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.events.len()];
        for e in self.events.iter().skip(1) {
            deg[e.parent] += 1;
        }
        deg
    }

    pub fn max_indegree(&self) -> u32 {
        self.indegrees().into_iter().max().unwrap_or(0)
    }

    /// Ids are `0..n`, every comment replies to an earlier node, times are
    /// nondecreasing and lie in `[0, T]`.
    pub fn is_valid_tree(&self) -> bool {
        let Some(root) = self.events.first() else {
            return false;
        };
        if root.id != 0 || root.time != 0.0 {
            return false;
        }
        let mut prev = 0.0;
        for (i, e) in self.events.iter().enumerate().skip(1) {
            if e.id != i || e.parent >= i || e.time < prev || e.time > self.exposure {
                return false;
            }
            prev = e.time;
        }
        true
    }

    /// Copy with times rounded to the nearest `1/per_unit`, the way a
    /// corpus with whole-second timestamps records them (`per_unit = 60`
    /// for minutes).
    pub fn quantized(&self, per_unit: f64) -> Self {
        let q = |t: f64| (t * per_unit).round() / per_unit;
        Thread {
            exposure: q(self.exposure),
            events: self
                .events
                .iter()
                .map(|e| CommentEvent {
                    time: q(e.time),
                    ..e.clone()
                })
                .collect(),
        }
    }
}

/// Incremental preferential-attachment state.
///
/// A node is picked with probability `(k_i + δ0) / Σ_j (k_j + δ0)`. The
/// total weight splits into `δ0 · n` (uniform over nodes) plus one unit per
/// existing edge (uniform over edge targets), so each draw costs O(1).
#[derive(Debug, Clone)]
pub struct YuleTree {
    delta0: f64,
    indegree: Vec<u32>,
    edge_targets: Vec<usize>,
}

impl YuleTree {
    /// Tree holding only the root.
    pub fn new(delta0: f64) -> Self {
        YuleTree {
            delta0,
            indegree: vec![0],
            edge_targets: Vec::new(),
        }
    }

    /// Rebuild the attachment state of an existing thread.
    pub fn from_thread(thread: &Thread, delta0: f64) -> Self {
        let indegree = thread.indegrees();
        let edge_targets = thread.events.iter().skip(1).map(|e| e.parent).collect();
        YuleTree {
            delta0,
            indegree,
            edge_targets,
        }
    }

    pub fn len(&self) -> usize {
        self.indegree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indegree.is_empty()
    }

    pub fn indegrees(&self) -> &[u32] {
        &self.indegree
    }

    /// Pick the parent of the next node without adding it.
    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.indegree.len();
        let uniform_weight = self.delta0 * n as f64;
        let u = rng.gen::<f64>() * (uniform_weight + self.edge_targets.len() as f64);
        if u < uniform_weight || self.edge_targets.is_empty() {
            ((u / self.delta0) as usize).min(n - 1)
        } else {
            let i = ((u - uniform_weight) as usize).min(self.edge_targets.len() - 1);
            self.edge_targets[i]
        }
    }

    /// Add a node, returning its parent.
    pub fn attach<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let parent = self.choose(rng);
        self.indegree[parent] += 1;
        self.indegree.push(0);
        self.edge_targets.push(parent);
        parent
    }
}

/// Parent for a new comment on `thread` under the Yule rule.
pub fn attach_yule<R: Rng + ?Sized>(thread: &Thread, delta0: f64, rng: &mut R) -> usize {
    YuleTree::from_thread(thread, delta0).choose(rng)
}

/// How the agent simulator turns user renewal processes into replies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArrivalModel {
    /// Users have been active for a long time when the topic appears; each
    /// contributes at most its first comment after the release, which
    /// arrives after the limiting forward recurrence time `Y`.
    #[default]
    FirstResponse,
    /// Every renewal event of a user whose process starts fresh (age 0) at
    /// the release is a candidate reply.
    AllRenewals,
    /// As `AllRenewals`, but the first event comes from a process that has
    /// already run for `10^3 μ`.
    AllRenewalsAged,
}

impl std::str::FromStr for ArrivalModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-response" => Ok(ArrivalModel::FirstResponse),
            "all-renewals" => Ok(ArrivalModel::AllRenewals),
            "all-renewals-aged" => Ok(ArrivalModel::AllRenewalsAged),
            _ => Err(Error::param(format!(
                "arrival model must be first-response, all-renewals or all-renewals-aged, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for ArrivalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArrivalModel::FirstResponse => "first-response",
            ArrivalModel::AllRenewals => "all-renewals",
            ArrivalModel::AllRenewalsAged => "all-renewals-aged",
        })
    }
}

/// Age given to users under [`ArrivalModel::AllRenewalsAged`], in units of
/// the mean waiting time.
pub const AGED_WARMUP_MEANS: f64 = 1e3;

/// Agent simulation with the default [`ArrivalModel::FirstResponse`].
pub fn simulate_thread_agent<R: Rng + ?Sized>(params: &TopicParams, rng: &mut R) -> Result<Thread> {
    simulate_thread_agent_with(params, ArrivalModel::FirstResponse, rng)
}

pub fn simulate_thread_agent_with<R: Rng + ?Sized>(
    params: &TopicParams,
    arrivals: ArrivalModel,
    rng: &mut R,
) -> Result<Thread> {
    params.validate()?;
    let exposure = exposure_sample(&params.exposure, rng);
    Ok(agent_thread(params, arrivals, exposure, rng))
}

/// Agent simulation for a given exposure duration.
pub fn agent_thread<R: Rng + ?Sized>(
    params: &TopicParams,
    arrivals: ArrivalModel,
    exposure: f64,
    rng: &mut R,
) -> Thread {
    let waiting = &params.waiting;
    let mut accepted: Vec<(f64, Option<usize>)> = Vec::new();
    match arrivals {
        ArrivalModel::FirstResponse => {
            let fr = ForwardRecurrence::new(*waiting);
            for user in 0..params.m {
                let y = fr.sample(rng);
                let u: f64 = rng.gen();
                if y <= exposure && u < params.acceptance(y) {
                    accepted.push((y, Some(user)));
                }
            }
        }
        ArrivalModel::AllRenewals | ArrivalModel::AllRenewalsAged => {
            let warmup = AGED_WARMUP_MEANS * waiting.mean();
            for user in 0..params.m {
                let mut t = if arrivals == ArrivalModel::AllRenewalsAged {
                    forward_recurrence_sample(waiting, warmup, rng)
                } else {
                    waiting.sample(rng)
                };
                while t <= exposure {
                    if rng.gen::<f64>() < params.acceptance(t) {
                        accepted.push((t, Some(user)));
                    }
                    t += waiting.sample(rng);
                }
            }
        }
    }
    accepted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    Thread::from_arrivals(exposure, &accepted, params.delta0, rng)
}

/// Thread whose size is Poisson with mean `γ' T^c'` and whose comment times
/// have density `c' t^(c'-1) / T^c'` on `[0, T]`.
pub fn simulate_thread_intensity<R: Rng + ?Sized>(
    params: &TopicParams,
    rng: &mut R,
) -> Result<Thread> {
    params.validate()?;
    let exposure = exposure_sample(&params.exposure, rng);
    let mean = params.gamma_prime() * exposure.powf(params.c_prime());
    let n = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::param(format!("Poisson mean {mean}: {e}")))?
            .sample(rng) as usize
    } else {
        0
    };
    Ok(thread_with_power_times(params, exposure, n, rng))
}

/// Thread with exactly `round(γ' T^c')` comments placed as in
/// [`simulate_thread_intensity`].
pub fn simulate_thread_analytic<R: Rng + ?Sized>(
    params: &TopicParams,
    rng: &mut R,
) -> Result<Thread> {
    params.validate()?;
    let exposure = exposure_sample(&params.exposure, rng);
    let n = size_for_exposure(params, exposure) as usize;
    Ok(thread_with_power_times(params, exposure, n, rng))
}

fn thread_with_power_times<R: Rng + ?Sized>(
    params: &TopicParams,
    exposure: f64,
    n: usize,
    rng: &mut R,
) -> Thread {
    let inv = 1.0 / params.c_prime();
    let mut times: Vec<f64> = (0..n)
        .map(|_| exposure * rng.gen::<f64>().powf(inv))
        .collect();
    times.sort_by(f64::total_cmp);
    let arrivals: Vec<(f64, Option<usize>)> = times.into_iter().map(|t| (t, None)).collect();
    Thread::from_arrivals(exposure, &arrivals, params.delta0, rng)
}

/// `round(γ' T^c')`.
pub fn size_for_exposure(params: &TopicParams, exposure: f64) -> u64 {
    (params.gamma_prime() * exposure.powf(params.c_prime())).round() as u64
}

/// Draw `T` from the exposure law and return `round(γ' T^c')`.
pub fn simulate_size_analytic<R: Rng + ?Sized>(params: &TopicParams, rng: &mut R) -> Result<u64> {
    params.validate()?;
    let exposure = exposure_sample(&params.exposure, rng);
    Ok(size_for_exposure(params, exposure))
}

/// Thread-size law implied by `N = γ' T^c'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeLaw {
    /// Exponential exposure with rate λ: shape `1/c'`, scale `γ'/λ^c'`.
    Weibull(WeibullLaw),
    /// Pareto exposure `(t_min, α)`: scale `γ' t_min^c'`, exponent `α/c'`.
    Pareto(ParetoLaw),
}

impl SizeLaw {
    pub fn cdf(&self, n: f64) -> f64 {
        match self {
            SizeLaw::Weibull(w) => w.cdf(n),
            SizeLaw::Pareto(p) => p.cdf(n),
        }
    }

    pub fn pdf(&self, n: f64) -> f64 {
        match self {
            SizeLaw::Weibull(w) => w.pdf(n),
            SizeLaw::Pareto(p) => p.pdf(n),
        }
    }
}

pub fn predicted_size_law(params: &TopicParams) -> Result<SizeLaw> {
    let cp = params.c_prime();
    if cp <= 0.0 {
        return Err(Error::param(format!(
            "non-growing regime: c' = {cp} must be > 0"
        )));
    }
    let gp = params.gamma_prime();
    match params.exposure {
        ExposureLaw::Exponential(e) => {
            WeibullLaw::new(1.0 / cp, gp / e.lambda().powf(cp)).map(SizeLaw::Weibull)
        }
        ExposureLaw::Pareto(p) => {
            ParetoLaw::new(gp * p.t_min().powf(cp), p.alpha() / cp).map(SizeLaw::Pareto)
        }
    }
}

/// `P(N(T) <= n)` for a continuous `N = γ' T^c'`.
pub fn predicted_size_cdf(params: &TopicParams, n: f64) -> Result<f64> {
    Ok(predicted_size_law(params)?.cdf(n))
}

/// Continuum in-degree law `P(k < l) = 1 - (l/δ0 + 1)^-(1+δ0)`.
pub fn predicted_indegree_cdf(delta0: f64, l: f64) -> f64 {
    if l <= 0.0 {
        0.0
    } else {
        1.0 - (l / delta0 + 1.0).powf(-(1.0 + delta0))
    }
}

/// Exact stationary in-degree tail `P(k >= l)` of the discrete Yule process
/// with offset `δ0`: `Π_{j<l} (j + δ0) / (j + 1 + 2δ0)`.
pub fn yule_indegree_ccdf(delta0: f64, l: u64) -> f64 {
    (0..l).fold(1.0, |acc, j| {
        let j = j as f64;
        acc * (j + delta0) / (j + 1.0 + 2.0 * delta0)
    })
}

/// Pooled in-degree counts over `threads`.
pub fn indegree_histogram(threads: &[Thread], include_root: bool) -> BTreeMap<u32, u64> {
    let mut hist = BTreeMap::new();
    for thread in threads {
        let skip = usize::from(!include_root);
        for d in thread.indegrees().into_iter().skip(skip) {
            *hist.entry(d).or_insert(0) += 1;
        }
    }
    hist
}

/// Which per-thread generator [`simulate_threads`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreadModel {
    Agent(ArrivalModel),
    Intensity,
    Analytic,
}

/// Simulate `count` threads, thread `k` on its own stream derived from
/// `(seed, k)`. The result does not depend on the rayon pool size.
pub fn simulate_threads(
    params: &TopicParams,
    model: ThreadModel,
    count: usize,
    seed: u64,
) -> Result<Vec<Thread>> {
    params.validate()?;
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, TOPIC_NAMESPACE + k as u64);
            match model {
                ThreadModel::Agent(arrivals) => {
                    simulate_thread_agent_with(params, arrivals, &mut rng)
                }
                ThreadModel::Intensity => simulate_thread_intensity(params, &mut rng),
                ThreadModel::Analytic => simulate_thread_analytic(params, &mut rng),
            }
        })
        .collect()
}

/// Layout of a whole-site run.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteOptions {
    pub topics: usize,
    /// Time between consecutive topic releases.
    pub spacing: f64,
    /// Time before the first release; `None` picks `max(10^3 μ, b)`.
    pub warmup: Option<f64>,
    /// Number of users whose full comment history is kept.
    pub activity_users: usize,
}

impl Default for SiteOptions {
    fn default() -> Self {
        SiteOptions {
            topics: 100,
            spacing: 60.0,
            warmup: None,
            activity_users: 20,
        }
    }
}

/// Output of [`simulate_site`].
#[derive(Debug, Clone, PartialEq)]
pub struct SiteRun {
    /// Release instant of each topic on the site clock.
    pub releases: Vec<f64>,
    /// Threads with times relative to their release.
    pub threads: Vec<Thread>,
    /// `(user, comment instants)` on the site clock, from the first release
    /// to the user's response to the last one.
    pub activity: Vec<(usize, Vec<f64>)>,
}

/// One site: `M` users, each a single renewal process on a shared clock,
/// and topics released every `spacing` after a warm-up. Each user's first
/// comment after a release is a candidate reply to that topic, kept with
/// probability `min(1, γ y^c0)` if it falls within the topic's exposure.
///
/// Users and topics draw from separate stream namespaces, so the output is
/// independent of the worker count.
pub fn simulate_site(params: &TopicParams, options: &SiteOptions, seed: u64) -> Result<SiteRun> {
    params.validate()?;
    if options.topics == 0 {
        return Err(Error::param("at least one topic is required"));
    }
    if !(options.spacing.is_finite() && options.spacing >= 0.0) {
        return Err(Error::param(format!(
            "spacing must be >= 0, got {}",
            options.spacing
        )));
    }
    let waiting = params.waiting;
    let warmup = options
        .warmup
        .unwrap_or_else(|| (AGED_WARMUP_MEANS * waiting.mean()).max(waiting.b()));
    if !(warmup.is_finite() && warmup >= 0.0) {
        return Err(Error::param(format!("warmup must be >= 0, got {warmup}")));
    }
    let releases: Vec<f64> = (0..options.topics)
        .map(|k| warmup + k as f64 * options.spacing)
        .collect();

    let per_user: Vec<(Vec<f64>, Option<Vec<f64>>)> = (0..params.m)
        .into_par_iter()
        .map(|user| {
            let mut rng = stream(seed, USER_NAMESPACE + user as u64);
            let keep = user < options.activity_users;
            user_responses(&waiting, &releases, keep, &mut rng)
        })
        .collect();

    let threads: Vec<Thread> = (0..options.topics)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, TOPIC_NAMESPACE + k as u64);
            let exposure = exposure_sample(&params.exposure, &mut rng);
            let mut accepted = Vec::new();
            for (user, (responses, _)) in per_user.iter().enumerate() {
                let y = responses[k];
                let u: f64 = rng.gen();
                if y <= exposure && u < params.acceptance(y) {
                    accepted.push((y, Some(user)));
                }
            }
            accepted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            Thread::from_arrivals(exposure, &accepted, params.delta0, &mut rng)
        })
        .collect();

    let activity = per_user
        .into_iter()
        .enumerate()
        .filter_map(|(user, (_, trace))| trace.map(|t| (user, t)))
        .collect();
    Ok(SiteRun {
        releases,
        threads,
        activity,
    })
}

/// Delay from each release to the user's next comment. Optionally keeps the
/// user's comment instants from the first release up to the last response.
fn user_responses(
    waiting: &TruncatedPareto,
    releases: &[f64],
    keep_trace: bool,
    rng: &mut StreamRng,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let mut responses = Vec::with_capacity(releases.len());
    let mut trace = keep_trace.then(Vec::new);
    let mut t = 0.0;
    let mut k = 0;
    while k < releases.len() {
        t += waiting.sample(rng);
        if let Some(tr) = trace.as_mut() {
            if t >= releases[0] {
                tr.push(t);
            }
        }
        while k < releases.len() && releases[k] < t {
            responses.push(t - releases[k]);
            k += 1;
        }
    }
    (responses, trace)
}
