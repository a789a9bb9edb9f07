//! The curator/analyst game under a Dirichlet prior.
//!
//! A population distribution p̄ over categories `0..k` is drawn from the
//! prior, the curator sees `n` samples from it, and the analyst asks `q`
//! statistical queries, each possibly depending on earlier answers. The
//! curator wins if every answer is within ε of the population value.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{BetaParams, DirichletParams};
use crate::error::{Error, Result};
use crate::sampling::{Categorical, SeedSpec, Sampler};
use crate::scalar::Scalar;
use crate::stats::{ks_critical_value, ks_statistic, wilson_interval, Z_95};

/// A statistical query over categories `0..k`: either a weight per category
/// in [0, 1], or a counting query given by the set of categories it counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuerySpec {
    Weights(Vec<f64>),
    Subset(BTreeSet<usize>),
}

impl QuerySpec {
    pub fn subset<I: IntoIterator<Item = usize>>(items: I) -> Self {
        QuerySpec::Subset(items.into_iter().collect())
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            QuerySpec::Weights(w) => {
                if w.len() != k {
                    return Err(Error::InvalidParameter(format!(
                        "query has {} weights, expected {k}",
                        w.len()
                    )));
                }
                if let Some(bad) = w.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::InvalidParameter(format!(
                        "query weight {bad} outside [0, 1]"
                    )));
                }
            }
            QuerySpec::Subset(s) => {
                if let Some(&bad) = s.iter().find(|&&i| i >= k) {
                    return Err(Error::InvalidParameter(format!(
                        "category {bad} out of range for k = {k}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn weights(&self, k: usize) -> Vec<f64> {
        match self {
            QuerySpec::Weights(w) => w.clone(),
            QuerySpec::Subset(s) => (0..k).map(|i| f64::from(u8::from(s.contains(&i)))).collect(),
        }
    }

    /// v̄ · x̄.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            QuerySpec::Weights(w) => w.iter().zip(x).map(|(a, b)| a * b).sum(),
            QuerySpec::Subset(s) => s.iter().map(|&i| x[i]).sum(),
        }
    }

    /// Writes v̄ as Σ_t c_t·1[S_t] with c_t ≥ 0 and nested level sets
    /// S_t = {i : v_i ≥ w_t}.
    pub fn level_sets(&self, k: usize) -> Vec<(f64, BTreeSet<usize>)> {
        let w = self.weights(k);
        let mut levels: Vec<f64> = w.iter().copied().filter(|v| *v > 0.0).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut prev = 0.0;
        levels
            .into_iter()
            .map(|level| {
                let set = (0..k).filter(|&i| w[i] >= level).collect();
                let c = level - prev;
                prev = level;
                (c, set)
            })
            .collect()
    }
}

/// Σ_i v_i (α_i + c_i) / (A + n), generic so identities can be checked in
/// exact arithmetic.
pub fn posterior_mean_answer<T: Scalar>(
    prior: &DirichletParams<T>,
    counts: &[u64],
    weights: &[T],
) -> T {
    let n: u64 = counts.iter().sum();
    let denom = prior.total() + T::from_u64(n).expect("count");
    let mut acc = T::zero();
    for ((a, &c), v) in prior.alphas().iter().zip(counts).zip(weights) {
        acc = acc + v.clone() * (a.clone() + T::from_u64(c).expect("count"));
    }
    acc / denom
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuratorKind {
    PosteriorMean,
    EmpiricalMean,
    SampleSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalystKind {
    StaticRandom,
    VarianceMaximizer,
    AdaptiveCorrelator,
}

impl AnalystKind {
    pub const ALL: [AnalystKind; 3] = [
        AnalystKind::StaticRandom,
        AnalystKind::VarianceMaximizer,
        AnalystKind::AdaptiveCorrelator,
    ];
}

/// Prior plus observed category counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CuratorState {
    pub prior: DirichletParams<f64>,
    pub counts: Vec<u64>,
    pub n_seen: u64,
}

impl CuratorState {
    pub fn new(prior: DirichletParams<f64>) -> Self {
        let counts = vec![0; prior.k()];
        Self {
            prior,
            counts,
            n_seen: 0,
        }
    }

    pub fn with_counts(prior: DirichletParams<f64>, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != prior.k() {
            return Err(Error::InvalidParameter(format!(
                "expected {} counts, got {}",
                prior.k(),
                counts.len()
            )));
        }
        let n_seen = counts.iter().sum();
        Ok(Self {
            prior,
            counts,
            n_seen,
        })
    }

    pub fn observe(&mut self, category: usize) {
        self.counts[category] += 1;
        self.n_seen += 1;
    }

    pub fn posterior(&self) -> DirichletParams<f64> {
        self.prior.updated(&self.counts).expect("counts match k")
    }
}

/// Answers a query from the curator's state. Sample splitting needs the
/// sample order and fold bookkeeping, so it lives in [`Curator`] instead.
pub fn answer_query(state: &CuratorState, query: &QuerySpec, kind: CuratorKind) -> Result<f64> {
    let k = state.prior.k();
    query.validate(k)?;
    match kind {
        CuratorKind::PosteriorMean => Ok(posterior_mean_answer(
            &state.prior,
            &state.counts,
            &query.weights(k),
        )),
        CuratorKind::EmpiricalMean => empirical_answer(&state.counts, query),
        CuratorKind::SampleSplit => Err(Error::Precondition(
            "sample splitting answers through a Curator built from the sample sequence".into(),
        )),
    }
}

fn empirical_answer(counts: &[u64], query: &QuerySpec) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(query.evaluate(&freq))
}

/// Beta(Σ_{i∈S} α_i, Σ_{i∉S} α_i), the law of Σ_{i∈S} p_i.
pub fn project_to_beta<T: Scalar>(
    d: &DirichletParams<T>,
    subset: &BTreeSet<usize>,
) -> Result<BetaParams<T>> {
    let k = d.k();
    if let Some(&bad) = subset.iter().find(|&&i| i >= k) {
        return Err(Error::InvalidParameter(format!(
            "category {bad} out of range for k = {k}"
        )));
    }
    if subset.is_empty() {
        return Err(Error::DegenerateQuery(0));
    }
    if subset.len() == k {
        return Err(Error::DegenerateQuery(1));
    }
    let mut inside = T::zero();
    let mut outside = T::zero();
    for (i, a) in d.alphas().iter().enumerate() {
        if subset.contains(&i) {
            inside = inside + a.clone();
        } else {
            outside = outside + a.clone();
        }
    }
    BetaParams::new(inside, outside)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionKsReport {
    pub alphas: Vec<f64>,
    pub subset: BTreeSet<usize>,
    pub beta_alpha: f64,
    pub beta_beta: f64,
    pub samples: usize,
    pub ks_statistic: f64,
    pub critical_value: f64,
    pub passed: bool,
}

/// KS comparison of `samples` draws of Σ_{i∈S} p_i, p ~ `prior`, with the
/// projected Beta law at significance `level`.
pub fn projection_ks_check(
    prior: &DirichletParams<f64>,
    subset: &BTreeSet<usize>,
    samples: usize,
    level: f64,
    seed: SeedSpec,
) -> Result<ProjectionKsReport> {
    let beta = project_to_beta(prior, subset)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let swapped = beta.swapped();
    let mut rng = seed.rng();
    // Probability-integral transform, taking whichever of Σ_S p_i and
    // Σ_{S^c} p_i is smaller so mass within an ulp of 1 is not rounded away.
    let us: Vec<f64> = (0..samples)
        .map(|_| {
            let p = prior.draw(&mut rng);
            let (x, y) = p.iter().enumerate().fold((0.0, 0.0), |(x, y), (i, v)| {
                if subset.contains(&i) {
                    (x + v, y)
                } else {
                    (x, y + v)
                }
            });
            if x <= y {
                beta.cdf(x).unwrap_or(f64::NAN)
            } else {
                1.0 - swapped.cdf(y).unwrap_or(f64::NAN)
            }
        })
        .collect();
    let ks = ks_statistic(us, |u| u);
    let critical_value = ks_critical_value(samples, level);
    Ok(ProjectionKsReport {
        alphas: prior.alphas().to_vec(),
        subset: subset.clone(),
        beta_alpha: *beta.alpha(),
        beta_beta: *beta.beta(),
        samples,
        ks_statistic: ks,
        critical_value,
        passed: ks < critical_value,
    })
}

/// A random Dirichlet prior with 2 ≤ k ≤ `k_max` and log-uniform
/// concentrations in [0.1, 10], with a nonempty proper subset.
pub fn random_projection_case<R: Rng + ?Sized>(
    rng: &mut R,
    k_max: usize,
) -> Result<(DirichletParams<f64>, BTreeSet<usize>)> {
    if k_max < 2 {
        return Err(Error::InvalidParameter("k_max must be at least 2".into()));
    }
    let k = rng.random_range(2..=k_max);
    let alphas = (0..k).map(|_| 10f64.powf(rng.random_range(-1.0..=1.0))).collect();
    let size = rng.random_range(1..k);
    let mut pool: Vec<usize> = (0..k).collect();
    for i in 0..size {
        let j = rng.random_range(i..k);
        pool.swap(i, j);
    }
    Ok((DirichletParams::new(alphas)?, pool[..size].iter().copied().collect()))
}

/// A drawn population and the curator's dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub true_p: Vec<f64>,
    pub samples: Vec<usize>,
    pub counts: Vec<u64>,
}

pub fn sample_instance(prior: &DirichletParams<f64>, n: u64, seed: SeedSpec) -> Result<Instance> {
    let mut rng = seed.rng();
    let true_p = prior.draw(&mut rng);
    let cat = Categorical::new(&true_p)?;
    let samples: Vec<usize> = (0..n).map(|_| cat.draw(&mut rng)).collect();
    let mut counts = vec![0u64; prior.k()];
    for &s in &samples {
        counts[s] += 1;
    }
    Ok(Instance {
        true_p,
        samples,
        counts,
    })
}

/// A curator holding its data for one game.
#[derive(Debug, Clone)]
pub enum Curator {
    PosteriorMean(CuratorState),
    EmpiricalMean(CuratorState),
    SampleSplit { folds: Vec<Vec<u64>>, next: usize },
}

impl Curator {
    /// `q` fixes the fold count for sample splitting: `n / q` samples each,
    /// with the remainder going to the last fold.
    pub fn new(
        kind: CuratorKind,
        prior: &DirichletParams<f64>,
        samples: &[usize],
        q: usize,
    ) -> Result<Self> {
        let k = prior.k();
        if let Some(&bad) = samples.iter().find(|&&s| s >= k) {
            return Err(Error::InvalidParameter(format!("sample {bad} out of range")));
        }
        let mut counts = vec![0u64; k];
        for &s in samples {
            counts[s] += 1;
        }
        Ok(match kind {
            CuratorKind::PosteriorMean => {
                Curator::PosteriorMean(CuratorState::with_counts(prior.clone(), counts)?)
            }
            CuratorKind::EmpiricalMean => {
                Curator::EmpiricalMean(CuratorState::with_counts(prior.clone(), counts)?)
            }
            CuratorKind::SampleSplit => {
                if q == 0 {
                    return Err(Error::InvalidParameter("q must be at least 1".into()));
                }
                let size = samples.len() / q;
                let folds = (0..q)
                    .map(|f| {
                        let end = if f + 1 == q { samples.len() } else { (f + 1) * size };
                        let mut c = vec![0u64; k];
                        for &s in &samples[f * size..end] {
                            c[s] += 1;
                        }
                        c
                    })
                    .collect();
                Curator::SampleSplit { folds, next: 0 }
            }
        })
    }

    pub fn answer(&mut self, query: &QuerySpec) -> Result<f64> {
        match self {
            Curator::PosteriorMean(s) => answer_query(s, query, CuratorKind::PosteriorMean),
            Curator::EmpiricalMean(s) => answer_query(s, query, CuratorKind::EmpiricalMean),
            Curator::SampleSplit { folds, next } => {
                let fold = folds
                    .get(*next)
                    .ok_or(Error::FoldsExhausted { folds: folds.len() })?;
                query.validate(fold.len())?;
                *next += 1;
                empirical_answer(fold, query)
            }
        }
    }
}

/// What an analyst is allowed to know: the prior, the sample size and the
/// query budget. Never the data or p̄.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PublicInfo {
    pub prior: DirichletParams<f64>,
    pub n: u64,
    pub q: usize,
}

fn random_proper_subset<R: Rng + ?Sized>(k: usize, rng: &mut R) -> BTreeSet<usize> {
    loop {
        let s: BTreeSet<usize> = (0..k).filter(|_| rng.random::<bool>()).collect();
        if !s.is_empty() && s.len() < k {
            return s;
        }
    }
}

/// Indices sorted by descending score, lowest index first among ties.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

#[derive(Debug, Clone)]
pub enum Analyst {
    /// All `q` queries drawn up front, uniformly among nonempty proper subsets.
    StaticRandom { queries: Vec<QuerySpec>, round: usize },
    /// Splits the estimated posterior mass in half, which maximizes the
    /// variance of the projected Beta posterior. Mass estimates start at the
    /// prior predictive and are refitted to every answer.
    VarianceMaximizer { mass: Vec<f64> },
    /// Probes every singleton, then repeatedly queries the ⌊k/2⌋ categories
    /// whose answers deviated most above their prior means.
    AdaptiveCorrelator {
        prior_mean: Vec<f64>,
        scores: Vec<f64>,
        round: usize,
    },
}

impl Analyst {
    pub fn new<R: Rng + ?Sized>(kind: AnalystKind, info: &PublicInfo, rng: &mut R) -> Self {
        let k = info.prior.k();
        match kind {
            AnalystKind::StaticRandom => Analyst::StaticRandom {
                queries: (0..info.q)
                    .map(|_| QuerySpec::Subset(random_proper_subset(k, rng)))
                    .collect(),
                round: 0,
            },
            AnalystKind::VarianceMaximizer => {
                let a = info.prior.total();
                let scale = (a + info.n as f64) / a;
                Analyst::VarianceMaximizer {
                    mass: info.prior.alphas().iter().map(|x| x * scale).collect(),
                }
            }
            AnalystKind::AdaptiveCorrelator => Analyst::AdaptiveCorrelator {
                prior_mean: info.prior.mean(),
                scores: vec![0.0; k],
                round: 0,
            },
        }
    }

    /// The query for the next round; `last` is the previous query and its
    /// answer.
    pub fn next_query(&mut self, last: Option<(&QuerySpec, f64)>) -> QuerySpec {
        match self {
            Analyst::StaticRandom { queries, round } => {
                let q = queries[*round % queries.len()].clone();
                *round += 1;
                q
            }
            Analyst::VarianceMaximizer { mass } => {
                if let Some((QuerySpec::Subset(s), answer)) = last {
                    refit(mass, s, answer);
                }
                let total: f64 = mass.iter().sum();
                let target = total / 2.0;
                let mut sum = 0.0;
                let mut s = BTreeSet::new();
                for i in ranked(mass) {
                    if ((sum + mass[i]) - target).abs() < (sum - target).abs() {
                        sum += mass[i];
                        s.insert(i);
                    }
                }
                if s.is_empty() {
                    s.insert(ranked(mass)[0]);
                }
                QuerySpec::Subset(s)
            }
            Analyst::AdaptiveCorrelator {
                prior_mean,
                scores,
                round,
            } => {
                let k = scores.len();
                if let Some((QuerySpec::Subset(s), answer)) = last {
                    if *round <= k && s.len() == 1 {
                        let i = *s.iter().next().expect("singleton");
                        scores[i] = answer - prior_mean[i];
                    } else if !s.is_empty() {
                        let predicted: f64 = s.iter().map(|&i| prior_mean[i] + scores[i]).sum();
                        let spread = (answer - predicted) / s.len() as f64;
                        for &i in s {
                            scores[i] += spread;
                        }
                    }
                }
                let q = if *round < k {
                    QuerySpec::subset([*round])
                } else {
                    QuerySpec::subset(ranked(scores).into_iter().take(k / 2))
                };
                *round += 1;
                q
            }
        }
    }
}

fn refit(mass: &mut [f64], s: &BTreeSet<usize>, answer: f64) {
    let total: f64 = mass.iter().sum();
    let inside: f64 = s.iter().map(|&i| mass[i]).sum();
    let outside = total - inside;
    let a = answer.clamp(1e-12, 1.0 - 1e-12);
    for (i, m) in mass.iter_mut().enumerate() {
        if s.contains(&i) {
            if inside > 0.0 {
                *m *= a * total / inside;
            }
        } else if outside > 0.0 {
            *m *= (1.0 - a) * total / outside;
        }
    }
}

/// Game parameters, also the JSON config of the `game` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub k: usize,
    pub prior: DirichletParams<f64>,
    /// Defaults to [`required_n`] for the other parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    pub q: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub analyst: AnalystKind,
    pub curator: CuratorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.k != self.prior.k() {
            return Err(Error::InvalidParameter(format!(
                "k = {} must be ≥ 2 and match the prior's {} categories",
                self.k,
                self.prior.k()
            )));
        }
        if self.q == 0 {
            return Err(Error::InvalidParameter("q must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} outside (0, 1]",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta = {} outside (0, 1)",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn resolved_n(&self) -> u64 {
        self.n
            .unwrap_or_else(|| required_n(self.epsilon, self.delta, self.q as u64, self.prior.total()))
    }

    pub fn public_info(&self) -> PublicInfo {
        PublicInfo {
            prior: self.prior.clone(),
            n: self.resolved_n(),
            q: self.q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Round {
    pub query: QuerySpec,
    pub answer: f64,
    pub truth: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameTranscript {
    pub true_p: Vec<f64>,
    pub rounds: Vec<Round>,
    pub max_error: f64,
    pub win: bool,
}

/// Plays one game. The instance is drawn from child stream 0 of `seed` and
/// the analyst's randomness from child stream 1.
pub fn run_game(config: &GameConfig, seed: SeedSpec) -> Result<GameTranscript> {
    config.validate()?;
    let info = config.public_info();
    let instance = sample_instance(&config.prior, info.n, seed.child(0))?;
    let mut curator = Curator::new(config.curator, &config.prior, &instance.samples, config.q)?;
    let mut analyst = Analyst::new(config.analyst, &info, &mut seed.child(1).rng());
    let mut rounds: Vec<Round> = Vec::with_capacity(config.q);
    let mut max_error = 0.0f64;
    for _ in 0..config.q {
        let query = analyst.next_query(rounds.last().map(|r| (&r.query, r.answer)));
        query.validate(config.k)?;
        let answer = curator.answer(&query)?;
        let truth = query.evaluate(&instance.true_p);
        let error = (answer - truth).abs();
        max_error = max_error.max(error);
        rounds.push(Round {
            query,
            answer,
            truth,
            error,
        });
    }
    Ok(GameTranscript {
        true_p: instance.true_p,
        rounds,
        max_error,
        win: max_error <= config.epsilon,
    })
}

/// Per-query failure bound 2·exp(−ε²(2(A+n)+1)) at sample size `n`.
pub fn per_query_tail(epsilon: f64, a: f64, n: u64) -> f64 {
    2.0 * (-epsilon * epsilon * (2.0 * (a + n as f64) + 1.0)).exp()
}

/// Smallest `n` whose union bound over `q` queries is at most δ.
pub fn required_n(epsilon: f64, delta: f64, q: u64, a: f64) -> u64 {
    let target = (delta / q as f64).ln();
    let ok = |n: u64| {
        std::f64::consts::LN_2 - epsilon * epsilon * (2.0 * (a + n as f64) + 1.0) <= target
    };
    if ok(0) {
        return 0;
    }
    let mut hi = 1u64;
    while !ok(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    // invariant: !ok(lo) or lo == 0 already ruled out, ok(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub max_error: f64,
    pub win: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureEstimate {
    pub n: u64,
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub wilson_interval: (f64, f64),
    pub per_trial: Vec<TrialSummary>,
}

pub const MIN_TRIALS: u64 = 100;

/// Plays `trials` independent games (trial `t` uses child stream `t` of
/// `seed`) and reports the failure rate with a 95% Wilson interval.
pub fn estimate_failure_rate(
    config: &GameConfig,
    trials: u64,
    seed: SeedSpec,
) -> Result<FailureEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::Precondition(format!(
            "failure-rate estimation needs at least {MIN_TRIALS} trials"
        )));
    }
    config.validate()?;
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_game(config, seed.child(t)).map(|g| TrialSummary {
                trial: t,
                max_error: g.max_error,
                win: g.win,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = per_trial.iter().filter(|t| !t.win).count() as u64;
    Ok(FailureEstimate {
        n: config.resolved_n(),
        trials,
        failures,
        rate: failures as f64 / trials as f64,
        wilson_interval: wilson_interval(failures, trials, Z_95),
        per_trial,
    })
}
