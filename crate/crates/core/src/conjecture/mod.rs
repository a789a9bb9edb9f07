//! Numerical evidence for the subgaussianity of query functionals under
//! other conjugate models.
//!
//! Each model projects its prior onto a counting query, giving a random
//! variable Q in [0, 1]: a binomial, geometric or multinomial probability
//! of a set of outcomes, or a Poisson probability under a Gamma prior.
//! Moments of Q are computed exactly where the functional is a polynomial
//! (or an exponential polynomial) and by Monte Carlo otherwise, and τ²(Q)
//! is compared with the model's natural scale.

pub mod poly;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{BetaParams, DirichletParams, GammaParams, MomentSequence};
use crate::error::{Error, Result};
use crate::sampling::{SeedSpec, Sampler};
use crate::special::log_gamma;
use crate::subgaussian::{raw_moment_criterion, variance_proxy_sup_with, GridSpec, ProxyMethod};

pub use poly::{
    binomial_form, binomial_query_poly, geometric_complement_form, geometric_form,
    geometric_query_poly, poisson_query_moments, poly_raw_moments_under_beta, BernsteinForm,
    MultinomialForm, PolynomialInP,
};

/// A conjectured model together with its prior and outcome set S.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ConjectureModel {
    BetaBinomial {
        m: u32,
        prior: BetaParams<f64>,
        subset: BTreeSet<u32>,
    },
    Geometric {
        prior: BetaParams<f64>,
        subset: BTreeSet<u32>,
    },
    Multinomial {
        m: u32,
        prior: DirichletParams<f64>,
        subset: BTreeSet<Vec<u32>>,
    },
    PoissonGamma {
        prior: GammaParams<f64>,
        subset: BTreeSet<u32>,
    },
}

impl ConjectureModel {
    pub fn name(&self) -> &'static str {
        match self {
            ConjectureModel::BetaBinomial { .. } => "beta_binomial",
            ConjectureModel::Geometric { .. } => "geometric",
            ConjectureModel::Multinomial { .. } => "multinomial",
            ConjectureModel::PoissonGamma { .. } => "poisson_gamma",
        }
    }

    /// m/(α+β), 1/α, m/Σα_i or 1/β.
    pub fn conjectured_scale(&self) -> f64 {
        match self {
            ConjectureModel::BetaBinomial { m, prior, .. } => f64::from(*m) / prior.total(),
            ConjectureModel::Geometric { prior, .. } => 1.0 / prior.alpha(),
            ConjectureModel::Multinomial { m, prior, .. } => f64::from(*m) / prior.total(),
            ConjectureModel::PoissonGamma { prior, .. } => 1.0 / prior.rate(),
        }
    }

    pub fn params_descriptor(&self) -> String {
        match self {
            ConjectureModel::BetaBinomial { m, prior, .. } => {
                format!("m={m} alpha={} beta={}", prior.alpha(), prior.beta())
            }
            ConjectureModel::Geometric { prior, .. } => {
                format!("alpha={} beta={}", prior.alpha(), prior.beta())
            }
            ConjectureModel::Multinomial { m, prior, .. } => {
                format!("m={m} alphas={:?}", prior.alphas())
            }
            ConjectureModel::PoissonGamma { prior, .. } => {
                format!("shape={} rate={}", prior.shape(), prior.rate())
            }
        }
    }

    pub fn subset_descriptor(&self) -> String {
        let mut out = String::from("{");
        match self {
            ConjectureModel::BetaBinomial { subset, .. }
            | ConjectureModel::Geometric { subset, .. }
            | ConjectureModel::PoissonGamma { subset, .. } => {
                let items: Vec<String> = subset.iter().map(u32::to_string).collect();
                out.push_str(&items.join(","));
            }
            ConjectureModel::Multinomial { subset, .. } => {
                for (i, x) in subset.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let items: Vec<String> = x.iter().map(u32::to_string).collect();
                    let _ = write!(out, "({})", items.join(","));
                }
            }
        }
        out.push('}');
        out
    }

    pub fn subset_len(&self) -> usize {
        match self {
            ConjectureModel::BetaBinomial { subset, .. }
            | ConjectureModel::Geometric { subset, .. }
            | ConjectureModel::PoissonGamma { subset, .. } => subset.len(),
            ConjectureModel::Multinomial { subset, .. } => subset.len(),
        }
    }

    /// Q at one draw of the model parameter.
    fn functional<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ConjectureModel::BetaBinomial { m, prior, subset } => {
                let p = prior.draw(rng);
                subset
                    .iter()
                    .map(|&k| {
                        poly::binomial_coefficient(*m, k) as f64
                            * p.powi(k as i32)
                            * (1.0 - p).powi((*m - k) as i32)
                    })
                    .sum()
            }
            ConjectureModel::Geometric { prior, subset } => {
                let p = prior.draw(rng);
                subset.iter().map(|&k| p * (1.0 - p).powi(k as i32)).sum()
            }
            ConjectureModel::Multinomial { subset, prior, .. } => {
                let p = prior.draw(rng);
                subset
                    .iter()
                    .map(|x| {
                        let coef = {
                            let mut acc = 1u64;
                            let mut seen = 0;
                            for &xi in x {
                                seen += xi;
                                acc *= poly::binomial_coefficient(seen, xi);
                            }
                            acc as f64
                        };
                        x.iter().zip(&p).fold(coef, |acc, (&xi, pi)| acc * pi.powi(xi as i32))
                    })
                    .sum()
            }
            ConjectureModel::PoissonGamma { prior, subset } => {
                let lambda = prior.draw(rng);
                subset
                    .iter()
                    .map(|&k| {
                        let lg = log_gamma(f64::from(k) + 1.0).unwrap_or(0.0);
                        if lambda == 0.0 {
                            f64::from(u8::from(k == 0))
                        } else {
                            (f64::from(k) * lambda.ln() - lambda - lg).exp()
                        }
                    })
                    .sum()
            }
        }
    }

    /// The same model with S replaced by its complement, when Q_{S^c} = 1 − Q_S
    /// has a finite exact representation.
    fn exact_moments(&self, j_max: usize) -> Result<(MomentSequence<f64>, Option<MomentSequence<f64>>)> {
        match self {
            ConjectureModel::BetaBinomial { m, prior, subset } => {
                let q = binomial_form::<f64>(*m, subset)?.raw_moments(prior, j_max)?;
                let comp = poly::binomial_complement(*m, subset);
                let c = binomial_form::<f64>(*m, &comp)?.raw_moments(prior, j_max)?;
                Ok((q, Some(c)))
            }
            ConjectureModel::Geometric { prior, subset } => {
                let q = geometric_form::<f64>(subset)?.raw_moments(prior, j_max)?;
                let c = geometric_complement_form::<f64>(subset)?.raw_moments(prior, j_max)?;
                Ok((q, Some(c)))
            }
            ConjectureModel::Multinomial { m, prior, subset } => {
                let k = prior.k();
                let q = MultinomialForm::<f64>::new(k, *m, subset)?.raw_moments(prior, j_max)?;
                let comp = MultinomialForm::<f64>::complement_set(k, *m, subset);
                let c = MultinomialForm::<f64>::new(k, *m, &comp)?.raw_moments(prior, j_max)?;
                Ok((q, Some(c)))
            }
            ConjectureModel::PoissonGamma { prior, subset } => {
                Ok((poisson_query_moments(subset, prior, j_max)?, None))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.subset_len() == 0 {
            return Err(Error::InvalidParameter("S must be nonempty".into()));
        }
        Ok(())
    }

    /// Largest j_max the exact mode accepts for this model.
    pub fn exact_j_max(&self) -> usize {
        match self {
            ConjectureModel::BetaBinomial { m, .. } => (poly::MAX_MOMENT_DEGREE / *m as usize).min(200),
            ConjectureModel::Geometric { subset, .. } => {
                let deg = subset.last().map_or(1, |&n| n as usize + 1);
                (poly::MAX_MOMENT_DEGREE / deg).min(200)
            }
            ConjectureModel::Multinomial { .. } => poly::MULTINOMIAL_EXACT_MAX_J,
            ConjectureModel::PoissonGamma { .. } => poly::POISSON_EXACT_MAX_J,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ExactMoments,
    MonteCarlo,
}

/// Moment estimates from i.i.d. draws of Q.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloMoments {
    pub moments: MomentSequence<f64>,
    pub standard_errors: Vec<f64>,
    pub draws: u64,
}

const MC_CHUNK: u64 = 1 << 14;

/// Estimates E[Q^j], j = 0…j_max, from `draws` samples; chunk `c` of the
/// draws uses child stream `c` of `seed`.
pub fn monte_carlo_moments(
    model: &ConjectureModel,
    j_max: usize,
    draws: u64,
    seed: SeedSpec,
) -> Result<MonteCarloMoments> {
    model.validate()?;
    if draws < 2 || j_max < 2 {
        return Err(Error::InvalidParameter("need at least two draws and j_max ≥ 2".into()));
    }
    let chunks = draws.div_ceil(MC_CHUNK);
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.child(c).rng();
            let count = MC_CHUNK.min(draws - c * MC_CHUNK);
            let mut first = vec![0.0f64; j_max + 1];
            let mut second = vec![0.0f64; j_max + 1];
            for _ in 0..count {
                let q = model.functional(&mut rng);
                let mut pw = 1.0;
                for j in 0..=j_max {
                    first[j] += pw;
                    second[j] += pw * pw;
                    pw *= q;
                }
            }
            (first, second)
        })
        .collect::<Vec<_>>();
    let n = draws as f64;
    let mut first = vec![0.0f64; j_max + 1];
    let mut second = vec![0.0f64; j_max + 1];
    for (f, s) in &sums {
        for j in 0..=j_max {
            first[j] += f[j];
            second[j] += s[j];
        }
    }
    let moments: Vec<f64> = first.iter().map(|v| v / n).collect();
    let standard_errors = moments
        .iter()
        .zip(&second)
        .map(|(m, s)| ((s / n - m * m).max(0.0) / (n - 1.0)).sqrt())
        .collect();
    Ok(MonteCarloMoments {
        moments: MomentSequence::new(moments)?,
        standard_errors,
        draws,
    })
}

/// How [`multinomial_query_moments`] obtains its moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentMode {
    Exact,
    MonteCarlo { draws: u64, seed: SeedSpec },
}

/// E[Q^j] for Q = Σ_{x∈S} P(x | m, p̄) with p̄ ~ Dirichlet.
pub fn multinomial_query_moments(
    m: u32,
    s: &BTreeSet<Vec<u32>>,
    prior: &DirichletParams<f64>,
    j_max: usize,
    mode: MomentMode,
) -> Result<MomentSequence<f64>> {
    match mode {
        MomentMode::Exact => MultinomialForm::<f64>::new(prior.k(), m, s)?.raw_moments(prior, j_max),
        MomentMode::MonteCarlo { draws, seed } => {
            MultinomialForm::<f64>::new(prior.k(), m, s)?;
            let model = ConjectureModel::Multinomial {
                m,
                prior: prior.clone(),
                subset: s.clone(),
            };
            Ok(monte_carlo_moments(&model, j_max, draws, seed)?.moments)
        }
    }
}

/// ln Σ_j λ^j m_j / j! for λ ≥ 0, in log space.
fn positive_series_log(ln_moments: &[f64], lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let ll = lambda.ln();
    let mut max = f64::NEG_INFINITY;
    let logs: Vec<f64> = ln_moments
        .iter()
        .enumerate()
        .map(|(j, lm)| {
            let v = j as f64 * ll + lm - log_gamma(j as f64 + 1.0).unwrap_or(0.0);
            max = max.max(v);
            v
        })
        .collect();
    max + logs.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// log-MGF of Q from its first moments (and those of 1 − Q when known, so
/// that λ < 0 never needs an alternating series).
#[derive(Debug, Clone)]
pub struct SeriesMgf {
    ln_moments: Vec<f64>,
    moments: Vec<f64>,
    ln_complement: Option<Vec<f64>>,
}

fn ln_all(m: &MomentSequence<f64>) -> Vec<f64> {
    m.values().iter().map(|v| v.ln()).collect()
}

impl SeriesMgf {
    pub fn new(moments: &MomentSequence<f64>, complement: Option<&MomentSequence<f64>>) -> Self {
        Self {
            ln_moments: ln_all(moments),
            moments: moments.values().to_vec(),
            ln_complement: complement.map(ln_all),
        }
    }

    pub fn j_max(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn log_mgf(&self, lambda: f64) -> Result<f64> {
        if lambda >= 0.0 {
            return Ok(positive_series_log(&self.ln_moments, lambda));
        }
        if let Some(c) = &self.ln_complement {
            return Ok(lambda + positive_series_log(c, -lambda));
        }
        let mut acc = 0.0;
        let mut comp = 0.0;
        let mut pw = 1.0;
        for (j, m) in self.moments.iter().enumerate() {
            if j > 0 {
                pw *= lambda / j as f64;
            }
            // Neumaier summation of the alternating series
            let x = pw * m;
            let t = acc + x;
            comp += if f64::abs(acc) >= f64::abs(x) { (acc - t) + x } else { (x - t) + acc };
            acc = t;
        }
        let v = acc + comp;
        if !(v > 0.0) {
            return Err(Error::Range(format!("truncated MGF is not positive at {lambda}")));
        }
        Ok(v.ln())
    }
}

/// Bound on the series tail Σ_{j>J} L^j / j!.
pub fn truncation_tail(j_max: usize, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let ll = lambda.ln();
    let start = j_max + 1;
    let stop = start.max((2.0 * lambda) as usize) + 200;
    let logs: Vec<f64> = (start..=stop)
        .map(|j| j as f64 * ll - log_gamma(j as f64 + 1.0).unwrap_or(0.0))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max + logs.iter().map(|v| (v - max).exp()).sum::<f64>().ln()).exp()
}

pub const TRUNCATION_TOL: f64 = 1e-8;
/// Rounding allowance for the alternating series: e^{2L}·2⁻⁵² ≤ 1e-8.
const ALTERNATING_CAP: f64 = 9.0;

/// Largest L with truncation_tail(j_max, L) < 1e-8.
pub fn truncation_lambda_cap(j_max: usize) -> f64 {
    let (mut lo, mut hi) = (0.0f64, (j_max as f64 + 1.0).max(1.0));
    while truncation_tail(j_max, hi) < TRUNCATION_TOL {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if truncation_tail(j_max, mid) < TRUNCATION_TOL {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub const CRITERION_MULTIPLIERS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub model: &'static str,
    pub params: String,
    pub subset: String,
    pub subset_size: usize,
    pub tau2_est: f64,
    pub conjectured_scale: f64,
    pub ratio: f64,
    pub method: MomentMethod,
    pub j_max: usize,
    pub lambda_cap: f64,
    pub truncation_bound: f64,
    pub argmax_lambda: f64,
    /// Smallest c in {1/4, 1/2, 1, 2} for which the raw-moment criterion
    /// certifies c·scale as an upper variance proxy.
    pub smallest_passing_c: Option<f64>,
}

/// Settings for [`evaluate_conjecture`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalOptions {
    pub method: MomentMethod,
    /// Defaults to the largest exact-mode value (exact) or 20 (Monte Carlo).
    pub j_max: Option<usize>,
    pub draws: u64,
    pub seed: SeedSpec,
}

impl EvalOptions {
    pub fn exact() -> Self {
        Self {
            method: MomentMethod::ExactMoments,
            j_max: None,
            draws: 0,
            seed: SeedSpec::new(0),
        }
    }

    pub fn monte_carlo(draws: u64, seed: SeedSpec) -> Self {
        Self {
            method: MomentMethod::MonteCarlo,
            j_max: None,
            draws,
            seed,
        }
    }
}

/// Estimates τ²(Q) from the moment series and compares it with the
/// conjectured scale.
pub fn evaluate_conjecture(model: &ConjectureModel, opts: &EvalOptions) -> Result<ConjectureReport> {
    model.validate()?;
    let (moments, complement, j_max, mc_cap) = match opts.method {
        MomentMethod::ExactMoments => {
            let j = opts.j_max.unwrap_or_else(|| model.exact_j_max());
            let (q, c) = model.exact_moments(j)?;
            (q, c, j, f64::INFINITY)
        }
        MomentMethod::MonteCarlo => {
            let j = opts.j_max.unwrap_or(20);
            let mc = monte_carlo_moments(model, j, opts.draws, opts.seed)?;
            // e^{|λ|} ≤ 10⁶/√N keeps the Monte Carlo error of the MGF in check
            let cap = (1e6 / (opts.draws as f64).sqrt()).ln().max(0.1);
            (mc.moments, None, j, cap)
        }
    };
    let series = SeriesMgf::new(&moments, complement.as_ref());
    let mut cap = truncation_lambda_cap(j_max).min(mc_cap);
    if complement.is_none() {
        cap = cap.min(ALTERNATING_CAP);
    }
    let method = match opts.method {
        MomentMethod::ExactMoments => ProxyMethod::ExactMgf,
        MomentMethod::MonteCarlo => ProxyMethod::EmpiricalMgf,
    };
    let mut grid = GridSpec::new(cap);
    grid.lambda_min = grid.lambda_min.min(cap / 10.0);
    let est = variance_proxy_sup_with(|l| series.log_mgf(l), *moments.mean(), &grid, method)?;
    let scale = model.conjectured_scale();
    let smallest_passing_c = CRITERION_MULTIPLIERS.iter().copied().find(|c| {
        raw_moment_criterion(&moments, &(c * scale)).is_ok_and(|r| r.passed)
    });
    Ok(ConjectureReport {
        model: model.name(),
        params: model.params_descriptor(),
        subset: model.subset_descriptor(),
        subset_size: model.subset_len(),
        tau2_est: est.value,
        conjectured_scale: scale,
        ratio: est.value / scale,
        method: opts.method,
        j_max,
        lambda_cap: cap,
        truncation_bound: truncation_tail(j_max, cap),
        argmax_lambda: est.argmax_lambda,
        smallest_passing_c,
    })
}

/// Distinct outcome sets for sweeps over the universe `0..range`: one of
/// each stratified size 1, ⌊range/2⌋ and range − 1, then up to `extra`
/// further uniformly random nonempty proper subsets.
pub fn stratified_subsets<R: Rng + ?Sized>(range: u32, extra: usize, rng: &mut R) -> Vec<BTreeSet<u32>> {
    let mut out: Vec<BTreeSet<u32>> = Vec::new();
    let mut sizes = vec![1, range / 2, range.saturating_sub(1)];
    sizes.dedup();
    for size in sizes.into_iter().filter(|&s| s >= 1 && s < range) {
        let mut pool: Vec<u32> = (0..range).collect();
        for i in 0..size as usize {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        out.push(pool[..size as usize].iter().copied().collect());
    }
    let available = if range >= 32 { usize::MAX } else { (1usize << range) - 2 };
    let target = (out.len() + extra).min(available);
    while out.len() < target {
        let s: BTreeSet<u32> = (0..range).filter(|_| rng.random::<bool>()).collect();
        if !s.is_empty() && (s.len() as u32) < range && !out.contains(&s) {
            out.push(s);
        }
    }
    out
}
