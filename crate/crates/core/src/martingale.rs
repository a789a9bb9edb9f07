//! The Beta–Bernoulli posterior-mean martingale and posterior stability.
//!
//! Starting from a Beta(α, β) prior, X_k is the posterior mean after `k`
//! Bernoulli observations. Each step is a centered two-point variable, so its
//! exact variance proxy is known, and the proxies telescope to the Beta
//! bound.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{BetaParams, DirichletParams};
use crate::error::{Error, Result};
use crate::sampling::{Categorical, SeedSpec, Sampler};
use crate::scalar::{CompensatedSum, Real, Scalar};
use crate::subgaussian::tail_bound;

/// The conditional law of X_k − X_{k−1} given the posterior before step k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepIncrement<T> {
    pub up_value: T,
    pub up_prob: T,
    pub down_value: T,
    pub down_prob: T,
}

impl<T: Scalar> StepIncrement<T> {
    /// Expected increment; zero up to rounding.
    pub fn mean(&self) -> T {
        self.up_prob.clone() * self.up_value.clone()
            + self.down_prob.clone() * self.down_value.clone()
    }
}

pub fn step_increment<T: Scalar>(p: &BetaParams<T>) -> StepIncrement<T> {
    let total = p.total();
    let denom = total.clone() * (total.clone() + T::one());
    StepIncrement {
        up_value: p.beta.clone() / denom.clone(),
        up_prob: p.alpha.clone() / total.clone(),
        down_value: -(p.alpha.clone() / denom),
        down_prob: p.beta.clone() / total,
    }
}

/// Optimal variance proxy of a centered Bernoulli(p) variable, scaled to
/// unit jump: (2p − 1) / (2 ln(p / (1 − p))).
pub fn k_function<T: Real>(p: T) -> Result<T> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::Domain {
            function: "k_function",
            value: p.to_f64_lossy(),
        });
    }
    if p == T::zero() || p == T::one() {
        return Ok(T::zero());
    }
    let quarter = T::lit(0.25);
    let d = p - T::lit(0.5);
    if d.abs() < T::lit(1e-6) {
        // d / (2 atanh 2d) = ¼ (1 − 4d²/3 − …)
        return Ok(quarter * (T::one() - T::lit(4.0 / 3.0) * d * d));
    }
    Ok(d / (T::lit(2.0) * (T::lit(2.0) * d).atanh()))
}

/// K(mean) / (α + β + 1)², the exact proxy of the next increment.
pub fn step_variance_proxy<T: Real>(p: &BetaParams<T>) -> T {
    let scale = p.total() + T::one();
    // the mean of valid parameters always lies in (0, 1)
    k_function(p.mean()).unwrap_or(T::zero()) / (scale * scale)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AzumaReport<T> {
    pub horizon: u64,
    pub partial_sum: T,
    pub tail_bound_remainder: T,
    pub theorem_bound: T,
    pub holds: bool,
}

impl<T: Real> AzumaReport<T> {
    /// partial_sum plus the telescoped tail.
    pub fn total(&self) -> T {
        self.partial_sum + self.tail_bound_remainder
    }
}

/// Sums the worst-case step proxies 1/(4(α+β+k)²) for k = 1…horizon and
/// bounds the rest of the series by 1/(4(α+β+horizon+½)).
pub fn azuma_total<T: Real>(prior: &BetaParams<T>, horizon: u64) -> Result<AzumaReport<T>> {
    if horizon == 0 {
        return Err(Error::Precondition("azuma_total needs horizon ≥ 1".into()));
    }
    let a = prior.total();
    let four = T::lit(4.0);
    let mut acc = CompensatedSum::default();
    for k in (1..=horizon).rev() {
        let d = a + T::lit(k as f64);
        acc.add((four * d * d).recip());
    }
    let partial_sum = acc.value();
    let tail_bound_remainder = (four * (a + T::lit(horizon as f64) + T::lit(0.5))).recip();
    let theorem_bound = (four * a + T::lit(2.0)).recip();
    Ok(AzumaReport {
        horizon,
        partial_sum,
        tail_bound_remainder,
        theorem_bound,
        holds: partial_sum + tail_bound_remainder <= theorem_bound + T::lit(1e-12),
    })
}

/// The value the full series provably stays above: 1/(4A + 2 + 1/(3A)).
pub fn azuma_lower_bound<T: Real>(total_mass: T) -> T {
    (T::lit(4.0) * total_mass + T::lit(2.0) + (T::lit(3.0) * total_mass).recip()).recip()
}

pub const DEFAULT_AZUMA_HORIZON: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStep {
    pub sample: u8,
    pub posterior: BetaParams<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorPath {
    pub prior: BetaParams<f64>,
    pub true_p: f64,
    pub steps: Vec<PathStep>,
    pub horizon: usize,
}

impl PosteriorPath {
    /// X_0, …, X_horizon.
    pub fn means(&self) -> Vec<f64> {
        std::iter::once(self.prior.mean())
            .chain(self.steps.iter().map(|s| s.mean))
            .collect()
    }

    pub fn deviation(&self) -> f64 {
        let x0 = self.prior.mean();
        self.steps.last().map_or(x0, |s| s.mean) - x0
    }

    /// Σ_k step_variance_proxy of the posterior before step k.
    pub fn proxy_sum(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        let mut current = &self.prior;
        for s in &self.steps {
            acc.add(step_variance_proxy(current));
            current = &s.posterior;
        }
        acc.value()
    }
}

/// Draws one path of length `horizon`. With `true_p = None` the parameter
/// is first drawn from the prior.
pub fn simulate_path<R: Rng + ?Sized>(
    prior: &BetaParams<f64>,
    true_p: Option<f64>,
    horizon: usize,
    rng: &mut R,
) -> Result<PosteriorPath> {
    let true_p = match true_p {
        Some(p) if (0.0..=1.0).contains(&p) => p,
        Some(p) => {
            return Err(Error::InvalidParameter(format!("true_p = {p} outside [0, 1]")));
        }
        None => prior.draw(rng),
    };
    let mut posterior = prior.clone();
    let mut steps = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let sample = u8::from(rng.random::<f64>() < true_p);
        posterior = posterior.updated(u64::from(sample), u64::from(1 - sample));
        steps.push(PathStep {
            sample,
            mean: posterior.mean(),
            posterior: posterior.clone(),
        });
    }
    Ok(PosteriorPath {
        prior: prior.clone(),
        true_p,
        steps,
        horizon,
    })
}

pub const TAIL_EPSILONS: [f64; 3] = [0.1, 0.2, 0.3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: u64,
    pub true_p: f64,
    pub x_horizon: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementCheck {
    pub count: u64,
    pub mean: f64,
    pub standard_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub epsilon: f64,
    pub bound: f64,
    pub standard_error: f64,
    pub upper_frequency: f64,
    pub lower_frequency: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub step: usize,
    pub mean_abs_error: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSimulationReport {
    pub prior: BetaParams<f64>,
    pub horizon: usize,
    pub trials: u64,
    pub sigma2: f64,
    pub increments: IncrementCheck,
    pub tails: Vec<TailCheck>,
    pub convergence: Vec<ConvergencePoint>,
    pub convergence_passed: bool,
    pub rows: Vec<TrialRow>,
    pub passed: bool,
}

struct TrialOutcome {
    row: TrialRow,
    inc_sum: f64,
    inc_sq: f64,
    abs_errors: Vec<f64>,
}

fn checkpoints(horizon: usize) -> Vec<usize> {
    let mut pts: Vec<usize> = [0, horizon / 16, horizon / 4, horizon]
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    pts.dedup();
    pts
}

fn run_trial(prior: &BetaParams<f64>, horizon: usize, marks: &[usize], seed: SeedSpec) -> TrialOutcome {
    let mut rng = seed.rng();
    let true_p = prior.draw(&mut rng);
    let (mut a, mut b) = (prior.alpha, prior.beta);
    let x0 = a / (a + b);
    let mut x = x0;
    let (mut inc_sum, mut inc_sq) = (0.0, 0.0);
    let mut abs_errors = Vec::with_capacity(marks.len());
    let mut next_mark = 0;
    for step in 0..=horizon {
        while next_mark < marks.len() && marks[next_mark] == step {
            abs_errors.push((x - true_p).abs());
            next_mark += 1;
        }
        if step == horizon {
            break;
        }
        if rng.random::<f64>() < true_p {
            a += 1.0;
        } else {
            b += 1.0;
        }
        let next = a / (a + b);
        let d = next - x;
        inc_sum += d;
        inc_sq += d * d;
        x = next;
    }
    TrialOutcome {
        row: TrialRow {
            trial: 0,
            true_p,
            x_horizon: x,
            deviation: x - x0,
        },
        inc_sum,
        inc_sq,
        abs_errors,
    }
}

/// Monte Carlo study of the martingale: increments average to zero, the
/// deviation X_horizon − X_0 obeys the subgaussian tail with proxy
/// 1/(4(α+β)+2), and X_k approaches the true parameter.
pub fn simulate_paths(
    prior: &BetaParams<f64>,
    horizon: usize,
    trials: u64,
    seed: SeedSpec,
) -> Result<PathSimulationReport> {
    if trials == 0 {
        return Err(Error::Precondition("simulate_paths needs trials ≥ 1".into()));
    }
    let marks = checkpoints(horizon);
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut o = run_trial(prior, horizon, &marks, seed.child(t));
            o.row.trial = t;
            o
        })
        .collect();
    let n = trials as f64;

    let count = trials * horizon as u64;
    let increments = if count == 0 {
        IncrementCheck {
            count,
            mean: 0.0,
            standard_error: 0.0,
            passed: true,
        }
    } else {
        let m = count as f64;
        let mean = outcomes.iter().map(|o| o.inc_sum).sum::<f64>() / m;
        let second = outcomes.iter().map(|o| o.inc_sq).sum::<f64>() / m;
        let se = ((second - mean * mean).max(0.0) / m).sqrt();
        IncrementCheck {
            count,
            mean,
            standard_error: se,
            passed: mean.abs() <= 4.0 * se + 1e-15,
        }
    };

    let sigma2 = (4.0 * prior.total() + 2.0).recip();
    let tails = TAIL_EPSILONS
        .iter()
        .map(|&eps| {
            let bound = tail_bound(sigma2, eps).map(|t| t.bound).unwrap_or(1.0);
            let se = (bound * (1.0 - bound) / n).sqrt();
            let up = outcomes.iter().filter(|o| o.row.deviation >= eps).count() as f64 / n;
            let down = outcomes.iter().filter(|o| o.row.deviation <= -eps).count() as f64 / n;
            TailCheck {
                epsilon: eps,
                bound,
                standard_error: se,
                upper_frequency: up,
                lower_frequency: down,
                passed: up <= bound + 4.0 * se && down <= bound + 4.0 * se,
            }
        })
        .collect::<Vec<_>>();

    let convergence: Vec<ConvergencePoint> = marks
        .iter()
        .enumerate()
        .map(|(i, &step)| {
            let errs = outcomes.iter().map(|o| o.abs_errors[i]);
            let mean = errs.clone().sum::<f64>() / n;
            let sq = errs.map(|e| e * e).sum::<f64>() / n;
            ConvergencePoint {
                step,
                mean_abs_error: mean,
                standard_error: ((sq - mean * mean).max(0.0) / n).sqrt(),
            }
        })
        .collect();
    let convergence_passed = convergence.windows(2).all(|w| {
        let slack = 4.0 * (w[0].standard_error.powi(2) + w[1].standard_error.powi(2)).sqrt();
        w[1].mean_abs_error <= w[0].mean_abs_error + slack
    });

    let passed = increments.passed && tails.iter().all(|t| t.passed) && convergence_passed;
    Ok(PathSimulationReport {
        prior: prior.clone(),
        horizon,
        trials,
        sigma2,
        increments,
        tails,
        convergence,
        convergence_passed,
        rows: outcomes.into_iter().map(|o| o.row).collect(),
        passed,
    })
}

/// Count vectors of length `k` summing to `n`, in lexicographic order.
pub fn compositions(n: u64, k: usize) -> Vec<Vec<u64>> {
    fn go(n: u64, k: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if k == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=n {
            prefix.push(c);
            go(n - c, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        go(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

pub const EXHAUSTIVE_MAX_N: u64 = 12;
pub const EXHAUSTIVE_MAX_K: usize = 4;
pub const DEFAULT_PROBES: usize = 20_000;
const STABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub n: u64,
    pub total_mass: f64,
    pub subset: Vec<usize>,
    pub exhaustive: bool,
    pub datasets_checked: usize,
    pub max_add_one: f64,
    pub add_one_bound: f64,
    pub max_replace_one: f64,
    pub replace_one_bound: f64,
    pub lipschitz_slope: f64,
    pub max_slope_deviation: f64,
    pub max_affine_residual: f64,
    pub chain_holds: bool,
    pub passed: bool,
}

fn subset_mass(values: &[f64], subset: &BTreeSet<usize>) -> f64 {
    subset.iter().map(|&i| values[i]).sum()
}

/// Checks how much the posterior-mean answer to a counting query can move
/// under the dataset perturbations that drive concentration: appending a
/// sample, replacing a sample, and changing the empirical mean.
///
/// Small instances (n ≤ 12, k ≤ 4) are enumerated over every count vector;
/// larger ones are probed with `probes` random datasets drawn from `seed`.
pub fn stability_diagnostics(
    prior: &DirichletParams<f64>,
    n: u64,
    subset: &BTreeSet<usize>,
    seed: SeedSpec,
    probes: usize,
) -> Result<StabilityReport> {
    if n == 0 {
        return Err(Error::Precondition("stability diagnostics need n ≥ 1".into()));
    }
    let k = prior.k();
    if let Some(&bad) = subset.iter().find(|&&i| i >= k) {
        return Err(Error::InvalidParameter(format!(
            "category {bad} out of range for k = {k}"
        )));
    }
    let alphas = prior.alphas();
    let a_total = prior.total();
    let nf = n as f64;
    let alpha_s = subset_mass(alphas, subset);
    let prior_mean = alpha_s / a_total;
    let exhaustive = n <= EXHAUSTIVE_MAX_N && k <= EXHAUSTIVE_MAX_K;

    let datasets: Vec<Vec<u64>> = if exhaustive {
        compositions(n, k)
    } else {
        let mut rng = seed.rng();
        // every point mass, then a mix of prior-typical and uniform data
        let mut out: Vec<Vec<u64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { n } else { 0 }).collect())
            .collect();
        for i in 0..probes.saturating_sub(k) {
            let probs = if i % 2 == 0 { prior.draw(&mut rng) } else { vec![1.0; k] };
            out.push(Categorical::new(&probs)?.counts(&mut rng, n as usize));
        }
        out
    };

    let answer = |c_s: f64, size: f64| (alpha_s + c_s) / (a_total + size);
    let slope = nf / (a_total + nf);
    let in_s: Vec<f64> = (0..k).map(|i| f64::from(u8::from(subset.contains(&i)))).collect();

    let mut max_add = 0.0f64;
    let mut max_replace = 0.0f64;
    let mut max_residual = 0.0f64;
    let mut max_slope_dev = 0.0f64;
    let mut reference: Option<(f64, f64)> = None;
    for counts in &datasets {
        let c_s: f64 = subset.iter().map(|&i| counts[i] as f64).sum();
        let a = answer(c_s, nf);
        let emp = c_s / nf;
        max_residual = max_residual.max((a - (a_total * prior_mean + nf * emp) / (a_total + nf)).abs());
        match reference {
            Some((e0, a0)) if (emp - e0).abs() > 0.5 / nf => {
                max_slope_dev = max_slope_dev.max(((a - a0) / (emp - e0) - slope).abs());
            }
            None => reference = Some((emp, a)),
            _ => {}
        }
        for x in &in_s {
            max_add = max_add.max((answer(c_s + x, nf + 1.0) - a).abs());
        }
        for (i, &ci) in counts.iter().enumerate() {
            if ci == 0 {
                continue;
            }
            for j in 0..k {
                let moved = c_s - in_s[i] + in_s[j];
                max_replace = max_replace.max((answer(moved, nf) - a).abs());
            }
        }
    }

    let add_bound = (a_total + nf + 1.0).recip();
    let replace_bound = (a_total + nf).recip();
    let chain_holds = max_add <= replace_bound + STABILITY_TOL;
    let passed = max_add <= add_bound + STABILITY_TOL
        && max_replace <= replace_bound + STABILITY_TOL
        && max_residual <= STABILITY_TOL
        && max_slope_dev <= STABILITY_TOL
        && slope <= 1.0
        && chain_holds;
    Ok(StabilityReport {
        n,
        total_mass: a_total,
        subset: subset.iter().copied().collect(),
        exhaustive,
        datasets_checked: datasets.len(),
        max_add_one: max_add,
        add_one_bound: add_bound,
        max_replace_one: max_replace,
        replace_one_bound: replace_bound,
        lipschitz_slope: slope,
        max_slope_deviation: max_slope_dev,
        max_affine_residual: max_residual,
        chain_holds,
        passed,
    })
}
