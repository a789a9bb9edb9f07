//! Checks of the Chi family against the raw-moment criterion and the
//! one-sided tail bound it implies.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{chi_moments, chi_raw_moment};
use crate::error::{Error, Result};
use crate::sampling::{Chi, Sampler, SeedSpec};

use super::criteria::raw_moment_criterion;
use super::proxy::tail_bound;

pub const CHI_TAIL_EPSILONS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiTailCheck {
    pub epsilon: f64,
    pub empirical: f64,
    pub bound: f64,
    pub standard_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiReport {
    pub k: u32,
    pub j_max: usize,
    /// max_j |E[X^{j+2}] / ((k+j) E[X^j]) − 1|
    pub recurrence_max_rel_err: f64,
    pub mean_squared: f64,
    pub mean_squared_ok: bool,
    pub criterion_passed: bool,
    pub samples: usize,
    pub tails: Vec<ChiTailCheck>,
    pub passed: bool,
}

const RECURRENCE_TOL: f64 = 1e-12;
const TAIL_SE_MULTIPLIER: f64 = 4.0;
const CHUNK: usize = 1 << 15;

/// Moment recurrence, E[X]² ≥ k − 1, the raw-moment criterion at σ² = 1 up
/// to `j_max`, and the empirical upper tails P(X − E[X] ≥ ε) of `samples`
/// draws against exp(−ε²/2).
pub fn chi_checks(k: u32, j_max: usize, samples: usize, seed: SeedSpec) -> Result<ChiReport> {
    if k == 0 || samples < 2 {
        return Err(Error::InvalidParameter("need k ≥ 1 and at least two samples".into()));
    }
    let mut recurrence_max_rel_err = 0.0f64;
    for j in 0..=j_max as u32 {
        let lhs: f64 = chi_raw_moment(k, j + 2)?;
        let rhs = f64::from(k + j) * chi_raw_moment::<f64>(k, j)?;
        recurrence_max_rel_err = recurrence_max_rel_err.max((lhs / rhs - 1.0).abs());
    }
    let moments = chi_moments::<f64>(k, j_max.max(2))?;
    let mean = *moments.mean();
    let mean_squared = mean * mean;
    let mean_squared_ok = mean_squared >= f64::from(k) - 1.0;
    let criterion_passed = raw_moment_criterion(&moments, &1.0)?.passed;

    let chi = Chi { k };
    let chunks = samples.div_ceil(CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.child(c as u64).rng();
            let mut counts = [0u64; CHI_TAIL_EPSILONS.len()];
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                let dev = chi.draw(&mut rng) - mean;
                for (count, eps) in counts.iter_mut().zip(CHI_TAIL_EPSILONS) {
                    *count += u64::from(dev >= eps);
                }
            }
            counts
        })
        .reduce(
            || [0u64; CHI_TAIL_EPSILONS.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let n = samples as f64;
    let tails = CHI_TAIL_EPSILONS
        .iter()
        .zip(hits)
        .map(|(&epsilon, h)| {
            let empirical = h as f64 / n;
            let bound = tail_bound(1.0, epsilon)?.bound;
            let standard_error = (empirical * (1.0 - empirical) / n).sqrt();
            Ok(ChiTailCheck {
                epsilon,
                empirical,
                bound,
                standard_error,
                passed: empirical <= bound + TAIL_SE_MULTIPLIER * standard_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = recurrence_max_rel_err <= RECURRENCE_TOL
        && mean_squared_ok
        && criterion_passed
        && tails.iter().all(|t| t.passed);
    Ok(ChiReport {
        k,
        j_max,
        recurrence_max_rel_err,
        mean_squared,
        mean_squared_ok,
        criterion_passed,
        samples,
        tails,
        passed,
    })
}
