//! Reproducible random streams and samplers.
//!
//! A [`SeedSpec`] names a ChaCha stream: the master seed keys the cipher and
//! the stream id selects one of its 2⁶⁴ independent counter streams, so
//! parallel trials can each own a stream without coordination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::{BetaParams, DirichletParams, GammaParams};
use crate::error::{Error, Result};

pub type StreamRng = ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_id: 0,
        }
    }

    pub fn with_stream(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derives the `index`-th child stream. Children of distinct parents
    /// live under distinct keys.
    pub fn child(&self, index: u64) -> Self {
        Self {
            master_seed: splitmix64(self.master_seed ^ splitmix64(self.stream_id)),
            stream_id: index,
        }
    }
}

/// Something that can be drawn from with a caller-owned RNG.
pub trait Sampler {
    type Output;
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Output;
}

/// `count` i.i.d. draws from the stream named by `seed`.
pub fn sample<D: Sampler>(dist: &D, seed: SeedSpec, count: usize) -> Vec<D::Output> {
    let mut rng = seed.rng();
    (0..count).map(|_| dist.draw(&mut rng)).collect()
}

/// ln G for G ~ Gamma(shape, 1).
///
/// Shapes below one use G(a) = G(a + 1) · U^{1/a}, evaluated in log space
/// so tiny shapes cannot underflow to zero.
pub fn log_gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("valid gamma shape");
        g.sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid gamma shape");
        let u: f64 = Open01.sample(rng);
        g.sample(rng).ln() + u.ln() / shape
    }
}

fn normalize_logs(mut logs: Vec<f64>) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in logs.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in logs.iter_mut() {
        *v /= total;
    }
    logs
}

impl Sampler for DirichletParams<f64> {
    type Output = Vec<f64>;
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let logs = self
            .alphas
            .iter()
            .map(|&a| log_gamma_variate(rng, a))
            .collect();
        normalize_logs(logs)
    }
}

impl Sampler for BetaParams<f64> {
    type Output = f64;
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = log_gamma_variate(rng, self.alpha);
        let y = log_gamma_variate(rng, self.beta);
        // x/(x+y) = 1/(1 + e^{ln y − ln x})
        1.0 / (1.0 + (y - x).exp())
    }
}

impl Sampler for GammaParams<f64> {
    type Output = f64;
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        log_gamma_variate(rng, self.alpha).exp() / self.beta
    }
}

/// Categorical distribution over `0..k`.
#[derive(Debug, Clone)]
pub struct Categorical {
    cumulative: Vec<f64>,
}

impl Categorical {
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(
                "categorical probabilities must be finite and non-negative".into(),
            ));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return Err(Error::InvalidParameter("probabilities sum to zero".into()));
        }
        for c in cumulative.iter_mut() {
            *c /= acc;
        }
        Ok(Self { cumulative })
    }

    pub fn k(&self) -> usize {
        self.cumulative.len()
    }

    /// Draws `n` samples and returns per-category counts.
    pub fn counts<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<u64> {
        let mut counts = vec![0u64; self.k()];
        for _ in 0..n {
            counts[self.draw(rng)] += 1;
        }
        counts
    }
}

impl Sampler for Categorical {
    type Output = usize;
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // zero-probability trailing categories are never selected
        idx.min(self.k() - 1)
    }
}

/// χ_k as the Euclidean norm of `k` standard normals.
#[derive(Debug, Clone, Copy)]
pub struct Chi {
    pub k: u32,
}

impl Sampler for Chi {
    type Output = f64;
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (0..self.k)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * z
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical_value, ks_statistic};

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn identical_seed_gives_identical_stream() {
        let d = DirichletParams::new(vec![0.3, 1.0, 4.0]).unwrap();
        let s = SeedSpec::with_stream(99, 4);
        assert_eq!(sample(&d, s, 50), sample(&d, s, 50));
        assert_ne!(sample(&d, s, 5), sample(&d, SeedSpec::with_stream(99, 5), 5));
        assert_ne!(s.child(0), s.child(1));
        assert_ne!(SeedSpec::with_stream(99, 4).child(0), SeedSpec::with_stream(99, 5).child(0));
    }

    #[test]
    fn beta_uniform_mean() {
        let xs = sample(&BetaParams::new(1.0, 1.0).unwrap(), SeedSpec::new(1), 1_000_000);
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((m - 0.5).abs() <= 4.0 / (12.0e6f64).sqrt());
    }

    #[test]
    fn beta_means_across_shapes() {
        for (i, &(a, b)) in [(0.1, 0.1), (0.25, 5.0), (2.0, 3.0), (50.0, 0.5)].iter().enumerate() {
            let p = BetaParams::new(a, b).unwrap();
            let xs = sample(&p, SeedSpec::with_stream(2, i as u64), 1_000_000);
            assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
            let (m, _) = mean_and_se(&xs);
            let se = (p.variance() / 1e6).sqrt();
            assert!((m - p.mean()).abs() <= 4.0 * se, "Beta({a},{b}) mean {m}");
        }
    }

    #[test]
    fn dirichlet_coordinate_means() {
        let d = DirichletParams::new(vec![1.0, 1.0, 1.0]).unwrap();
        let xs = sample(&d, SeedSpec::new(3), 1_000_000);
        // marginal Beta(1, 2): variance 1/18
        let se = (1.0f64 / 18.0 / 1e6).sqrt();
        for i in 0..3 {
            let m = xs.iter().map(|x| x[i]).sum::<f64>() / 1e6;
            assert!((m - 1.0 / 3.0).abs() <= 4.0 * se, "coordinate {i}: {m}");
        }
    }

    #[test]
    fn dirichlet_tiny_shapes_stay_on_simplex() {
        let d = DirichletParams::new(vec![0.01, 0.02, 0.005]).unwrap();
        for x in sample(&d, SeedSpec::new(4), 10_000) {
            let s: f64 = x.iter().sum();
            assert!((s - 1.0).abs() < 1e-12 && x.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn dirichlet_subset_sums_are_beta() {
        let d = DirichletParams::new(vec![0.5, 2.0, 1.5, 3.0]).unwrap();
        let subset = [0usize, 2];
        let xs = sample(&d, SeedSpec::new(5), 100_000);
        let proj: Vec<f64> = xs.iter().map(|x| subset.iter().map(|&i| x[i]).sum()).collect();
        let beta = BetaParams::new(2.0, 5.0).unwrap();
        let stat = ks_statistic(proj, |t| beta.cdf(t).unwrap());
        assert!(stat < ks_critical_value(100_000, 1e-3), "KS {stat}");
    }

    #[test]
    fn gamma_mean() {
        let g = GammaParams::new(2.0, 5.0).unwrap();
        let xs = sample(&g, SeedSpec::new(6), 1_000_000);
        let (m, _) = mean_and_se(&xs);
        let se = (2.0f64 / 25.0 / 1e6).sqrt();
        assert!((m - 0.4).abs() <= 4.0 * se);
    }

    #[test]
    fn categorical_counts_and_zero_mass() {
        let c = Categorical::new(&[0.0, 0.25, 0.75, 0.0]).unwrap();
        let counts = c.counts(&mut SeedSpec::new(7).rng(), 100_000);
        assert_eq!(counts[0] + counts[3], 0);
        assert_eq!(counts.iter().sum::<u64>(), 100_000);
        let f = counts[1] as f64 / 1e5;
        assert!((f - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / 1e5).sqrt());
        assert!(Categorical::new(&[0.0, 0.0]).is_err());
        assert!(Categorical::new(&[-0.1, 1.1]).is_err());
    }

    #[test]
    fn chi_mean() {
        let xs = sample(&Chi { k: 1 }, SeedSpec::new(8), 1_000_000);
        let (m, se) = mean_and_se(&xs);
        assert!((m - (2.0 / std::f64::consts::PI).sqrt()).abs() <= 4.0 * se);
    }
}
