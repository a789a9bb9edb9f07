//! Parameter types for the conjugate families and their exact raw moments,
//! moment generating functions and densities.

use std::convert::TryFrom;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real, Scalar};
use crate::special::{log_gamma, regularized_incomplete_beta};

/// Default bound on |λ| accepted by [`beta_mgf`] and [`beta_log_mgf`].
pub const MGF_LAMBDA_CAP: f64 = 1e5;

fn check_positive<T: Scalar>(name: &str, v: &T) -> Result<()> {
    if !v.is_finite_value() || !(*v > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite (got {v:?})"
        )));
    }
    Ok(())
}

/// Shape parameters of Beta(α, β).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "BetaRepr<T>",
    bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize")
)]
pub struct BetaParams<T> {
    pub(crate) alpha: T,
    pub(crate) beta: T,
}

#[derive(Deserialize)]
struct BetaRepr<T> {
    alpha: T,
    beta: T,
}

impl<T: Scalar> TryFrom<BetaRepr<T>> for BetaParams<T> {
    type Error = Error;
    fn try_from(r: BetaRepr<T>) -> Result<Self> {
        Self::new(r.alpha, r.beta)
    }
}

impl<T: Scalar> BetaParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        check_positive("alpha", &alpha)?;
        check_positive("beta", &beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> &T {
        &self.alpha
    }

    pub fn beta(&self) -> &T {
        &self.beta
    }

    /// α + β.
    pub fn total(&self) -> T {
        self.alpha.clone() + self.beta.clone()
    }

    /// Beta(β, α), the law of 1 − X.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
        }
    }

    pub fn mean(&self) -> T {
        self.alpha.clone() / self.total()
    }

    pub fn variance(&self) -> T {
        let s = self.total();
        self.alpha.clone() * self.beta.clone() / (s.clone() * s.clone() * (s + T::one()))
    }

    /// Posterior after `successes` ones and `failures` zeros (successes add to α).
    pub fn updated(&self, successes: u64, failures: u64) -> Self {
        Self {
            alpha: self.alpha.clone() + T::from_u64(successes).expect("count"),
            beta: self.beta.clone() + T::from_u64(failures).expect("count"),
        }
    }
}

impl<T: Real> BetaParams<T> {
    pub fn cdf(&self, x: T) -> Result<T> {
        regularized_incomplete_beta(self.alpha, self.beta, x)
    }
}

/// Parameters α₁…α_k of a Dirichlet distribution, k ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "DirichletRepr<T>",
    bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize")
)]
pub struct DirichletParams<T> {
    pub(crate) alphas: Vec<T>,
}

#[derive(Deserialize)]
struct DirichletRepr<T> {
    alphas: Vec<T>,
}

impl<T: Scalar> TryFrom<DirichletRepr<T>> for DirichletParams<T> {
    type Error = Error;
    fn try_from(r: DirichletRepr<T>) -> Result<Self> {
        Self::new(r.alphas)
    }
}

impl<T: Scalar> DirichletParams<T> {
    pub fn new(alphas: Vec<T>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a Dirichlet needs at least two categories (got {})",
                alphas.len()
            )));
        }
        for a in &alphas {
            check_positive("alpha_i", a)?;
        }
        Ok(Self { alphas })
    }

    /// Dir(a, …, a) over `k` categories.
    pub fn symmetric(k: usize, a: T) -> Result<Self> {
        Self::new(vec![a; k])
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    /// A = Σ αᵢ.
    pub fn total(&self) -> T {
        self.alphas.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    pub fn mean(&self) -> Vec<T> {
        let total = self.total();
        self.alphas.iter().map(|a| a.clone() / total.clone()).collect()
    }

    /// Conjugate update Dir(α + c).
    pub fn updated(&self, counts: &[u64]) -> Result<Self> {
        if counts.len() != self.k() {
            return Err(Error::InvalidParameter(format!(
                "expected {} counts, got {}",
                self.k(),
                counts.len()
            )));
        }
        Ok(Self {
            alphas: self
                .alphas
                .iter()
                .zip(counts)
                .map(|(a, &c)| a.clone() + T::from_u64(c).expect("count"))
                .collect(),
        })
    }
}

/// Gamma(α, β) with shape α and rate β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "BetaRepr<T>",
    bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Serialize")
)]
pub struct GammaParams<T> {
    pub(crate) alpha: T,
    pub(crate) beta: T,
}

impl<T: Scalar> TryFrom<BetaRepr<T>> for GammaParams<T> {
    type Error = Error;
    fn try_from(r: BetaRepr<T>) -> Result<Self> {
        Self::new(r.alpha, r.beta)
    }
}

impl<T: Scalar> GammaParams<T> {
    pub fn new(shape: T, rate: T) -> Result<Self> {
        check_positive("shape", &shape)?;
        check_positive("rate", &rate)?;
        Ok(Self {
            alpha: shape,
            beta: rate,
        })
    }

    pub fn shape(&self) -> &T {
        &self.alpha
    }

    pub fn rate(&self) -> &T {
        &self.beta
    }

    pub fn mean(&self) -> T {
        self.alpha.clone() / self.beta.clone()
    }
}

/// Raw moments E[X^j] for j = 0…J_max.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSequence<T> {
    values: Vec<T>,
}

impl<T: Scalar> MomentSequence<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidParameter(
                "a moment sequence needs J_max >= 2".into(),
            ));
        }
        if values[0] != T::one() {
            return Err(Error::InvalidParameter(format!(
                "E[X^0] must be 1 (got {:?})",
                values[0]
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn j_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, j: usize) -> Option<&T> {
        self.values.get(j)
    }

    pub fn mean(&self) -> &T {
        &self.values[1]
    }

    pub fn variance(&self) -> T {
        self.values[2].clone() - self.values[1].clone() * self.values[1].clone()
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// E[X^j] = (α)_j / (α+β)_j as the running product of (α+r)/(α+β+r).
pub fn beta_raw_moment<T: Scalar>(p: &BetaParams<T>, j: usize) -> T {
    let total = p.total();
    let mut acc = T::one();
    let mut r = T::zero();
    for _ in 0..j {
        acc = acc * (p.alpha.clone() + r.clone()) / (total.clone() + r.clone());
        r = r + T::one();
    }
    acc
}

/// All Beta raw moments up to `j_max` (same running product).
pub fn beta_moments<T: Scalar>(p: &BetaParams<T>, j_max: usize) -> MomentSequence<T> {
    let total = p.total();
    let mut values = Vec::with_capacity(j_max + 1);
    let mut acc = T::one();
    let mut r = T::zero();
    values.push(acc.clone());
    for _ in 0..j_max.max(2) {
        acc = acc * (p.alpha.clone() + r.clone()) / (total.clone() + r.clone());
        values.push(acc.clone());
        r = r + T::one();
    }
    MomentSequence { values }
}

pub fn beta_mean_var<T: Scalar>(p: &BetaParams<T>) -> (T, T) {
    (p.mean(), p.variance())
}

/// ln E[e^{λX}] for X ~ Beta(α, β).
///
/// Sums the confluent hypergeometric series Σ λ^k/k! (α)_k/(α+β)_k with all
/// terms positive: negative λ go through Beta(β, α) = 1 − Beta(α, β), so
/// ln M(λ) = λ + ln M_{β,α}(−λ). Terms are rescaled when they grow large so
/// the result stays finite far beyond the overflow point of e^λ.
pub fn beta_log_mgf<T: Real>(p: &BetaParams<T>, lambda: T) -> Result<T> {
    beta_log_mgf_capped(p, lambda, T::lit(MGF_LAMBDA_CAP))
}

pub fn beta_log_mgf_capped<T: Real>(p: &BetaParams<T>, lambda: T, cap: T) -> Result<T> {
    if !lambda.is_finite() || lambda.abs() > cap {
        return Err(Error::Range(format!("lambda = {lambda} (cap {cap})")));
    }
    if lambda == T::zero() {
        return Ok(T::zero());
    }
    if lambda < T::zero() {
        return Ok(lambda + positive_log_mgf(p.beta, p.alpha, -lambda));
    }
    Ok(positive_log_mgf(p.alpha, p.beta, lambda))
}

fn positive_log_mgf<T: Real>(a: T, b: T, lambda: T) -> T {
    let one = T::one();
    let rescale_at = T::max_value().sqrt();
    let rescale_by = rescale_at.recip();
    let min_terms = T::lit(2.0) * lambda + T::lit(50.0);
    let rel_stop = T::lit(1e-16);
    let mut offset = T::zero();
    let mut term = one;
    let mut tail = CompensatedSum::default();
    let mut k = T::zero();
    loop {
        term = term * lambda / (k + one) * (a + k) / (a + b + k);
        k = k + one;
        tail.add(term);
        if term > rescale_at {
            term = term * rescale_by;
            tail.scale(rescale_by);
            offset = offset + rescale_at.ln();
        }
        if k > min_terms && term <= rel_stop * tail.value() {
            break;
        }
    }
    if offset == T::zero() {
        tail.value().ln_1p()
    } else {
        offset + (tail.value() + (-offset).exp()).ln()
    }
}

/// E[e^{λX}] for X ~ Beta(α, β).
pub fn beta_mgf<T: Real>(p: &BetaParams<T>, lambda: T) -> Result<T> {
    let v = beta_log_mgf(p, lambda)?.exp();
    if !v.is_finite() {
        return Err(Error::Range(format!("E[exp({lambda} X)] overflows")));
    }
    Ok(v)
}

/// Log density of Dir(α) at a point of the closed simplex.
///
/// Boundary points give ±∞ according to the sign of αᵢ − 1.
pub fn dirichlet_density_log<T: Real>(d: &DirichletParams<T>, x: &[T]) -> Result<T> {
    if x.len() != d.k() {
        return Err(Error::InvalidParameter(format!(
            "point has {} coordinates, expected {}",
            x.len(),
            d.k()
        )));
    }
    let sum: T = x.iter().copied().sum();
    if x.iter().any(|v| v.is_nan() || *v < T::zero()) || (sum - T::one()).abs() > T::lit(1e-12) {
        return Err(Error::Domain {
            function: "dirichlet_density_log",
            value: sum.to_f64_lossy(),
        });
    }
    let mut acc = log_gamma(d.total())?;
    for (a, xi) in d.alphas.iter().zip(x) {
        acc = acc - log_gamma(*a)?;
        let e = *a - T::one();
        if e != T::zero() {
            acc = acc + e * xi.ln();
        }
    }
    Ok(acc)
}

/// E[X^j] = 2^{j/2} Γ((k+j)/2) / Γ(k/2) for X ~ χ_k.
pub fn chi_raw_moment<T: Real>(k_dim: u32, j: u32) -> Result<T> {
    if k_dim == 0 {
        return Err(Error::InvalidParameter("chi needs k >= 1".into()));
    }
    if j == 0 {
        return Ok(T::one());
    }
    let half = T::lit(0.5);
    let k = T::lit(k_dim as f64);
    let jj = T::lit(j as f64);
    let ln = half * jj * T::LN_2() + log_gamma(half * (k + jj))? - log_gamma(half * k)?;
    Ok(ln.exp())
}

pub fn chi_moments<T: Real>(k_dim: u32, j_max: usize) -> Result<MomentSequence<T>> {
    let values = (0..=j_max.max(2) as u32)
        .map(|j| chi_raw_moment(k_dim, j))
        .collect::<Result<Vec<T>>>()?;
    MomentSequence::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{beta_expectation, integrate};
    use num_rational::BigRational;

    #[test]
    fn parameter_validation() {
        assert!(BetaParams::new(0.0f64, 1.0).is_err());
        assert!(BetaParams::new(1.0f64, f64::INFINITY).is_err());
        assert!(BetaParams::new(f64::NAN, 1.0).is_err());
        assert!(DirichletParams::new(vec![1.0f64]).is_err());
        assert!(DirichletParams::new(vec![1.0f64, -2.0]).is_err());
        assert!(GammaParams::new(1.0f64, 0.0).is_err());
    }

    #[test]
    fn serde_shapes() {
        let b: BetaParams<f64> = serde_json::from_str(r#"{"alpha":2.0,"beta":3.5}"#).unwrap();
        assert_eq!(b, BetaParams::new(2.0, 3.5).unwrap());
        let d: DirichletParams<f64> = serde_json::from_str(r#"{"alphas":[1,2,3]}"#).unwrap();
        assert_eq!(d.total(), 6.0);
        assert!(serde_json::from_str::<DirichletParams<f64>>(r#"{"alphas":[1,0]}"#).is_err());
        assert_eq!(serde_json::to_string(&b).unwrap(), r#"{"alpha":2.0,"beta":3.5}"#);
    }

    #[test]
    fn beta_raw_moment_examples() {
        let p = BetaParams::new(1.0f64, 2.0).unwrap();
        assert_eq!(beta_raw_moment(&p, 0), 1.0);
        // quadrature oracle: ∫ x · 2(1 − x) dx and ∫ x⁴ · 2(1 − x) dx
        let q1 = integrate(|x: f64| x * 2.0 * (1.0 - x), 0.0, 1.0, 1e-15);
        let q4 = integrate(|x: f64| x.powi(4) * 2.0 * (1.0 - x), 0.0, 1.0, 1e-15);
        assert!((beta_raw_moment(&p, 1) - q1).abs() < 1e-15);
        assert!((beta_raw_moment(&p, 4) - q4).abs() < 1e-15);
        assert!((q4 - 1.0 / 15.0).abs() < 1e-15);
        let exact = BetaParams::new(BigRational::int(1), BigRational::int(2)).unwrap();
        assert_eq!(beta_raw_moment(&exact, 4), BigRational::ratio(1, 15));
    }

    #[test]
    fn beta_moment_recurrence_on_grid() {
        let grid = [0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0];
        for &a in &grid {
            for &b in &grid {
                let p = BetaParams::new(a, b).unwrap();
                let m = beta_moments(&p, 200);
                let v = m.values();
                assert_eq!(v[0], 1.0);
                for j in 0..200 {
                    assert_eq!(v[j + 1], v[j] * (a + j as f64) / (a + b + j as f64));
                    assert!(v[j + 1] <= v[j] && v[j + 1] > 0.0);
                }
            }
        }
    }

    #[test]
    fn beta_mean_var_examples() {
        let (m, v) = beta_mean_var(&BetaParams::new(1.0f64, 1.0).unwrap());
        let qv = integrate(|x: f64| (x - 0.5).powi(2), 0.0, 1.0, 1e-15);
        assert_eq!(m, 0.5);
        assert!((v - qv).abs() < 1e-16 && (v - 1.0 / 12.0).abs() < 1e-16);
        let p = BetaParams::new(1.0f64, 2.0).unwrap();
        let (m, v) = beta_mean_var(&p);
        let qv = beta_expectation(&p, |x| (x - 1.0 / 3.0).powi(2), 1e-15).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-16);
        assert!((v - qv).abs() < 1e-14 && (v - 1.0 / 18.0).abs() < 1e-16);
        for &a in &[0.3, 1.7, 42.0] {
            assert_eq!(BetaParams::new(a, a).unwrap().mean(), 0.5);
        }
    }

    #[test]
    fn beta_mgf_examples() {
        let p = BetaParams::new(1.0f64, 1.0).unwrap();
        assert_eq!(beta_mgf(&p, 0.0).unwrap(), 1.0);
        let e1 = beta_mgf(&p, 1.0).unwrap();
        assert!((e1 - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        assert!(beta_mgf(&p, 2e5).is_err());
        assert!(beta_mgf(&p, f64::NAN).is_err());
    }

    #[test]
    fn beta_mgf_matches_quadrature() {
        let shapes = [0.1f64, 0.5, 1.0, 3.0, 17.0, 50.0];
        let lambdas = [-100.0f64, -37.5, -4.0, -0.3, 0.01, 1.0, 9.0, 42.0, 100.0];
        for &a in &shapes {
            for &b in &shapes {
                let p = BetaParams::new(a, b).unwrap();
                for &l in &lambdas {
                    // normalising by the claimed value makes the quadrature target one
                    let got = beta_log_mgf(&p, l).unwrap();
                    let q = beta_expectation(&p, |x| (l * x - got).exp(), 1e-14).unwrap();
                    assert!(
                        (q - 1.0).abs() < 1e-9,
                        "Beta({a},{b}) λ={l}: quadrature ratio {q}"
                    );
                }
            }
        }
    }

    #[test]
    fn beta_log_mgf_large_lambda_is_finite() {
        let p = BetaParams::new(50.0f64, 50.0).unwrap();
        let v = beta_log_mgf(&p, 1e4).unwrap();
        assert!(v.is_finite() && v < 1e4 && v > 0.5e4);
        let w = beta_log_mgf(&p, -1e4).unwrap();
        // the lower tail near zero dominates: about −246
        assert!(w.is_finite() && (w + 246.193_579_678_504_5).abs() < 1e-6, "{w}");
    }

    #[test]
    fn beta_mgf_jensen() {
        for &(a, b) in &[(0.1f64, 5.0), (2.0, 3.0), (25.0, 0.25)] {
            let p = BetaParams::new(a, b).unwrap();
            let mu = p.mean();
            let mut l = -200.0;
            while l <= 200.0 {
                let centered = beta_log_mgf(&p, l).unwrap() - l * mu;
                assert!(centered >= -1e-12, "({a},{b}) λ={l}");
                l += 3.7;
            }
        }
    }

    #[test]
    fn beta_mgf_single_precision() {
        let p = BetaParams::new(1.0f32, 1.0).unwrap();
        let e1 = beta_mgf(&p, 1.0f32).unwrap();
        assert!((e1 - (std::f32::consts::E - 1.0)).abs() < 1e-5);
    }

    #[test]
    fn dirichlet_density_examples() {
        let d = DirichletParams::new(vec![1.0f64, 1.0, 1.0]).unwrap();
        let v = dirichlet_density_log(&d, &[0.2, 0.3, 0.5]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-14);
        let d2 = DirichletParams::new(vec![2.0f64, 1.0]).unwrap();
        assert!(dirichlet_density_log(&d2, &[0.5, 0.5]).unwrap().abs() < 1e-14);
        let sym = DirichletParams::symmetric(3, 2.5f64).unwrap();
        let x = [0.1, 0.3, 0.6];
        let base = dirichlet_density_log(&sym, &x).unwrap();
        for perm in [[0, 2, 1], [1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let y: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
            assert!((dirichlet_density_log(&sym, &y).unwrap() - base).abs() < 1e-13);
        }
    }

    #[test]
    fn dirichlet_density_boundary_and_errors() {
        let d = DirichletParams::new(vec![0.5f64, 2.0]).unwrap();
        assert_eq!(dirichlet_density_log(&d, &[0.0, 1.0]).unwrap(), f64::INFINITY);
        assert_eq!(dirichlet_density_log(&d, &[1.0, 0.0]).unwrap(), f64::NEG_INFINITY);
        assert!(dirichlet_density_log(&d, &[0.3, 0.3]).is_err());
        assert!(dirichlet_density_log(&d, &[0.5]).is_err());
    }

    #[test]
    fn dirichlet_density_integrates_to_one() {
        // Dir(2, 3) is Beta(2, 3): integrate over the 1-simplex
        let d = DirichletParams::new(vec![2.0f64, 3.0]).unwrap();
        let mass = integrate(
            |t: f64| dirichlet_density_log(&d, &[t, 1.0 - t]).unwrap().exp(),
            0.0,
            1.0,
            1e-14,
        );
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_moment_examples() {
        assert!((chi_raw_moment::<f64>(3, 2).unwrap() - 3.0).abs() < 1e-13);
        assert_eq!(chi_raw_moment::<f64>(7, 0).unwrap(), 1.0);
        let want = (2.0 / std::f64::consts::PI).sqrt();
        assert!((chi_raw_moment::<f64>(1, 1).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.797_884_6).abs() < 1e-7);
        assert!(chi_raw_moment::<f64>(0, 1).is_err());
    }

    #[test]
    fn chi_moment_recurrence() {
        for k in 1..=20u32 {
            for j in 0..=100u32 {
                let lo = chi_raw_moment::<f64>(k, j).unwrap();
                let hi = chi_raw_moment::<f64>(k, j + 2).unwrap();
                let want = (k + j) as f64 * lo;
                assert!(((hi - want) / want).abs() < 1e-12, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn moment_sequence_validation() {
        assert!(MomentSequence::new(vec![1.0f64, 0.5]).is_err());
        assert!(MomentSequence::new(vec![0.9f64, 0.5, 0.3]).is_err());
        let m = MomentSequence::new(vec![1.0f64, 0.5, 0.3]).unwrap();
        assert_eq!(m.j_max(), 2);
        assert!((m.variance() - 0.05).abs() < 1e-16);
    }
}
