//! Variance-proxy checks for the Beta family.

use serde::Serialize;

use crate::dist::{beta_log_mgf, BetaParams, MGF_LAMBDA_CAP};
use crate::error::Result;
use crate::scalar::Real;

use super::proxy::{variance_proxy_sup, VarianceProxyEstimate};

/// Proven variance proxy 1/(4(α+β)+2).
pub fn theorem_bound<T: Real>(p: &BetaParams<T>) -> T {
    (T::lit(4.0) * p.total() + T::lit(2.0)).recip()
}

/// Conjectured optimal proxy 1/(4(α+β+1)), the variance of the symmetric case.
pub fn conjecture_bound<T: Real>(p: &BetaParams<T>) -> T {
    (T::lit(4.0) * (p.total() + T::one())).recip()
}

/// λ-range scanned for Beta(α, β): 100(α+β), within the MGF cap.
pub fn default_lambda_cap<T: Real>(p: &BetaParams<T>) -> T {
    (T::lit(100.0) * p.total()).min(T::lit(MGF_LAMBDA_CAP))
}

/// τ² of Beta(α, β) estimated from the exact MGF series.
pub fn beta_variance_proxy<T: Real>(p: &BetaParams<T>) -> Result<VarianceProxyEstimate<T>> {
    variance_proxy_sup(|l| beta_log_mgf(p, l), p.mean(), default_lambda_cap(p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaTheoremCheck<T> {
    pub alpha: T,
    pub beta: T,
    pub tau2_est: T,
    pub bound: T,
    pub ratio: T,
    pub passed: bool,
}

/// τ̂² ≤ 1/(4(α+β)+2) · (1 + 1e-6).
pub fn check_beta_theorem<T: Real>(p: &BetaParams<T>) -> Result<BetaTheoremCheck<T>> {
    let est = beta_variance_proxy(p)?;
    Ok(theorem_from_estimate(p, &est))
}

pub fn theorem_from_estimate<T: Real>(
    p: &BetaParams<T>,
    est: &VarianceProxyEstimate<T>,
) -> BetaTheoremCheck<T> {
    let bound = theorem_bound(p);
    BetaTheoremCheck {
        alpha: p.alpha,
        beta: p.beta,
        tau2_est: est.value,
        bound,
        ratio: est.value / bound,
        passed: est.value <= bound * (T::one() + T::lit(1e-6)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaConjectureCheck<T> {
    pub alpha: T,
    pub beta: T,
    pub tau2_est: T,
    pub conj_bound: T,
    pub ratio: T,
}

/// Report-only comparison with 1/(4(α+β+1)).
pub fn check_beta_conjecture<T: Real>(p: &BetaParams<T>) -> Result<BetaConjectureCheck<T>> {
    let est = beta_variance_proxy(p)?;
    Ok(conjecture_from_estimate(p, &est))
}

pub fn conjecture_from_estimate<T: Real>(
    p: &BetaParams<T>,
    est: &VarianceProxyEstimate<T>,
) -> BetaConjectureCheck<T> {
    let conj_bound = conjecture_bound(p);
    BetaConjectureCheck {
        alpha: p.alpha,
        beta: p.beta,
        tau2_est: est.value,
        conj_bound,
        ratio: est.value / conj_bound,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineNormReport<T> {
    pub a: T,
    pub b: T,
    pub tau2_x: T,
    pub tau2_affine: T,
    pub rel_error: T,
    pub passed: bool,
}

/// Compares τ²(aX + b) with a²τ²(X) for X ~ Beta(α, β), both estimated
/// from exact MGFs on equivalent λ-ranges.
pub fn affine_norm_property_test<T: Real>(p: &BetaParams<T>, a: T, b: T) -> Result<AffineNormReport<T>> {
    if a == T::zero() {
        return Err(crate::error::Error::InvalidParameter("scale a must be nonzero".into()));
    }
    let cap = default_lambda_cap(p);
    let base = variance_proxy_sup(|l| beta_log_mgf(p, l), p.mean(), cap)?;
    let affine = variance_proxy_sup(
        |l| Ok(l * b + beta_log_mgf(p, a * l)?),
        a * p.mean() + b,
        cap / a.abs(),
    )?;
    let expected = a * a * base.value;
    let rel_error = ((affine.value - expected) / expected).abs();
    Ok(AffineNormReport {
        a,
        b,
        tau2_x: base.value,
        tau2_affine: affine.value,
        rel_error,
        passed: rel_error <= T::lit(1e-4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_examples() {
        let c = check_beta_theorem(&BetaParams::new(1.0f64, 1.0).unwrap()).unwrap();
        assert!((c.bound - 0.1).abs() < 1e-15 && c.passed);
        assert!((c.tau2_est - 1.0 / 12.0).abs() < 1e-4);
        let c = check_beta_theorem(&BetaParams::new(1.0f64, 2.0).unwrap()).unwrap();
        assert!((c.bound - 1.0 / 14.0).abs() < 1e-15 && c.passed);
        assert!(c.tau2_est <= 1.0 / 16.0 + 1e-4);
        let p = BetaParams::new(50.0f64, 50.0).unwrap();
        let c = check_beta_theorem(&p).unwrap();
        assert!(c.passed);
        assert!((c.tau2_est - 2500.0 / (10000.0 * 101.0)).abs() < 1e-6);
        assert!((c.bound - 1.0 / 402.0).abs() < 1e-15);
    }

    #[test]
    fn conjecture_symmetric_is_strict() {
        for &a in &[0.5f64, 1.0, 2.0, 5.0] {
            let c = check_beta_conjecture(&BetaParams::new(a, a).unwrap()).unwrap();
            assert!((c.ratio - 1.0).abs() < 1e-4, "a={a}: ratio {}", c.ratio);
        }
        let c = check_beta_conjecture(&BetaParams::new(1.0f64, 9.0).unwrap()).unwrap();
        assert!(c.ratio <= 1.0 + 1e-3 && c.ratio > 0.5);
    }

    #[test]
    fn affine_scaling() {
        let p = BetaParams::new(1.0f64, 1.0).unwrap();
        let r = affine_norm_property_test(&p, 2.0, 0.0).unwrap();
        assert!(r.passed && (r.tau2_affine / r.tau2_x - 4.0).abs() < 4e-4);
        let q = BetaParams::new(2.0f64, 7.0).unwrap();
        assert!(affine_norm_property_test(&q, 1.0, 3.3).unwrap().passed);
        // 1 − X has the law of Beta(β, α)
        let flipped = affine_norm_property_test(&q, -1.0, 1.0).unwrap();
        let swapped = beta_variance_proxy(&q.swapped()).unwrap();
        assert!(flipped.passed);
        assert!(((flipped.tau2_affine - swapped.value) / swapped.value).abs() < 1e-6);
        assert!(affine_norm_property_test(&q, 0.0, 1.0).is_err());
    }
}
