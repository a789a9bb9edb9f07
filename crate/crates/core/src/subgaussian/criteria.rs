//! Moment-based sufficient conditions.

use serde::Serialize;

use crate::dist::{BetaParams, MomentSequence};
use crate::error::{Error, Result};
use crate::quadrature::beta_expectation;
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentViolation<T> {
    pub j: usize,
    pub lhs: T,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCriterionReport<T> {
    pub sigma2_tested: T,
    pub j_max: usize,
    pub violations: Vec<MomentViolation<T>>,
    pub passed: bool,
}

/// Checks E[X^{j+2}]/E[X^j] ≤ E[X]² + (j+1)σ² for j = 0…J_max−2.
///
/// When every index passes, X − E[X] is σ²-upper subgaussian.
pub fn raw_moment_criterion<T: Scalar>(
    m: &MomentSequence<T>,
    sigma2: &T,
) -> Result<MomentCriterionReport<T>> {
    let values = m.values();
    if let Some(j) = values.iter().position(|v| !(*v > T::zero())) {
        return Err(Error::Precondition(format!(
            "raw moment E[X^{j}] is not positive"
        )));
    }
    let mean_sq = values[1].clone() * values[1].clone();
    let mut violations = Vec::new();
    for j in 0..=(m.j_max() - 2) {
        let lhs = values[j + 2].clone() / values[j].clone();
        let rhs = mean_sq.clone() + T::from_usize(j + 1).expect("index") * sigma2.clone();
        if lhs > rhs {
            violations.push(MomentViolation { j, lhs, rhs });
        }
    }
    Ok(MomentCriterionReport {
        sigma2_tested: sigma2.clone(),
        j_max: m.j_max(),
        passed: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaRow<T> {
    pub j: usize,
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

/// For each j ≤ `j_max` compares the consecutive-moment ratio
/// (α+j)(α+j+1)/((α+β+j)(α+β+j+1)) with (α/(α+β))² + (j+1)/(2(α+β+1)).
pub fn technical_lemma_check<T: Scalar>(p: &BetaParams<T>, j_max: usize) -> Vec<LemmaRow<T>> {
    let a = p.alpha().clone();
    let s = p.total();
    let mean = p.mean();
    let mean_sq = mean.clone() * mean;
    let two_s1 = T::int(2) * (s.clone() + T::one());
    let tol = T::lit(1e-12);
    (0..=j_max)
        .map(|j| {
            let jj = T::from_usize(j).expect("index");
            let lhs = (a.clone() + jj.clone()) * (a.clone() + jj.clone() + T::one())
                / ((s.clone() + jj.clone()) * (s.clone() + jj.clone() + T::one()));
            let rhs = mean_sq.clone() + (jj + T::one()) / two_s1.clone();
            let holds = lhs <= rhs.clone() + tol.clone();
            LemmaRow { j, lhs, rhs, holds }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermwiseRow<T> {
    pub power: usize,
    /// [λⁿ] E[e^{λX}] = E[Xⁿ]/n!
    pub lhs_coeff: T,
    /// [λⁿ] exp(λμ + λ²σ²/2)
    pub rhs_coeff: T,
}

impl<T: Scalar> TermwiseRow<T> {
    pub fn lhs_le_rhs(&self, rel_tol: &T) -> bool {
        self.lhs_coeff <= self.rhs_coeff.clone() + rel_tol.clone() * self.rhs_coeff.abs_value()
    }
}

/// Power-series coefficients of E[e^{λX}] and of exp(λμ + λ²σ²/2) for
/// X ~ Beta(α, β), powers 0…`k_max`.
///
/// Over exact rationals this reproduces individual coefficients exactly.
pub fn termwise_mgf_comparison<T: Scalar>(
    p: &BetaParams<T>,
    sigma2: &T,
    k_max: usize,
) -> Vec<TermwiseRow<T>> {
    let mu = p.mean();
    let half_s = sigma2.clone() / T::int(2);
    let mut factorials = vec![T::one()];
    for i in 1..=k_max {
        let next = factorials[i - 1].clone() * T::from_usize(i).expect("index");
        factorials.push(next);
    }
    let mut mu_pow = vec![T::one()];
    let mut s_pow = vec![T::one()];
    for i in 1..=k_max {
        mu_pow.push(mu_pow[i - 1].clone() * mu.clone());
        s_pow.push(s_pow[i - 1].clone() * half_s.clone());
    }
    let total = p.total();
    let mut moment = T::one();
    let mut r = T::zero();
    (0..=k_max)
        .map(|n| {
            if n > 0 {
                moment = moment.clone() * (p.alpha().clone() + r.clone()) / (total.clone() + r.clone());
                r = r.clone() + T::one();
            }
            let lhs_coeff = moment.clone() / factorials[n].clone();
            let mut rhs_coeff = T::zero();
            for m in 0..=n / 2 {
                rhs_coeff = rhs_coeff
                    + mu_pow[n - 2 * m].clone() * s_pow[m].clone()
                        / (factorials[n - 2 * m].clone() * factorials[m].clone());
            }
            TermwiseRow {
                power: n,
                lhs_coeff,
                rhs_coeff,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenteredCriterionReport<T> {
    pub sigma2_tested: T,
    pub symmetric: bool,
    /// (k, E[(X−μ)^{2k}], bound)
    pub violations: Vec<(usize, T, T)>,
    pub passed: bool,
}

/// Checks E[(X−μ)^{2k}] ≤ (σ²/√3.1)^k (2k−1)!! for k = 1…K, with the √3.1
/// factor dropped when X is symmetric. `centered[k-1]` holds the 2k-th
/// centered moment. Each comparison carries a relative slack of 1e-6.
pub fn centered_moment_criterion<T: Real>(
    centered: &[T],
    sigma2: T,
    symmetric: bool,
) -> CenteredCriterionReport<T> {
    let base = if symmetric { sigma2 } else { sigma2 / T::lit(3.1).sqrt() };
    let slack = T::one() + T::lit(1e-6);
    let mut bound = T::one();
    let mut violations = Vec::new();
    for (i, &moment) in centered.iter().enumerate() {
        let k = i + 1;
        bound = bound * base * T::lit((2 * k - 1) as f64);
        if moment > bound * slack {
            violations.push((k, moment, bound));
        }
    }
    CenteredCriterionReport {
        sigma2_tested: sigma2,
        symmetric,
        passed: violations.is_empty(),
        violations,
    }
}

/// Even centered moments E[(X−μ)^{2k}], k = 1…`k_max`, by quadrature.
pub fn beta_centered_moments<T: Real>(p: &BetaParams<T>, k_max: usize) -> Result<Vec<T>> {
    let mu = p.mean();
    (1..=k_max)
        .map(|k| beta_expectation(p, |x| (x - mu).powi(2 * k as i32), T::lit(1e-15)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::beta_moments;
    use num_rational::BigRational;

    fn exact_beta(a: i64, b: i64) -> BetaParams<BigRational> {
        BetaParams::new(BigRational::int(a), BigRational::int(b)).unwrap()
    }

    #[test]
    fn raw_criterion_uniform_at_weak_proxy() {
        let p = exact_beta(1, 1);
        let m = beta_moments(&p, 40);
        let report = raw_moment_criterion(&m, &BigRational::ratio(1, 6)).unwrap();
        assert!(report.passed);
        // j = 0: 1/3 ≤ 1/4 + 1/6
        let j0 = m.values()[2].clone() / m.values()[0].clone();
        assert_eq!(j0, BigRational::ratio(1, 3));
    }

    #[test]
    fn raw_criterion_huge_sigma_passes_and_small_fails() {
        let p = BetaParams::new(0.3f64, 7.0).unwrap();
        let m = beta_moments(&p, 60);
        assert!(raw_moment_criterion(&m, &1.0).unwrap().passed);
        let report = raw_moment_criterion(&m, &(p.variance() * 0.5)).unwrap();
        assert!(!report.passed);
        assert_eq!(report.violations[0].j, 0);
    }

    #[test]
    fn raw_criterion_rejects_nonpositive_moments() {
        let m = MomentSequence::new(vec![1.0f64, 0.0, 0.5]).unwrap();
        assert!(matches!(raw_moment_criterion(&m, &1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn raw_criterion_chi_three() {
        let m = crate::dist::chi_moments::<f64>(3, 200).unwrap();
        let report = raw_moment_criterion(&m, &1.0).unwrap();
        assert!(report.passed, "{:?}", report.violations.first());
    }

    #[test]
    fn technical_lemma_examples() {
        let rows = technical_lemma_check(&exact_beta(1, 1), 0);
        assert_eq!(rows[0].lhs, BigRational::ratio(1, 3));
        assert_eq!(rows[0].rhs, BigRational::ratio(5, 12));
        assert!(rows[0].holds);
        let rows = technical_lemma_check(&exact_beta(1, 2), 1);
        assert_eq!(rows[1].lhs, BigRational::ratio(3, 10));
        assert_eq!(rows[1].rhs, BigRational::ratio(1, 9) + BigRational::ratio(1, 4));
        let rows = technical_lemma_check(&BetaParams::new(2.0f64, 0.5).unwrap(), 500);
        assert!(rows.iter().all(|r| r.holds));
        assert!(rows[500].lhs < 1.0 && rows[500].rhs > 50.0);
    }

    #[test]
    fn lambda4_counterexample_exact() {
        let rows = termwise_mgf_comparison(&exact_beta(1, 2), &BigRational::ratio(1, 16), 6);
        assert_eq!(rows[0].lhs_coeff, BigRational::int(1));
        assert_eq!(rows[0].rhs_coeff, BigRational::int(1));
        assert_eq!(rows[4].lhs_coeff, BigRational::ratio(1, 360));
        assert_eq!(rows[4].rhs_coeff, BigRational::ratio(1363, 497_664));
        assert!(rows[4].lhs_coeff > rows[4].rhs_coeff);
    }

    #[test]
    fn termwise_holds_at_weak_proxy() {
        let rows = termwise_mgf_comparison(&exact_beta(1, 2), &BigRational::ratio(1, 8), 40);
        assert!(rows.iter().all(|r| r.lhs_coeff <= r.rhs_coeff));
        let rows = termwise_mgf_comparison(&BetaParams::new(1.0f64, 2.0).unwrap(), &0.125, 40);
        assert!(rows.iter().all(|r| r.lhs_le_rhs(&1e-12)));
    }

    #[test]
    fn centered_criterion_gaussian_equality() {
        let s = 0.3f64;
        let mut moments = Vec::new();
        let mut m = 1.0;
        for k in 1..=15 {
            m *= s * (2 * k - 1) as f64;
            moments.push(m);
        }
        assert!(centered_moment_criterion(&moments, s, true).passed);
        assert!(!centered_moment_criterion(&moments, s, false).passed);
    }

    #[test]
    fn centered_criterion_beta_three_three() {
        let p = BetaParams::new(3.0f64, 3.0).unwrap();
        let moments = beta_centered_moments(&p, 20).unwrap();
        assert!((moments[0] - 1.0 / 28.0).abs() < 1e-14);
        assert!(centered_moment_criterion(&moments, 1.0 / 28.0, true).passed);
        let fail = centered_moment_criterion(&moments, 0.9 / 28.0, true);
        assert!(!fail.passed && fail.violations[0].0 == 1);
    }
}
