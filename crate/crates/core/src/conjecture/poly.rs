//! Query functionals as polynomials and their exact moments.
//!
//! Two representations are kept. [`PolynomialInP`] is the plain monomial
//! expansion; its coefficients alternate in sign, so it is only numerically
//! safe in exact arithmetic. [`BernsteinForm`] stores Q = Σ c·p^a(1−p)^b with
//! c ≥ 0, which is how every query functional of the Beta models arises,
//! and its moments are sums of positive terms in any precision.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::dist::{BetaParams, DirichletParams, GammaParams, MomentSequence};
use crate::error::{Error, Result};
use crate::martingale::compositions;
use crate::scalar::{Real, Scalar};
use crate::special::log_gamma;

pub const BINOMIAL_EXACT_MAX_M: u32 = 30;
pub const GEOMETRIC_EXACT_MAX: u32 = 60;
/// Cap on j_max × degree for moment computations.
pub const MAX_MOMENT_DEGREE: usize = 400;
pub const MULTINOMIAL_EXACT_MAX_K: usize = 4;
pub const MULTINOMIAL_EXACT_MAX_M: u32 = 5;
pub const MULTINOMIAL_EXACT_MAX_J: usize = 8;
pub const POISSON_EXACT_MAX: u32 = 60;
pub const POISSON_EXACT_MAX_J: usize = 20;

/// C(n, k) as an exact integer, valid for n ≤ 67.
pub fn binomial_coefficient(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n as u64 - i) / (i + 1);
    }
    acc
}

fn from_count<T: Scalar>(c: u64) -> T {
    T::from_u64(c).expect("integer fits the scalar type")
}

fn check_moment_size(j_max: usize, degree: usize) -> Result<()> {
    if j_max < 2 {
        return Err(Error::InvalidParameter("j_max must be at least 2".into()));
    }
    if j_max.saturating_mul(degree) > MAX_MOMENT_DEGREE {
        return Err(Error::SizeLimit {
            what: format!("j_max × degree = {j_max} × {degree}"),
            limit: MAX_MOMENT_DEGREE,
        });
    }
    Ok(())
}

/// Σ_d coefficients[d]·p^d.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialInP<T> {
    coefficients: Vec<T>,
}

impl<T: Scalar> PolynomialInP<T> {
    pub fn new(mut coefficients: Vec<T>) -> Self {
        while coefficients.len() > 1 && coefficients.last() == Some(&T::zero()) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(T::zero());
        }
        Self { coefficients }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, p: &T) -> T {
        self.coefficients
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * p.clone() + c.clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![T::zero(); self.degree() + other.degree() + 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            if *a == T::zero() {
                continue;
            }
            for (j, b) in other.coefficients.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    fn add_assign(&mut self, other: &Self) {
        if other.coefficients.len() > self.coefficients.len() {
            self.coefficients.resize(other.coefficients.len(), T::zero());
        }
        for (a, b) in self.coefficients.iter_mut().zip(&other.coefficients) {
            *a = a.clone() + b.clone();
        }
        *self = Self::new(std::mem::take(&mut self.coefficients));
    }

    /// Checks 0 ≤ Q(p) ≤ 1 (within `tol`) on `points` evenly spaced
    /// abscissae of [0, 1].
    pub fn is_probability_valued(&self, points: usize, tol: f64) -> bool {
        let coeffs: Vec<f64> = self.coefficients.iter().map(Scalar::to_f64_lossy).collect();
        let poly = PolynomialInP::new(coeffs);
        (0..=points).all(|i| {
            let v = poly.eval(&(i as f64 / points.max(1) as f64));
            (-tol..=1.0 + tol).contains(&v)
        })
    }
}

/// (1 − p)^e expanded in monomials.
fn one_minus_p_pow<T: Scalar>(e: u32) -> Vec<T> {
    (0..=e)
        .map(|i| {
            let c: T = from_count(binomial_coefficient(e, i));
            if i % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect()
}

fn check_subset_within(s: &BTreeSet<u32>, max: u32, what: &str) -> Result<()> {
    if let Some(&bad) = s.iter().find(|&&k| k > max) {
        return Err(Error::InvalidParameter(format!("{what}: {bad} exceeds {max}")));
    }
    Ok(())
}

/// Σ_{k∈S} C(m,k) p^k (1−p)^{m−k} in monomials.
pub fn binomial_query_poly<T: Scalar>(m: u32, s: &BTreeSet<u32>) -> Result<PolynomialInP<T>> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    if m > BINOMIAL_EXACT_MAX_M {
        return Err(Error::SizeLimit {
            what: format!("binomial m = {m}"),
            limit: BINOMIAL_EXACT_MAX_M as usize,
        });
    }
    check_subset_within(s, m, "binomial outcome")?;
    let mut out = PolynomialInP::constant(T::zero());
    for &k in s {
        let c: T = from_count(binomial_coefficient(m, k));
        let mut coeffs = vec![T::zero(); k as usize];
        coeffs.extend(one_minus_p_pow::<T>(m - k).into_iter().map(|x| x * c.clone()));
        out.add_assign(&PolynomialInP::new(coeffs));
    }
    Ok(out)
}

/// Σ_{k∈S} p (1−p)^k in monomials.
pub fn geometric_query_poly<T: Scalar>(s: &BTreeSet<u32>) -> Result<PolynomialInP<T>> {
    check_geometric(s)?;
    let mut out = PolynomialInP::constant(T::zero());
    for &k in s {
        let mut coeffs = vec![T::zero()];
        coeffs.extend(one_minus_p_pow::<T>(k));
        out.add_assign(&PolynomialInP::new(coeffs));
    }
    Ok(out)
}

fn check_geometric(s: &BTreeSet<u32>) -> Result<()> {
    match s.last() {
        Some(&max) if max > GEOMETRIC_EXACT_MAX => Err(Error::SizeLimit {
            what: format!("geometric outcome {max}"),
            limit: GEOMETRIC_EXACT_MAX as usize,
        }),
        _ => Ok(()),
    }
}

/// E[p^d] for d = 0…degree under Beta(α, β).
fn beta_power_moments<T: Scalar>(prior: &BetaParams<T>, degree: usize) -> Vec<T> {
    let total = prior.total();
    let mut out = Vec::with_capacity(degree + 1);
    let mut acc = T::one();
    out.push(acc.clone());
    for d in 0..degree {
        let i: T = from_count(d as u64);
        acc = acc * (prior.alpha().clone() + i.clone()) / (total.clone() + i);
        out.push(acc.clone());
    }
    out
}

/// E[Q(p)^j] for j = 0…j_max by expanding Q^j in monomials.
pub fn poly_raw_moments_under_beta<T: Scalar>(
    poly: &PolynomialInP<T>,
    prior: &BetaParams<T>,
    j_max: usize,
) -> Result<MomentSequence<T>> {
    check_moment_size(j_max, poly.degree())?;
    let pm = beta_power_moments(prior, j_max * poly.degree());
    let mut power = PolynomialInP::constant(T::one());
    let mut values = vec![T::one()];
    for _ in 1..=j_max {
        power = power.mul(poly);
        let mut acc = T::zero();
        for (c, m) in power.coefficients().iter().zip(&pm) {
            acc = acc + c.clone() * m.clone();
        }
        values.push(acc);
    }
    MomentSequence::new(values)
}

/// Q = Σ c_{a,b} p^a (1−p)^b with every c ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernsteinForm<T> {
    terms: BTreeMap<(u32, u32), T>,
}

impl<T: Scalar> BernsteinForm<T> {
    pub fn new(terms: BTreeMap<(u32, u32), T>) -> Result<Self> {
        if terms.values().any(|c| *c < T::zero()) {
            return Err(Error::InvalidParameter("coefficients must be non-negative".into()));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &BTreeMap<(u32, u32), T> {
        &self.terms
    }

    /// Largest a + b among the terms.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|&(a, b)| (a + b) as usize).max().unwrap_or(0)
    }

    pub fn eval(&self, p: &T) -> T {
        let q = T::one() - p.clone();
        let pow = |x: &T, e: u32| (0..e).fold(T::one(), |acc, _| acc * x.clone());
        self.terms.iter().fold(T::zero(), |acc, (&(a, b), c)| {
            acc + c.clone() * pow(p, a) * pow(&q, b)
        })
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<(u32, u32), T> = BTreeMap::new();
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &other.terms {
                let e = out.entry((a1 + a2, b1 + b2)).or_insert_with(T::zero);
                *e = e.clone() + c1.clone() * c2.clone();
            }
        }
        Self { terms: out }
    }

    /// Monomial expansion.
    pub fn to_monomials(&self) -> PolynomialInP<T> {
        let mut out = PolynomialInP::constant(T::zero());
        for (&(a, b), c) in &self.terms {
            let mut coeffs = vec![T::zero(); a as usize];
            coeffs.extend(one_minus_p_pow::<T>(b).into_iter().map(|x| x * c.clone()));
            out.add_assign(&PolynomialInP::new(coeffs));
        }
        out
    }

    /// E[Q^j] for j = 0…j_max under Beta(α, β), as sums of positive terms.
    pub fn raw_moments(&self, prior: &BetaParams<T>, j_max: usize) -> Result<MomentSequence<T>> {
        check_moment_size(j_max, self.degree())?;
        let table = MixedMomentTable::new(prior, j_max * self.degree());
        let mut power = Self {
            terms: BTreeMap::from([((0, 0), T::one())]),
        };
        let mut values = vec![T::one()];
        for _ in 1..=j_max {
            power = power.mul(self);
            let mut acc = T::zero();
            for (&(a, b), c) in &power.terms {
                acc = acc + c.clone() * table.get(a, b);
            }
            values.push(acc);
        }
        MomentSequence::new(values)
    }
}

/// E[p^a (1−p)^b] under Beta(α, β) for a + b ≤ degree.
struct MixedMomentTable<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> MixedMomentTable<T> {
    fn new(prior: &BetaParams<T>, degree: usize) -> Self {
        let (al, be) = (prior.alpha().clone(), prior.beta().clone());
        let total = prior.total();
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(degree + 1);
        let mut head = T::one();
        for a in 0..=degree {
            if a > 0 {
                let i: T = from_count(a as u64 - 1);
                head = head * (al.clone() + i.clone()) / (total.clone() + i);
            }
            let mut row = Vec::with_capacity(degree - a + 1);
            let mut v = head.clone();
            row.push(v.clone());
            for b in 0..(degree - a) {
                let ib: T = from_count(b as u64);
                let shift: T = from_count((a + b) as u64);
                v = v * (be.clone() + ib) / (total.clone() + shift);
                row.push(v.clone());
            }
            rows.push(row);
        }
        Self { rows }
    }

    fn get(&self, a: u32, b: u32) -> T {
        self.rows[a as usize][b as usize].clone()
    }
}

/// Q_S for the m-binomial model and, optionally, its complement 1 − Q_S.
pub fn binomial_form<T: Scalar>(m: u32, s: &BTreeSet<u32>) -> Result<BernsteinForm<T>> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    if m > 67 {
        return Err(Error::SizeLimit {
            what: format!("binomial m = {m}"),
            limit: 67,
        });
    }
    check_subset_within(s, m, "binomial outcome")?;
    let terms = s
        .iter()
        .map(|&k| ((k, m - k), from_count(binomial_coefficient(m, k))))
        .collect();
    BernsteinForm::new(terms)
}

pub fn binomial_complement(m: u32, s: &BTreeSet<u32>) -> BTreeSet<u32> {
    (0..=m).filter(|k| !s.contains(k)).collect()
}

/// Σ_{k∈S} p(1−p)^k.
pub fn geometric_form<T: Scalar>(s: &BTreeSet<u32>) -> Result<BernsteinForm<T>> {
    check_geometric(s)?;
    BernsteinForm::new(s.iter().map(|&k| ((1, k), T::one())).collect())
}

/// 1 − Σ_{k∈S} p(1−p)^k = Σ_{k≤N, k∉S} p(1−p)^k + (1−p)^{N+1}, N = max S.
pub fn geometric_complement_form<T: Scalar>(s: &BTreeSet<u32>) -> Result<BernsteinForm<T>> {
    check_geometric(s)?;
    let n = s.last().copied().unwrap_or(0);
    let mut terms: BTreeMap<(u32, u32), T> = (0..=n)
        .filter(|k| !s.contains(k))
        .map(|k| ((1, k), T::one()))
        .collect();
    let tail = if s.is_empty() { 0 } else { n + 1 };
    terms.insert((0, tail), T::one());
    BernsteinForm::new(terms)
}

/// Q = Σ_{x∈S} m!/(x_1!⋯x_k!) Π p_i^{x_i} under a Dirichlet prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultinomialForm<T> {
    k: usize,
    m: u32,
    terms: BTreeMap<Vec<u32>, T>,
}

fn multinomial_coefficient(x: &[u32]) -> u64 {
    let mut acc = 1u64;
    let mut seen = 0u32;
    for &xi in x {
        seen += xi;
        acc *= binomial_coefficient(seen, xi);
    }
    acc
}

impl<T: Scalar> MultinomialForm<T> {
    pub fn new(k: usize, m: u32, s: &BTreeSet<Vec<u32>>) -> Result<Self> {
        if k < 2 || m == 0 {
            return Err(Error::InvalidParameter("need k ≥ 2 and m ≥ 1".into()));
        }
        if m > 20 {
            return Err(Error::SizeLimit {
                what: format!("multinomial m = {m}"),
                limit: 20,
            });
        }
        for x in s {
            if x.len() != k || x.iter().sum::<u32>() != m {
                return Err(Error::InvalidParameter(format!(
                    "{x:?} is not a count vector of length {k} summing to {m}"
                )));
            }
        }
        let terms = s
            .iter()
            .map(|x| (x.clone(), from_count(multinomial_coefficient(x))))
            .collect();
        Ok(Self { k, m, terms })
    }

    /// The count vectors not in S.
    pub fn complement_set(k: usize, m: u32, s: &BTreeSet<Vec<u32>>) -> BTreeSet<Vec<u32>> {
        compositions(u64::from(m), k)
            .into_iter()
            .map(|c| c.into_iter().map(|v| v as u32).collect::<Vec<u32>>())
            .filter(|c| !s.contains(c))
            .collect()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eval(&self, p: &[T]) -> T {
        self.terms.iter().fold(T::zero(), |acc, (x, c)| {
            let mut t = c.clone();
            for (pi, &xi) in p.iter().zip(x) {
                for _ in 0..xi {
                    t = t * pi.clone();
                }
            }
            acc + t
        })
    }

    fn mul(&self, other: &BTreeMap<Vec<u32>, T>) -> BTreeMap<Vec<u32>, T> {
        let mut out: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for (x, c1) in &self.terms {
            for (y, c2) in other {
                let key: Vec<u32> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                let e = out.entry(key).or_insert_with(T::zero);
                *e = e.clone() + c1.clone() * c2.clone();
            }
        }
        out
    }

    /// E[Q^j] for j = 0…j_max via E[Π p_i^{d_i}] = Π (α_i)_{d_i} / (A)_{Σd}.
    pub fn raw_moments(&self, prior: &DirichletParams<T>, j_max: usize) -> Result<MomentSequence<T>> {
        if prior.k() != self.k {
            return Err(Error::InvalidParameter(format!(
                "prior has {} categories, query has {}",
                prior.k(),
                self.k
            )));
        }
        if self.k > MULTINOMIAL_EXACT_MAX_K
            || self.m > MULTINOMIAL_EXACT_MAX_M
            || j_max > MULTINOMIAL_EXACT_MAX_J
        {
            return Err(Error::SizeLimit {
                what: format!("multinomial exact mode (k = {}, m = {}, j_max = {j_max})", self.k, self.m),
                limit: MULTINOMIAL_EXACT_MAX_J,
            });
        }
        if j_max < 2 {
            return Err(Error::InvalidParameter("j_max must be at least 2".into()));
        }
        let degree = j_max * self.m as usize;
        let rising = |x: &T| -> Vec<T> {
            let mut v = vec![T::one()];
            for d in 0..degree {
                let next = v[d].clone() * (x.clone() + from_count(d as u64));
                v.push(next);
            }
            v
        };
        let per_cat: Vec<Vec<T>> = prior.alphas().iter().map(rising).collect();
        let total = rising(&prior.total());
        let mut power: BTreeMap<Vec<u32>, T> = BTreeMap::from([(vec![0; self.k], T::one())]);
        let mut values = vec![T::one()];
        for j in 1..=j_max {
            power = self.mul(&power);
            let d_total = j * self.m as usize;
            let mut acc = T::zero();
            for (d, c) in &power {
                let mut num = c.clone();
                for (i, &di) in d.iter().enumerate() {
                    num = num * per_cat[i][di as usize].clone();
                }
                acc = acc + num;
            }
            values.push(acc / total[d_total].clone());
        }
        if values.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::Range("multinomial moments overflow".into()));
        }
        MomentSequence::new(values)
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// E[Q^j] for Q(λ) = Σ_{k∈S} λ^k e^{−λ}/k!, λ ~ Gamma(α, β).
///
/// Q^j = e^{−jλ} Σ_s c_s λ^s, and E[λ^s e^{−jλ}] = (α)_s/(β+j)^s · (β/(β+j))^α.
/// Coefficients and terms are carried as logarithms.
pub fn poisson_query_moments<T: Real>(
    s: &BTreeSet<u32>,
    prior: &GammaParams<T>,
    j_max: usize,
) -> Result<MomentSequence<T>> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("S must be nonempty".into()));
    }
    if j_max < 2 || j_max > POISSON_EXACT_MAX_J {
        return Err(Error::SizeLimit {
            what: format!("Poisson j_max = {j_max}"),
            limit: POISSON_EXACT_MAX_J,
        });
    }
    let max = *s.last().expect("nonempty");
    if max > POISSON_EXACT_MAX {
        return Err(Error::SizeLimit {
            what: format!("Poisson outcome {max}"),
            limit: POISSON_EXACT_MAX as usize,
        });
    }
    let a = prior.shape().to_f64_lossy();
    let b = prior.rate().to_f64_lossy();
    let ln_fact: Vec<f64> = (0..=max)
        .map(|k| log_gamma(k as f64 + 1.0))
        .collect::<Result<_>>()?;
    let ln_gamma_a = log_gamma(a)?;
    let mut power: Vec<f64> = vec![0.0]; // ln c_s of Q^0 = 1
    let mut values = vec![T::one()];
    for j in 1..=j_max {
        let mut next = vec![f64::NEG_INFINITY; power.len() + max as usize];
        for (s0, &lc) in power.iter().enumerate() {
            if lc == f64::NEG_INFINITY {
                continue;
            }
            for &k in s {
                let slot = &mut next[s0 + k as usize];
                *slot = log_sum_exp(&[*slot, lc - ln_fact[k as usize]]);
            }
        }
        power = next;
        let bj = b + j as f64;
        let base = a * (b / bj).ln() - ln_gamma_a;
        let mut logs = Vec::with_capacity(power.len());
        for (sdeg, &lc) in power.iter().enumerate() {
            if lc == f64::NEG_INFINITY {
                continue;
            }
            let sf = sdeg as f64;
            logs.push(lc + log_gamma(a + sf)? - sf * bj.ln() + base);
        }
        values.push(T::lit(log_sum_exp(&logs).exp()));
    }
    MomentSequence::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::beta_moments;
    use crate::BigRational;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn set(items: &[u32]) -> BTreeSet<u32> {
        items.iter().copied().collect()
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial_coefficient(60, 30), 118_264_581_564_861_424);
        assert_eq!(binomial_coefficient(5, 7), 0);
        assert_eq!(multinomial_coefficient(&[2, 1, 2]), 30);
    }

    #[test]
    fn binomial_poly_examples() {
        let p = binomial_query_poly::<f64>(1, &set(&[1])).unwrap();
        assert_eq!(p.coefficients(), &[0.0, 1.0]);
        let p = binomial_query_poly::<BigRational>(7, &(0..=7).collect()).unwrap();
        assert_eq!(p, PolynomialInP::constant(r(1, 1)));
        let p = binomial_query_poly::<f64>(2, &set(&[1])).unwrap();
        assert_eq!(p.coefficients(), &[0.0, 2.0, -2.0]);
        assert!(binomial_query_poly::<f64>(31, &set(&[1])).is_err());
        assert!(binomial_query_poly::<f64>(3, &set(&[4])).is_err());
        let p = binomial_query_poly::<f64>(12, &set(&[0, 3, 4, 11])).unwrap();
        assert!(p.is_probability_valued(2_000, 1e-12));
    }

    #[test]
    fn geometric_poly_examples() {
        let p = geometric_query_poly::<f64>(&set(&[0])).unwrap();
        assert_eq!(p.coefficients(), &[0.0, 1.0]);
        let p = geometric_query_poly::<f64>(&set(&[0, 1])).unwrap();
        assert_eq!(p.coefficients(), &[0.0, 2.0, -1.0]);
        let n = 40;
        let p = geometric_query_poly::<BigRational>(&(0..=n).collect()).unwrap();
        let x = r(1, 3);
        let want = r(1, 1) - (0..=n).fold(r(1, 1), |acc, _| acc * r(2, 3));
        assert_eq!(p.eval(&x), want);
        assert!(geometric_query_poly::<f64>(&set(&[61])).is_err());
    }

    #[test]
    fn monomial_moment_examples() {
        let p = PolynomialInP::new(vec![0.0f64, 1.0]);
        let m = poly_raw_moments_under_beta(&p, &BetaParams::new(1.0, 2.0).unwrap(), 3).unwrap();
        assert!((m.values()[1] - 1.0 / 3.0).abs() < 1e-16);
        let one = PolynomialInP::constant(1.0);
        let m = poly_raw_moments_under_beta(&one, &BetaParams::new(0.3, 2.0).unwrap(), 10).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));
        let q = PolynomialInP::new(vec![r(0, 1), r(2, 1), r(-2, 1)]);
        let m = poly_raw_moments_under_beta(&q, &BetaParams::new(r(1, 1), r(1, 1)).unwrap(), 2).unwrap();
        assert_eq!(m.values()[1], r(1, 3));
        assert!(poly_raw_moments_under_beta(&q, &BetaParams::new(r(1, 1), r(1, 1)).unwrap(), 201).is_err());
    }

    #[test]
    fn bernstein_matches_monomials_exactly() {
        let prior = BetaParams::new(r(3, 2), r(7, 3)).unwrap();
        for (m, s) in [(1, set(&[1])), (3, set(&[0, 2])), (5, set(&[1, 2, 5]))] {
            let form = binomial_form::<BigRational>(m, &s).unwrap();
            let mono = binomial_query_poly::<BigRational>(m, &s).unwrap();
            assert_eq!(form.to_monomials(), mono);
            let a = form.raw_moments(&prior, 6).unwrap();
            let b = poly_raw_moments_under_beta(&mono, &prior, 6).unwrap();
            assert_eq!(a, b);
        }
        let s = set(&[0, 2, 3]);
        let form = geometric_form::<BigRational>(&s).unwrap();
        assert_eq!(form.to_monomials(), geometric_query_poly(&s).unwrap());
        let comp = geometric_complement_form::<BigRational>(&s).unwrap();
        let x = r(2, 7);
        assert_eq!(form.eval(&x) + comp.eval(&x), r(1, 1));
    }

    #[test]
    fn bernstein_f64_is_stable_at_high_degree() {
        // the monomial route loses everything here; the positive form matches exact
        let s = set(&[3, 9, 10, 17]);
        let exact_prior = BetaParams::new(r(1, 2), r(5, 1)).unwrap();
        let exact = binomial_form::<BigRational>(20, &s).unwrap().raw_moments(&exact_prior, 8).unwrap();
        let fast = binomial_form::<f64>(20, &s)
            .unwrap()
            .raw_moments(&BetaParams::new(0.5, 5.0).unwrap(), 8)
            .unwrap();
        for (e, f) in exact.values().iter().zip(fast.values()) {
            let e = e.to_f64_lossy();
            assert!(((f - e) / e).abs() < 1e-12, "{f} vs {e}");
        }
    }

    #[test]
    fn single_outcome_reduces_to_beta() {
        let prior = BetaParams::new(0.7, 3.5).unwrap();
        let beta = beta_moments(&prior, 50);
        let bin = binomial_form::<f64>(1, &set(&[1])).unwrap().raw_moments(&prior, 50).unwrap();
        let geo = geometric_form::<f64>(&set(&[0])).unwrap().raw_moments(&prior, 50).unwrap();
        for j in 0..=50 {
            assert!((bin.values()[j] - beta.values()[j]).abs() <= 1e-15 * beta.values()[j]);
            assert!((geo.values()[j] - beta.values()[j]).abs() <= 1e-15 * beta.values()[j]);
        }
    }

    #[test]
    fn multinomial_examples() {
        let prior = DirichletParams::new(vec![r(1, 2), r(2, 1), r(3, 2)]).unwrap();
        let all = MultinomialForm::<BigRational>::complement_set(3, 2, &BTreeSet::new());
        assert_eq!(all.len(), 6);
        let q = MultinomialForm::new(3, 2, &all).unwrap();
        assert!(q.raw_moments(&prior, 5).unwrap().values().iter().all(|v| *v == r(1, 1)));
        let q = MultinomialForm::new(3, 1, &BTreeSet::from([vec![1, 0, 0]])).unwrap();
        let marginal = beta_moments(&BetaParams::new(r(1, 2), r(7, 2)).unwrap(), 6);
        assert_eq!(q.raw_moments(&prior, 6).unwrap(), marginal);
        assert!(MultinomialForm::<f64>::new(3, 2, &BTreeSet::from([vec![1, 0, 0]])).is_err());
        let big = MultinomialForm::<f64>::new(5, 1, &BTreeSet::from([vec![1, 0, 0, 0, 0]])).unwrap();
        assert!(big.raw_moments(&DirichletParams::symmetric(5, 1.0).unwrap(), 4).is_err());
    }

    #[test]
    fn two_category_multinomial_is_binomial() {
        let prior = DirichletParams::new(vec![r(5, 4), r(2, 3)]).unwrap();
        let beta = BetaParams::new(r(5, 4), r(2, 3)).unwrap();
        let s = set(&[0, 2, 3]);
        let vecs: BTreeSet<Vec<u32>> = s.iter().map(|&x| vec![x, 3 - x]).collect();
        let multi = MultinomialForm::new(2, 3, &vecs).unwrap().raw_moments(&prior, 8).unwrap();
        let bin = binomial_form::<BigRational>(3, &s).unwrap().raw_moments(&beta, 8).unwrap();
        assert_eq!(multi, bin);
    }

    #[test]
    fn poisson_examples() {
        let g = GammaParams::new(2.0f64, 5.0).unwrap();
        let m = poisson_query_moments(&set(&[0]), &g, 4).unwrap();
        assert!((m.values()[1] - (5.0f64 / 6.0).powi(2)).abs() < 1e-15);
        let g1 = GammaParams::new(1.0f64, 1.0).unwrap();
        let m = poisson_query_moments(&set(&[0]), &g1, 2).unwrap();
        assert!((m.values()[2] - 1.0 / 3.0).abs() < 1e-15);
        let m = poisson_query_moments(&(0..=60).collect(), &g1, 20).unwrap();
        assert!(m.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        // S = {0, 1}, j = 1: E[(1 + λ) e^{−λ}] = (β/(β+1))^α (1 + α/(β+1))
        let m = poisson_query_moments(&set(&[0, 1]), &g, 3).unwrap();
        let want = (5.0f64 / 6.0).powi(2) * (1.0 + 2.0 / 6.0);
        assert!((m.values()[1] - want).abs() < 1e-15);
        assert!(poisson_query_moments(&set(&[61]), &g, 3).is_err());
        assert!(poisson_query_moments(&set(&[1]), &g, 21).is_err());
    }
}
