use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxyMethod {
    ExactMgf,
    EmpiricalMgf,
    MomentCriterion,
}

/// Which signs of λ are scanned. `Upper` estimates the upper-subgaussian
/// constant (λ > 0 only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Both,
    Upper,
    Lower,
}

/// λ-grid description recorded alongside every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points_per_sign: usize,
    pub refine_tol: f64,
    pub side: Side,
}

impl GridSpec {
    pub fn new(lambda_cap: f64) -> Self {
        Self {
            lambda_min: 1e-3,
            lambda_max: lambda_cap,
            points_per_sign: 240,
            refine_tol: 1e-8,
            side: Side::Both,
        }
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    fn magnitudes(&self) -> Vec<f64> {
        if self.lambda_max <= self.lambda_min {
            return vec![self.lambda_max];
        }
        let n = self.points_per_sign.max(2);
        let (lo, hi) = (self.lambda_min.ln(), self.lambda_max.ln());
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceProxyEstimate<T> {
    /// Estimated τ², the supremum found on the scanned λ set.
    pub value: T,
    pub argmax_lambda: T,
    pub method: ProxyMethod,
    pub grid_spec: GridSpec,
    /// Gain of the golden-section refinement over the best grid point.
    pub slack: T,
}

/// Estimates τ² = sup_{λ≠0} 2(ln M(λ) − λμ)/λ² from a log-MGF.
///
/// `log_mgf` returns ln E[e^{λX}]; working in log space keeps MGFs of
/// bounded variables usable far past the overflow of e^λ.
pub fn variance_proxy_sup<T, F>(log_mgf: F, mean: T, lambda_cap: T) -> Result<VarianceProxyEstimate<T>>
where
    T: Real,
    F: Fn(T) -> Result<T>,
{
    let grid = GridSpec::new(lambda_cap.to_f64_lossy());
    variance_proxy_sup_with(log_mgf, mean, &grid, ProxyMethod::ExactMgf)
}

pub fn variance_proxy_sup_with<T, F>(
    log_mgf: F,
    mean: T,
    grid: &GridSpec,
    method: ProxyMethod,
) -> Result<VarianceProxyEstimate<T>>
where
    T: Real,
    F: Fn(T) -> Result<T>,
{
    if !(grid.lambda_max > 0.0) {
        return Err(Error::InvalidParameter("lambda cap must be positive".into()));
    }
    let ratio = |l: T| -> Result<T> {
        let lm = log_mgf(l)?;
        if !lm.is_finite() {
            return Err(Error::Range(format!("log-MGF is not finite at lambda = {l}")));
        }
        Ok(T::lit(2.0) * (lm - l * mean) / (l * l))
    };
    let mags: Vec<T> = grid.magnitudes().into_iter().map(T::lit).collect();
    let signs: &[T] = match grid.side {
        Side::Both => &[T::one(), -T::one()],
        Side::Upper => &[T::one()],
        Side::Lower => &[-T::one()],
    };
    let mut best: Option<(T, T, usize, T)> = None; // (value, lambda, index, sign)
    for &sign in signs {
        for (i, &m) in mags.iter().enumerate() {
            let l = sign * m;
            let v = ratio(l)?;
            if best.map_or(true, |(bv, ..)| v > bv) {
                best = Some((v, l, i, sign));
            }
        }
    }
    let (grid_value, grid_lambda, idx, sign) = best.expect("grid is never empty");

    // Golden-section search on the bracket spanned by the neighbours.
    let lo = mags[idx.saturating_sub(1)];
    let hi = mags[(idx + 1).min(mags.len() - 1)];
    let (mut a, mut b) = (lo, hi);
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let tol = T::lit(grid.refine_tol);
    let f = |m: T| ratio(sign * m);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 0;
    while (b - a).abs() > tol && iterations < 200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        iterations += 1;
    }
    let (refined_value, refined_lambda) = if fc > fd { (fc, sign * c) } else { (fd, sign * d) };
    let (value, argmax_lambda) = if refined_value > grid_value {
        (refined_value, refined_lambda)
    } else {
        (grid_value, grid_lambda)
    };
    Ok(VarianceProxyEstimate {
        value: value.max(T::zero()),
        argmax_lambda,
        method,
        grid_spec: *grid,
        slack: value - grid_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBoundResult<T> {
    pub epsilon: T,
    pub sigma2: T,
    pub bound: T,
}

/// exp(−ε²/(2σ²)), the one-sided tail bound of a σ²-subgaussian variable.
pub fn tail_bound<T: Real>(sigma2: T, epsilon: T) -> Result<TailBoundResult<T>> {
    if !(sigma2 > T::zero()) || !(epsilon > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "tail bound needs sigma2 > 0 and epsilon > 0 (got {sigma2}, {epsilon})"
        )));
    }
    let bound = (-(epsilon * epsilon) / (T::lit(2.0) * sigma2)).exp().min(T::one());
    Ok(TailBoundResult {
        epsilon,
        sigma2,
        bound,
    })
}
