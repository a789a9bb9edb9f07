//! Adaptive Gauss–Kronrod quadrature and Beta expectations.

use crate::dist::BetaParams;
use crate::error::Result;
use crate::scalar::Real;
use crate::special::log_beta;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    (kronrod * radius, ((kronrod - gauss) * radius).abs())
}

/// Integrates `f` over `[a, b]` by recursive bisection until the
/// Kronrod/Gauss difference of every panel is below its share of `tol`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    fn recurse<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, depth: u32) -> T {
        let mid = T::lit(0.5) * (a + b);
        let (left, el) = gk15(f, a, mid);
        let (right, er) = gk15(f, mid, b);
        let sum = left + right;
        let err = el + er;
        if depth == 0 || err <= tol || err <= T::epsilon() * T::lit(50.0) * sum.abs() {
            return sum;
        }
        let half_tol = tol * T::lit(0.5);
        recurse(f, a, mid, half_tol, depth - 1) + recurse(f, mid, b, half_tol, depth - 1)
    }
    let (whole, err) = gk15(&f, a, b);
    if err <= tol {
        return whole;
    }
    recurse(&f, a, b, tol, 40)
}

/// E[g(X)] for X ~ Beta(α, β), by quadrature.
///
/// `tol` is an absolute tolerance on the expectation itself.
///
/// Each half of `[0, 1]` is integrated separately; near an endpoint whose
/// shape parameter is below one the substitution x = t^{1/α} (mirrored for
/// β) absorbs the integrable singularity of the density.
pub fn beta_expectation<T: Real, G: Fn(T) -> T>(p: &BetaParams<T>, g: G, tol: T) -> Result<T> {
    let (a, b) = (p.alpha, p.beta);
    let one = T::one();
    let half = T::lit(0.5);
    let ln_norm = -log_beta(a, b)?;
    let left = if a < one {
        // x = t^{1/a}:  x^{a-1} dx = dt / a
        let upper = half.powf(a);
        integrate(
            |t: T| {
                if t <= T::zero() {
                    return g(T::zero()) * ln_norm.exp() / a;
                }
                let x = t.powf(a.recip());
                g(x) * ((b - one) * (-x).ln_1p() + ln_norm).exp() / a
            },
            T::zero(),
            upper,
            tol,
        )
    } else {
        integrate(
            |x: T| g(x) * ((a - one) * x.ln() + (b - one) * (-x).ln_1p() + ln_norm).exp(),
            T::zero(),
            half,
            tol,
        )
    };
    let right = if b < one {
        // 1 − x = s^{1/b}
        let upper = half.powf(b);
        integrate(
            |s: T| {
                if s <= T::zero() {
                    return g(one) * ln_norm.exp() / b;
                }
                let y = s.powf(b.recip());
                g(one - y) * ((a - one) * (-y).ln_1p() + ln_norm).exp() / b
            },
            T::zero(),
            upper,
            tol,
        )
    } else {
        integrate(
            |x: T| g(x) * ((a - one) * x.ln() + (b - one) * (-x).ln_1p() + ln_norm).exp(),
            half,
            one,
            tol,
        )
    };
    Ok(left + right)
}
