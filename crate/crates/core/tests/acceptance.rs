//! End-to-end acceptance suite. Prints one line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use postconc::conjecture::poly::{binomial_complement, BernsteinForm};
use postconc::conjecture::{
    binomial_form, evaluate_conjecture, geometric_form, monte_carlo_moments, multinomial_query_moments,
    poisson_query_moments, ConjectureModel, EvalOptions, MomentMode,
};
use postconc::dist::beta_moments;
use postconc::game::{
    estimate_failure_rate, projection_ks_check, random_projection_case, required_n, AnalystKind, CuratorKind,
    GameConfig,
};
use postconc::martingale::{azuma_total, stability_diagnostics, step_variance_proxy, DEFAULT_PROBES};
use postconc::subgaussian::{
    beta_variance_proxy, chi_checks, raw_moment_criterion, technical_lemma_check, termwise_mgf_comparison,
};
use postconc::{BetaParams, BigRational, DirichletParams, GammaParams, MomentSequence, SeedSpec};
use rand::Rng;

const GRID: [f64; 9] = [0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn grid() -> impl Iterator<Item = BetaParams<f64>> {
    GRID.iter()
        .flat_map(|&a| GRID.iter().map(move |&b| BetaParams::new(a, b).unwrap()))
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn beta_theorem_sweep() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut max_ratio = 0.0f64;
    for p in grid() {
        let (a, b) = (*p.alpha(), *p.beta());
        let s = a + b;
        let var = a * b / (s * s * (s + 1.0));
        let bound = 1.0 / (4.0 * s + 2.0);
        let tau2 = beta_variance_proxy(&p).unwrap().value;
        max_ratio = max_ratio.max(tau2 / bound);
        if !(tau2 >= var - 1e-6 && tau2 <= bound * (1.0 + 1e-6)) {
            bad.push((a, b, tau2));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad.is_empty() && within(elapsed, 60.0),
        format!("81 points, {} outside [var − 1e-6, bound·(1+1e-6)], max τ²/bound {max_ratio:.6}, {:.2?}", bad.len(), elapsed),
    )
}

fn beta_conjecture_sweep() -> Outcome {
    let mut bad = 0;
    let mut max_ratio = 0.0f64;
    for p in grid() {
        let bound = 1.0 / (4.0 * (p.total() + 1.0));
        let tau2 = beta_variance_proxy(&p).unwrap().value;
        max_ratio = max_ratio.max(tau2 / bound);
        if tau2 > bound * (1.0 + 1e-3) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} of 81 above 1/(4(α+β+1))·(1+1e-3), max ratio {max_ratio:.6}"))
}

fn moment_ratio_lemma() -> Outcome {
    let violations: usize = grid()
        .map(|p| technical_lemma_check(&p, 100).iter().filter(|r| !r.holds).count())
        .sum();
    outcome(violations == 0, format!("{violations} violations over 81 × 101 rows"))
}

fn raw_moment_hypothesis() -> Outcome {
    let failed = grid()
        .filter(|p| {
            let sigma2 = 1.0 / (2.0 * (p.total() + 1.0));
            !raw_moment_criterion(&beta_moments(p, 200), &sigma2).unwrap().passed
        })
        .count();
    outcome(failed == 0, format!("{failed} of 81 grid points fail with J_max = 200"))
}

fn lambda4_counterexample() -> Outcome {
    let want_lhs = 1.0 / 360.0;
    let want_rhs = 1363.0 / 497_664.0;
    let p = BetaParams::new(1.0, 2.0).unwrap();
    // exp(λ²/(8(α+β+1))) corresponds to σ² = 1/16
    let row = &termwise_mgf_comparison(&p, &(1.0 / 16.0), 4)[4];
    let rel = |x: f64, y: f64| ((x - y) / y).abs();
    let float_ok = rel(row.lhs_coeff, want_lhs) <= 1e-12 && rel(row.rhs_coeff, want_rhs) <= 1e-12;
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let exact_p = BetaParams::new(r(1, 1), r(2, 1)).unwrap();
    let exact = &termwise_mgf_comparison(&exact_p, &r(1, 16), 4)[4];
    let exact_ok = exact.lhs_coeff == r(1, 360) && exact.rhs_coeff == r(1363, 497_664);
    outcome(
        float_ok && exact_ok && row.lhs_coeff > row.rhs_coeff,
        format!(
            "λ⁴ coefficients {} vs {} (f64 {:.6e} > {:.6e})",
            exact.lhs_coeff,
            exact.rhs_coeff,
            exact.lhs_coeff.to_f64().unwrap(),
            exact.rhs_coeff.to_f64().unwrap()
        ),
    )
}

fn azuma_machinery() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for mass in [1.0, 2.0, 10.0] {
        let r = azuma_total(&BetaParams::new(mass / 2.0, mass / 2.0).unwrap(), 1_000_000).unwrap();
        let upper = 1.0 / (4.0 * mass + 2.0);
        let lower = 1.0 / (4.0 * mass + 2.0 + 1.0 / (3.0 * mass)) - 1e-9;
        let total = r.partial_sum + r.tail_bound_remainder;
        ok &= total <= upper && total >= lower;
        notes.push(format!("A={mass}: {total:.9} in [{lower:.9}, {upper:.9}]"));
    }
    let mut rng = SeedSpec::new(6).rng();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = 10f64.powf(rng.random_range(-1.0..=2.0));
        let b = 10f64.powf(rng.random_range(-1.0..=2.0));
        let bound = 1.0 / (4.0 * (a + b + 1.0).powi(2));
        worst = worst.max(step_variance_proxy(&BetaParams::new(a, b).unwrap()) / bound);
    }
    ok &= worst <= 1.0;
    let elapsed = start.elapsed();
    outcome(
        ok && within(elapsed, 30.0),
        format!("{}; step proxy max ratio {worst:.6} over 1000 states, {elapsed:.2?}", notes.join("; ")),
    )
}

fn dirichlet_projection_ks() -> Outcome {
    let seed = SeedSpec::new(42);
    let mut rng = seed.child(0).rng();
    let mut failed = 0;
    let mut worst = 0.0f64;
    for i in 0..20 {
        let (prior, subset) = random_projection_case(&mut rng, 8).unwrap();
        let r = projection_ks_check(&prior, &subset, 100_000, 1e-3, seed.child(1 + i)).unwrap();
        worst = worst.max(r.ks_statistic / r.critical_value);
        failed += usize::from(!r.passed);
    }
    outcome(failed == 0, format!("{failed} of 20 pairs reject at 1e-3, max KS/critical {worst:.3}"))
}

/// Smallest n with 2·exp(−ε²(2(A+n)+1)) ≤ δ/q, by linear scan.
fn required_n_oracle(eps: f64, delta: f64, q: f64, a: f64) -> u64 {
    (0u64..)
        .find(|&n| 2.0 * (-(eps * eps) * (2.0 * (a + n as f64) + 1.0)).exp() <= delta / q)
        .unwrap()
}

fn game_guarantee() -> Outcome {
    let start = Instant::now();
    let n = required_n(0.1, 0.05, 1000, 10.0);
    let oracle = required_n_oracle(0.1, 0.05, 1000.0, 10.0);
    let mut ok = n == oracle && n == 520;
    let mut notes = vec![format!("n = {n} (oracle {oracle})")];
    for analyst in [AnalystKind::AdaptiveCorrelator, AnalystKind::VarianceMaximizer] {
        let config = GameConfig {
            k: 10,
            prior: DirichletParams::symmetric(10, 1.0).unwrap(),
            n: Some(n),
            q: 1000,
            epsilon: 0.1,
            delta: 0.05,
            analyst,
            curator: CuratorKind::PosteriorMean,
            trials: None,
            seed: None,
        };
        let est = estimate_failure_rate(&config, 2000, SeedSpec::new(8)).unwrap();
        ok &= est.wilson_interval.0 <= 0.05;
        notes.push(format!(
            "{analyst:?}: {}/2000 failures, Wilson [{:.4}, {:.4}]",
            est.failures, est.wilson_interval.0, est.wilson_interval.1
        ));
    }
    let elapsed = start.elapsed();
    outcome(ok && within(elapsed, 300.0), format!("{}, {elapsed:.2?}", notes.join("; ")))
}

fn chi_family() -> Outcome {
    let seed = SeedSpec::new(9);
    let mut failed = Vec::new();
    let mut max_err = 0.0f64;
    for k in 1..=20 {
        let r = chi_checks(k, 100, 1_000_000, seed.child(u64::from(k))).unwrap();
        max_err = max_err.max(r.recurrence_max_rel_err);
        if !r.passed {
            failed.push(k);
        }
    }
    outcome(
        failed.is_empty(),
        format!("k = 1…20, recurrence max rel err {max_err:.2e}, failing k {failed:?}"),
    )
}

fn set(items: &[u32]) -> BTreeSet<u32> {
    items.iter().copied().collect()
}

fn conjecture_instances() -> Vec<ConjectureModel> {
    let b = |a, c| BetaParams::new(a, c).unwrap();
    let mut out = Vec::new();
    for (m, s) in [(1, set(&[1])), (2, set(&[1])), (3, set(&[0, 3])), (4, set(&[2])), (5, set(&[0, 1, 4]))] {
        for prior in [b(1.0, 1.0), b(0.5, 2.0)] {
            out.push(ConjectureModel::BetaBinomial { m, prior, subset: s.clone() });
        }
    }
    for s in [set(&[0]), set(&[1, 2]), set(&[0, 5]), set(&[3, 4, 5])] {
        out.push(ConjectureModel::Geometric { prior: b(2.0, 3.0), subset: s });
    }
    let d = |a: &[f64]| DirichletParams::new(a.to_vec()).unwrap();
    out.push(ConjectureModel::Multinomial { m: 2, prior: d(&[1.0, 2.0]), subset: [vec![1, 1]].into_iter().collect() });
    out.push(ConjectureModel::Multinomial {
        m: 3,
        prior: d(&[0.5, 1.0, 2.0]),
        subset: [vec![3, 0, 0], vec![1, 1, 1], vec![0, 2, 1]].into_iter().collect(),
    });
    out.push(ConjectureModel::Multinomial { m: 1, prior: d(&[1.0, 1.0, 1.0]), subset: [vec![0, 1, 0]].into_iter().collect() });
    let g = |a, r| GammaParams::new(a, r).unwrap();
    out.push(ConjectureModel::PoissonGamma { prior: g(2.0, 5.0), subset: set(&[0, 1]) });
    out.push(ConjectureModel::PoissonGamma { prior: g(1.0, 1.0), subset: set(&[2, 5]) });
    out.push(ConjectureModel::PoissonGamma { prior: g(0.5, 0.5), subset: set(&[0, 3, 4]) });
    out
}

fn exact_moments(model: &ConjectureModel, j_max: usize) -> MomentSequence<f64> {
    match model {
        ConjectureModel::BetaBinomial { m, prior, subset } => {
            binomial_form::<f64>(*m, subset).unwrap().raw_moments(prior, j_max).unwrap()
        }
        ConjectureModel::Geometric { prior, subset } => {
            geometric_form::<f64>(subset).unwrap().raw_moments(prior, j_max).unwrap()
        }
        ConjectureModel::Multinomial { m, prior, subset } => {
            multinomial_query_moments(*m, subset, prior, j_max, MomentMode::Exact).unwrap()
        }
        ConjectureModel::PoissonGamma { prior, subset } => poisson_query_moments(subset, prior, j_max).unwrap(),
    }
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max)
}

fn conjecture_lab_consistency() -> Outcome {
    let seed = SeedSpec::new(10);
    let instances = conjecture_instances();
    let mut worst_z = 0.0f64;
    let mut outside = 0;
    for (i, model) in instances.iter().enumerate() {
        let exact = exact_moments(model, 6);
        let mc = monte_carlo_moments(model, 6, 1_000_000, seed.child(i as u64)).unwrap();
        for j in 1..=6 {
            let z = (mc.moments.values()[j] - exact.values()[j]).abs() / mc.standard_errors[j];
            worst_z = worst_z.max(z);
            outside += usize::from(z > 3.0);
        }
    }

    let mut reduction = 0.0f64;
    let j = 20;
    for (a, b) in [(1.0, 1.0), (0.5, 4.0), (7.0, 2.5)] {
        let p = BetaParams::new(a, b).unwrap();
        let beta = beta_moments(&p, j);
        let bin = binomial_form::<f64>(1, &set(&[1])).unwrap().raw_moments(&p, j).unwrap();
        let geo = geometric_form::<f64>(&set(&[0])).unwrap().raw_moments(&p, j).unwrap();
        reduction = reduction.max(max_rel_diff(bin.values(), beta.values()));
        reduction = reduction.max(max_rel_diff(geo.values(), beta.values()));
        let dir = DirichletParams::new(vec![a, b]).unwrap();
        for m in 1..=4u32 {
            for s in [set(&[0]), set(&[1, m]), set(&[m])] {
                let vecs: BTreeSet<Vec<u32>> = s.iter().map(|&x| vec![x, m - x]).collect();
                let multi = multinomial_query_moments(m, &vecs, &dir, 8, MomentMode::Exact).unwrap();
                let binom = binomial_form::<f64>(m, &s).unwrap().raw_moments(&p, 8).unwrap();
                reduction = reduction.max(max_rel_diff(multi.values(), binom.values()));
            }
        }
        let tb = evaluate_conjecture(
            &ConjectureModel::BetaBinomial { m: 1, prior: p.clone(), subset: set(&[1]) },
            &EvalOptions::exact(),
        )
        .unwrap();
        let tg = evaluate_conjecture(&ConjectureModel::Geometric { prior: p, subset: set(&[0]) }, &EvalOptions::exact())
            .unwrap();
        reduction = reduction.max(((tb.tau2_est - tg.tau2_est) / tg.tau2_est).abs());
    }
    // the complement has the same Bernstein terms mirrored, so Q_S + Q_{S^c} = 1
    let s = set(&[0, 2]);
    let q = binomial_form::<f64>(4, &s).unwrap();
    let c = binomial_form::<f64>(4, &binomial_complement(4, &s)).unwrap();
    let sum = BernsteinForm::new(q.terms().iter().chain(c.terms()).map(|(k, v)| (*k, *v)).collect()).unwrap();
    reduction = reduction.max((sum.eval(&0.37) - 1.0).abs());

    outcome(
        outside == 0 && reduction <= 1e-10,
        format!(
            "{} instances, {outside} MC moments beyond 3 SE (max z {worst_z:.2}); reductions max rel diff {reduction:.1e}",
            instances.len()
        ),
    )
}

fn stability_exhaustive() -> Outcome {
    let mut cases = 0;
    let mut failed = 0;
    let mut non_exhaustive = 0;
    let mut worst = 0.0f64;
    for k in 2..=4usize {
        for c in [1.0, 0.5] {
            let prior = DirichletParams::symmetric(k, c).unwrap();
            for mask in 1..(1u32 << k) - 1 {
                let subset: BTreeSet<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                for n in 1..=12 {
                    let r = stability_diagnostics(&prior, n, &subset, SeedSpec::new(11), DEFAULT_PROBES).unwrap();
                    let a = c * k as f64;
                    let nn = n as f64;
                    let ok = r.max_add_one <= 1.0 / (a + nn + 1.0) + 1e-12
                        && r.max_replace_one <= 1.0 / (a + nn) + 1e-12
                        && (r.lipschitz_slope - nn / (a + nn)).abs() <= 1e-12
                        && r.max_slope_deviation <= 1e-12
                        && r.passed;
                    worst = worst.max(r.max_add_one * (a + nn + 1.0)).max(r.max_replace_one * (a + nn));
                    cases += 1;
                    failed += usize::from(!ok);
                    non_exhaustive += usize::from(!r.exhaustive);
                }
            }
        }
    }
    outcome(
        failed == 0 && non_exhaustive == 0,
        format!("{cases} (prior, S, n) cases, {failed} failed, {non_exhaustive} not exhaustive, max change/bound {worst:.6}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Beta variance proxy within [variance, 1/(4(α+β)+2)]", beta_theorem_sweep),
        ("Beta variance proxy below 1/(4(α+β+1)) (regression lock)", beta_conjecture_sweep),
        ("consecutive moment-ratio lemma, j ≤ 100", moment_ratio_lemma),
        ("raw-moment criterion at σ² = 1/(2(α+β+1))", raw_moment_hypothesis),
        ("λ⁴ coefficient counterexample at Beta(1, 2)", lambda4_counterexample),
        ("Azuma sums and step proxies", azuma_machinery),
        ("Dirichlet projection KS tests", dirichlet_projection_ks),
        ("adaptive game failure rate", game_guarantee),
        ("Chi moments, criterion and tails", chi_family),
        ("conjecture-lab moments and reductions", conjecture_lab_consistency),
        ("exhaustive stability diagnostics", stability_exhaustive),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failures += usize::from(!o.passed);
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
