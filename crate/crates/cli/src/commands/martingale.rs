use std::collections::BTreeSet;

use postconc::martingale::{
    azuma_lower_bound, azuma_total, simulate_paths, stability_diagnostics, step_variance_proxy,
    DEFAULT_AZUMA_HORIZON, DEFAULT_PROBES,
};
use postconc::{BetaParams, DirichletParams, SeedSpec};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{master_seed, positive, to_value};
use crate::report::{Report, Table};
use crate::{log, CliError, CommonArgs};

pub const AZUMA_LOWER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MartingaleConfig {
    /// (α, β) priors for the path simulation.
    pub priors: Vec<(f64, f64)>,
    pub horizon: usize,
    pub trials: u64,
    /// Prior masses α + β for the Azuma sums.
    pub azuma_masses: Vec<f64>,
    pub azuma_horizon: u64,
    pub step_states: usize,
    pub stability_ks: Vec<usize>,
    pub stability_n_max: u64,
    /// Symmetric Dirichlet concentrations for the stability diagnostics.
    pub stability_concentrations: Vec<f64>,
}

impl Default for MartingaleConfig {
    fn default() -> Self {
        Self {
            priors: vec![(1.0, 1.0), (0.5, 1.5), (5.0, 5.0)],
            horizon: 200,
            trials: 2000,
            azuma_masses: vec![1.0, 2.0, 10.0],
            azuma_horizon: DEFAULT_AZUMA_HORIZON,
            step_states: 1000,
            stability_ks: vec![2, 3, 4],
            stability_n_max: 12,
            stability_concentrations: vec![1.0, 0.5],
        }
    }
}

/// Nonempty proper subsets of {0, …, k−1}.
pub fn proper_subsets(k: usize) -> Vec<BTreeSet<usize>> {
    (1..(1u64 << k) - 1)
        .map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}

pub fn run(common: &CommonArgs) -> Result<Report, CliError> {
    let mut config: MartingaleConfig = crate::load_config(common.config.as_deref())?;
    if let Some(t) = common.trials {
        config.trials = t;
    }
    for &(a, b) in &config.priors {
        positive("prior alpha", a)?;
        positive("prior beta", b)?;
    }
    for &m in config.azuma_masses.iter().chain(&config.stability_concentrations) {
        positive("mass", m)?;
    }
    if config.trials == 0 || config.azuma_horizon == 0 || config.stability_ks.iter().any(|&k| k < 2) {
        return Err(CliError::Config("need trials ≥ 1, azuma_horizon ≥ 1 and stability k ≥ 2".into()));
    }
    let seed = SeedSpec::new(master_seed(common, None));
    let mut failures = Vec::new();

    let azuma = config
        .azuma_masses
        .iter()
        .map(|&mass| {
            let r = azuma_total(&BetaParams::new(mass / 2.0, mass / 2.0)?, config.azuma_horizon)?;
            let lower = azuma_lower_bound(mass);
            let lower_ok = r.total() >= lower - AZUMA_LOWER_TOL;
            Ok(json!({
                "total_mass": mass,
                "partial_sum": r.partial_sum,
                "tail_bound_remainder": r.tail_bound_remainder,
                "total": r.total(),
                "theorem_bound": r.theorem_bound,
                "lower_bound": lower,
                "upper_ok": r.holds,
                "lower_ok": lower_ok,
            }))
        })
        .collect::<postconc::Result<Vec<_>>>()?;
    for a in &azuma {
        if a["upper_ok"] != true || a["lower_ok"] != true {
            failures.push(format!("Azuma sum out of bounds: {a}"));
        }
    }

    let mut rng = seed.child(0).rng();
    let mut worst_step_ratio = 0.0f64;
    for _ in 0..config.step_states {
        let a = 10f64.powf(rng.random_range(-1.0..=2.0));
        let b = 10f64.powf(rng.random_range(-1.0..=2.0));
        let p = BetaParams::new(a, b)?;
        let bound = (4.0 * (a + b + 1.0).powi(2)).recip();
        worst_step_ratio = worst_step_ratio.max(step_variance_proxy(&p) / bound);
    }
    if worst_step_ratio > 1.0 + 1e-12 {
        failures.push(format!("step proxy exceeds 1/(4(α+β+1)²) by ratio {worst_step_ratio}"));
    }

    let mut table = Table::new(&["prior_alpha", "prior_beta", "trial", "true_p", "x_horizon", "deviation"]);
    let mut simulations = Vec::new();
    for (i, &(a, b)) in config.priors.iter().enumerate() {
        log("martingale", format_args!("simulating Beta({a}, {b}) × {} trials", config.trials));
        let prior = BetaParams::new(a, b)?;
        let r = simulate_paths(&prior, config.horizon, config.trials, seed.child(1 + i as u64))?;
        if !r.passed {
            failures.push(format!("path simulation failed for Beta({a}, {b})"));
        }
        for row in &r.rows {
            table.push(vec![a.into(), b.into(), row.trial.into(), row.true_p.into(), row.x_horizon.into(), row.deviation.into()]);
        }
        simulations.push(json!({
            "alpha": a,
            "beta": b,
            "horizon": r.horizon,
            "trials": r.trials,
            "sigma2": r.sigma2,
            "increments": to_value(&r.increments)?,
            "tails": to_value(&r.tails)?,
            "convergence": to_value(&r.convergence)?,
            "passed": r.passed,
        }));
    }

    log("martingale", "stability diagnostics");
    let mut cases = Vec::new();
    for &k in &config.stability_ks {
        for &c in &config.stability_concentrations {
            for subset in proper_subsets(k) {
                for n in 1..=config.stability_n_max {
                    cases.push((k, c, subset.clone(), n));
                }
            }
        }
    }
    let stability = cases
        .par_iter()
        .enumerate()
        .map(|(i, (k, c, subset, n))| {
            let prior = DirichletParams::symmetric(*k, *c)?;
            stability_diagnostics(&prior, *n, subset, seed.child(1000 + i as u64), DEFAULT_PROBES)
        })
        .collect::<postconc::Result<Vec<_>>>()?;
    let stability_failed = stability.iter().filter(|r| !r.passed).count();
    if stability_failed > 0 {
        failures.push(format!("{stability_failed} stability diagnostics failed"));
    }

    let summary = json!({
        "azuma": azuma,
        "step_proxy": {"states": config.step_states, "max_ratio_to_bound": worst_step_ratio},
        "simulations": simulations,
        "stability": {
            "cases": stability.len(),
            "exhaustive_cases": stability.iter().filter(|r| r.exhaustive).count(),
            "datasets_checked": stability.iter().map(|r| r.datasets_checked).sum::<usize>(),
            "failed": stability_failed,
            "max_add_one_over_bound": stability.iter().map(|r| r.max_add_one / r.add_one_bound).fold(0.0, f64::max),
            "max_replace_one_over_bound": stability.iter().map(|r| r.max_replace_one / r.replace_one_bound).fold(0.0, f64::max),
            "max_slope_deviation": stability.iter().map(|r| r.max_slope_deviation).fold(0.0, f64::max),
        },
    });
    Ok(Report {
        command: "martingale",
        config: to_value(&config)?,
        master_seed: seed.master_seed,
        summary,
        table,
        failures,
        extra_files: Vec::new(),
    })
}
