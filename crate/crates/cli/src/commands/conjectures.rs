use std::collections::{BTreeMap, BTreeSet};

use postconc::conjecture::{evaluate_conjecture, stratified_subsets, ConjectureModel, ConjectureReport, EvalOptions};
use postconc::martingale::compositions;
use postconc::{BetaParams, DirichletParams, GammaParams, SeedSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{master_seed, to_value};
use crate::report::{Report, Table};
use crate::{log, CliError, CommonArgs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjectureConfig {
    pub beta_priors: Vec<(f64, f64)>,
    pub binomial_ms: Vec<u32>,
    /// Geometric outcome sets are drawn from {0, …, N} for each N here.
    pub geometric_ranges: Vec<u32>,
    pub multinomial_ks: Vec<usize>,
    pub multinomial_ms: Vec<u32>,
    pub dirichlet_concentrations: Vec<f64>,
    pub gamma_priors: Vec<(f64, f64)>,
    pub poisson_range: u32,
    /// Beta-binomial sizes beyond the exact limits, handled by Monte Carlo.
    pub monte_carlo_ms: Vec<u32>,
    pub monte_carlo_draws: u64,
    pub random_subsets: usize,
}

impl Default for ConjectureConfig {
    fn default() -> Self {
        Self {
            beta_priors: vec![(0.5, 0.5), (1.0, 1.0), (2.0, 5.0), (10.0, 10.0)],
            binomial_ms: vec![1, 2, 5, 10, 20],
            geometric_ranges: vec![5, 20],
            multinomial_ks: vec![2, 3],
            multinomial_ms: vec![1, 2, 3],
            dirichlet_concentrations: vec![0.5, 1.0, 3.0],
            gamma_priors: vec![(0.5, 2.0), (1.0, 1.0), (2.0, 5.0), (5.0, 1.0)],
            poisson_range: 10,
            monte_carlo_ms: vec![40],
            monte_carlo_draws: 200_000,
            random_subsets: 2,
        }
    }
}

struct Case {
    model: ConjectureModel,
    monte_carlo: bool,
}

fn build_cases(config: &ConjectureConfig, seed: SeedSpec) -> postconc::Result<Vec<Case>> {
    let mut rng = seed.child(0).rng();
    let mut cases = Vec::new();
    let exact = |model| Case { model, monte_carlo: false };
    for &(a, b) in &config.beta_priors {
        let prior = BetaParams::new(a, b)?;
        for &m in &config.binomial_ms {
            for subset in stratified_subsets(m + 1, config.random_subsets, &mut rng) {
                cases.push(exact(ConjectureModel::BetaBinomial { m, prior: prior.clone(), subset }));
            }
        }
        for &m in &config.monte_carlo_ms {
            for subset in stratified_subsets(m + 1, config.random_subsets, &mut rng) {
                cases.push(Case {
                    model: ConjectureModel::BetaBinomial { m, prior: prior.clone(), subset },
                    monte_carlo: true,
                });
            }
        }
        for &n in &config.geometric_ranges {
            for subset in stratified_subsets(n + 1, config.random_subsets, &mut rng) {
                cases.push(exact(ConjectureModel::Geometric { prior: prior.clone(), subset }));
            }
        }
    }
    for &k in &config.multinomial_ks {
        for &m in &config.multinomial_ms {
            let outcomes: Vec<Vec<u32>> = compositions(u64::from(m), k)
                .into_iter()
                .map(|c| c.into_iter().map(|x| x as u32).collect())
                .collect();
            for &c in &config.dirichlet_concentrations {
                let prior = DirichletParams::symmetric(k, c)?;
                for idx in stratified_subsets(outcomes.len() as u32, config.random_subsets, &mut rng) {
                    let subset: BTreeSet<Vec<u32>> = idx.iter().map(|&i| outcomes[i as usize].clone()).collect();
                    cases.push(exact(ConjectureModel::Multinomial { m, prior: prior.clone(), subset }));
                }
            }
        }
    }
    for &(shape, rate) in &config.gamma_priors {
        let prior = GammaParams::new(shape, rate)?;
        for subset in stratified_subsets(config.poisson_range + 1, config.random_subsets, &mut rng) {
            cases.push(exact(ConjectureModel::PoissonGamma { prior: prior.clone(), subset }));
        }
    }
    Ok(cases)
}

pub fn run(common: &CommonArgs) -> Result<Report, CliError> {
    let mut config: ConjectureConfig = crate::load_config(common.config.as_deref())?;
    if let Some(t) = common.trials {
        config.monte_carlo_draws = t;
    }
    let seed = SeedSpec::new(master_seed(common, None));
    let cases = build_cases(&config, seed).map_err(|e| CliError::Config(e.to_string()))?;
    log("conjectures", format_args!("{} instances", cases.len()));
    let reports = cases
        .par_iter()
        .enumerate()
        .map(|(i, case)| {
            let opts = if case.monte_carlo {
                EvalOptions::monte_carlo(config.monte_carlo_draws, seed.child(1 + i as u64))
            } else {
                EvalOptions::exact()
            };
            evaluate_conjecture(&case.model, &opts)
        })
        .collect::<postconc::Result<Vec<ConjectureReport>>>()?;

    let mut table = Table::new(&[
        "model", "params", "subset", "subset_size", "tau2_est", "conjectured_scale", "ratio", "method", "j_max",
        "lambda_cap", "truncation_bound", "argmax_lambda", "smallest_passing_c",
    ]);
    let mut failures = Vec::new();
    let mut per_model: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for r in &reports {
        if !(r.ratio.is_finite() && r.ratio > 0.0) {
            failures.push(format!("{} {} {}: ratio {} is not finite and positive", r.model, r.params, r.subset, r.ratio));
        }
        let entry = per_model.entry(r.model).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 = entry.1.max(r.ratio);
        let method = to_value(&r.method)?.as_str().unwrap_or_default().to_owned();
        table.push(vec![
            r.model.into(), r.params.clone().into(), r.subset.clone().into(), r.subset_size.into(),
            r.tau2_est.into(), r.conjectured_scale.into(), r.ratio.into(), method.into(), r.j_max.into(),
            r.lambda_cap.into(), r.truncation_bound.into(), r.argmax_lambda.into(),
            r.smallest_passing_c.map_or(f64::NAN, |c| c).into(),
        ]);
    }
    let models: serde_json::Map<String, serde_json::Value> = per_model
        .into_iter()
        .map(|(m, (count, max_ratio))| (m.to_owned(), json!({"instances": count, "max_ratio": max_ratio})))
        .collect();
    let summary = json!({
        "instances": reports.len(),
        "models": models,
    });
    Ok(Report {
        command: "conjectures",
        config: to_value(&config)?,
        master_seed: seed.master_seed,
        summary,
        table,
        failures,
        extra_files: Vec::new(),
    })
}
