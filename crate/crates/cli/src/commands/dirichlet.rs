use postconc::game::{projection_ks_check, random_projection_case};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{joined, master_seed, positive, to_value};
use crate::report::{Report, Table};
use crate::{log, CliError, CommonArgs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirichletConfig {
    pub cases: u64,
    pub k_max: usize,
    pub samples: usize,
    pub level: f64,
}

impl Default for DirichletConfig {
    fn default() -> Self {
        Self {
            cases: 20,
            k_max: 8,
            samples: 100_000,
            level: 1e-3,
        }
    }
}

pub fn run(common: &CommonArgs) -> Result<Report, CliError> {
    let mut config: DirichletConfig = crate::load_config(common.config.as_deref())?;
    if let Some(t) = common.trials {
        config.cases = t;
    }
    positive("level", config.level)?;
    if config.k_max < 2 || config.samples == 0 || config.level >= 1.0 {
        return Err(CliError::Config("need k_max ≥ 2, samples ≥ 1 and level < 1".into()));
    }
    let seed = postconc::SeedSpec::new(master_seed(common, None));
    log("verify-dirichlet", format_args!("{} cases × {} samples", config.cases, config.samples));
    let mut rng = seed.child(0).rng();
    let cases = (0..config.cases)
        .map(|_| random_projection_case(&mut rng, config.k_max))
        .collect::<postconc::Result<Vec<_>>>()?;
    let reports = cases
        .par_iter()
        .enumerate()
        .map(|(i, (prior, subset))| {
            projection_ks_check(prior, subset, config.samples, config.level, seed.child(1 + i as u64))
        })
        .collect::<postconc::Result<Vec<_>>>()?;

    let mut table = Table::new(&[
        "case", "k", "alphas", "subset", "beta_alpha", "beta_beta", "ks_statistic", "critical_value", "passed",
    ]);
    let mut failures = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        if !r.passed {
            failures.push(format!(
                "case {i}: KS {} ≥ critical value {} for subset {:?} of {:?}",
                r.ks_statistic, r.critical_value, r.subset, r.alphas
            ));
        }
        table.push(vec![
            i.into(), r.alphas.len().into(), joined(&r.alphas).into(), joined(&r.subset).into(),
            r.beta_alpha.into(), r.beta_beta.into(), r.ks_statistic.into(), r.critical_value.into(),
            r.passed.into(),
        ]);
    }
    let max_ks_ratio = reports.iter().map(|r| r.ks_statistic / r.critical_value).fold(0.0, f64::max);
    let summary = json!({
        "cases": reports.len(),
        "failed_cases": failures.len(),
        "max_ks_over_critical": max_ks_ratio,
        "samples_per_case": config.samples,
        "level": config.level,
    });
    Ok(Report {
        command: "verify-dirichlet",
        config: to_value(&config)?,
        master_seed: seed.master_seed,
        summary,
        table,
        failures,
        extra_files: Vec::new(),
    })
}
