use postconc::subgaussian::chi_checks;
use postconc::SeedSpec;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{master_seed, to_value};
use crate::report::{Report, Table};
use crate::{log, CliError, CommonArgs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChiConfig {
    pub k_max: u32,
    pub j_max: usize,
    pub samples: usize,
}

impl Default for ChiConfig {
    fn default() -> Self {
        Self {
            k_max: 20,
            j_max: 100,
            samples: 1_000_000,
        }
    }
}

pub fn run(common: &CommonArgs) -> Result<Report, CliError> {
    let mut config: ChiConfig = crate::load_config(common.config.as_deref())?;
    if let Some(t) = common.trials {
        config.samples = t as usize;
    }
    if config.k_max == 0 || config.samples < 2 {
        return Err(CliError::Config("need k_max ≥ 1 and at least two samples".into()));
    }
    let seed = SeedSpec::new(master_seed(common, None));
    let mut table = Table::new(&[
        "k", "epsilon", "empirical_tail", "bound", "standard_error", "tail_ok", "recurrence_max_rel_err",
        "mean_squared", "mean_squared_ok", "criterion_passed",
    ]);
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    for k in 1..=config.k_max {
        log("verify-chi", format_args!("k = {k}"));
        let r = chi_checks(k, config.j_max, config.samples, seed.child(u64::from(k)))?;
        if !r.passed {
            failures.push(format!(
                "k = {k}: recurrence err {}, E[X]² ok {}, criterion {}, tails ok {}",
                r.recurrence_max_rel_err,
                r.mean_squared_ok,
                r.criterion_passed,
                r.tails.iter().all(|t| t.passed)
            ));
        }
        for t in &r.tails {
            table.push(vec![
                k.into(), t.epsilon.into(), t.empirical.into(), t.bound.into(), t.standard_error.into(),
                t.passed.into(), r.recurrence_max_rel_err.into(), r.mean_squared.into(),
                r.mean_squared_ok.into(), r.criterion_passed.into(),
            ]);
        }
        reports.push(r);
    }
    let summary = json!({
        "dimensions": reports.len(),
        "max_recurrence_rel_err": reports.iter().map(|r| r.recurrence_max_rel_err).fold(0.0, f64::max),
        "all_criteria_passed": reports.iter().all(|r| r.criterion_passed),
        "all_tails_passed": reports.iter().all(|r| r.tails.iter().all(|t| t.passed)),
        "samples_per_dimension": config.samples,
    });
    Ok(Report {
        command: "verify-chi",
        config: to_value(&config)?,
        master_seed: seed.master_seed,
        summary,
        table,
        failures,
        extra_files: Vec::new(),
    })
}
