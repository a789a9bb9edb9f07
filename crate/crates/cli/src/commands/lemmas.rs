use num_traits::ToPrimitive;
use postconc::dist::beta_moments;
use postconc::subgaussian::{raw_moment_criterion, technical_lemma_check, termwise_mgf_comparison};
use postconc::{BetaParams, BigRational, ExactBeta};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{master_seed, positive, to_value, BETA_GRID};
use crate::report::{Report, Table};
use crate::{log, CliError, CommonArgs};

pub const TERMWISE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub lemma_j_max: usize,
    pub criterion_j_max: usize,
    pub termwise_max_power: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            alphas: BETA_GRID.to_vec(),
            betas: BETA_GRID.to_vec(),
            lemma_j_max: 100,
            criterion_j_max: 200,
            termwise_max_power: 40,
        }
    }
}

/// The λ⁴ coefficients at Beta(1, 2) when the Gaussian exponent uses
/// σ² = 1/16, i.e. exp(λ²/(8(α+β+1))).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub alpha: u32,
    pub beta: u32,
    pub sigma2: String,
    pub power: usize,
    pub lhs: String,
    pub rhs: String,
    pub lhs_f64: f64,
    pub rhs_f64: f64,
    pub lhs_exceeds_rhs: bool,
}

pub fn lambda4_counterexample() -> CounterexampleReport {
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let p = ExactBeta::new(r(1, 1), r(2, 1)).expect("valid");
    let sigma2 = r(1, 16);
    let row = termwise_mgf_comparison(&p, &sigma2, 4).pop().expect("power 4");
    CounterexampleReport {
        alpha: 1,
        beta: 2,
        sigma2: sigma2.to_string(),
        power: row.power,
        lhs: row.lhs_coeff.to_string(),
        rhs: row.rhs_coeff.to_string(),
        lhs_f64: row.lhs_coeff.to_f64().unwrap_or(f64::NAN),
        rhs_f64: row.rhs_coeff.to_f64().unwrap_or(f64::NAN),
        lhs_exceeds_rhs: row.lhs_coeff > row.rhs_coeff,
    }
}

struct PointResult {
    alpha: f64,
    beta: f64,
    lemma_violations: usize,
    lemma_min_margin: f64,
    criterion_violations: usize,
    termwise_violations: usize,
}

pub fn run(common: &CommonArgs) -> Result<Report, CliError> {
    let config: LemmaConfig = crate::load_config(common.config.as_deref())?;
    for &v in config.alphas.iter().chain(&config.betas) {
        positive("grid value", v)?;
    }
    if config.criterion_j_max < 2 {
        return Err(CliError::Config("criterion_j_max must be at least 2".into()));
    }
    let seed = master_seed(common, None);
    let points: Vec<(f64, f64)> = config
        .alphas
        .iter()
        .flat_map(|&a| config.betas.iter().map(move |&b| (a, b)))
        .collect();
    log("lemma-checks", format_args!("{} grid points", points.len()));
    let results = points
        .par_iter()
        .map(|&(alpha, beta)| {
            let p = BetaParams::new(alpha, beta)?;
            let rows = technical_lemma_check(&p, config.lemma_j_max);
            let lemma_violations = rows.iter().filter(|r| !r.holds).count();
            let lemma_min_margin = rows.iter().map(|r| r.rhs - r.lhs).fold(f64::INFINITY, f64::min);
            let sigma2 = 1.0 / (2.0 * (p.total() + 1.0));
            let crit = raw_moment_criterion(&beta_moments(&p, config.criterion_j_max), &sigma2)?;
            let termwise_violations = termwise_mgf_comparison(&p, &sigma2, config.termwise_max_power)
                .iter()
                .filter(|r| !r.lhs_le_rhs(&TERMWISE_REL_TOL))
                .count();
            Ok(PointResult {
                alpha,
                beta,
                lemma_violations,
                lemma_min_margin,
                criterion_violations: crit.violations.len(),
                termwise_violations,
            })
        })
        .collect::<postconc::Result<Vec<_>>>()?;
    let counterexample = lambda4_counterexample();

    let mut table = Table::new(&[
        "alpha", "beta", "lemma_violations", "lemma_min_margin", "criterion_violations", "termwise_violations",
    ]);
    let mut failures = Vec::new();
    for r in &results {
        if r.lemma_violations + r.criterion_violations + r.termwise_violations > 0 {
            failures.push(format!(
                "Beta({}, {}): {} ratio-lemma, {} criterion, {} termwise violations",
                r.alpha, r.beta, r.lemma_violations, r.criterion_violations, r.termwise_violations
            ));
        }
        table.push(vec![
            r.alpha.into(), r.beta.into(), r.lemma_violations.into(), r.lemma_min_margin.into(),
            r.criterion_violations.into(), r.termwise_violations.into(),
        ]);
    }
    if !(counterexample.lhs == "1/360" && counterexample.rhs == "1363/497664" && counterexample.lhs_exceeds_rhs) {
        failures.push(format!("λ⁴ counterexample gave {} vs {}", counterexample.lhs, counterexample.rhs));
    }
    let summary = json!({
        "grid_points": results.len(),
        "lemma_violations": results.iter().map(|r| r.lemma_violations).sum::<usize>(),
        "criterion_violations": results.iter().map(|r| r.criterion_violations).sum::<usize>(),
        "termwise_violations": results.iter().map(|r| r.termwise_violations).sum::<usize>(),
        "lambda4_counterexample": to_value(&counterexample)?,
    });
    Ok(Report {
        command: "lemma-checks",
        config: to_value(&config)?,
        master_seed: seed,
        summary,
        table,
        failures,
        extra_files: Vec::new(),
    })
}
