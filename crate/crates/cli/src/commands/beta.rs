use postconc::subgaussian::beta::{beta_variance_proxy, conjecture_from_estimate, theorem_from_estimate};
use postconc::BetaParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{master_seed, positive, to_value, BETA_GRID};
use crate::report::{Report, Table};
use crate::{log, CliError, CommonArgs};

pub const LOWER_ABS_TOL: f64 = 1e-6;
pub const CONJECTURE_REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaSweepConfig {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Default for BetaSweepConfig {
    fn default() -> Self {
        Self {
            alphas: BETA_GRID.to_vec(),
            betas: BETA_GRID.to_vec(),
        }
    }
}

pub fn run(common: &CommonArgs) -> Result<Report, CliError> {
    let config: BetaSweepConfig = crate::load_config(common.config.as_deref())?;
    for &v in config.alphas.iter().chain(&config.betas) {
        positive("grid value", v)?;
    }
    let seed = master_seed(common, None);
    log("verify-beta", format_args!("{} grid points", config.alphas.len() * config.betas.len()));
    let points: Vec<(f64, f64)> = config
        .alphas
        .iter()
        .flat_map(|&a| config.betas.iter().map(move |&b| (a, b)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(a, b)| {
            let p = BetaParams::new(a, b)?;
            let est = beta_variance_proxy(&p)?;
            Ok((p.variance(), est.argmax_lambda, theorem_from_estimate(&p, &est), conjecture_from_estimate(&p, &est)))
        })
        .collect::<postconc::Result<Vec<_>>>()?;

    let mut table = Table::new(&[
        "alpha", "beta", "variance", "tau2_est", "argmax_lambda", "theorem_bound", "theorem_ratio",
        "conjecture_bound", "conjecture_ratio", "lower_ok", "theorem_ok", "conjecture_ok",
    ]);
    let mut failures = Vec::new();
    let (mut max_theorem, mut max_conjecture) = (0.0f64, 0.0f64);
    for (var, argmax, th, cj) in &rows {
        let lower_ok = th.tau2_est >= var - LOWER_ABS_TOL;
        let conj_ok = th.tau2_est <= cj.conj_bound * (1.0 + CONJECTURE_REL_TOL);
        max_theorem = max_theorem.max(th.ratio);
        max_conjecture = max_conjecture.max(cj.ratio);
        if !lower_ok {
            failures.push(format!("Beta({}, {}): tau2 {} below variance {}", th.alpha, th.beta, th.tau2_est, var));
        }
        if !th.passed {
            failures.push(format!("Beta({}, {}): tau2 {} above 1/(4(a+b)+2) = {}", th.alpha, th.beta, th.tau2_est, th.bound));
        }
        if !conj_ok {
            failures.push(format!("Beta({}, {}): tau2 {} above 1/(4(a+b+1)) = {}", th.alpha, th.beta, th.tau2_est, cj.conj_bound));
        }
        table.push(vec![
            th.alpha.into(), th.beta.into(), (*var).into(), th.tau2_est.into(), (*argmax).into(),
            th.bound.into(), th.ratio.into(), cj.conj_bound.into(), cj.ratio.into(),
            lower_ok.into(), th.passed.into(), conj_ok.into(),
        ]);
    }
    let summary = json!({
        "grid_points": rows.len(),
        "theorem_violations": rows.iter().filter(|r| !r.2.passed).count(),
        "max_theorem_ratio": max_theorem,
        "max_conjecture_ratio": max_conjecture,
        "lower_abs_tol": LOWER_ABS_TOL,
        "conjecture_rel_tol": CONJECTURE_REL_TOL,
    });
    Ok(Report {
        command: "verify-beta",
        config: to_value(&config)?,
        master_seed: seed,
        summary,
        table,
        failures,
        extra_files: Vec::new(),
    })
}
