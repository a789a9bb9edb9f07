use postconc::game::{estimate_failure_rate, run_game, AnalystKind, CuratorKind, GameConfig, MIN_TRIALS};
use postconc::{DirichletParams, SeedSpec};
use serde_json::json;

use super::{master_seed, to_value};
use crate::report::{to_json_bytes, Report, Table};
use crate::{log, CliError, CommonArgs};

pub const DEFAULT_TRIALS: u64 = 2000;

/// k = 10 under a flat prior, ε = 0.1, δ = 0.05, q = 1000, with n left to
/// the sample-size search.
pub fn default_config() -> GameConfig {
    GameConfig {
        k: 10,
        prior: DirichletParams::symmetric(10, 1.0).expect("valid prior"),
        n: None,
        q: 1000,
        epsilon: 0.1,
        delta: 0.05,
        analyst: AnalystKind::AdaptiveCorrelator,
        curator: CuratorKind::PosteriorMean,
        trials: None,
        seed: None,
    }
}

pub fn run(common: &CommonArgs, transcripts: Option<u64>) -> Result<Report, CliError> {
    let mut config = match &common.config {
        None => default_config(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<GameConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let seed = SeedSpec::new(master_seed(common, config.seed));
    let trials = common.trials.or(config.trials).unwrap_or(DEFAULT_TRIALS);
    if trials < MIN_TRIALS {
        return Err(CliError::Config(format!("the game needs at least {MIN_TRIALS} trials")));
    }
    config.n = Some(config.resolved_n());
    config.trials = Some(trials);
    config.seed = Some(seed.master_seed);
    log(
        "game",
        format_args!(
            "{:?} vs {:?}: n = {}, q = {}, {trials} trials",
            config.analyst,
            config.curator,
            config.resolved_n(),
            config.q
        ),
    );
    let est = estimate_failure_rate(&config, trials, seed)?;

    let mut table = Table::new(&["trial", "max_error", "win"]);
    for t in &est.per_trial {
        table.push(vec![t.trial.into(), t.max_error.into(), t.win.into()]);
    }
    let mut extra_files = Vec::new();
    for t in 0..transcripts.unwrap_or(0).min(trials) {
        let transcript = run_game(&config, seed.child(t))?;
        let bytes = to_json_bytes(&transcript).map_err(|e| CliError::Run(e.to_string()))?;
        extra_files.push((format!("transcripts/game-trial-{t:05}.json"), bytes));
    }
    let (lo, hi) = est.wilson_interval;
    let mut failures = Vec::new();
    if lo > config.delta {
        failures.push(format!(
            "failure rate {} has Wilson lower bound {lo} above δ = {}",
            est.rate, config.delta
        ));
    }
    let summary = json!({
        "n": est.n,
        "trials": est.trials,
        "failures": est.failures,
        "rate": est.rate,
        "wilson_lower": lo,
        "wilson_upper": hi,
        "delta": config.delta,
        "max_error": est.per_trial.iter().map(|t| t.max_error).fold(0.0, f64::max),
    });
    Ok(Report {
        command: "game",
        config: to_value(&config)?,
        master_seed: seed.master_seed,
        summary,
        table,
        failures,
        extra_files,
    })
}
