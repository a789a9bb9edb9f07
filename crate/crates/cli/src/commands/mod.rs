pub mod beta;
pub mod chi;
pub mod conjectures;
pub mod dirichlet;
pub mod game;
pub mod lemmas;
pub mod martingale;

use serde::Serialize;
use serde_json::Value;

use crate::{CliError, CommonArgs, DEFAULT_SEED};

/// The Beta sweep grid for both parameters.
pub const BETA_GRID: [f64; 9] = [0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0];

pub(crate) fn master_seed(common: &CommonArgs, from_config: Option<u64>) -> u64 {
    common.seed.or(from_config).unwrap_or(DEFAULT_SEED)
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Run(e.to_string()))
}

pub(crate) fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn joined<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}
