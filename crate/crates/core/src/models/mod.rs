//! Learned model families: multinomial logistic regression (the class
//! compatibility matrix) and gradient-boosted regression trees (per-type
//! regressors and the class-agnostic baseline).

pub mod gbrt;
pub mod logistic;
pub mod tune;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use gbrt::{default_grid, fit_gbrt, GbrtModel, Hyperparams, TreeNode};
pub use logistic::{fit_logistic, LogisticModel, LogisticOptions};
pub use tune::{kfold_indices, tune_gbrt, TuneResult};

use crate::error::{Error, Result};
use crate::tabular::{unscaled_design, Dataset};

/// Version written into every persisted model artifact.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    model: T,
}

/// Serializes `model` inside a `{format, version, model}` envelope.
pub fn to_versioned_json<T: Serialize>(format: &str, model: &T) -> Result<String> {
    let env = Envelope {
        format: format.to_string(),
        version: FORMAT_VERSION,
        model,
    };
    Ok(serde_json::to_string_pretty(&env)?)
}

/// Parses an envelope written by [`to_versioned_json`], rejecting other
/// formats and unknown versions.
pub fn from_versioned_json<T: DeserializeOwned>(format: &'static str, text: &str) -> Result<T> {
    #[derive(Deserialize)]
    struct Header {
        format: String,
        version: u32,
    }
    let header: Header = serde_json::from_str(text)?;
    if header.format != format {
        return Err(Error::InvalidArgument(format!(
            "expected a `{format}` artifact, found `{}`",
            header.format
        )));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::Version {
            kind: format,
            found: header.version,
            expected: FORMAT_VERSION,
        });
    }
    let env: Envelope<T> = serde_json::from_str(text)?;
    Ok(env.model)
}

/// Tuning knobs shared by every boosted regressor in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorConfig {
    pub grid: Vec<Hyperparams>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig {
            grid: default_grid(),
            folds: 5,
            seed: 0,
        }
    }
}

/// Tunes on `cfg.grid` with k-fold CV, then refits the winner on all rows.
pub fn fit_tuned(
    x: &crate::linalg::Matrix,
    y: &[f64],
    cfg: &RegressorConfig,
) -> Result<(GbrtModel, Hyperparams)> {
    let tuned = tune_gbrt(x, y, &cfg.grid, cfg.folds, cfg.seed)?;
    Ok((fit_gbrt(x, y, &tuned.best)?, tuned.best))
}

/// Single tuned regressor over every known-type instance pooled together.
/// Class labels are never part of the design matrix.
pub fn fit_baseline(train: &Dataset, metric: &str, cfg: &RegressorConfig) -> Result<GbrtModel> {
    let y = train.target_column(metric)?;
    let covered = train.class_counts().iter().filter(|&&c| c > 0).count();
    if covered < 2 {
        return Err(Error::InvalidArgument(format!(
            "baseline needs at least two known classes, training data covers {covered}"
        )));
    }
    let x = unscaled_design(train);
    fit_tuned(&x, &y, cfg).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_rejects_unknown_version_and_format() {
        let model = GbrtModel::constant(2, 4.0);
        let text = to_versioned_json("gbrt", &model).unwrap();
        let back: GbrtModel = from_versioned_json("gbrt", &text).unwrap();
        assert_eq!(back, model);

        let bumped = text.replace("\"version\": 1", "\"version\": 2");
        match from_versioned_json::<GbrtModel>("gbrt", &bumped) {
            Err(Error::Version { found: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(from_versioned_json::<GbrtModel>("logistic", &text).is_err());
    }
}
