//! Zero-shot regression through a signature matrix.
//!
//! Training fits a multinomial logistic model `W` (encoded features × known
//! types), drops the unknown types' columns from the signature matrix to get
//! `S`, and solves `V` with `V·S ≈ W`. One boosted regressor per known type
//! and metric is fitted on that type's instances alone.
//!
//! Inference for an unknown type `b` rebuilds `S'` from the known columns
//! plus `b`'s column (appended last), scores every test instance with
//! `Y' = [X', 1]·V·S'`, ignores `b`'s own score, keeps the `k` best known
//! types and averages their regressors' predictions with softmax weights
//! over those scores.

mod signature;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use signature::{
    svd_signature, svd_signature_matrix, SignatureMatrix, SignatureSource, SIGNATURE_FILE_VERSION,
};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::linalg::{factor_residual, softmax, solve_right_factor, Matrix};
use crate::models::{
    fit_logistic, fit_tuned, from_versioned_json, to_versioned_json, GbrtModel, LogisticModel,
    LogisticOptions, RegressorConfig,
};
use crate::seed::child_seed;
use crate::tabular::{Dataset, Encoder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZslConfig {
    pub logistic: LogisticOptions,
    pub regressors: RegressorConfig,
    /// `k` used when a caller does not pass one. `None` means every known type.
    pub default_k: Option<usize>,
}

impl Default for ZslConfig {
    fn default() -> Self {
        ZslConfig {
            logistic: LogisticOptions::default(),
            regressors: RegressorConfig::default(),
            default_k: None,
        }
    }
}

/// The factor `V` together with everything needed to score new instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityModel {
    /// Logistic fit over the known types (its `class_order`).
    pub logistic: LogisticModel,
    /// `(d + 1) × |P|`, last row from the bias feature.
    pub v: Matrix,
    pub encoder: Encoder,
}

impl CompatibilityModel {
    pub fn known_types(&self) -> &[String] {
        &self.logistic.class_order
    }

    /// Recomputes `V` for another signature matrix, keeping `W` and the
    /// encoder.
    pub fn refactor(&self, signatures: &SignatureMatrix) -> Result<CompatibilityModel> {
        let s = signatures.restrict(self.known_types())?;
        Ok(CompatibilityModel {
            logistic: self.logistic.clone(),
            v: solve_right_factor(&self.logistic.weights, s.values())?,
            encoder: self.encoder.clone(),
        })
    }

    /// `‖V·S − W‖_F / ‖W‖_F` for the known-type columns of `signatures`.
    pub fn factor_residual(&self, signatures: &SignatureMatrix) -> Result<f64> {
        let s = signatures.restrict(self.known_types())?;
        factor_residual(&self.v, s.values(), &self.logistic.weights)
    }
}

/// Fits `W` on the known types of `signatures` and factors it through them.
pub fn fit_compatibility(
    train: &Dataset,
    signatures: &SignatureMatrix,
    unknown_types: &[String],
    opts: &LogisticOptions,
) -> Result<CompatibilityModel> {
    let known = known_types(signatures, unknown_types)?;
    let classes = train.schema().classes();
    let mut present = vec![false; known.len()];
    let mut labels = Vec::with_capacity(train.len());
    for r in train.records() {
        let label = &classes[r.class];
        if unknown_types.contains(label) {
            return Err(Error::InvalidArgument(format!(
                "training data contains instances of unknown type `{label}`"
            )));
        }
        let pos = known.iter().position(|k| k == label).ok_or_else(|| {
            Error::Signature(format!("training type `{label}` has no signature column"))
        })?;
        present[pos] = true;
        labels.push(pos);
    }
    if let Some(missing) = known.iter().zip(&present).find(|(_, p)| !**p) {
        return Err(Error::InvalidArgument(format!(
            "known type `{}` has a signature but no training instances",
            missing.0
        )));
    }
    let all: Vec<usize> = (0..train.len()).collect();
    let encoder = Encoder::fit(train, &all)?;
    let x = encoder.transform(train)?.values;
    let logistic = fit_logistic(&x, &labels, known, opts)?;
    let s = signatures.drop_columns(unknown_types)?;
    let v = solve_right_factor(&logistic.weights, s.values())?;
    Ok(CompatibilityModel {
        logistic,
        v,
        encoder,
    })
}

fn known_types(signatures: &SignatureMatrix, unknown_types: &[String]) -> Result<Vec<String>> {
    for u in unknown_types {
        signatures.type_index(u)?;
    }
    let known: Vec<String> = signatures
        .types()
        .iter()
        .filter(|t| !unknown_types.contains(t))
        .cloned()
        .collect();
    if known.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two known types, signatures leave {}",
            known.len()
        )));
    }
    Ok(known)
}

/// Boosted regressors for one known type, one per target metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeRegressors {
    pub type_id: String,
    pub metrics: Vec<GbrtModel>,
}

/// Tunes and fits one regressor per (type, metric) on that type's rows.
///
/// The (type, metric) fit tunes with seed `child_seed(cfg.seed, "type/metric")`.
/// Regressors read the unscaled one-hot design, so they depend only on the
/// type's own rows.
pub fn fit_type_regressors(
    train: &Dataset,
    types: &[String],
    cfg: &RegressorConfig,
) -> Result<Vec<TypeRegressors>> {
    let mut out = Vec::with_capacity(types.len());
    for ty in types {
        let subset = train.of_class(ty)?;
        if subset.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "known type `{ty}` has no training instances"
            )));
        }
        let x = crate::tabular::unscaled_design(&subset);
        let mut models = Vec::new();
        for metric in train.schema().target_metrics() {
            let y = subset.target_column(metric)?;
            let tagged = RegressorConfig {
                seed: child_seed(cfg.seed, &format!("{ty}/{metric}")),
                ..cfg.clone()
            };
            models.push(fit_tuned(&x, &y, &tagged)?.0);
        }
        out.push(TypeRegressors {
            type_id: ty.clone(),
            metrics: models,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZslEnsemble {
    pub compat: CompatibilityModel,
    /// Ordered like `compat.known_types()`.
    pub regressors: Vec<TypeRegressors>,
    /// The full matrix over known and unknown types.
    pub signatures: SignatureMatrix,
    pub unknown_types: Vec<String>,
    pub config: ZslConfig,
}

/// Runs the full training procedure.
pub fn train(
    train_data: &Dataset,
    signatures: &SignatureMatrix,
    unknown_types: &[String],
    config: &ZslConfig,
) -> Result<ZslEnsemble> {
    let compat = fit_compatibility(train_data, signatures, unknown_types, &config.logistic)?;
    let regressors = fit_type_regressors(train_data, compat.known_types(), &config.regressors)?;
    ZslEnsemble::assemble(
        compat,
        regressors,
        signatures.clone(),
        unknown_types.to_vec(),
        config.clone(),
    )
}

/// Scores of every test instance against the known types and `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeScores {
    /// Known types in signature order, then `b_i`.
    pub types: Vec<String>,
    /// One row per instance, one column per entry of `types`.
    pub scores: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedType {
    pub type_id: String,
    pub score: f64,
    /// `e_j`: this type's regressor output per metric.
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    /// The `k` closest known types, best first.
    pub ranked: Vec<RankedType>,
    /// Softmax over the ranked scores.
    pub weights: Vec<f64>,
    /// Weighted average of the ranked predictions, per metric.
    pub values: Vec<f64>,
}

impl ZslEnsemble {
    /// Bundles trained parts, checking that regressors cover exactly the
    /// known types and every metric.
    pub fn assemble(
        compat: CompatibilityModel,
        regressors: Vec<TypeRegressors>,
        signatures: SignatureMatrix,
        unknown_types: Vec<String>,
        config: ZslConfig,
    ) -> Result<Self> {
        let known = known_types(&signatures, &unknown_types)?;
        if known != compat.known_types() {
            return Err(Error::InvalidArgument(format!(
                "compatibility model covers {:?}, signatures leave {:?}",
                compat.known_types(),
                known
            )));
        }
        if compat.v.cols() != signatures.parameters().len() {
            return Err(Error::Dimension(format!(
                "V has {} columns but the signature matrix has {} parameters",
                compat.v.cols(),
                signatures.parameters().len()
            )));
        }
        if compat.v.rows() != compat.encoder.width() + 1 {
            return Err(Error::Dimension(format!(
                "V has {} rows, encoder produces {} columns plus bias",
                compat.v.rows(),
                compat.encoder.width()
            )));
        }
        let ordered: Vec<&str> = regressors.iter().map(|r| r.type_id.as_str()).collect();
        if ordered != known.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument(format!(
                "regressors cover {ordered:?}, expected {known:?}"
            )));
        }
        let n_metrics = compat.encoder.schema().target_metrics().len();
        let width = compat.encoder.width();
        for r in &regressors {
            if r.metrics.len() != n_metrics {
                return Err(Error::InvalidArgument(format!(
                    "type `{}` has {} regressors for {n_metrics} metrics",
                    r.type_id,
                    r.metrics.len()
                )));
            }
            if let Some(m) = r.metrics.iter().find(|m| m.n_features != width) {
                return Err(Error::Dimension(format!(
                    "regressor for `{}` expects {} features, encoder yields {width}",
                    r.type_id, m.n_features
                )));
            }
        }
        Ok(ZslEnsemble {
            compat,
            regressors,
            signatures,
            unknown_types,
            config,
        })
    }

    pub fn known_types(&self) -> &[String] {
        self.compat.known_types()
    }

    pub fn metrics(&self) -> &[String] {
        self.compat.encoder.schema().target_metrics()
    }

    /// `k` when the caller gives none.
    pub fn resolve_k(&self, k: Option<usize>) -> usize {
        k.or(self.config.default_k)
            .unwrap_or(self.known_types().len())
    }

    /// Same ensemble with `V` recomputed for another signature matrix.
    pub fn with_signatures(&self, signatures: SignatureMatrix) -> Result<ZslEnsemble> {
        let compat = self.compat.refactor(&signatures)?;
        ZslEnsemble::assemble(
            compat,
            self.regressors.clone(),
            signatures,
            self.unknown_types.clone(),
            self.config.clone(),
        )
    }

    fn check_unknown(&self, b_i: &str) -> Result<()> {
        if !self.unknown_types.iter().any(|u| u == b_i) {
            return Err(Error::InvalidArgument(format!(
                "`{b_i}` is not an unknown type of this ensemble (unknown: {:?})",
                self.unknown_types
            )));
        }
        self.signatures.type_index(b_i)?;
        Ok(())
    }

    /// `Y' = [X', 1]·(V·S')` for standardized test features `x_prime`.
    pub fn score_types(&self, x_prime: &Matrix, b_i: &str) -> Result<TypeScores> {
        self.check_unknown(b_i)?;
        if x_prime.cols() != self.compat.encoder.width() {
            return Err(Error::Dimension(format!(
                "test matrix has {} columns, encoder yields {}",
                x_prime.cols(),
                self.compat.encoder.width()
            )));
        }
        let mut types = self.known_types().to_vec();
        types.push(b_i.to_string());
        let s_prime = self.signatures.restrict(&types)?;
        let w_prime = self.compat.v.matmul(s_prime.values())?;
        let scores = x_prime.with_ones_column().matmul(&w_prime)?;
        Ok(TypeScores { types, scores })
    }

    /// Zero-shot predictions for every instance of `test`, treated as type
    /// `b_i`. Only feature values are read from `test`.
    pub fn predict(&self, test: &Dataset, b_i: &str, k: usize) -> Result<Vec<ScoredPrediction>> {
        self.check_unknown(b_i)?;
        let n_known = self.known_types().len();
        if k == 0 || k > n_known {
            return Err(Error::InvalidArgument(format!(
                "k = {k} must lie in 1..={n_known}"
            )));
        }
        let x_scaled = self.compat.encoder.transform(test)?.values;
        let x_raw = self.compat.encoder.transform_unscaled(test)?;
        let scored = self.score_types(&x_scaled, b_i)?;
        let mut out = Vec::with_capacity(test.len());
        for r in 0..x_scaled.rows() {
            let top = k_closest(scored.scores.row(r), &scored.types, b_i, k)?;
            let raw_row = x_raw.row(r);
            let ranked: Vec<RankedType> = top
                .into_iter()
                .map(|(ty, score)| {
                    let pos = self.known_types().iter().position(|t| *t == ty).unwrap();
                    let predictions = self.regressors[pos]
                        .metrics
                        .iter()
                        .map(|m| m.predict_row(raw_row))
                        .collect();
                    RankedType {
                        type_id: ty,
                        score,
                        predictions,
                    }
                })
                .collect();
            out.push(combine(ranked));
        }
        Ok(out)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = EnsembleMeta {
            unknown_types: self.unknown_types.clone(),
            config: self.config.clone(),
        };
        write_text(
            &dir.join(COMPAT_FILE),
            to_versioned_json("compatibility", &self.compat)?,
        )?;
        write_text(
            &dir.join(REGRESSORS_FILE),
            to_versioned_json("regressors", &self.regressors)?,
        )?;
        self.signatures.save_json(&dir.join(SIGNATURES_FILE))?;
        write_text(
            &dir.join(CONFIG_FILE),
            to_versioned_json("ensemble", &meta)?,
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| fsutil::read_to_string(&dir.join(name));
        let compat: CompatibilityModel = from_versioned_json("compatibility", &read(COMPAT_FILE)?)?;
        let regressors: Vec<TypeRegressors> =
            from_versioned_json("regressors", &read(REGRESSORS_FILE)?)?;
        let signatures = SignatureMatrix::from_json(&read(SIGNATURES_FILE)?)?;
        let meta: EnsembleMeta = from_versioned_json("ensemble", &read(CONFIG_FILE)?)?;
        ZslEnsemble::assemble(
            compat,
            regressors,
            signatures,
            meta.unknown_types,
            meta.config,
        )
    }
}

pub const COMPAT_FILE: &str = "compatibility.json";
pub const REGRESSORS_FILE: &str = "regressors.json";
pub const SIGNATURES_FILE: &str = "signatures.json";
pub const CONFIG_FILE: &str = "ensemble.json";

#[derive(Serialize, Deserialize)]
struct EnsembleMeta {
    unknown_types: Vec<String>,
    config: ZslConfig,
}

fn write_text(path: &Path, mut text: String) -> Result<()> {
    text.push('\n');
    fsutil::write_atomic(path, text.as_bytes())
}

/// The `k` highest scores after removing `b_i`'s entry, best first. Equal
/// scores keep the order of `type_order`.
pub fn k_closest(
    score_row: &[f64],
    type_order: &[String],
    b_i: &str,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    if score_row.len() != type_order.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} types",
            score_row.len(),
            type_order.len()
        )));
    }
    let mut candidates: Vec<(usize, f64)> = type_order
        .iter()
        .zip(score_row)
        .enumerate()
        .filter(|(_, (t, _))| *t != b_i)
        .map(|(i, (_, &s))| (i, s))
        .collect();
    if k == 0 || k > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            candidates.len()
        )));
    }
    // stable: ties stay in type order
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(candidates
        .into_iter()
        .take(k)
        .map(|(i, s)| (type_order[i].clone(), s))
        .collect())
}

/// Softmax-weights the ranked types' predictions.
pub fn combine(ranked: Vec<RankedType>) -> ScoredPrediction {
    let scores: Vec<f64> = ranked.iter().map(|r| r.score).collect();
    let weights = softmax(&scores);
    let n_metrics = ranked.first().map_or(0, |r| r.predictions.len());
    let values = (0..n_metrics)
        .map(|m| {
            let mixed: f64 = ranked
                .iter()
                .zip(&weights)
                .map(|(r, w)| w * r.predictions[m])
                .sum();
            // weights sum to 1 only up to rounding; keep P inside [min e, max e]
            let (lo, hi) = ranked
                .iter()
                .map(|r| r.predictions[m])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                    (lo.min(e), hi.max(e))
                });
            mixed.clamp(lo, hi)
        })
        .collect();
    ScoredPrediction {
        ranked,
        weights,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn k_closest_breaks_ties_by_type_order() {
        let order = names(&["ED", "MU", "OF", "RS", "RL"]);
        let top = k_closest(&[0.2, 0.9, 0.9, 0.1, 5.0], &order, "RL", 2).unwrap();
        assert_eq!(top, vec![("MU".to_string(), 0.9), ("OF".to_string(), 0.9)]);

        let all = k_closest(&[0.2, 0.9, 0.8, 0.1, 5.0], &order, "RL", 4).unwrap();
        let ids: Vec<&str> = all.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(ids, ["MU", "OF", "ED", "RS"]);

        let one = k_closest(&[0.2, 0.3, 0.8, 0.1, 5.0], &order, "RL", 1).unwrap();
        assert_eq!(one[0].0, "OF");

        assert!(k_closest(&[0.0; 5], &order, "RL", 0).is_err());
        assert!(k_closest(&[0.0; 5], &order, "RL", 5).is_err());
    }

    #[test]
    fn combine_examples() {
        let r = |t: &str, s: f64, e: f64| RankedType {
            type_id: t.into(),
            score: s,
            predictions: vec![e],
        };
        let single = combine(vec![r("A", 7.0, 10.0)]);
        assert_eq!(single.values, vec![10.0]);
        let even = combine(vec![r("A", 0.3, 10.0), r("B", 0.3, 20.0)]);
        assert_eq!(even.values, vec![15.0]);
        let skew = combine(vec![r("A", 1.0, 10.0), r("B", 0.0, 20.0)]);
        assert!((skew.values[0] - 12.689_414_213_699_951).abs() < 1e-12);
    }
}
