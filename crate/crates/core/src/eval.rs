//! Leave-one-type-out evaluation.
//!
//! Every building type in turn is held out as unknown. Three methods predict
//! its test instances from the remaining types' training data:
//!
//! * **Baseline**: one tuned regressor per metric on all known-type rows pooled,
//!   class identity ignored.
//! * **ZSL_d**: zero-shot ensemble with the expert signature matrix.
//! * **ZSL_s**: the same ensemble refactored through SVD signatures.
//!
//! Accuracy is the clipped relative accuracy
//! `mean_i max(0, 1 − |ŷ_i − y_i| / max(|y_i|, ε)) · 100` with `ε = 1e-9`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{fit_baseline, GbrtModel, Hyperparams, LogisticOptions, RegressorConfig};
use crate::seed::child_seed;
use crate::tabular::{split_indices, unscaled_design, Dataset};
use crate::zsl::{
    fit_compatibility, fit_type_regressors, svd_signature_matrix, ScoredPrediction,
    SignatureMatrix, TypeRegressors, ZslConfig, ZslEnsemble,
};

pub const ACCURACY_EPS: f64 = 1e-9;
pub const REPORT_VERSION: u32 = 1;

/// Clipped relative accuracy in percent.
pub fn accuracy(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} actual values",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Empty("accuracy of zero instances".into()));
    }
    if actual.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("actual values".into()));
    }
    let total: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (1.0 - (p - a).abs() / a.abs().max(ACCURACY_EPS)).max(0.0))
        .sum();
    Ok(100.0 * total / actual.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Fraction of each type's records used for training.
    pub ratio: f64,
    pub seed: u64,
    /// Closest types to average; `None` uses every known type.
    pub k: Option<usize>,
    pub logistic: LogisticOptions,
    pub grid: Vec<Hyperparams>,
    pub folds: usize,
    /// Singular values per SVD signature column; `None` matches the expert
    /// matrix's parameter count.
    pub svd_params: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ratio: 0.9,
            seed: 0,
            k: None,
            logistic: LogisticOptions::default(),
            grid: crate::models::default_grid(),
            folds: 5,
            svd_params: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Baseline,
    ZslD,
    ZslS,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Baseline, Method::ZslD, Method::ZslS];

    pub fn label(self) -> &'static str {
        match self {
            Method::Baseline => "Base",
            Method::ZslD => "ZSL_d",
            Method::ZslS => "ZSL_s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodAccuracy {
    pub baseline: f64,
    pub zsl_d: f64,
    pub zsl_s: f64,
}

impl MethodAccuracy {
    pub fn get(&self, m: Method) -> f64 {
        match m {
            Method::Baseline => self.baseline,
            Method::ZslD => self.zsl_d,
            Method::ZslS => self.zsl_s,
        }
    }

    /// Every method attaining the maximum.
    pub fn best(&self) -> Vec<Method> {
        let max = Method::ALL
            .iter()
            .map(|&m| self.get(m))
            .fold(f64::NEG_INFINITY, f64::max);
        Method::ALL
            .into_iter()
            .filter(|&m| self.get(m) == max)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub unknown_type: String,
    /// All records of the type, train and test.
    pub records: usize,
    pub test_records: usize,
    /// One entry per metric, in report metric order.
    pub metrics: Vec<MethodAccuracy>,
    pub average: MethodAccuracy,
    /// Best methods per metric.
    pub best: Vec<Vec<Method>>,
    pub best_average: Vec<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub metrics: Vec<String>,
    pub k: usize,
    pub config: EvalConfig,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.version != REPORT_VERSION {
            return Err(Error::Version {
                kind: "evaluation report",
                found: header.version,
                expected: REPORT_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }

    /// Column-aligned table; the best method per group is starred.
    pub fn to_table(&self) -> String {
        const CELL: usize = 8;
        let mut groups: Vec<String> = self.metrics.clone();
        groups.push("Avg.".into());
        let group_width = 3 * CELL;
        let mut out = String::new();
        let _ = write!(out, "{:<8}{:>9}", "Unknown", "Records");
        for g in &groups {
            let _ = write!(out, " |{g:^group_width$}");
        }
        out.push('\n');
        let _ = write!(out, "{:<8}{:>9}", "type", "");
        for _ in &groups {
            out.push_str(" |");
            for m in Method::ALL {
                let _ = write!(out, "{:>CELL$}", m.label());
            }
        }
        out.push('\n');
        let rule_len = out.lines().next().map_or(0, str::len);
        out.push_str(&"-".repeat(rule_len));
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<8}{:>9}", row.unknown_type, row.records);
            let cells = row
                .metrics
                .iter()
                .zip(&row.best)
                .chain(std::iter::once((&row.average, &row.best_average)));
            for (acc, best) in cells {
                out.push_str(" |");
                for m in Method::ALL {
                    let mark = if best.contains(&m) { "*" } else { " " };
                    let _ = write!(out, "{:>7.2}{mark}", acc.get(m));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Predictions behind one report row.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub unknown_type: String,
    /// Per metric, the held-out test values.
    pub actual: Vec<Vec<f64>>,
    /// Per metric, baseline predictions.
    pub baseline: Vec<Vec<f64>>,
    pub zsl_d: Vec<ScoredPrediction>,
    pub zsl_s: Vec<ScoredPrediction>,
    /// `‖V·S − W‖_F / ‖W‖_F` for the expert and SVD signatures.
    pub factor_residual_d: f64,
    pub factor_residual_s: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub folds: Vec<FoldOutcome>,
}

pub fn leave_one_type_out(
    dataset: &Dataset,
    expert: &SignatureMatrix,
    config: &EvalConfig,
) -> Result<EvalReport> {
    run_leave_one_type_out(dataset, expert, config).map(|e| e.report)
}

/// Full evaluation, keeping every prediction.
///
/// One stratified split is drawn for the whole run, so all three methods see
/// the same partition. Per-type regressors depend only on their own type's
/// training rows and are fitted once and shared by every fold.
pub fn run_leave_one_type_out(
    dataset: &Dataset,
    expert: &SignatureMatrix,
    config: &EvalConfig,
) -> Result<Evaluation> {
    let schema = dataset.schema();
    let counts = dataset.class_counts();
    let types: Vec<String> = schema
        .classes()
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(t, _)| t.clone())
        .collect();
    if types.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "leave-one-type-out needs at least 3 building types, data has {}",
            types.len()
        )));
    }
    for t in &types {
        expert.type_index(t)?;
    }
    let expert_order: Vec<String> = expert
        .types()
        .iter()
        .filter(|t| types.contains(t))
        .cloned()
        .collect();
    let expert = expert.restrict(&expert_order)?;
    let n_params = config.svd_params.unwrap_or(expert.parameters().len());
    let k = config.k.unwrap_or(types.len() - 1);
    if k == 0 || k > types.len() - 1 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            types.len() - 1
        )));
    }

    let (train_idx, test_idx) = split_indices(dataset, config.ratio, config.seed)?;
    let train_all = dataset.subset(&train_idx);
    let test_all = dataset.subset(&test_idx);
    let regressor_cfg = RegressorConfig {
        grid: config.grid.clone(),
        folds: config.folds,
        seed: child_seed(config.seed, "regressors"),
    };
    let bank = fit_type_regressors(&train_all, &expert_order, &regressor_cfg)?;
    let zsl_config = ZslConfig {
        logistic: config.logistic,
        regressors: regressor_cfg.clone(),
        default_k: Some(k),
    };

    let metrics = schema.target_metrics().to_vec();
    let mut rows = Vec::with_capacity(types.len());
    let mut folds = Vec::with_capacity(types.len());
    for b in &types {
        let unknown = vec![b.clone()];
        let b_class = schema.class_index(b)?;
        let known_train = train_all.subset(
            &(0..train_all.len())
                .filter(|&i| train_all.records()[i].class != b_class)
                .collect::<Vec<_>>(),
        );
        let test_b = test_all.of_class(b)?;
        if test_b.is_empty() {
            return Err(Error::Empty(format!("no test instances of type `{b}`")));
        }

        let compat = fit_compatibility(&known_train, &expert, &unknown, &config.logistic)?;
        let regressors: Vec<TypeRegressors> =
            bank.iter().filter(|r| r.type_id != *b).cloned().collect();
        let ens_d = ZslEnsemble::assemble(
            compat,
            regressors,
            expert.clone(),
            unknown.clone(),
            zsl_config.clone(),
        )?;
        // SVD signatures from training-split features only; the held-out
        // type contributes its own features but never its targets.
        let svd_sigs =
            svd_signature_matrix(&train_all, &ens_d.compat.encoder, &expert_order, n_params)?;
        let ens_s = ens_d.with_signatures(svd_sigs.clone())?;

        let pred_d = ens_d.predict(&test_b, b, k)?;
        let pred_s = ens_s.predict(&test_b, b, k)?;
        let x_test = unscaled_design(&test_b);

        let mut metric_acc = Vec::with_capacity(metrics.len());
        let mut actual_all = Vec::with_capacity(metrics.len());
        let mut baseline_all = Vec::with_capacity(metrics.len());
        for (m, metric) in metrics.iter().enumerate() {
            let cfg = RegressorConfig {
                seed: child_seed(config.seed, &format!("baseline/{b}/{metric}")),
                ..regressor_cfg.clone()
            };
            let baseline: GbrtModel = fit_baseline(&known_train, metric, &cfg)?;
            let base_pred = baseline.predict(&x_test)?;
            let actual = test_b.target_column(metric)?;
            let d: Vec<f64> = pred_d.iter().map(|p| p.values[m]).collect();
            let s: Vec<f64> = pred_s.iter().map(|p| p.values[m]).collect();
            metric_acc.push(MethodAccuracy {
                baseline: accuracy(&base_pred, &actual)?,
                zsl_d: accuracy(&d, &actual)?,
                zsl_s: accuracy(&s, &actual)?,
            });
            actual_all.push(actual);
            baseline_all.push(base_pred);
        }
        let mean_of =
            |m: Method| metric_acc.iter().map(|a| a.get(m)).sum::<f64>() / metric_acc.len() as f64;
        let average = MethodAccuracy {
            baseline: mean_of(Method::Baseline),
            zsl_d: mean_of(Method::ZslD),
            zsl_s: mean_of(Method::ZslS),
        };
        rows.push(ReportRow {
            unknown_type: b.clone(),
            records: counts[b_class],
            test_records: test_b.len(),
            best: metric_acc.iter().map(MethodAccuracy::best).collect(),
            best_average: average.best(),
            metrics: metric_acc,
            average,
        });
        folds.push(FoldOutcome {
            unknown_type: b.clone(),
            actual: actual_all,
            baseline: baseline_all,
            factor_residual_d: ens_d.compat.factor_residual(&expert)?,
            factor_residual_s: ens_s.compat.factor_residual(&svd_sigs)?,
            zsl_d: pred_d,
            zsl_s: pred_s,
        });
    }

    Ok(Evaluation {
        report: EvalReport {
            version: REPORT_VERSION,
            metrics,
            k,
            config: config.clone(),
            rows,
        },
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[3.0, -2.0], &[3.0, -2.0]).unwrap(), 100.0);
        assert!((accuracy(&[90.0], &[100.0]).unwrap() - 90.0).abs() < 1e-12);
        assert_eq!(accuracy(&[250.0], &[100.0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0.0], &[0.0]).unwrap(), 100.0);
        assert!(accuracy(&[1.0], &[1.0, 2.0]).is_err());
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1.0], &[f64::NAN]).is_err());
    }

    #[test]
    fn best_includes_ties() {
        let a = MethodAccuracy {
            baseline: 80.0,
            zsl_d: 85.0,
            zsl_s: 85.0,
        };
        assert_eq!(a.best(), vec![Method::ZslD, Method::ZslS]);
    }
}
