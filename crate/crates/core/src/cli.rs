//! Command-line surface: `generate`, `train`, `predict`, `evaluate`.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::eval::{run_leave_one_type_out, EvalConfig};
use crate::fsutil::write_atomic;
use crate::models::{default_grid, LogisticOptions, RegressorConfig};
use crate::synthgen::{
    default_expert_signatures, default_profiles, generate, load_profiles, save_profiles,
};
use crate::tabular::{load_csv, save_csv, Dataset, FeatureSchema};
use crate::zsl::{train, SignatureMatrix, ZslConfig, ZslEnsemble};

#[derive(Debug, Parser)]
#[command(
    name = "zsl-energy",
    version,
    about = "Zero-shot energy prediction for unseen building types"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic dataset with its schema and expert signatures.
    Generate(GenerateArgs),
    /// Train a zero-shot ensemble and persist it to a directory.
    Train(TrainArgs),
    /// Predict metrics for an unknown type, one JSON object per input row.
    Predict(PredictArgs),
    /// Leave-one-type-out comparison of Baseline, ZSL_d and ZSL_s.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Profiles JSON; the five default building types when omitted.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Records per building type.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for data.csv, data.schema.json and signatures.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema sidecar; defaults to `<data stem>.schema.json` next to the CSV.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub signatures: PathBuf,
    /// Building type(s) to treat as unknown; repeatable.
    #[arg(long = "unknown", required = true)]
    pub unknown: Vec<String>,
    /// Default number of closest types stored with the ensemble.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = LogisticOptions::default().l2)]
    pub l2: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Ensemble output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Directory written by `train`.
    #[arg(long)]
    pub ensemble: PathBuf,
    /// Test CSV; every row is treated as an instance of the unknown type.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Unknown type to predict for; required when the ensemble has several.
    #[arg(long = "type")]
    pub unknown_type: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Accepted for uniformity; prediction is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON-lines output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub signatures: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    pub ratio: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = LogisticOptions::default().l2)]
    pub l2: f64,
    /// Singular values per SVD signature; the expert parameter count by default.
    #[arg(long)]
    pub svd_params: Option<usize>,
    /// Machine-readable report.
    #[arg(long)]
    pub out_json: PathBuf,
    /// Text table; printed to stdout either way.
    #[arg(long)]
    pub out_text: Option<PathBuf>,
}

pub const DATA_FILE: &str = "data.csv";
pub const SCHEMA_FILE: &str = "data.schema.json";
pub const SIGNATURES_FILE: &str = "signatures.json";
pub const PROFILES_FILE: &str = "profiles.json";

/// Schema sidecar path for a CSV: `dir/stem.schema.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.schema.json"))
}

fn load_dataset(args: &DataArgs) -> Result<Dataset> {
    let schema_path = args
        .schema
        .clone()
        .unwrap_or_else(|| sidecar_path(&args.data));
    let schema = FeatureSchema::load_json(&schema_path)?;
    load_csv(&args.data, &schema)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => run_generate(&a),
        Command::Train(a) => run_train(&a),
        Command::Predict(a) => run_predict(&a),
        Command::Evaluate(a) => run_evaluate(&a),
    }
}

pub fn run_generate(args: &GenerateArgs) -> Result<()> {
    let (profiles, signatures) = match &args.profiles {
        Some(path) => (load_profiles(path)?, None),
        None => (default_profiles(), Some(default_expert_signatures())),
    };
    let data = generate(&profiles, args.n, args.seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    save_csv(&data, &args.out.join(DATA_FILE))?;
    data.schema().save_json(&args.out.join(SCHEMA_FILE))?;
    save_profiles(&profiles, &args.out.join(PROFILES_FILE))?;
    if let Some(sig) = signatures {
        sig.save_json(&args.out.join(SIGNATURES_FILE))?;
    }
    eprintln!(
        "wrote {} records ({} types) to {}",
        data.len(),
        profiles.len(),
        args.out.display()
    );
    Ok(())
}

pub fn run_train(args: &TrainArgs) -> Result<()> {
    let data = load_dataset(&args.data)?;
    let signatures = SignatureMatrix::load_json(&args.signatures)?;
    let unknown_classes: Vec<usize> = args
        .unknown
        .iter()
        .filter_map(|u| data.schema().class_index(u).ok())
        .collect();
    let keep: Vec<usize> = (0..data.len())
        .filter(|&i| !unknown_classes.contains(&data.records()[i].class))
        .collect();
    let dropped = data.len() - keep.len();
    if dropped > 0 {
        eprintln!("ignoring {dropped} rows labelled with an unknown type");
    }
    let data = data.subset(&keep);
    let config = ZslConfig {
        logistic: LogisticOptions {
            l2: args.l2,
            ..LogisticOptions::default()
        },
        regressors: RegressorConfig {
            grid: default_grid(),
            folds: args.folds,
            seed: args.seed,
        },
        default_k: args.k,
    };
    let ensemble = train(&data, &signatures, &args.unknown, &config)?;
    ensemble.save(&args.out)?;
    eprintln!(
        "trained on {} rows of {:?}; unknown {:?}; saved to {}",
        data.len(),
        ensemble.known_types(),
        ensemble.unknown_types,
        args.out.display()
    );
    Ok(())
}

pub fn run_predict(args: &PredictArgs) -> Result<()> {
    let ensemble = ZslEnsemble::load(&args.ensemble)?;
    let b_i = match (&args.unknown_type, ensemble.unknown_types.as_slice()) {
        (Some(t), _) => t.clone(),
        (None, [only]) => only.clone(),
        (None, many) => {
            return Err(Error::InvalidArgument(format!(
                "ensemble has several unknown types {many:?}; pass --type"
            )))
        }
    };
    let schema = match &args.schema {
        Some(p) => FeatureSchema::load_json(p)?,
        None => {
            let side = sidecar_path(&args.data);
            if side.exists() {
                FeatureSchema::load_json(&side)?
            } else {
                ensemble.compat.encoder.schema().clone()
            }
        }
    };
    let test = load_csv(&args.data, &schema)?;
    let k = ensemble.resolve_k(args.k);
    let preds = ensemble.predict(&test, &b_i, k)?;
    let metrics = ensemble.metrics();
    let mut out = Vec::new();
    for (row, p) in preds.iter().enumerate() {
        let by_metric = |vals: &[f64]| -> Map<String, Value> {
            metrics
                .iter()
                .zip(vals)
                .map(|(m, v)| (m.clone(), json!(v)))
                .collect()
        };
        let closest: Vec<Value> = p
            .ranked
            .iter()
            .zip(&p.weights)
            .map(|(r, w)| {
                json!({
                    "type": r.type_id,
                    "score": r.score,
                    "weight": w,
                    "e": by_metric(&r.predictions),
                })
            })
            .collect();
        let line = json!({
            "row": row + 1,
            "unknown_type": b_i,
            "k": k,
            "closest": closest,
            "P": by_metric(&p.values),
        });
        serde_json::to_writer(&mut out, &line)?;
        out.push(b'\n');
    }
    match &args.out {
        Some(path) => write_atomic(path, &out),
        None => std::io::stdout()
            .write_all(&out)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

pub fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let data = load_dataset(&args.data)?;
    let signatures = SignatureMatrix::load_json(&args.signatures)?;
    let config = EvalConfig {
        ratio: args.ratio,
        seed: args.seed,
        k: args.k,
        logistic: LogisticOptions {
            l2: args.l2,
            ..LogisticOptions::default()
        },
        grid: default_grid(),
        folds: args.folds,
        svd_params: args.svd_params,
    };
    let evaluation = run_leave_one_type_out(&data, &signatures, &config)?;
    let report = evaluation.report;
    write_atomic(&args.out_json, report.to_json()?.as_bytes())?;
    let table = report.to_table();
    if let Some(path) = &args.out_text {
        write_atomic(path, table.as_bytes())?;
    }
    print!("{table}");
    Ok(())
}
