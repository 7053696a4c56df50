//! Zero-shot regression of building energy metrics.
//!
//! A multinomial logistic model scores instances against the known building
//! types. Its weight matrix is factored through a signature matrix (parameters
//! by building types) so that a type with no training data can be placed in
//! the same score space. At inference the `k` highest-scoring known types are
//! selected, each one's gradient-boosted regressor predicts the metric, and
//! the predictions are averaged with softmax weights over the scores.
//!
//! Module map:
//!
//! * [`tabular`]: schema, records, one-hot/z-score encoding, stratified split, CSV.
//! * [`synthgen`]: parametric Monte-Carlo generator and the default five-type setup.
//! * [`linalg`]: dense matrix, SVD, right-factor least squares, softmax.
//! * [`models`]: multinomial logistic regression and squared-error GBRT with grid tuning.
//! * [`zsl`]: signature matrices, training, type scoring and zero-shot prediction.
//! * [`eval`]: accuracy metric and the leave-one-type-out harness.
//! * [`cli`]: the `zsl-energy` command line.

pub mod cli;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod models;
pub mod seed;
pub mod synthgen;
pub mod tabular;
pub mod zsl;

mod fsutil;

pub use error::{Error, Result};
