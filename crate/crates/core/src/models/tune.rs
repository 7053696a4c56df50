//! k-fold grid search for the boosting hyperparameters.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gbrt::{fit_gbrt, rmse, Hyperparams};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed::child_seed;

/// Held-out row indices for each of `folds` folds.
///
/// Rows are shuffled with `child_seed(seed, "kfold")` and position `p` of the
/// shuffled order lands in fold `p mod folds`. Each fold's indices are sorted.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if n < folds {
        return Err(Error::InvalidArgument(format!(
            "{n} instances cannot fill {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(child_seed(seed, "kfold")));
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (p, i) in order.into_iter().enumerate() {
        out[p % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: Hyperparams,
    /// Mean out-of-fold RMSE per grid entry, in grid order.
    pub cv_rmse: Vec<f64>,
}

/// Picks the grid entry with the lowest mean out-of-fold RMSE; ties keep the
/// earlier entry.
pub fn tune_gbrt(
    x: &Matrix,
    y: &[f64],
    grid: &[Hyperparams],
    folds: usize,
    seed: u64,
) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "hyperparameter grid is empty".into(),
        ));
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} targets",
            x.rows(),
            y.len()
        )));
    }
    for hp in grid {
        hp.validate()?;
    }
    if grid.len() == 1 {
        return Ok(TuneResult {
            best: grid[0],
            cv_rmse: vec![f64::NAN],
        });
    }
    let held_out = kfold_indices(y.len(), folds, seed)?;
    let splits: Vec<(Matrix, Vec<f64>, Matrix, Vec<f64>)> = held_out
        .iter()
        .map(|test| {
            let mut in_test = vec![false; y.len()];
            for &i in test {
                in_test[i] = true;
            }
            let train: Vec<usize> = (0..y.len()).filter(|&i| !in_test[i]).collect();
            (
                x.select_rows(&train),
                train.iter().map(|&i| y[i]).collect(),
                x.select_rows(test),
                test.iter().map(|&i| y[i]).collect(),
            )
        })
        .collect();

    let mut cv_rmse = Vec::with_capacity(grid.len());
    for hp in grid {
        let mut total = 0.0;
        for (xtr, ytr, xte, yte) in &splits {
            let model = fit_gbrt(xtr, ytr, hp)?;
            total += rmse(&model.predict(xte)?, yte);
        }
        cv_rmse.push(total / splits.len() as f64);
    }
    let mut best = 0;
    for (i, &score) in cv_rmse.iter().enumerate() {
        if score < cv_rmse[best] {
            best = i;
        }
    }
    Ok(TuneResult {
        best: grid[best],
        cv_rmse,
    })
}
