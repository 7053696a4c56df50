// Grid-search boosted-tree hyperparameters with k-fold cross-validation.

use zsl_energy::linalg::Matrix;
use zsl_energy::models::gbrt::rmse;
use zsl_energy::models::{fit_gbrt, tune_gbrt, Hyperparams};

pub fn run_example() -> zsl_energy::Result<f64> {
    let n = 240;
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let a = (i % 20) as f64 / 20.0;
        let b = (i / 20) as f64 / 12.0;
        rows.push([a, b]);
        y.push((3.0 * a).sin() + a * b * 2.0);
    }
    let x = Matrix::from_rows(&rows)?;

    let grid = vec![
        Hyperparams::new(1, 0.1, 60)?,
        Hyperparams::new(3, 0.1, 60)?,
        Hyperparams::new(3, 0.3, 60)?,
    ];
    let tuned = tune_gbrt(&x, &y, &grid, 4, 9)?;
    for (hp, score) in grid.iter().zip(&tuned.cv_rmse) {
        println!(
            "depth {} lr {} -> cv rmse {score:.4}",
            hp.max_depth, hp.learning_rate
        );
    }
    let model = fit_gbrt(&x, &y, &tuned.best)?;
    let train_rmse = rmse(&model.predict(&x)?, &y);
    println!("best {:?}, training rmse {train_rmse:.4}", tuned.best);
    Ok(train_rmse)
}

#[allow(dead_code)]
fn main() -> zsl_energy::Result<()> {
    run_example().map(|_| ())
}
