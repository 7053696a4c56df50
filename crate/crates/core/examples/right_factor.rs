// Solve `V·S = W` through the SVD pseudoinverse and check the residual.

use zsl_energy::linalg::{factor_residual, pinv, solve_right_factor, svd, Matrix};

pub fn run_example() -> zsl_energy::Result<f64> {
    // Three known classes described by four signature parameters.
    let s = Matrix::from_rows(&[
        [0.9, 0.6, 0.4],
        [0.3, 0.5, 0.7],
        [0.5, 0.7, 0.9],
        [0.6, 0.5, 0.3],
    ])?;
    let w = Matrix::from_rows(&[[1.0, -2.0, 0.5], [0.0, 3.0, -1.0]])?;

    let decomposition = svd(&s)?;
    println!("singular values: {:?}", decomposition.sigma);
    let s_pinv = pinv(&s)?;
    println!("S+ is {}x{}", s_pinv.rows(), s_pinv.cols());

    let v = solve_right_factor(&w, &s)?;
    let residual = factor_residual(&v, &s, &w)?;
    println!("relative residual |VS - W| / |W| = {residual:e}");
    Ok(residual)
}

#[allow(dead_code)]
fn main() -> zsl_energy::Result<()> {
    run_example().map(|_| ())
}
