//! Multinomial logistic regression fitted by full-batch gradient descent.
//!
//! The bias is an always-one feature appended to the design matrix, so the
//! weight matrix has one row per encoded feature plus a final bias row and one
//! column per class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticOptions {
    /// Coefficient of the `(l2/2)·‖W‖²_F` penalty.
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient's largest absolute entry is at most this.
    pub tol: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            l2: 1e-3,
            max_iter: 10_000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// `(d + 1) × z`; the last row is the bias.
    pub weights: Matrix,
    /// Column `j` of `weights` scores `class_order[j]`.
    pub class_order: Vec<String>,
    pub converged: bool,
    pub iterations: usize,
}

impl LogisticModel {
    /// Encoded feature count (without the bias column).
    pub fn input_dim(&self) -> usize {
        self.weights.rows() - 1
    }

    /// Raw class scores `[X, 1]·W`.
    pub fn scores(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        x.with_ones_column().matmul(&self.weights)
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let mut s = self.scores(x)?;
        for r in 0..s.rows() {
            let p = crate::linalg::softmax(s.row(r));
            s.row_mut(r).copy_from_slice(&p);
        }
        Ok(s)
    }

    /// Index into `class_order` of the highest-scoring class per row.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let s = self.scores(x)?;
        Ok((0..s.rows())
            .map(|r| {
                s.row(r)
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (j, &v)| {
                        if v > best.1 {
                            (j, v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect())
    }
}

/// Mean cross-entropy plus `(l2/2)‖W‖²` for a design matrix that already
/// carries its bias column.
pub fn objective(x_aug: &Matrix, labels: &[usize], w: &Matrix, l2: f64) -> Result<f64> {
    check_shapes(x_aug, labels, w)?;
    let logits = x_aug.matmul(w)?;
    Ok(loss_from_logits(&logits, labels) + penalty(w, l2))
}

/// Objective value and its gradient with respect to `w`.
pub fn objective_and_gradient(
    x_aug: &Matrix,
    labels: &[usize],
    w: &Matrix,
    l2: f64,
) -> Result<(f64, Matrix)> {
    check_shapes(x_aug, labels, w)?;
    let n = x_aug.rows() as f64;
    let z = w.cols();
    let mut resid = x_aug.matmul(w)?;
    let mut loss = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        let row = resid.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        // −log p_y = log Σ exp(s_j − max) − (s_y − max)
        loss += total.ln() - row[y].ln();
        for v in row.iter_mut() {
            *v /= total;
        }
        row[y] -= 1.0;
    }
    // G = Xᵀ(P − Y)/n + l2·W
    let mut grad = Matrix::zeros(w.rows(), z);
    for r in 0..x_aug.rows() {
        let x_row = x_aug.row(r);
        let d_row = resid.row(r);
        for (k, &xv) in x_row.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (g, &dv) in grad.row_mut(k).iter_mut().zip(d_row) {
                *g += xv * dv;
            }
        }
    }
    for k in 0..grad.rows() {
        for j in 0..z {
            grad[(k, j)] = grad[(k, j)] / n + l2 * w[(k, j)];
        }
    }
    Ok((loss / n + penalty(w, l2), grad))
}

fn loss_from_logits(logits: &Matrix, labels: &[usize]) -> f64 {
    let mut loss = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += lse - row[y];
    }
    loss / labels.len() as f64
}

fn penalty(w: &Matrix, l2: f64) -> f64 {
    0.5 * l2 * w.as_slice().iter().map(|v| v * v).sum::<f64>()
}

fn check_shapes(x_aug: &Matrix, labels: &[usize], w: &Matrix) -> Result<()> {
    if x_aug.rows() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} labels",
            x_aug.rows(),
            labels.len()
        )));
    }
    if x_aug.rows() == 0 {
        return Err(Error::Empty("logistic regression needs instances".into()));
    }
    if x_aug.cols() != w.rows() {
        return Err(Error::Dimension(format!(
            "design has {} columns, weights have {} rows",
            x_aug.cols(),
            w.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= w.cols()) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {} classes",
            w.cols()
        )));
    }
    Ok(())
}

fn max_abs(m: &Matrix) -> f64 {
    m.as_slice().iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Fits `W` from zero initialization.
///
/// Each step moves along the negative gradient. The trial step length is the
/// Barzilai–Borwein estimate from the previous step and is halved until the
/// Armijo sufficient-decrease condition holds, so the objective never
/// increases between accepted iterates.
pub fn fit_logistic(
    x: &Matrix,
    labels: &[usize],
    class_order: Vec<String>,
    opts: &LogisticOptions,
) -> Result<LogisticModel> {
    fit_logistic_traced(x, labels, class_order, opts).map(|(m, _)| m)
}

/// Like [`fit_logistic`], also returning the objective after every accepted
/// step (the first entry is the objective at `W = 0`).
pub fn fit_logistic_traced(
    x: &Matrix,
    labels: &[usize],
    class_order: Vec<String>,
    opts: &LogisticOptions,
) -> Result<(LogisticModel, Vec<f64>)> {
    let z = class_order.len();
    if !(opts.l2 >= 0.0) || !opts.l2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "l2 = {} must be ≥ 0",
            opts.l2
        )));
    }
    let mut present = vec![false; z];
    for &y in labels {
        if y >= z {
            return Err(Error::InvalidArgument(format!(
                "label {y} out of range for {z} classes"
            )));
        }
        present[y] = true;
    }
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(Error::InvalidArgument(
            "logistic regression needs at least two distinct classes".into(),
        ));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("logistic design matrix".into()));
    }
    let x_aug = x.with_ones_column();
    let mut w = Matrix::zeros(x_aug.cols(), z);
    let (mut f, mut g) = objective_and_gradient(&x_aug, labels, &w, opts.l2)?;
    let mut trace = vec![f];
    let mut step = 1.0;
    let mut iterations = 0;

    while iterations < opts.max_iter && max_abs(&g) > opts.tol {
        let g_sq: f64 = g.as_slice().iter().map(|v| v * v).sum();
        let mut t = step;
        let accepted = loop {
            let trial = axpy(&w, -t, &g);
            let f_trial = objective(&x_aug, labels, &trial, opts.l2)?;
            if f_trial <= f - 1e-4 * t * g_sq {
                break Some(trial);
            }
            t *= 0.5;
            if t < 1e-30 {
                break None;
            }
        };
        let Some(w_new) = accepted else { break };
        let (f_new, g_new) = objective_and_gradient(&x_aug, labels, &w_new, opts.l2)?;
        let s = w_new.sub(&w)?;
        let yv = g_new.sub(&g)?;
        let sy: f64 = s
            .as_slice()
            .iter()
            .zip(yv.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        let ss: f64 = s.as_slice().iter().map(|v| v * v).sum();
        step = if sy > 0.0 { ss / sy } else { 2.0 * t };
        w = w_new;
        f = f_new;
        g = g_new;
        trace.push(f);
        iterations += 1;
    }

    let converged = max_abs(&g) <= opts.tol;
    Ok((
        LogisticModel {
            weights: w,
            class_order,
            converged,
            iterations,
        },
        trace,
    ))
}

fn axpy(w: &Matrix, a: f64, g: &Matrix) -> Matrix {
    let data = w
        .as_slice()
        .iter()
        .zip(g.as_slice())
        .map(|(wv, gv)| wv + a * gv)
        .collect();
    Matrix::from_vec(w.rows(), w.cols(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn classes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn clusters() -> (Matrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let c = i % 2;
            let center = if c == 0 { -2.0 } else { 2.0 };
            rows.push(vec![
                center + rng.random_range(-0.5..0.5),
                rng.random_range(-1.0..1.0),
            ]);
            labels.push(c);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn separable_clusters_are_fit_perfectly() {
        let (x, y) = clusters();
        let opts = LogisticOptions {
            l2: 0.01,
            ..Default::default()
        };
        let model = fit_logistic(&x, &y, classes(2), &opts).unwrap();
        assert!(model.converged);
        assert_eq!(model.weights.shape(), (3, 2));
        assert_eq!(model.predict(&x).unwrap(), y);
        let p = model.predict_proba(&x).unwrap();
        for r in 0..p.rows() {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_iterations_gives_uniform_probabilities() {
        let (x, y) = clusters();
        let opts = LogisticOptions {
            max_iter: 0,
            ..Default::default()
        };
        let model = fit_logistic(&x, &y, classes(3), &opts).unwrap();
        assert_eq!(model.weights, Matrix::zeros(3, 3));
        assert!(!model.converged);
        let p = model.predict_proba(&x).unwrap();
        assert!(p.as_slice().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn objective_never_increases() {
        let (x, y) = clusters();
        let opts = LogisticOptions {
            l2: 1e-3,
            max_iter: 300,
            tol: 1e-9,
        };
        let (_, trace) = fit_logistic_traced(&x, &y, classes(2), &opts).unwrap();
        assert!(trace.len() > 2);
        for pair in trace.windows(2) {
            assert!(pair[1] <= pair[0], "{} > {}", pair[1], pair[0]);
        }
    }

    #[test]
    fn single_class_is_an_error() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(fit_logistic(&x, &[0, 0], classes(2), &Default::default()).is_err());
        assert!(fit_logistic(&x, &[0, 5], classes(2), &Default::default()).is_err());
    }

    #[test]
    fn identical_rows_with_distinct_labels_do_not_error() {
        let x = Matrix::from_rows(&[[1.0, 1.0]; 4]).unwrap();
        let opts = LogisticOptions {
            l2: 0.0,
            max_iter: 50,
            tol: 1e-6,
        };
        let model = fit_logistic(&x, &[0, 1, 0, 1], classes(2), &opts).unwrap();
        assert!(model.weights.is_finite());
        let p = model.predict_proba(&x).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, d, z) = (7, 3, 3);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let x = Matrix::from_rows(&rows).unwrap().with_ones_column();
        let labels: Vec<usize> = (0..n).map(|i| i % z).collect();
        let w = Matrix::from_vec(
            d + 1,
            z,
            (0..(d + 1) * z)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap();
        let (_, g) = objective_and_gradient(&x, &labels, &w, 0.3).unwrap();
        let h = 1e-6;
        for k in 0..w.rows() {
            for j in 0..z {
                let mut wp = w.clone();
                wp[(k, j)] += h;
                let mut wm = w.clone();
                wm[(k, j)] -= h;
                let fd = (objective(&x, &labels, &wp, 0.3).unwrap()
                    - objective(&x, &labels, &wm, 0.3).unwrap())
                    / (2.0 * h);
                assert!((fd - g[(k, j)]).abs() <= 1e-6 * (1.0 + fd.abs()));
            }
        }
    }
}
