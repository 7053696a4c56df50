//! Dense real-matrix kernels: a row-major [`Matrix`], thin SVD by one-sided
//! Jacobi rotations, the SVD pseudoinverse, the right-factor least-squares
//! solve `V = W·S⁺`, and a numerically stable softmax.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff below which singular values count as zero in [`pinv`].
pub const PINV_RTOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 80;

/// Dense row-major matrix of `f64`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::from_vec(raw.rows, raw.cols, raw.data)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix whose columns are the given slices.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut m = Matrix::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::Dimension(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Row-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let lhs_row = self.row(r);
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Elementwise `self - rhs`.
    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension(format!(
                "cannot subtract {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Copy of the matrix with a column of ones appended on the right.
    pub fn with_ones_column(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            let dst = out.row_mut(r);
            dst[..self.cols].copy_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
            dst[self.cols] = 1.0;
        }
        out
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Columns selected by index, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, indices.len());
        for r in 0..self.rows {
            for (j, &c) in indices.iter().enumerate() {
                out[(r, j)] = self[(r, c)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Thin singular value decomposition `M = U·diag(sigma)·Vt`.
///
/// For an `m×n` input with `r = min(m, n)`: `u` is `m×r` with orthonormal
/// columns, `sigma` has `r` non-negative entries sorted descending and `vt` is
/// `r×n` with orthonormal rows.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub vt: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for r in 0..us.rows() {
            for (c, s) in self.sigma.iter().enumerate() {
                us[(r, c)] *= s;
            }
        }
        us.matmul(&self.vt).expect("svd factors conform")
    }
}

/// Computes the thin SVD with one-sided (Hestenes) Jacobi rotations.
pub fn svd(m: &Matrix) -> Result<Svd> {
    if m.is_empty() {
        return Err(Error::Empty("svd of an empty matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("svd input".into()));
    }
    if m.rows() >= m.cols() {
        let (u, sigma, v) = jacobi_tall(m);
        Ok(Svd {
            u,
            sigma,
            vt: v.transpose(),
        })
    } else {
        // Mᵀ = U'ΣV'ᵀ  ⇒  M = V'ΣU'ᵀ
        let (u_t, sigma, v_t) = jacobi_tall(&m.transpose());
        Ok(Svd {
            u: v_t,
            sigma,
            vt: u_t.transpose(),
        })
    }
}

/// One-sided Jacobi on a tall (`m ≥ n`) matrix. Returns `(U, sigma, V)`
/// with `V` square.
fn jacobi_tall(a: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (m, n) = a.shape();
    // Work column-major: cols[j] is column j of the rotated matrix.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let eps = f64::EPSILON;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for i in 0..m {
                        alpha += cp[i] * cp[i];
                        beta += cq[i] * cq[i];
                        gamma += cp[i] * cq[i];
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        let s = norms[j];
        if s > 0.0 && s.is_normal() {
            ucols.push(cols[j].iter().map(|v| v / s).collect());
        } else {
            ucols.push(vec![0.0; m]);
            missing.push(slot);
        }
    }
    complete_orthonormal(&mut ucols, &missing);

    let u = Matrix::from_columns(&ucols).expect("uniform column length");
    let vsorted: Vec<Vec<f64>> = order.iter().map(|&j| vcols[j].clone()).collect();
    let v = Matrix::from_columns(&vsorted).expect("uniform column length");
    (u, sigma, v)
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Replaces the columns listed in `missing` with unit vectors orthogonal to
/// every other column (Gram–Schmidt over the standard basis).
fn complete_orthonormal(cols: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = cols[0].len();
    let mut filled: Vec<bool> = vec![true; cols.len()];
    for &slot in missing {
        filled[slot] = false;
    }
    for &slot in missing {
        for k in 0..m {
            let mut cand = vec![0.0; m];
            cand[k] = 1.0;
            for _ in 0..2 {
                for (j, col) in cols.iter().enumerate() {
                    if !filled[j] {
                        continue;
                    }
                    let dot: f64 = col.iter().zip(&cand).map(|(a, b)| a * b).sum();
                    for (c, a) in cand.iter_mut().zip(col) {
                        *c -= dot * a;
                    }
                }
            }
            let norm = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.5 {
                cols[slot] = cand.into_iter().map(|v| v / norm).collect();
                filled[slot] = true;
                break;
            }
        }
    }
}

/// Moore–Penrose pseudoinverse via SVD, zeroing singular values below
/// `PINV_RTOL · sigma_max`. An all-zero input yields the zero matrix.
pub fn pinv(m: &Matrix) -> Result<Matrix> {
    let svd = svd(m)?;
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    let cutoff = PINV_RTOL * sigma_max;
    // M⁺ = V · diag(1/σ) · Uᵀ
    let mut v_scaled = svd.vt.transpose();
    for r in 0..v_scaled.rows() {
        for (c, &s) in svd.sigma.iter().enumerate() {
            v_scaled[(r, c)] = if s > cutoff && s > 0.0 {
                v_scaled[(r, c)] / s
            } else {
                0.0
            };
        }
    }
    v_scaled.matmul(&svd.u.transpose())
}

/// Least-squares right factor: returns `V` (`d×a`) minimizing `‖V·S − W‖_F`
/// for `W` (`d×z`) and `S` (`a×z`), computed as `W·S⁺`.
pub fn solve_right_factor(w: &Matrix, s: &Matrix) -> Result<Matrix> {
    if s.is_empty() {
        return Err(Error::Dimension(
            "signature matrix needs at least one row and one column".into(),
        ));
    }
    if w.cols() != s.cols() {
        return Err(Error::Dimension(format!(
            "W has {} columns but S has {}",
            w.cols(),
            s.cols()
        )));
    }
    if !w.is_finite() {
        return Err(Error::NonFinite("W".into()));
    }
    w.matmul(&pinv(s)?)
}

/// Relative Frobenius residual `‖V·S − W‖_F / ‖W‖_F` (absolute when `W = 0`).
pub fn factor_residual(v: &Matrix, s: &Matrix, w: &Matrix) -> Result<f64> {
    let diff = v.matmul(s)?.sub(w)?.frobenius_norm();
    let scale = w.frobenius_norm();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Softmax with max-subtraction. Panics on an empty slice.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    assert!(!scores.is_empty(), "softmax of an empty score vector");
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn svd_identity_has_unit_singular_values() {
        let s = svd(&Matrix::identity(3)).unwrap();
        assert_eq!(s.sigma, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn svd_diagonal() {
        let s = svd(&Matrix::from_diag(&[3.0, 2.0])).unwrap();
        assert!(approx(s.sigma[0], 3.0, 1e-14));
        assert!(approx(s.sigma[1], 2.0, 1e-14));
        // unsorted diagonal gets sorted
        let s = svd(&Matrix::from_diag(&[2.0, 5.0, 1.0])).unwrap();
        assert_eq!(s.sigma, vec![5.0, 2.0, 1.0]);
    }

    #[test]
    fn svd_rank_one_row() {
        let m = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        let s = svd(&m).unwrap();
        assert!(approx(s.sigma[0], 2f64.sqrt(), 1e-14));
        assert!(approx(s.sigma[1], 0.0, 1e-14));
        let ut_u = s.u.transpose().matmul(&s.u).unwrap();
        assert!(ut_u.sub(&Matrix::identity(2)).unwrap().frobenius_norm() < 1e-12);
        assert!(s.reconstruct().sub(&m).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn svd_wide_and_zero() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let s = svd(&m).unwrap();
        assert_eq!(s.u.shape(), (1, 1));
        assert_eq!(s.vt.shape(), (1, 3));
        assert!(approx(s.sigma[0], 14f64.sqrt(), 1e-14));

        let z = svd(&Matrix::zeros(3, 2)).unwrap();
        assert_eq!(z.sigma, vec![0.0, 0.0]);
        let ut_u = z.u.transpose().matmul(&z.u).unwrap();
        assert!(ut_u.sub(&Matrix::identity(2)).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn svd_rejects_bad_input() {
        assert!(matches!(svd(&Matrix::zeros(0, 3)), Err(Error::Empty(_))));
        let m = Matrix::from_rows(&[[f64::NAN]]).unwrap();
        assert!(matches!(svd(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn right_factor_identity_and_zero() {
        let w = Matrix::from_rows(&[[1.5, -2.0, 0.25], [3.0, 0.0, 7.0]]).unwrap();
        let v = solve_right_factor(&w, &Matrix::identity(3)).unwrap();
        assert_eq!(v, w);

        let v = solve_right_factor(&Matrix::zeros(2, 3), &Matrix::identity(3)).unwrap();
        assert_eq!(v, Matrix::zeros(2, 3));

        let v = solve_right_factor(&w, &Matrix::zeros(4, 3)).unwrap();
        assert_eq!(v, Matrix::zeros(2, 4));
    }

    #[test]
    fn right_factor_by_hand() {
        // S = [[1,1],[0,1]], S⁻¹ = [[1,-1],[0,1]], W·S⁻¹ = [[2, 1]]
        let w = Matrix::from_rows(&[[2.0, 3.0]]).unwrap();
        let s = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let v = solve_right_factor(&w, &s).unwrap();
        assert!(approx(v[(0, 0)], 2.0, 1e-12));
        assert!(approx(v[(0, 1)], 1.0, 1e-12));
        assert!(factor_residual(&v, &s, &w).unwrap() < 1e-12);
    }

    #[test]
    fn right_factor_dimension_mismatch() {
        let w = Matrix::zeros(2, 3);
        let s = Matrix::zeros(2, 2);
        assert!(matches!(
            solve_right_factor(&w, &s),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            solve_right_factor(&w, &Matrix::zeros(0, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        assert_eq!(softmax(&[123.4]), vec![1.0]);
        let w = softmax(&[1.0, 0.0]);
        assert!(approx(w[0], 0.731_058_578_630_004_9, 1e-12));
        assert!(approx(w[1], 0.268_941_421_369_995_1, 1e-12));
        // no overflow for huge scores
        let w = softmax(&[1000.0, 999.0]);
        assert!(approx(w[0], 0.731_058_578_630_004_9, 1e-12));
    }

    #[test]
    fn matrix_json_rejects_bad_shape() {
        let bad = r#"{"rows":2,"cols":2,"data":[1.0,2.0,3.0]}"#;
        assert!(serde_json::from_str::<Matrix>(bad).is_err());
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let back: Matrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
