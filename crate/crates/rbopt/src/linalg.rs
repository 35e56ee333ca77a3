//! Dense linear algebra for the small systems that show up in design
//! optimization: LU solves with partial pivoting and inversion of
//! parameter-count-sized matrices.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular within pivot tolerance {tol:e}")]
    SingularMatrix { tol: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix entries must be finite")]
    NonFiniteEntry,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFiniteEntry);
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// self * other
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.cols + j]
    }
}

pub const PIVOT_TOL: f64 = 1e-12;

/// LU factorization with partial pivoting, stored in-place.
struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

fn factorize(a: &DenseMatrix) -> Result<Lu, LinalgError> {
    let n = a.rows;
    let mut lu = a.entries.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    // Scale the singularity test by the magnitude of the input so the
    // tolerance is relative, not absolute.
    let scale = a.max_abs().max(1.0);
    for k in 0..n {
        let mut p = k;
        let mut best = lu[k * n + k].abs();
        for i in k + 1..n {
            let v = lu[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= PIVOT_TOL * scale {
            return Err(LinalgError::SingularMatrix { tol: PIVOT_TOL });
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let factor = lu[i * n + k] / pivot;
            lu[i * n + k] = factor;
            for j in k + 1..n {
                lu[i * n + j] -= factor * lu[k * n + j];
            }
        }
    }
    Ok(Lu { n, lu, perm })
}

impl Lu {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Solve A x = b with partial pivoting, with one step of iterative
/// refinement to tighten the residual.
pub fn solve_linear_system(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch("matrix must be square".into()));
    }
    if b.len() != a.rows {
        return Err(LinalgError::DimensionMismatch(format!(
            "rhs length {} does not match matrix dimension {}",
            b.len(),
            a.rows
        )));
    }
    let lu = factorize(a)?;
    let mut x = lu.solve(b);
    // refinement: r = b - A x, x += A \ r
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let dx = lu.solve(&r);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }
    Ok(x)
}

/// Invert a small square matrix (parameter-count scale, dimension <= 64).
pub fn invert_small(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.rows > 64 {
        return Err(LinalgError::DimensionMismatch(format!(
            "invert_small is limited to dimension 64, got {}",
            a.rows
        )));
    }
    invert_any(a)
}

pub(crate) fn invert_any(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch("matrix must be square".into()));
    }
    let n = a.rows;
    let lu = factorize(a)?;
    let mut inv = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve() {
        let a = DenseMatrix::identity(3);
        let x = solve_linear_system(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn diagonal_solve() {
        let a = DenseMatrix::new(2, 2, vec![2.0, 0.0, 0.0, 4.0]).unwrap();
        let x = solve_linear_system(&a, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            solve_linear_system(&a, &[1.0, 2.0]),
            Err(LinalgError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn invert_identity_and_diagonal() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(invert_small(&i2).unwrap(), i2);
        let d = DenseMatrix::new(2, 2, vec![4.0, 0.0, 0.0, 2.0]).unwrap();
        let inv = invert_small(&d).unwrap();
        assert!((inv[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((inv[(1, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invert_singular() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(invert_small(&a), Err(LinalgError::SingularMatrix { .. })));
    }

    // Residual bound on random well-conditioned systems.
    #[test]
    fn random_systems_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..1000 {
            let n = rng.random_range(1..=8);
            // Diagonally dominant matrices stay well conditioned.
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                let mut rowsum = 0.0;
                for j in 0..n {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    a[(i, j)] = v;
                    rowsum += v.abs();
                }
                a[(i, i)] += rowsum + 1.0;
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let x = solve_linear_system(&a, &b).unwrap();
            let ax = a.matvec(&x);
            let bnorm = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (axi, bi) in ax.iter().zip(&b) {
                assert!(
                    (axi - bi).abs() <= 1e-10 * (1.0 + bnorm),
                    "trial {trial}: residual too large"
                );
            }
        }
    }

    #[test]
    fn inverse_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.random_range(1..=6);
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                let mut rowsum = 0.0;
                for j in 0..n {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    a[(i, j)] = v;
                    rowsum += v.abs();
                }
                a[(i, i)] += rowsum + 0.5;
            }
            let inv = invert_small(&a).unwrap();
            let prod = a.matmul(&inv);
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)] - expect).abs() <= 1e-8);
                }
            }
        }
    }
}
