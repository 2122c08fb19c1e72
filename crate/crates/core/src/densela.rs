//! Small dense linear algebra for the remap systems.
//!
//! Systems here are at most a few hundred unknowns (the 2D tensor
//! interpolant at moderate degree), so plain row-major storage with
//! Householder QR for least squares and partially pivoted LU for square
//! solves is sufficient.

use crate::error::{Error, Result};
use crate::scalar::{max_abs, Real};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major entries. Fails on a size mismatch or non-finite entry.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("matrix dimensions must be positive".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidArgument(format!("{} entries given for a {rows}x{cols} matrix", entries.len())));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// Appends a row; the length must equal `cols`.
    pub fn push_row(&mut self, row: &[T]) {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.entries.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum()).collect()
    }

    pub fn transpose_mul_vec(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * yi;
            }
        }
        out
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> T {
        (0..self.rows).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<T>()).fold(T::zero(), T::max)
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.entries[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.entries[i * self.cols + j]
    }
}

/// Minimises `|a x - b|_2` by Householder QR.
///
/// Fails with [`Error::SingularSystem`] when a diagonal entry of `R` falls
/// below `1e-12` times the largest one.
pub fn solve_least_squares<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let (m, n) = (a.rows, a.cols);
    if m < n {
        return Err(Error::InvalidArgument(format!("least squares needs rows >= cols, got {m}x{n}")));
    }
    if b.len() != m {
        return Err(Error::InvalidArgument(format!("right side has {} entries for {m} rows", b.len())));
    }
    // column-major working copy so reflections sweep contiguous memory
    let mut qr: Vec<Vec<T>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let mut rhs = b.to_vec();
    let mut diag = vec![T::zero(); n];

    for k in 0..n {
        let norm = qr[k][k..].iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm == T::zero() {
            diag[k] = T::zero();
            continue;
        }
        let alpha = if qr[k][k] > T::zero() { -norm } else { norm };
        // v = x - alpha e1, stored in place of column k
        qr[k][k] = qr[k][k] - alpha;
        let vtv: T = qr[k][k..].iter().map(|&v| v * v).sum();
        diag[k] = alpha;
        if vtv == T::zero() {
            continue;
        }
        let (head, tail) = qr.split_at_mut(k + 1);
        let v = &head[k][k..];
        for col in tail.iter_mut() {
            let dot: T = v.iter().zip(&col[k..]).map(|(&p, &q)| p * q).sum();
            let s = (dot + dot) / vtv;
            for (c, &vi) in col[k..].iter_mut().zip(v) {
                *c = *c - s * vi;
            }
        }
        let dot: T = v.iter().zip(&rhs[k..]).map(|(&p, &q)| p * q).sum();
        let s = (dot + dot) / vtv;
        for (r, &vi) in rhs[k..].iter_mut().zip(v) {
            *r = *r - s * vi;
        }
    }

    let largest = max_abs(&diag);
    let tol = T::lit(1e-12) * largest;
    if largest == T::zero() || diag.iter().any(|d| d.abs() < tol || !d.is_finite()) {
        return Err(Error::SingularSystem(format!("rank-deficient {m}x{n} least-squares matrix")));
    }

    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s = s - qr[j][i] * x[j];
        }
        x[i] = s / diag[i];
    }
    Ok(x)
}

/// LU factorisation with partial pivoting, kept for repeated solves.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Real> LuFactors<T> {
    /// Factorises a square matrix. A pivot below `1e-13` times the largest
    /// entry of `a` is reported as [`Error::SingularSystem`].
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::InvalidArgument(format!("square matrix expected, got {}x{}", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut lu = a.entries.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tol = T::lit(1e-13) * max_abs(&a.entries);

        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold((k, T::zero()), |acc, c| if c.1 > acc.1 { c } else { acc });
            if !(pmax > tol) {
                return Err(Error::SingularSystem(format!(
                    "pivot {:e} in column {k} below tolerance",
                    pmax.to_f64_lossy()
                )));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        lu[i * n + j] = lu[i * n + j] - f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::InvalidArgument(format!("right side has {} entries for {n} rows", b.len())));
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Solves the square system `a x = b` with partially pivoted LU.
pub fn solve_linear<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    LuFactors::new(a)?.solve(b)
}
