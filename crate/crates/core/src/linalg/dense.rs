use crate::error::{Error, Result};
use crate::scalar::Real;

use super::tridiagonal::tridiagonal_eigen;

/// Column-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds from column-major storage.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "storage length mismatch");
        Mat { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&mut self, k: T) {
        self.data.iter_mut().for_each(|x| *x = *x * k);
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        y.iter_mut().for_each(|v| *v = T::zero());
        for (j, &xj) in x.iter().enumerate() {
            if xj != T::zero() {
                axpy(xj, self.col(j), y);
            }
        }
    }

    /// y = Aᵀ x.
    pub fn mul_t_vec(&self, x: &[T], y: &mut [T]) {
        for (j, v) in y.iter_mut().enumerate() {
            *v = dot(self.col(j), x);
        }
    }

    /// Gram matrix of the columns, AᵀA (cols × cols).
    pub fn gram_cols(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = dot(self.col(i), self.col(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// A Aᵀ (rows × rows).
    pub fn gram_rows(&self) -> Self {
        let p = self.rows;
        let mut g = Self::zeros(p, p);
        for k in 0..self.cols {
            let c = self.col(k);
            for j in 0..p {
                let cj = c[j];
                if cj != T::zero() {
                    let gc = g.col_mut(j);
                    for i in j..p {
                        gc[i] = gc[i] + c[i] * cj;
                    }
                }
            }
        }
        for j in 0..p {
            for i in j + 1..p {
                let v = g.get(i, j);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Trace of a square matrix.
    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    // four accumulators let the compiler vectorize
    let mut s = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s[0] = s[0] + a[i] * b[i];
        s[1] = s[1] + a[i + 1] * b[i + 1];
        s[2] = s[2] + a[i + 2] * b[i + 2];
        s[3] = s[3] + a[i + 3] * b[i + 3];
    }
    let mut tail = T::zero();
    for i in 4 * chunks..a.len() {
        tail = tail + a[i] * b[i];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

#[inline]
pub(crate) fn axpy<T: Real>(k: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + k * xi;
    }
}

/// Eigenvalues of a real symmetric matrix in descending order.
///
/// Householder reduction to tridiagonal form followed by implicit QL.
/// Only the lower triangle is read.
pub fn symmetric_eigenvalues<T: Real>(m: &Mat<T>) -> Result<Vec<T>> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::InvalidParameter(format!("matrix is {}x{}, not square", n, m.cols())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // row-major copy of the lower triangle: a[i*n + k], k <= i
    let mut a = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..=i {
            a[i * n + k] = m.get(i, k);
        }
    }
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale: T = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == T::zero() {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] = a[i * n + k] / scale;
                    h = h + a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h = h - f * g;
                a[i * n + l] = f - g;
                let mut f = T::zero();
                for j in 0..=l {
                    let mut g = T::zero();
                    for k in 0..=j {
                        g = g + a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g = g + a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f = f + e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    let (rows_j, row_i) = {
                        let (lo, hi) = a.split_at_mut(i * n);
                        (&mut lo[j * n..j * n + j + 1], &hi[..j + 1])
                    };
                    for k in 0..=j {
                        rows_j[k] = rows_j[k] - (f * e[k] + g * row_i[k]);
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    // e[i] couples rows i-1 and i; shift so e[i] couples i and i+1
    let off: Vec<T> = (0..n).map(|i| if i + 1 < n { e[i + 1] } else { T::zero() }).collect();
    let (vals, _) = tridiagonal_eigen(&d, &off[..n - 1], false)?;
    Ok(vals)
}
