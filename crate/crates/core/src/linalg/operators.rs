use crate::scalar::Real;

use super::dense::{dot, Mat};
use super::lanczos::SymmetricOperator;

/// Nonzero spectrum of Y W Yᵀ for a p×n matrix Y and optional diagonal
/// column weights W, applied on the smaller side.
pub struct GramOp<'a, T> {
    y: &'a Mat<T>,
    /// square roots of the column weights
    d: Option<Vec<T>>,
}

impl<'a, T: Real> GramOp<'a, T> {
    pub fn new(y: &'a Mat<T>, column_weights: Option<&[T]>) -> Self {
        GramOp { y, d: column_weights.map(|w| w.iter().map(|x| x.sqrt()).collect()) }
    }
}

impl<T: Real> SymmetricOperator<T> for GramOp<'_, T> {
    fn dim(&self) -> usize {
        self.y.rows().min(self.y.cols())
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        let (p, n) = (self.y.rows(), self.y.cols());
        if p <= n {
            let mut t = vec![T::zero(); n];
            self.y.mul_t_vec(x, &mut t);
            if let Some(d) = &self.d {
                t.iter_mut().zip(d).for_each(|(v, &di)| *v = *v * di * di);
            }
            self.y.mul_vec(&t, out);
        } else {
            let xs: Vec<T> = match &self.d {
                Some(d) => x.iter().zip(d).map(|(&v, &di)| v * di).collect(),
                None => x.to_vec(),
            };
            let mut u = vec![T::zero(); p];
            self.y.mul_vec(&xs, &mut u);
            self.y.mul_t_vec(&u, out);
            if let Some(d) = &self.d {
                out.iter_mut().zip(d).for_each(|(v, &di)| *v = *v * di);
            }
        }
    }
}

/// D G D for a precomputed symmetric n×n matrix G and diagonal D.
pub struct DiagGramOp<'a, T> {
    g: &'a Mat<T>,
    d: Vec<T>,
}

impl<'a, T: Real> DiagGramOp<'a, T> {
    pub fn new(g: &'a Mat<T>, d: Vec<T>) -> Self {
        DiagGramOp { g, d }
    }
}

impl<T: Real> SymmetricOperator<T> for DiagGramOp<'_, T> {
    fn dim(&self) -> usize {
        self.g.rows()
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        let xs: Vec<T> = x.iter().zip(&self.d).map(|(&v, &di)| v * di).collect();
        self.g.mul_t_vec(&xs, out);
        out.iter_mut().zip(&self.d).for_each(|(v, &di)| *v = *v * di);
    }
}

/// D L Lᵀ D for a lower-triangular L (stored densely, zeros above the
/// diagonal) and diagonal D.
pub struct TriangularGramOp<T> {
    l: Mat<T>,
    d: Vec<T>,
}

impl<T: Real> TriangularGramOp<T> {
    pub fn new(l: Mat<T>, d: Vec<T>) -> Self {
        assert_eq!(l.rows(), l.cols());
        assert_eq!(l.rows(), d.len());
        TriangularGramOp { l, d }
    }

    pub fn factor(&self) -> &Mat<T> {
        &self.l
    }

    pub fn diagonal(&self) -> &[T] {
        &self.d
    }
}

impl<T: Real> SymmetricOperator<T> for TriangularGramOp<T> {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        let n = self.d.len();
        let xs: Vec<T> = x.iter().zip(&self.d).map(|(&v, &di)| v * di).collect();
        // t = Lᵀ xs, column j of L is zero above row j
        let t: Vec<T> = (0..n).map(|j| dot(&self.l.col(j)[j..], &xs[j..])).collect();
        out.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..n {
            let tj = t[j];
            let c = &self.l.col(j)[j..];
            for (o, &cj) in out[j..].iter_mut().zip(c) {
                *o = *o + tj * cj;
            }
        }
        out.iter_mut().zip(&self.d).for_each(|(v, &di)| *v = *v * di);
    }
}
