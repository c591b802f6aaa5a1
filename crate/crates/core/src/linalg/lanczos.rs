use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{lit, wide, Real};

use super::dense::{axpy, dot, symmetric_eigenvalues, Mat};
use super::tridiagonal::tridiagonal_eigen;

/// A symmetric linear map given by its action on vectors.
pub trait SymmetricOperator<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

/// Stopping rule for [`top_eigenvalues`].
#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Residual bound relative to the largest Ritz value.
    pub tol: f64,
    pub max_iter: usize,
    pub check_every: usize,
    /// Seed of the start vector.
    pub seed: u64,
    /// Dimension at or below which the operator is densified instead.
    pub dense_below: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-10, max_iter: 1500, check_every: 4, seed: 0x5eed, dense_below: 48 }
    }
}

fn random_unit<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    let mut v: Vec<T> = (0..n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            lit(g)
        })
        .collect();
    let nrm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x = *x / nrm);
    v
}

fn orthogonalize<T: Real>(basis: &[Vec<T>], w: &mut [T]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

/// The `k` largest eigenvalues (descending) of a symmetric operator, by
/// Lanczos with full reorthogonalization.
pub fn top_eigenvalues<T: Real, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    k: usize,
    opts: LanczosOptions,
) -> Result<Vec<T>> {
    let n = op.dim();
    let k = k.min(n);
    if k == 0 {
        return Ok(Vec::new());
    }
    if n <= opts.dense_below.max(2 * k + 8) {
        let mut m = Mat::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            op.apply(&e, m.col_mut(j));
            e[j] = T::zero();
        }
        let mut v = symmetric_eigenvalues(&m)?;
        v.truncate(k);
        return Ok(v);
    }
    let tol: T = lit::<T>(opts.tol).max(T::epsilon() * lit(64.0));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<T>> = vec![random_unit(&mut rng, n)];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut w = vec![T::zero(); n];
    let mut anorm = T::zero();
    let max_iter = opts.max_iter.min(n);
    let mut last_residual = f64::INFINITY;
    for j in 0..max_iter {
        op.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        orthogonalize(&basis, &mut w);
        let b = dot(&w, &w).sqrt();
        anorm = anorm.max(a.abs() + b);
        let m = j + 1;
        let exhausted = m == n;
        let breakdown = b <= anorm * T::epsilon() * lit(16.0);
        if m >= k && (m % opts.check_every == 0 || exhausted || m == max_iter || breakdown) {
            let (theta, last) = tridiagonal_eigen(&alpha, &beta, true)?;
            let scale = theta[0].abs().max(anorm * T::epsilon());
            let worst = (0..k).map(|i| b * last[i].abs()).fold(T::zero(), T::max);
            last_residual = wide(worst / scale);
            if exhausted || worst <= tol * scale {
                return Ok(theta[..k].to_vec());
            }
        }
        if breakdown {
            // invariant subspace: continue from a fresh direction
            let mut v = random_unit::<T>(&mut rng, n);
            orthogonalize(&basis, &mut v);
            let nrm = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x = *x / nrm);
            beta.push(T::zero());
            basis.push(v);
        } else {
            beta.push(b);
            basis.push(w.iter().map(|&x| x / b).collect());
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: last_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diag(Vec<f64>);
    impl SymmetricOperator<f64> for Diag {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..x.len() {
                y[i] = self.0[i] * x[i];
            }
        }
    }

    #[test]
    fn diagonal_operator() {
        let d: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin() + 0.002 * i as f64).collect();
        let mut sorted = d.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let top = top_eigenvalues(&Diag(d), 5, LanczosOptions::default()).unwrap();
        for i in 0..5 {
            assert!((top[i] - sorted[i]).abs() < 1e-8, "{i}: {} vs {}", top[i], sorted[i]);
        }
    }

    #[test]
    fn repeated_eigenvalues_recovered_through_restarts() {
        let mut d = vec![1.0; 100];
        d[0] = 3.0;
        d[1] = 3.0;
        let top = top_eigenvalues(&Diag(d), 3, LanczosOptions { dense_below: 0, ..Default::default() }).unwrap();
        assert!((top[0] - 3.0).abs() < 1e-12 && (top[1] - 3.0).abs() < 1e-12 && (top[2] - 1.0).abs() < 1e-12);
    }
}
