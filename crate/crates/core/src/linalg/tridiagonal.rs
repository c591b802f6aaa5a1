use crate::error::{Error, Result};
use crate::scalar::{lit, wide, Real};

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (length n-1), sorted descending.
///
/// With `last_components`, also returns the last entry of each normalized
/// eigenvector (same order), as needed for Lanczos residual bounds.
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T], last_components: bool) -> Result<(Vec<T>, Vec<T>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    assert_eq!(off.len() + 1, n, "off-diagonal length");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(T::zero());
    let mut z = vec![T::zero(); if last_components { n } else { 0 }];
    if last_components {
        z[n - 1] = T::one();
    }
    let two: T = lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence { iterations: iter, residual: wide(e[l].abs()) });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if last_components {
                    let f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));
    let vals = idx.iter().map(|&i| d[i]).collect();
    let last = if last_components { idx.iter().map(|&i| z[i]).collect() } else { Vec::new() };
    Ok((vals, last))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_laplacian() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(k pi / (n + 1))
        let n = 12;
        let (v, last) = tridiagonal_eigen(&vec![2.0; n], &vec![-1.0; n - 1], true).unwrap();
        for (k, val) in v.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((n - k) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((val - exact).abs() < 1e-13);
        }
        // eigenvector j has last entry sqrt(2/(n+1)) sin(j n pi/(n+1))
        for (k, z) in last.iter().enumerate() {
            let j = (n - k) as f64;
            let exact =
                (2.0 / (n as f64 + 1.0)).sqrt() * (j * n as f64 * std::f64::consts::PI / (n as f64 + 1.0)).sin();
            assert!((z.abs() - exact.abs()).abs() < 1e-12);
        }
    }
}
