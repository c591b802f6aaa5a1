//! Adaptive Gauss–Kronrod (7/15) quadrature over a finite interval.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, wide, Real};

/// Values that can be integrated: real or complex scalars.
pub trait QuadValue<T: Real>: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, k: T) -> Self;
    fn magnitude(self) -> T;
}

impl<T: Real> QuadValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: T) -> Self {
        self * k
    }
    fn magnitude(self) -> T {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: T) -> Self {
        self * k
    }
    fn magnitude(self) -> T {
        self.norm()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Tolerances and subdivision budget.
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

fn kronrod<T: Real, V: QuadValue<T>, F: FnMut(T) -> V>(f: &mut F, a: T, b: T) -> (V, T) {
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    let fc = f(mid);
    let mut k = fc.scale(lit(WGK[7]));
    let mut g = fc.scale(lit(WG[3]));
    for j in 0..7 {
        let dx = half * lit(XGK[j]);
        let s = f(mid - dx).add(f(mid + dx));
        k = k.add(s.scale(lit(WGK[j])));
        if j % 2 == 1 {
            g = g.add(s.scale(lit(WG[j / 2])));
        }
    }
    let k = k.scale(half);
    let g = g.scale(half);
    let err = k.add(g.scale(-T::one())).magnitude();
    (k, err)
}

/// Integrates `f` over `[a, b]` with global adaptive bisection.
pub fn integrate<T: Real, V: QuadValue<T>, F: FnMut(T) -> V>(mut f: F, a: T, b: T, opts: QuadOptions) -> Result<V> {
    let (v0, e0) = kronrod(&mut f, a, b);
    let mut parts = vec![(a, b, v0, e0)];
    let mut total = v0;
    let mut err = e0;
    let eps = T::epsilon() * lit(50.0);
    loop {
        let tol = lit::<T>(opts.abs_tol).max(lit::<T>(opts.rel_tol) * total.magnitude());
        if err <= tol {
            return Ok(total);
        }
        if parts.len() >= opts.max_intervals {
            break;
        }
        let (idx, _) =
            parts.iter().enumerate().fold((0, -T::one()), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, v, e) = parts.swap_remove(idx);
        let mid = (lo + hi) * lit(0.5);
        if (hi - lo) <= eps * (lo.abs() + hi.abs()) {
            // interval cannot be split further; keep its contribution
            parts.push((lo, hi, v, T::zero()));
            err = err - e;
            continue;
        }
        let (vl, el) = kronrod(&mut f, lo, mid);
        let (vr, er) = kronrod(&mut f, mid, hi);
        total = total.add(v.scale(-T::one())).add(vl).add(vr);
        err = err - e + el + er;
        parts.push((lo, mid, vl, el));
        parts.push((mid, hi, vr, er));
        if err < T::zero() {
            err = parts.iter().fold(T::zero(), |s, p| s + p.3);
        }
    }
    // recompute from the pieces to shed accumulated cancellation
    let total = parts.iter().fold(V::zero(), |s, p| s.add(p.2));
    let err = parts.iter().fold(T::zero(), |s, p| s + p.3);
    let tol = lit::<T>(opts.abs_tol).max(lit::<T>(opts.rel_tol) * total.magnitude());
    if err <= tol * lit(100.0) {
        Ok(total)
    } else {
        Err(Error::NoConvergence { iterations: parts.len(), residual: wide(err) })
    }
}
