//! Self-consistent equations for the Stieltjes transforms of the limiting
//! spectral distribution, conditional on the weights or integrated over
//! their law.
//!
//! With x standing for m₁, both model classes reduce to the scalar equation
//!
//!   F(x, z) = κσ · Σᵢ fᵢ σᵢ / (−z + σᵢ w(x)) − x = 0,
//!   w(x)    = κw · E[s / (1 + s x)],
//!
//! where fᵢ are the population frequencies, E is the average over the
//! realized ξ² or the expectation under the law, and
//! (κσ, κw) = (φ, 1) for separable data and (1, 1/φ) for elliptical data.

mod edge;

pub use edge::{
    classify_regime, edge, edge_coupled, edge_location, edge_weibull_regime, mu1_divergent, predict_lambda1,
    varsigma_constants, D1Rule, EdgeReport, LimitFamily, Mu1, Prediction, Regime, RegimeReport, Standardization,
    Varsigma,
};

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::matrix_model::ModelClass;
use crate::population::PopulationSpec;
use crate::quadrature::QuadValue;
use crate::scalar::{count, lit, wide, Real};
use crate::weight_laws::WeightLaw;

/// Source of the weight average in the equations.
#[derive(Clone, Debug, PartialEq)]
pub enum Weights<T> {
    /// Realized ξ²; `law` is optional metadata (needed for bounded-support
    /// quantities such as the support edge l).
    Conditional {
        xi2: Vec<T>,
        law: Option<WeightLaw<T>>,
    },
    Unconditional(WeightLaw<T>),
}

/// Everything the equations depend on.
#[derive(Clone, Debug)]
pub struct SolverEnv<T = f64> {
    class: ModelClass,
    pop: PopulationSpec<T>,
    atoms: Vec<(T, T)>,
    weights: Weights<T>,
    p: usize,
    n: usize,
}

/// Solution of the equations at one spectral parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StieltjesTriple<T> {
    pub m1: Complex<T>,
    pub m2: Complex<T>,
    /// Stieltjes transform of the limiting law of Q.
    pub m: Complex<T>,
    /// |F(m1, z)|.
    pub residual: T,
}

impl<T: Real> SolverEnv<T> {
    /// Conditional system from realized weights; n is their count.
    pub fn conditional(
        class: ModelClass,
        pop: PopulationSpec<T>,
        xi2: Vec<T>,
        law: Option<WeightLaw<T>>,
    ) -> Result<Self> {
        if xi2.is_empty() {
            return invalid("need at least one weight");
        }
        if let Some(v) = xi2.iter().find(|v| !(**v > T::zero() && v.is_finite())) {
            return invalid(format!("conditional weights must be positive, got {v}"));
        }
        let n = xi2.len();
        Ok(Self::build(class, pop, Weights::Conditional { xi2, law }, n))
    }

    /// Unconditional system for the law at sample size n.
    pub fn unconditional(class: ModelClass, pop: PopulationSpec<T>, law: WeightLaw<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("n must be at least 1");
        }
        Ok(Self::build(class, pop, Weights::Unconditional(law), n))
    }

    fn build(class: ModelClass, pop: PopulationSpec<T>, weights: Weights<T>, n: usize) -> Self {
        let atoms = pop.atoms();
        let p = pop.p();
        SolverEnv { class, pop, atoms, weights, p, n }
    }

    pub fn class(&self) -> ModelClass {
        self.class
    }
    pub fn population(&self) -> &PopulationSpec<T> {
        &self.pop
    }
    pub fn weights(&self) -> &Weights<T> {
        &self.weights
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn n(&self) -> usize {
        self.n
    }

    /// φ = p / n.
    pub fn phi(&self) -> T {
        count::<T>(self.p) / count::<T>(self.n)
    }

    pub fn law(&self) -> Option<&WeightLaw<T>> {
        match &self.weights {
            Weights::Conditional { law, .. } => law.as_ref(),
            Weights::Unconditional(law) => Some(law),
        }
    }

    pub fn is_conditional(&self) -> bool {
        matches!(self.weights, Weights::Conditional { .. })
    }

    pub(crate) fn kappa_sigma(&self) -> T {
        match self.class {
            ModelClass::Separable => self.phi(),
            ModelClass::Elliptical => T::one(),
        }
    }

    pub(crate) fn kappa_w(&self) -> T {
        match self.class {
            ModelClass::Separable => T::one(),
            ModelClass::Elliptical => T::one() / self.phi(),
        }
    }

    /// Largest weight: max ξ² (conditional) or the support supremum.
    pub(crate) fn weight_sup(&self) -> Option<T> {
        match &self.weights {
            Weights::Conditional { xi2, .. } => Some(xi2.iter().copied().fold(T::zero(), T::max)),
            Weights::Unconditional(law) => law.support_sup(),
        }
    }

    /// Average of f over the weights (sample mean or expectation).
    pub(crate) fn weight_mean<V: QuadValue<T>, F: FnMut(T) -> V>(&self, mut f: F) -> Result<V> {
        match &self.weights {
            Weights::Conditional { xi2, .. } => {
                let s = xi2.iter().fold(V::zero(), |acc, &x| acc.add(f(x)));
                Ok(s.scale(T::one() / count::<T>(xi2.len())))
            }
            Weights::Unconditional(law) => law.expect(f),
        }
    }

    /// (w(x), w'(x)) at complex x.
    fn w_dw(&self, x: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        let kw = self.kappa_w();
        let one = Complex::new(T::one(), T::zero());
        match &self.weights {
            Weights::Conditional { xi2, .. } => {
                let (mut a, mut b) = (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()));
                for &s in xi2 {
                    let r = one / (one + x * s);
                    a = a + r * s;
                    b = b + r * r * (s * s);
                }
                let k = kw / count::<T>(xi2.len());
                Ok((a * k, -b * k))
            }
            Weights::Unconditional(law) => {
                let a: Complex<T> = law.expect(|s| Complex::new(s, T::zero()) / (one + x * s))?;
                let b: Complex<T> = law.expect(|s| {
                    let r = one / (one + x * s);
                    r * r * (s * s)
                })?;
                Ok((a * kw, -b * kw))
            }
        }
    }

    /// (A, ∂A/∂w, ∂A/∂z) for A(w, z) = κσ Σ fσ / (σ w − z).
    fn a_terms(&self, w: Complex<T>, z: Complex<T>) -> (Complex<T>, Complex<T>, Complex<T>) {
        let zero = Complex::new(T::zero(), T::zero());
        let (mut a, mut aw, mut az) = (zero, zero, zero);
        for &(s, f) in &self.atoms {
            let r = Complex::new(T::one(), T::zero()) / (w * s - z);
            a = a + r * (f * s);
            aw = aw - r * r * (f * s * s);
            az = az + r * r * (f * s);
        }
        let k = self.kappa_sigma();
        (a * k, aw * k, az * k)
    }

    /// F(x, z) and ∂F/∂x.
    fn f_and_df(&self, x: Complex<T>, z: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        let (w, dw) = self.w_dw(x)?;
        let (a, aw, _) = self.a_terms(w, z);
        Ok((a - x, aw * dw - Complex::new(T::one(), T::zero())))
    }

    /// Recovers the triple from m1.
    pub fn triple(&self, m1: Complex<T>, z: Complex<T>) -> Result<StieltjesTriple<T>> {
        let (w, dw) = self.w_dw(m1)?;
        let (a, _, _) = self.a_terms(w, z);
        let _ = dw;
        let m2 = -w / z;
        let mut m = Complex::new(T::zero(), T::zero());
        for &(s, f) in &self.atoms {
            m = m + Complex::new(f, T::zero()) / (w * s - z);
        }
        Ok(StieltjesTriple { m1, m2, m, residual: (a - m1).norm() })
    }
}

pub(crate) fn solver_tol<T: Real>() -> T {
    (T::epsilon() * lit(500.0)).max(lit(1e-13))
}

fn newton<T: Real>(env: &SolverEnv<T>, z: Complex<T>, m0: Complex<T>, tol: T) -> Result<Option<Complex<T>>> {
    let mut m = m0;
    for _ in 0..60 {
        let (f, df) = env.f_and_df(m, z)?;
        if f.norm() <= tol {
            return Ok(if m.im > T::zero() { Some(m) } else { None });
        }
        if df.norm() == T::zero() {
            return Ok(None);
        }
        let mut step = f / df;
        // stay in the upper half plane
        let mut tries = 0;
        while (m - step).im <= T::zero() && tries < 40 {
            step = step * lit::<T>(0.5);
            tries += 1;
        }
        if tries == 40 || !step.re.is_finite() || !step.im.is_finite() {
            return Ok(None);
        }
        m = m - step;
    }
    let (f, _) = env.f_and_df(m, z)?;
    Ok(if f.norm() <= tol && m.im > T::zero() { Some(m) } else { None })
}

/// Solves F(m1, z) = 0 for Im z > 0.
pub fn solve_m1<T: Real>(z: Complex<T>, env: &SolverEnv<T>) -> Result<StieltjesTriple<T>> {
    solve_m1_from(z, env, None)
}

/// As [`solve_m1`], trying Newton from `warm` first.
pub fn solve_m1_from<T: Real>(
    z: Complex<T>,
    env: &SolverEnv<T>,
    warm: Option<Complex<T>>,
) -> Result<StieltjesTriple<T>> {
    if !(z.im > T::zero()) {
        return Err(Error::InvalidParameter(format!("Im z must be positive, got {}", z.im)));
    }
    let tol = solver_tol::<T>();
    if let Some(w0) = warm {
        if w0.im > T::zero() {
            if let Some(m) = newton(env, z, w0, tol)? {
                return env.triple(m, z);
            }
        }
    }
    let init = -Complex::new(env.kappa_sigma() * env.pop.sigma_bar(), T::zero()) / z;
    let mut m = init;
    let mut omega: T = lit(0.5);
    let mut prev = T::infinity();
    let max_iter = 20_000;
    let mut last = T::infinity();
    for it in 0..max_iter {
        let (f, _) = env.f_and_df(m, z)?;
        let res = f.norm();
        last = res;
        if res <= tol && m.im > T::zero() {
            return env.triple(m, z);
        }
        if res < lit(1e-4) || it % 32 == 31 {
            if let Some(mn) = newton(env, z, m, tol)? {
                return env.triple(mn, z);
            }
        }
        if res > prev && omega > lit(0.1) {
            omega = lit(0.1);
        }
        prev = res;
        let next = m + f * omega;
        if next.im <= T::zero() || !next.re.is_finite() {
            omega = omega * lit(0.5);
            m = init;
            prev = T::infinity();
            continue;
        }
        m = next;
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: wide(last) })
}

/// Solves at E + iη by continuation from a large imaginary part, which keeps
/// Newton on the physical branch close to the real axis.
pub fn solve_m1_near_real<T: Real>(e: T, eta: T, env: &SolverEnv<T>) -> Result<StieltjesTriple<T>> {
    let mut h = (e.abs() + T::one()).max(eta);
    let mut sol = solve_m1(Complex::new(e, h), env)?;
    while h > eta {
        h = (h * lit(0.25)).max(eta);
        sol = solve_m1_from(Complex::new(e, h), env, Some(sol.m1))?;
    }
    Ok(sol)
}

/// Density ρ(E) ≈ Im m(E + iη)/π with one Richardson step in η.
pub fn density<T: Real>(e: T, env: &SolverEnv<T>, eta: T) -> Result<T> {
    if !(eta > T::zero()) {
        return Err(Error::InvalidParameter("eta must be positive".into()));
    }
    let s2 = solve_m1_near_real(e, eta + eta, env)?;
    let s1 = solve_m1_from(Complex::new(e, eta), env, Some(s2.m1))?;
    let r = (lit::<T>(2.0) * s1.m.im - s2.m.im) / T::PI();
    Ok(r.max(T::zero()))
}

/// Default η for density evaluation at support scale `scale`.
pub fn default_eta<T: Real>(scale: T) -> T {
    (scale.abs() * lit(1e-4)).max(lit(1e-6))
}
