//! Distributions of the squared weights ξ², with tail classes, moments and
//! extreme-value scalings.

use std::fmt;

use rand::distr::OpenClosed01;
use rand::Rng as _;
use rand_distr::{Beta, ChiSquared, Distribution, Exp, Gamma, Pareto, StudentT};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, QuadOptions, QuadValue};
use crate::scalar::{lit, wide, Real};
use crate::seed::{self, Rng};
use crate::special;

/// Parametric family of ξ².
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family<T> {
    Pareto {
        x_min: T,
        alpha: T,
    },
    Gamma {
        shape: T,
        rate: T,
    },
    Exponential {
        rate: T,
    },
    /// Square of a Student-t variable with `nu` degrees of freedom.
    SquaredStudentT {
        nu: T,
    },
    ChiSquared {
        k: T,
    },
    /// `l` times a Beta(a, b) variable.
    ScaledBeta {
        l: T,
        a: T,
        b: T,
    },
    /// Uniform on (0, l].
    Uniform {
        l: T,
    },
    /// Degenerate at `c`; only a test fixture.
    PointMass {
        c: T,
    },
}

/// Tail behaviour of ξ² near the top of its support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailClass<T> {
    /// P(ξ² > x) regularly varying with index `alpha`.
    PolyTail {
        alpha: T,
    },
    /// P(ξ² > x) = exp(-g(x)) with g growing like x^beta.
    ExpTail {
        beta: T,
    },
    /// Support (0, l] with 1 - F(x) ~ b (l - x)^(d+1).
    BoundedTail {
        l: T,
        d: T,
        b: T,
    },
    Degenerate {
        c: T,
    },
}

/// Extreme-value family of the standardized maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvtFamily<T> {
    Frechet {
        alpha: T,
    },
    Gumbel,
    /// Reversed Weibull G(x) = exp(-(-x)^shape) on x <= 0.
    Weibull {
        shape: T,
    },
}

impl<T: Real> EvtFamily<T> {
    /// Limit CDF.
    pub fn cdf(&self, x: T) -> T {
        match *self {
            EvtFamily::Frechet { alpha } => {
                if x <= T::zero() {
                    T::zero()
                } else {
                    (-x.powf(-alpha)).exp()
                }
            }
            EvtFamily::Gumbel => (-(-x).exp()).exp(),
            EvtFamily::Weibull { shape } => {
                if x >= T::zero() {
                    T::one()
                } else {
                    (-(-x).powf(shape)).exp()
                }
            }
        }
    }
}

/// Affine map taking a sample maximum to its limit law: (x - center) / scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvtLimit<T> {
    pub family: EvtFamily<T>,
    pub center: T,
    pub scale: T,
}

impl<T: Real> EvtLimit<T> {
    pub fn standardize(&self, x: T) -> T {
        (x - self.center) / self.scale
    }
}

/// A validated weight law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightLaw<T = f64> {
    family: Family<T>,
    violates_assumptions: bool,
}

pub(crate) fn default_quad<T: Real>() -> QuadOptions {
    let eps = wide(T::epsilon());
    QuadOptions { abs_tol: (1e4 * eps).max(1e-13), rel_tol: (1e4 * eps).max(1e-12), max_intervals: 4000 }
}

impl<T: Real> WeightLaw<T> {
    /// Builds a law satisfying the moment and tail requirements of the theory
    /// (tail index at least 2 for polynomial tails).
    pub fn new(family: Family<T>) -> Result<Self> {
        Self::check_params(&family)?;
        match family {
            Family::Pareto { alpha, .. } if alpha < lit(2.0) => {
                Err(Error::AssumptionViolated(format!("Pareto tail index {alpha} < 2; use WeightLaw::fixture")))
            }
            Family::SquaredStudentT { nu } if nu < lit(4.0) => Err(Error::AssumptionViolated(format!(
                "squared t with nu = {nu} has tail index {} < 2; use WeightLaw::fixture",
                nu / lit(2.0)
            ))),
            _ => Ok(WeightLaw { family, violates_assumptions: false }),
        }
    }

    /// Builds a law that may violate the tail-index requirement, as used by
    /// some simulation settings. Parameters must still be valid.
    pub fn fixture(family: Family<T>) -> Result<Self> {
        Self::check_params(&family)?;
        let strict = Self::new(family).is_ok();
        Ok(WeightLaw { family, violates_assumptions: !strict })
    }

    fn check_params(family: &Family<T>) -> Result<()> {
        let pos = |name: &str, v: T| -> Result<()> {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be positive and finite, got {v}"))
            }
        };
        match *family {
            Family::Pareto { x_min, alpha } => {
                pos("x_min", x_min)?;
                pos("alpha", alpha)
            }
            Family::Gamma { shape, rate } => {
                pos("shape", shape)?;
                pos("rate", rate)
            }
            Family::Exponential { rate } => pos("rate", rate),
            Family::SquaredStudentT { nu } => pos("nu", nu),
            Family::ChiSquared { k } => pos("k", k),
            Family::ScaledBeta { l, a, b } => {
                pos("l", l)?;
                pos("a", a)?;
                pos("b", b)
            }
            Family::Uniform { l } => pos("l", l),
            Family::PointMass { c } => pos("c", c),
        }
    }

    pub fn pareto(x_min: T, alpha: T) -> Result<Self> {
        Self::new(Family::Pareto { x_min, alpha })
    }
    pub fn gamma(shape: T, rate: T) -> Result<Self> {
        Self::new(Family::Gamma { shape, rate })
    }
    pub fn exponential(rate: T) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }
    pub fn chi_squared(k: T) -> Result<Self> {
        Self::new(Family::ChiSquared { k })
    }
    pub fn squared_student_t(nu: T) -> Result<Self> {
        Self::new(Family::SquaredStudentT { nu })
    }
    pub fn scaled_beta(l: T, a: T, b: T) -> Result<Self> {
        Self::new(Family::ScaledBeta { l, a, b })
    }
    pub fn uniform(l: T) -> Result<Self> {
        Self::new(Family::Uniform { l })
    }
    pub fn point_mass(c: T) -> Result<Self> {
        Self::new(Family::PointMass { c })
    }

    pub fn family(&self) -> Family<T> {
        self.family
    }

    /// True when the law was admitted through [`WeightLaw::fixture`] in
    /// violation of the tail-index requirement.
    pub fn violates_assumptions(&self) -> bool {
        self.violates_assumptions
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.family, Family::PointMass { .. })
    }

    pub fn tail_class(&self) -> TailClass<T> {
        match self.family {
            Family::Pareto { alpha, .. } => TailClass::PolyTail { alpha },
            Family::SquaredStudentT { nu } => TailClass::PolyTail { alpha: nu / lit(2.0) },
            Family::Gamma { .. } | Family::Exponential { .. } | Family::ChiSquared { .. } => {
                TailClass::ExpTail { beta: T::one() }
            }
            Family::ScaledBeta { l, a, b } => {
                let lnb = special::ln_beta(wide(a), wide(b));
                let bconst = (-wide(b) * wide(l).ln() - wide(b).ln() - lnb).exp();
                TailClass::BoundedTail { l, d: b - T::one(), b: lit(bconst) }
            }
            Family::Uniform { l } => TailClass::BoundedTail { l, d: T::zero(), b: T::one() / l },
            Family::PointMass { c } => TailClass::Degenerate { c },
        }
    }

    /// Right end of the support, if finite.
    pub fn support_sup(&self) -> Option<T> {
        match self.family {
            Family::ScaledBeta { l, .. } | Family::Uniform { l } => Some(l),
            Family::PointMass { c } => Some(c),
            _ => None,
        }
    }

    fn undefined(&self, order: u32) -> Error {
        Error::MomentUndefined { order, law: self.to_string() }
    }

    /// E ξ².
    pub fn mean(&self) -> Result<T> {
        let one = T::one();
        Ok(match self.family {
            Family::Pareto { x_min, alpha } => {
                if alpha <= one {
                    return Err(self.undefined(1));
                }
                alpha * x_min / (alpha - one)
            }
            Family::Gamma { shape, rate } => shape / rate,
            Family::Exponential { rate } => one / rate,
            Family::SquaredStudentT { nu } => {
                if nu <= lit(2.0) {
                    return Err(self.undefined(1));
                }
                nu / (nu - lit(2.0))
            }
            Family::ChiSquared { k } => k,
            Family::ScaledBeta { l, a, b } => l * a / (a + b),
            Family::Uniform { l } => l / lit(2.0),
            Family::PointMass { c } => c,
        })
    }

    /// E ξ⁴.
    pub fn second_moment(&self) -> Result<T> {
        let one = T::one();
        let two: T = lit(2.0);
        Ok(match self.family {
            Family::Pareto { x_min, alpha } => {
                if alpha <= two {
                    return Err(self.undefined(2));
                }
                alpha * x_min * x_min / (alpha - two)
            }
            Family::Gamma { shape, rate } => shape * (shape + one) / (rate * rate),
            Family::Exponential { rate } => two / (rate * rate),
            Family::SquaredStudentT { nu } => {
                if nu <= lit(4.0) {
                    return Err(self.undefined(2));
                }
                lit::<T>(3.0) * nu * nu / ((nu - two) * (nu - lit(4.0)))
            }
            Family::ChiSquared { k } => k * (k + two),
            Family::ScaledBeta { l, a, b } => l * l * a * (a + one) / ((a + b) * (a + b + one)),
            Family::Uniform { l } => l * l / lit(3.0),
            Family::PointMass { c } => c * c,
        })
    }

    /// (E ξ², E ξ⁴).
    pub fn moments(&self) -> Result<(T, T)> {
        Ok((self.mean()?, self.second_moment()?))
    }

    /// P(ξ² > x).
    pub fn survival(&self, x: T) -> T {
        let xf = wide(x);
        let s = match self.family {
            Family::Pareto { x_min, alpha } => {
                if x <= x_min {
                    1.0
                } else {
                    (wide(x_min) / xf).powf(wide(alpha))
                }
            }
            Family::Gamma { shape, rate } => special::gamma_q(wide(shape), wide(rate) * xf),
            Family::Exponential { rate } => (-wide(rate) * xf.max(0.0)).exp(),
            Family::SquaredStudentT { nu } => {
                if xf <= 0.0 {
                    1.0
                } else {
                    let nu = wide(nu);
                    special::beta_reg(nu / 2.0, 0.5, nu / (nu + xf))
                }
            }
            Family::ChiSquared { k } => special::gamma_q(wide(k) / 2.0, xf / 2.0),
            Family::ScaledBeta { l, a, b } => {
                let t = xf / wide(l);
                if t <= 0.0 {
                    1.0
                } else if t >= 1.0 {
                    0.0
                } else {
                    special::beta_reg(wide(b), wide(a), 1.0 - t)
                }
            }
            Family::Uniform { l } => (1.0 - xf / wide(l)).clamp(0.0, 1.0),
            Family::PointMass { c } => {
                if x < c {
                    1.0
                } else {
                    0.0
                }
            }
        };
        lit(s)
    }

    /// Tail-rate function g with P(ξ² > x) = exp(-g(x)), for exponential tails.
    pub fn tail_rate(&self, x: T) -> Result<T> {
        match self.family {
            Family::Exponential { rate } => Ok(rate * x),
            Family::Gamma { .. } | Family::ChiSquared { .. } => Ok(-self.survival(x).ln()),
            _ => Err(Error::UnsupportedTail(format!("{self} has no exponential tail-rate function"))),
        }
    }

    /// Derivative g'(x), computed as the hazard rate density / survival.
    pub fn tail_rate_derivative(&self, x: T) -> Result<T> {
        let (shape, rate) = match self.family {
            Family::Exponential { rate } => return Ok(rate),
            Family::Gamma { shape, rate } => (wide(shape), wide(rate)),
            Family::ChiSquared { k } => (wide(k) / 2.0, 0.5),
            _ => return Err(Error::UnsupportedTail(format!("{self} has no exponential tail-rate function"))),
        };
        let xf = wide(x);
        let ln_pdf = shape * rate.ln() + (shape - 1.0) * xf.ln() - rate * xf - special::ln_gamma(shape);
        Ok(lit((ln_pdf - wide(self.survival(x)).ln()).exp()))
    }

    /// b_n = inf{x : 1 - F(x) <= 1/n} for unbounded laws.
    pub fn b_n(&self, n: usize) -> Result<T> {
        if n == 0 {
            return invalid("n must be at least 1");
        }
        let nf = n as f64;
        match self.family {
            Family::Pareto { x_min, alpha } => return Ok(x_min * lit::<T>(nf.powf(1.0 / wide(alpha)))),
            Family::Exponential { rate } => return Ok(lit::<T>(nf.ln()) / rate),
            Family::ScaledBeta { .. } | Family::Uniform { .. } | Family::PointMass { .. } => {
                return Err(Error::UnsupportedTail(format!("{self} has bounded support")))
            }
            _ => {}
        }
        if n == 1 {
            return Ok(T::zero());
        }
        let target = -(nf.ln());
        let ln_s = |x: f64| wide(self.survival(lit(x))).ln();
        let mut hi = wide(self.mean().unwrap_or(T::one())).max(1.0);
        let mut guard = 0;
        while ln_s(hi) > target {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::NoConvergence { iterations: guard, residual: ln_s(hi) - target });
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ln_s(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(lit(hi))
    }

    /// Standardization of the maximum of `n` draws.
    pub fn evt_limit(&self, n: usize) -> Result<EvtLimit<T>> {
        match self.tail_class() {
            TailClass::PolyTail { alpha } => {
                Ok(EvtLimit { family: EvtFamily::Frechet { alpha }, center: T::zero(), scale: self.b_n(n)? })
            }
            TailClass::ExpTail { .. } => {
                let b = self.b_n(n)?;
                Ok(EvtLimit { family: EvtFamily::Gumbel, center: b, scale: T::one() / self.tail_rate_derivative(b)? })
            }
            TailClass::BoundedTail { l, d, b } => Ok(EvtLimit {
                family: EvtFamily::Weibull { shape: d + T::one() },
                center: l,
                scale: (b * crate::scalar::count::<T>(n)).powf(-T::one() / (d + T::one())),
            }),
            TailClass::Degenerate { .. } => Err(Error::Degenerate(format!("{self} has no extreme-value limit"))),
        }
    }

    /// One draw of ξ² from `rng`, in double precision.
    pub(crate) fn draw_f64(&self, rng: &mut Rng) -> f64 {
        match self.family {
            Family::Pareto { x_min, alpha } => Pareto::new(wide(x_min), wide(alpha)).expect("valid").sample(rng),
            Family::Gamma { shape, rate } => Gamma::new(wide(shape), 1.0 / wide(rate)).expect("valid").sample(rng),
            Family::Exponential { rate } => Exp::new(wide(rate)).expect("valid").sample(rng),
            Family::SquaredStudentT { nu } => {
                let t: f64 = StudentT::new(wide(nu)).expect("valid").sample(rng);
                t * t
            }
            Family::ChiSquared { k } => ChiSquared::new(wide(k)).expect("valid").sample(rng),
            Family::ScaledBeta { l, a, b } => {
                let t: f64 = Beta::new(wide(a), wide(b)).expect("valid").sample(rng);
                wide(l) * t
            }
            Family::Uniform { l } => wide(l) * rng.sample::<f64, _>(OpenClosed01),
            Family::PointMass { c } => wide(c),
        }
    }

    /// Fills `out` with i.i.d. draws from `rng`.
    pub fn fill(&self, rng: &mut Rng, out: &mut [T]) {
        match self.family {
            // batch samplers avoid re-validating parameters per draw
            Family::Gamma { shape, rate } => {
                let d = Gamma::new(wide(shape), 1.0 / wide(rate)).expect("valid");
                out.iter_mut().for_each(|x| *x = lit(d.sample(rng)));
            }
            Family::SquaredStudentT { nu } => {
                let d = StudentT::new(wide(nu)).expect("valid");
                out.iter_mut().for_each(|x| {
                    let t: f64 = d.sample(rng);
                    *x = lit(t * t)
                });
            }
            Family::ScaledBeta { l, a, b } => {
                let d = Beta::new(wide(a), wide(b)).expect("valid");
                let l = wide(l);
                out.iter_mut().for_each(|x| *x = lit(l * d.sample(rng)));
            }
            _ => out.iter_mut().for_each(|x| *x = lit(self.draw_f64(rng))),
        }
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample_weights(&self, n: usize, seed: u64) -> Result<Vec<T>> {
        if n == 0 {
            return invalid("n must be at least 1");
        }
        let mut rng = seed::rng(seed, &[]);
        let mut out = vec![T::zero(); n];
        self.fill(&mut rng, &mut out);
        Ok(out)
    }

    /// E f(ξ²) by adaptive quadrature after a family-specific change of
    /// variables that maps the support to (0, 1) and tames endpoint
    /// singularities.
    pub fn expect<V: QuadValue<T>, F: FnMut(T) -> V>(&self, mut f: F) -> Result<V> {
        let opts = default_quad::<T>();
        let one = T::one();
        let two: T = lit(2.0);
        match self.family {
            Family::PointMass { c } => Ok(f(c)),
            Family::ScaledBeta { .. } | Family::Uniform { .. } => {
                let (l, a, b) = match self.family {
                    Family::ScaledBeta { l, a, b } => (l, a, b),
                    Family::Uniform { l } => (l, one, one),
                    _ => unreachable!(),
                };
                // t = sin^2(pi v / 2)
                let ln_norm: T = lit(-special::ln_beta(wide(a), wide(b)));
                let pi = T::PI();
                let ea = two * a - one;
                let eb = two * b - one;
                integrate(
                    |v: T| {
                        let h = pi * v / two;
                        let (s, c) = h.sin_cos();
                        let w = pi * (ea * s.ln() + eb * c.ln() + ln_norm).exp();
                        if w == T::zero() {
                            V::zero()
                        } else {
                            f(l * s * s).scale(w)
                        }
                    },
                    T::zero(),
                    one,
                    opts,
                )
            }
            Family::Gamma { .. } | Family::Exponential { .. } | Family::ChiSquared { .. } => {
                let (k, rate) = match self.family {
                    Family::Gamma { shape, rate } => (shape, rate),
                    Family::Exponential { rate } => (one, rate),
                    Family::ChiSquared { k } => (k / two, lit(0.5)),
                    _ => unreachable!(),
                };
                // s = u^2 / rate with u = v / (1 - v)
                let lg: T = lit(special::ln_gamma(wide(k)));
                let e = two * k - one;
                integrate(
                    |v: T| {
                        let u = v / (one - v);
                        let ln_w = e * u.ln() - u * u - lg - two * (one - v).ln();
                        if ln_w < lit(-700.0) {
                            V::zero()
                        } else {
                            f(u * u / rate).scale(two * ln_w.exp())
                        }
                    },
                    T::zero(),
                    one,
                    opts,
                )
            }
            Family::SquaredStudentT { nu } => {
                // s = u^2 with u = v / (1 - v)
                let ln_norm: T = lit(-0.5 * wide(nu).ln() - special::ln_beta(0.5, wide(nu) / 2.0));
                let ex = -(nu + one) / two;
                integrate(
                    |v: T| {
                        let u = v / (one - v);
                        let ln_w = ex * (one + u * u / nu).ln() + ln_norm - two * (one - v).ln();
                        f(u * u).scale(two * ln_w.exp())
                    },
                    T::zero(),
                    one,
                    opts,
                )
            }
            Family::Pareto { x_min, alpha } => {
                // quantile transform
                integrate(|v: T| f(x_min * (one - v).powf(-one / alpha)), T::zero(), one, opts)
            }
        }
    }
}

impl<T: Real> fmt::Display for WeightLaw<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Pareto { x_min, alpha } => write!(f, "Pareto{{{x_min},{alpha}}}"),
            Family::Gamma { shape, rate } => write!(f, "Gamma{{{shape},{rate}}}"),
            Family::Exponential { rate } => write!(f, "Exponential{{{rate}}}"),
            Family::SquaredStudentT { nu } => write!(f, "SquaredStudentT{{{nu}}}"),
            Family::ChiSquared { k } => write!(f, "ChiSquared{{{k}}}"),
            Family::ScaledBeta { l, a, b } => write!(f, "ScaledBeta{{{l},{a},{b}}}"),
            Family::Uniform { l } => write!(f, "Uniform{{0,{l}}}"),
            Family::PointMass { c } => write!(f, "PointMass{{{c}}}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    type L = WeightLaw<f64>;

    #[test]
    fn closed_form_moments() {
        assert_eq!(L::exponential(1.0).unwrap().moments().unwrap(), (1.0, 2.0));
        assert_eq!(L::chi_squared(1.0).unwrap().moments().unwrap(), (1.0, 3.0));
        let (m1, m2) = L::gamma(15.0, 15.0).unwrap().moments().unwrap();
        assert_abs_diff_eq!(m1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m2, 16.0 / 15.0, epsilon = 1e-15);
    }

    #[test]
    fn quadrature_moments_agree_with_closed_forms() {
        let laws = [
            L::pareto(0.75, 3.5).unwrap(),
            L::gamma(5.0, 5.0).unwrap(),
            L::chi_squared(1.0).unwrap(),
            L::exponential(2.0).unwrap(),
            L::squared_student_t(7.0).unwrap(),
            L::scaled_beta(2.0, 0.7, 3.0).unwrap(),
            L::uniform(1.5).unwrap(),
        ];
        for law in laws {
            let q1: f64 = law.expect(|s| s).unwrap();
            let q0: f64 = law.expect(|_| 1.0).unwrap();
            assert!((q0 - 1.0).abs() < 1e-9, "{law}: mass {q0}");
            assert!((q1 - law.mean().unwrap()).abs() < 1e-8 * law.mean().unwrap(), "{law}: {q1}");
            if !matches!(law.family(), Family::Pareto { .. }) {
                let q2: f64 = law.expect(|s| s * s).unwrap();
                let m2 = law.second_moment().unwrap();
                assert!((q2 - m2).abs() < 1e-8 * m2, "{law}: {q2} vs {m2}");
            }
        }
    }

    #[test]
    fn undefined_moments() {
        let t3 = L::fixture(Family::SquaredStudentT { nu: 3.0 }).unwrap();
        assert!(t3.violates_assumptions());
        assert!(t3.mean().is_ok());
        assert!(matches!(t3.second_moment(), Err(Error::MomentUndefined { order: 2, .. })));
        assert!(matches!(L::squared_student_t(3.0), Err(Error::AssumptionViolated(_))));
        assert!(matches!(L::pareto(1.0, 1.5), Err(Error::AssumptionViolated(_))));
        assert!(matches!(L::gamma(-1.0, 1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn thresholds() {
        let p = L::pareto(0.75, 3.0).unwrap();
        assert_abs_diff_eq!(p.b_n(1000).unwrap(), 7.5, epsilon = 1e-12);
        assert_eq!(p.b_n(1).unwrap(), 0.75);
        let e = L::exponential(1.0).unwrap();
        assert_abs_diff_eq!(e.b_n(1000).unwrap(), 1000f64.ln(), epsilon = 1e-12);
        for law in [L::gamma(5.0, 5.0).unwrap(), L::chi_squared(1.0).unwrap()] {
            let b = law.b_n(400).unwrap();
            assert!((law.survival(b) - 1.0 / 400.0).abs() < 1e-10);
        }
        assert!(matches!(L::uniform(1.0).unwrap().b_n(10), Err(Error::UnsupportedTail(_))));
    }

    #[test]
    fn evt_limits() {
        let f = L::pareto(0.75, 3.0).unwrap().evt_limit(1000).unwrap();
        assert_eq!(f.family, EvtFamily::Frechet { alpha: 3.0 });
        assert_eq!(f.center, 0.0);
        assert_abs_diff_eq!(f.scale, 7.5, epsilon = 1e-12);
        let g = L::exponential(1.0).unwrap().evt_limit(1000).unwrap();
        assert_eq!(g.family, EvtFamily::Gumbel);
        assert_abs_diff_eq!(g.center, 1000f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(g.scale, 1.0, epsilon = 1e-12);
        let w = L::scaled_beta(1.0, 1.0, 3.0).unwrap().evt_limit(1000).unwrap();
        assert_eq!(w.family, EvtFamily::Weibull { shape: 3.0 });
        assert_abs_diff_eq!(w.center, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.scale, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn gamma_hazard_matches_finite_difference() {
        let law = L::gamma(5.0, 5.0).unwrap();
        let x = 2.3;
        let h = 1e-6;
        let fd = (law.tail_rate(x + h).unwrap() - law.tail_rate(x - h).unwrap()) / (2.0 * h);
        assert!((fd - law.tail_rate_derivative(x).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn bounded_edge_constant() {
        for law in [L::scaled_beta(1.0, 1.0, 3.0).unwrap(), L::scaled_beta(2.0, 2.0, 1.5).unwrap()] {
            let TailClass::BoundedTail { l, d, b } = law.tail_class() else { panic!() };
            let mut x = l - 0.05;
            while x < l - 1e-4 {
                let r = law.survival(x) / (l - x).powf(d + 1.0);
                assert!(r > b / 2.0 && r < 2.0 * b, "{law}: ratio {r} vs {b}");
                x += 1e-3;
            }
        }
    }

    #[test]
    fn samples_respect_support_and_mean() {
        let p: Vec<f64> = L::pareto(0.75, 3.0).unwrap().sample_weights(5, 7).unwrap();
        assert!(p.iter().all(|&x| x >= 0.75));
        let b = L::scaled_beta(1.0, 1.0, 3.0).unwrap().sample_weights(100_000, 1).unwrap();
        assert!(b.iter().all(|&x| x < 1.0 && x > 0.0));
        assert!((crate::scalar::mean(&b) - 0.25).abs() < 0.01);
        let e = L::exponential(1.0).unwrap().sample_weights(100_000, 2).unwrap();
        assert!((crate::scalar::mean(&e) - 1.0).abs() < 0.02);
        assert_eq!(e, L::exponential(1.0).unwrap().sample_weights(100_000, 2).unwrap());
    }

    #[test]
    fn single_precision_law() {
        let law = WeightLaw::<f32>::scaled_beta(1.0, 1.0, 3.0).unwrap();
        let m: f32 = law.expect(|s| s).unwrap();
        assert!((m - 0.25).abs() < 1e-5);
        let xs = law.sample_weights(10, 3).unwrap();
        assert!(xs.iter().all(|&x| x > 0.0 && x <= 1.0));
    }
}
