//! Right edge of the limiting density, its classification, and the resulting
//! λ₁ predictions.
//!
//! On the real axis left of zero write F(x, y) = A(w(x), y) − x with
//! A(w, y) = κσ Σ fσ/(σw − y). For each x in (−1/s_max, 0) the equation
//! F(x, y) = 0 has a unique root y(x) > σ₁w(x). A square-root edge is a
//! critical point of that curve, where ∂F/∂x = 0; if none exists before the
//! support boundary x = −1/l the edge sits at the boundary (Weibull regime).

use super::{density, SolverEnv, Weights};
use crate::error::{Error, Result};
use crate::scalar::{count, lit, wide, Real};
use crate::weight_laws::TailClass;

/// Scale constants at the edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Varsigma<T> {
    pub s1: T,
    pub s2: T,
    pub s3: T,
    pub s4: T,
    pub vartheta: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime<T> {
    Weibull { d: T },
    Gaussian,
    TwMixture { gamma: T },
}

impl<T: Real> Regime<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Weibull { .. } => "Weibull",
            Regime::Gaussian => "Gaussian",
            Regime::TwMixture { .. } => "TWMixture",
        }
    }
}

/// Limit law of the standardized λ₁.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LimitFamily<T> {
    Frechet {
        alpha: T,
    },
    Gumbel,
    /// Reversed Weibull with the given shape.
    Weibull {
        shape: T,
    },
    Normal,
    /// Scaling only; the mixture law itself is not evaluated.
    TracyWidomMixture,
    /// No fluctuation term.
    Degenerate,
}

/// (λ₁ − center) / scale converges to `family`; `exponent` is the power of n
/// in 1/scale (zero when the scale comes from bₙ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standardization<T> {
    pub center: T,
    pub scale: T,
    pub exponent: T,
    pub family: LimitFamily<T>,
}

impl<T: Real> Standardization<T> {
    pub fn apply(&self, lambda1: T) -> T {
        (lambda1 - self.center) / self.scale
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeReport<T> {
    pub l_plus: T,
    pub m1_at_edge: T,
    pub varsigma: Varsigma<T>,
    pub regime: Regime<T>,
    pub standardization: Standardization<T>,
    /// |F| and |∂F/∂x| at the reported edge.
    pub residuals: [T; 2],
    /// R² of the square-root density fit (TW-mixture regime only).
    pub gamma_fit_r2: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeReport<T> {
    pub regime: Regime<T>,
    pub rationale: String,
    pub inv_phi: T,
    /// ς₃ at the candidate boundary edge; infinite when d ≤ 1.
    pub varsigma3: T,
    /// TW-mixture only: whether ϑ exceeds n^(−1/3).
    pub vartheta_dominates: Option<bool>,
}

/// Rule for the regularizer d₁ in the μ₁ equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum D1Rule<T> {
    /// n^(1/α − ε) for polynomial tails, 1 for exponential tails.
    Auto {
        eps: T,
    },
    Fixed(T),
}

impl<T: Real> Default for D1Rule<T> {
    fn default() -> Self {
        D1Rule::Auto { eps: lit(0.01) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mu1<T> {
    pub mu1: T,
    pub d1: T,
    /// Left end of the bracket; h(μ) = 1 has its root above it.
    pub a: T,
    pub residual: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction<T> {
    pub point: T,
    pub standardization: Standardization<T>,
    pub regime: Option<Regime<T>>,
    pub mu1: Option<Mu1<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Class<T> {
    Weibull { d: T },
    Gaussian,
    Tw,
}

// ---------------------------------------------------------------------------
// real-axis building blocks

/// (w, w', w'') at real x.
fn w_real<T: Real>(env: &SolverEnv<T>, x: T, second: bool) -> Result<(T, T, T)> {
    let kw = env.kappa_w();
    let (a, b, c) = match &env.weights {
        Weights::Conditional { xi2, .. } => {
            let (mut a, mut b, mut c) = (T::zero(), T::zero(), T::zero());
            for &s in xi2 {
                let r = s / (T::one() + s * x);
                a = a + r;
                b = b + r * r;
                c = c + r * r * r;
            }
            let k = T::one() / count::<T>(xi2.len());
            (a * k, b * k, c * k)
        }
        Weights::Unconditional(law) => {
            let a: T = law.expect(|s| s / (T::one() + s * x))?;
            let b: T = law.expect(|s| {
                let r = s / (T::one() + s * x);
                r * r
            })?;
            let c: T = if second {
                law.expect(|s| {
                    let r = s / (T::one() + s * x);
                    r * r * r
                })?
            } else {
                T::zero()
            };
            (a, b, c)
        }
    };
    Ok((kw * a, -kw * b, lit::<T>(2.0) * kw * c))
}

/// (A, A_w, A_y, A_ww, A_wy) at real (w, y) with y > σ₁w.
fn a_real<T: Real>(env: &SolverEnv<T>, w: T, y: T) -> [T; 5] {
    let mut out = [T::zero(); 5];
    let two: T = lit(2.0);
    for &(s, f) in &env.atoms {
        let r = T::one() / (s * w - y);
        let r2 = r * r;
        out[0] = out[0] + f * s * r;
        out[1] = out[1] - f * s * s * r2;
        out[2] = out[2] + f * s * r2;
        out[3] = out[3] + two * f * s * s * s * r2 * r;
        out[4] = out[4] - two * f * s * s * r2 * r;
    }
    let k = env.kappa_sigma();
    out.map(|v| v * k)
}

fn sigma1<T: Real>(env: &SolverEnv<T>) -> T {
    env.atoms[0].0
}

/// Root y of A(w, y) = x above σ₁w, for x < 0.
fn y_of<T: Real>(env: &SolverEnv<T>, w: T, x: T) -> Result<T> {
    let base = sigma1(env) * w;
    let g = |y: T| a_real(env, w, y)[0] - x;
    let mut step = (env.kappa_sigma() * env.pop.sigma_bar() / x.abs()).max(base.abs() * lit(1e-8)).max(lit(1e-300));
    let mut hi = base + step;
    let mut guard = 0;
    while g(hi) <= T::zero() {
        step = step + step;
        hi = base + step;
        guard += 1;
        if guard > 400 {
            return Err(Error::NoConvergence { iterations: guard, residual: wide(g(hi)) });
        }
    }
    let mut lo = base;
    let mut y = hi;
    for _ in 0..300 {
        let v = a_real(env, w, y);
        let gv = v[0] - x;
        if gv.abs() <= T::epsilon() * x.abs() {
            break;
        }
        if gv > T::zero() {
            hi = y;
        } else {
            lo = y;
        }
        if (hi - lo) <= T::epsilon() * lit::<T>(4.0) * hi.abs() {
            break;
        }
        let newton = y - gv / v[2];
        y = if newton > lo && newton < hi && v[2] > T::zero() { newton } else { lo + (hi - lo) * lit(0.5) };
    }
    Ok(y)
}

struct CurvePoint<T> {
    x: T,
    y: T,
    g: T,
}

fn curve<T: Real>(env: &SolverEnv<T>, x: T) -> Result<CurvePoint<T>> {
    let (w, dw, _) = w_real(env, x, false)?;
    if !(w > T::zero()) || !w.is_finite() {
        return Err(Error::AssumptionViolated(format!("w({x}) = {w} is not positive and finite")));
    }
    let y = y_of(env, w, x)?;
    let a = a_real(env, w, y);
    Ok(CurvePoint { x, y, g: a[1] * dw - T::one() })
}

/// Fractions t in (0, 1), increasing, geometric toward both ends.
fn scan_grid<T: Real>(finest: f64) -> Vec<T> {
    let mut t: Vec<f64> = Vec::new();
    for k in 0..40 {
        t.push(1e-3 * 10f64.powf(k as f64 * 2.0 / 40.0));
    }
    for k in 0..=120 {
        t.push(0.1 + 0.85 * k as f64 / 120.0);
    }
    let top = -finest.log10();
    let steps = (top * 12.0).ceil() as usize;
    for k in 0..=steps {
        let e = 1.3 + (top - 1.3) * k as f64 / steps as f64;
        t.push(1.0 - 10f64.powf(-e));
    }
    t.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    t.dedup();
    t.into_iter().map(lit).collect()
}

fn bounded_l<T: Real>(env: &SolverEnv<T>) -> Option<T> {
    match env.law().map(|l| l.tail_class()) {
        Some(TailClass::BoundedTail { l, .. }) => Some(l),
        Some(TailClass::Degenerate { c }) => Some(c),
        _ => None,
    }
}

fn tail_d<T: Real>(env: &SolverEnv<T>) -> Result<Option<T>> {
    match env.law().map(|l| l.tail_class()) {
        Some(TailClass::BoundedTail { d, .. }) => Ok(Some(d)),
        Some(TailClass::Degenerate { .. }) => Ok(None),
        Some(_) => Err(Error::UnsupportedTail("edge analysis needs a bounded weight law".into())),
        None => Err(Error::InvalidParameter("edge analysis needs the weight law".into())),
    }
}

// ---------------------------------------------------------------------------
// constants

fn s1_s2<T: Real>(env: &SolverEnv<T>, l: T) -> Result<(T, T)> {
    let kw = env.kappa_w();
    if let Weights::Unconditional(law) = &env.weights {
        match law.tail_class() {
            TailClass::Degenerate { .. } => return Ok((T::infinity(), T::infinity())),
            TailClass::BoundedTail { d, .. } => {
                let s2: T = if d > T::zero() { law.expect(|s| l * s / (l - s))? } else { T::infinity() };
                let s1: T = if d > T::one() {
                    law.expect(|s| {
                        let r = l * s / (l - s);
                        r * r
                    })?
                } else {
                    T::infinity()
                };
                return Ok((kw * s1, kw * s2));
            }
            _ => {}
        }
    }
    let s2: T = env.weight_mean(|s| if s < l { l * s / (l - s) } else { T::infinity() })?;
    let s1: T = env.weight_mean(|s| {
        if s < l {
            let r = l * s / (l - s);
            r * r
        } else {
            T::infinity()
        }
    })?;
    Ok((kw * s1, kw * s2))
}

fn s3_s4<T: Real>(env: &SolverEnv<T>, s1: T, s2: T, l_plus: T) -> (T, T) {
    if !s2.is_finite() {
        return (T::infinity(), T::infinity());
    }
    let (mut a, mut b) = (T::zero(), T::zero());
    for &(s, f) in &env.atoms {
        let r = T::one() / (l_plus - s * s2);
        a = a + f * s * s * r * r;
        b = b + f * s * r * r;
    }
    let ks = env.kappa_sigma();
    (ks / env.phi() * s1 * a, ks * b)
}

fn vartheta<T: Real>(env: &SolverEnv<T>, x: T) -> Result<T> {
    if env.law().is_some_and(|l| l.is_degenerate()) && !env.is_conditional() {
        return Ok(T::zero());
    }
    let kw = env.kappa_w();
    let m1: T = env.weight_mean(|s| s / (T::one() + s * x))?;
    let m2: T = env.weight_mean(|s| {
        let r = s / (T::one() + s * x);
        r * r
    })?;
    Ok((kw * kw * (m2 - m1 * m1)).max(T::zero()))
}

/// ς₁…ς₄ at edge `l_plus` and ϑ at `m1_at_edge`. ς's are infinite where the
/// defining integrals diverge and NaN when no support bound l is known.
pub fn varsigma_constants<T: Real>(env: &SolverEnv<T>, l_plus: T, m1_at_edge: T) -> Result<Varsigma<T>> {
    let vt = vartheta(env, m1_at_edge)?;
    let Some(l) = bounded_l(env) else {
        let nan = T::nan();
        return Ok(Varsigma { s1: nan, s2: nan, s3: nan, s4: nan, vartheta: vt });
    };
    let (s1, s2) = s1_s2(env, l)?;
    let (s3, s4) = s3_s4(env, s1, s2, l_plus);
    Ok(Varsigma { s1, s2, s3, s4, vartheta: vt })
}

/// Root of κσ Σ f lσ/(L − σς₂) = 1 above σ₁ς₂.
fn boundary_edge<T: Real>(env: &SolverEnv<T>, l: T, s2: T) -> Result<(T, T)> {
    let ks = env.kappa_sigma();
    let g = |big_l: T| {
        let mut acc = T::zero();
        for &(s, f) in &env.atoms {
            acc = acc + f * l * s / (big_l - s * s2);
        }
        ks * acc - T::one()
    };
    let base = sigma1(env) * s2;
    let mut step = ks * l * env.pop.sigma_bar();
    let mut guard = 0;
    while g(base + step) > T::zero() {
        step = step + step;
        guard += 1;
        if guard > 400 {
            return Err(Error::NoConvergence { iterations: guard, residual: wide(g(base + step)) });
        }
    }
    let (mut lo, mut hi) = (base, base + step);
    for _ in 0..400 {
        let mid = lo + (hi - lo) * lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = lo + (hi - lo) * lit(0.5);
    Ok((root, g(root).abs()))
}

// ---------------------------------------------------------------------------
// classification

fn critical_check<T: Real>(inv_phi: T, s3: T) -> Result<()> {
    if (inv_phi - s3).abs() <= lit(1e-6) {
        return Err(Error::CriticalCase { inv_phi: wide(inv_phi), varsigma3: wide(s3) });
    }
    Ok(())
}

fn classify_inner<T: Real>(env: &SolverEnv<T>) -> Result<(Class<T>, T, String)> {
    let inv_phi = T::one() / env.phi();
    let Some(d) = tail_d(env)? else {
        return Ok((Class::Tw, T::infinity(), "degenerate weights: square-root edge of Marchenko-Pastur type".into()));
    };
    if d <= T::one() {
        return Ok((Class::Tw, T::infinity(), format!("edge exponent d = {d} <= 1: square-root edge")));
    }
    let l = bounded_l(env).expect("bounded");
    let (s1, s2) = s1_s2(env, l)?;
    let (lw, _) = boundary_edge(env, l, s2)?;
    let (s3, _) = s3_s4(env, s1, s2, lw);
    critical_check(inv_phi, s3)?;
    if inv_phi > s3 {
        Ok((Class::Weibull { d }, s3, format!("d = {d} > 1 and 1/phi = {inv_phi} > varsigma3 = {s3}")))
    } else {
        Ok((Class::Gaussian, s3, format!("d = {d} > 1 and 1/phi = {inv_phi} < varsigma3 = {s3}")))
    }
}

/// Regime of the edge: Weibull iff d > 1 and φ⁻¹ > ς₃, Gaussian iff d > 1 and
/// φ⁻¹ < ς₃, TW mixture iff d ≤ 1.
pub fn classify_regime<T: Real>(env: &SolverEnv<T>) -> Result<RegimeReport<T>> {
    let (class, s3, rationale) = classify_inner(env)?;
    let inv_phi = T::one() / env.phi();
    Ok(match class {
        Class::Weibull { d } => {
            RegimeReport { regime: Regime::Weibull { d }, rationale, inv_phi, varsigma3: s3, vartheta_dominates: None }
        }
        Class::Gaussian => {
            RegimeReport { regime: Regime::Gaussian, rationale, inv_phi, varsigma3: s3, vartheta_dominates: None }
        }
        Class::Tw => {
            let rep = edge_coupled(env)?;
            let cut = count::<T>(env.n()).powf(lit(-1.0 / 3.0));
            let dom = rep.varsigma.vartheta > cut;
            RegimeReport {
                regime: rep.regime,
                rationale: format!(
                    "{rationale}; vartheta = {} {} n^(-1/3) = {cut}",
                    rep.varsigma.vartheta,
                    if dom { ">" } else { "<=" }
                ),
                inv_phi,
                varsigma3: s3,
                vartheta_dominates: Some(dom),
            }
        }
    })
}

// ---------------------------------------------------------------------------
// edges

/// Edge at the support boundary m₁ = −1/l (Weibull regime).
pub fn edge_weibull_regime<T: Real>(env: &SolverEnv<T>) -> Result<EdgeReport<T>> {
    let d = match tail_d(env)? {
        Some(d) if d > T::one() => d,
        _ => return Err(Error::WrongRegime("boundary edge needs d > 1; use edge_coupled".into())),
    };
    let law = *env.law().expect("law present");
    let TailClass::BoundedTail { l, b, .. } = law.tail_class() else { unreachable!() };
    let (s1, s2) = s1_s2(env, l)?;
    let (l_plus, res) = boundary_edge(env, l, s2)?;
    let (s3, s4) = s3_s4(env, s1, s2, l_plus);
    let phi = env.phi();
    critical_check(T::one() / phi, s3)?;
    if T::one() / phi < s3 {
        return Err(Error::WrongRegime(format!(
            "1/phi = {} < varsigma3 = {s3}: square-root edge, use edge_coupled",
            T::one() / phi
        )));
    }
    let x_e = -T::one() / l;
    let vt = vartheta(env, x_e)?;
    let c = (T::one() - phi * s3) / s4;
    let rate = (b * count::<T>(env.n())).powf(T::one() / (d + T::one()));
    Ok(EdgeReport {
        l_plus,
        m1_at_edge: x_e,
        varsigma: Varsigma { s1, s2, s3, s4, vartheta: vt },
        regime: Regime::Weibull { d },
        standardization: Standardization {
            center: l_plus,
            scale: c / (l * l * rate),
            exponent: T::one() / (d + T::one()),
            family: LimitFamily::Weibull { shape: d + T::one() },
        },
        residuals: [res, T::zero()],
        gamma_fit_r2: None,
    })
}

/// Critical point of the real curve nearest to zero: (x, y, |F|, |∂ₓF|).
fn critical_point<T: Real>(env: &SolverEnv<T>) -> Result<(T, T, T, T)> {
    let sup = env.weight_sup().ok_or_else(|| Error::UnsupportedTail("weights have unbounded support".into()))?;
    let x_lo = -T::one() / sup;
    let finest = if env.is_conditional() { wide(T::epsilon()) * 1e3 } else { 1e-10 };
    let grid = scan_grid::<T>(finest.max(1e-14));
    let mut prev: Option<CurvePoint<T>> = None;
    let mut bracket = None;
    for &t in &grid {
        let x = x_lo * t;
        let pt = match curve(env, x) {
            Ok(p) => p,
            Err(e) => {
                if prev.is_some() && !env.is_conditional() {
                    break;
                }
                return Err(e);
            }
        };
        if pt.g >= T::zero() {
            match prev {
                Some(p) if p.g < T::zero() => {
                    bracket = Some((p.x, pt.x));
                    break;
                }
                Some(_) => unreachable!(),
                None => return Err(Error::AssumptionViolated("edge curve starts above criticality".into())),
            }
        }
        prev = Some(pt);
    }
    let Some((mut right, mut left)) = bracket else {
        return Err(Error::WrongRegime(
            "no square-root edge before the support boundary; use edge_weibull_regime".into(),
        ));
    };
    // right has G < 0, left has G >= 0
    for _ in 0..200 {
        let mid = right + (left - right) * lit(0.5);
        if mid >= right || mid <= left {
            break;
        }
        if curve(env, mid)?.g < T::zero() {
            right = mid;
        } else {
            left = mid;
        }
    }
    let mut x = right + (left - right) * lit(0.5);
    let mut y = curve(env, x)?.y;
    let resid = |x: T, y: T| -> Result<(T, T, [T; 4])> {
        let (w, dw, d2w) = w_real(env, x, true)?;
        let a = a_real(env, w, y);
        let f1 = a[0] - x;
        let f2 = a[1] * dw - T::one();
        let j = [f2, a[2], a[3] * dw * dw + a[1] * d2w, a[4] * dw];
        Ok((f1, f2, j))
    };
    let (mut f1, mut f2, mut j) = resid(x, y)?;
    for _ in 0..8 {
        let norm = f1.abs() + f2.abs();
        if norm <= T::epsilon() {
            break;
        }
        let det = j[0] * j[3] - j[1] * j[2];
        if det == T::zero() || !det.is_finite() {
            break;
        }
        let dx = (f1 * j[3] - j[1] * f2) / det;
        let dy = (j[0] * f2 - j[2] * f1) / det;
        let (nx, ny) = (x - dx, y - dy);
        if !(nx > x_lo && nx < T::zero()) {
            break;
        }
        let Ok((g1, g2, nj)) = resid(nx, ny) else { break };
        if g1.abs() + g2.abs() >= norm {
            break;
        }
        (x, y, f1, f2, j) = (nx, ny, g1, g2, nj);
    }
    Ok((x, y, f1.abs(), f2.abs()))
}

/// Least-squares fit ρ = c₁√κ + c₂κ; returns (c₁, c₂, R²).
fn sqrt_fit<T: Real>(kappas: &[T], rho: &[T]) -> (T, T, T) {
    let (mut saa, mut sab, mut sbb, mut say, mut sby) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (&k, &r) in kappas.iter().zip(rho) {
        let a = k.sqrt();
        saa = saa + a * a;
        sab = sab + a * k;
        sbb = sbb + k * k;
        say = say + a * r;
        sby = sby + k * r;
    }
    let det = saa * sbb - sab * sab;
    let c1 = (say * sbb - sab * sby) / det;
    let c2 = (saa * sby - sab * say) / det;
    let mean = rho.iter().copied().fold(T::zero(), |a, b| a + b) / count::<T>(rho.len());
    let (mut ss_res, mut ss_tot) = (T::zero(), T::zero());
    for (&k, &r) in kappas.iter().zip(rho) {
        let e = r - c1 * k.sqrt() - c2 * k;
        ss_res = ss_res + e * e;
        ss_tot = ss_tot + (r - mean) * (r - mean);
    }
    (c1, c2, T::one() - ss_res / ss_tot)
}

/// γ from ρ(L₊ − κ) ≈ π⁻¹γ^{3/2}√κ over κ ∈ [1e-4, 1e-2].
fn gamma_fit<T: Real>(env: &SolverEnv<T>, l_plus: T) -> Result<(T, T)> {
    let mut ks = Vec::new();
    let mut rs = Vec::new();
    for i in 0..13 {
        let k: T = lit(10f64.powf(-4.0 + 2.0 * i as f64 / 12.0));
        ks.push(k);
        rs.push(density(l_plus - k, env, k * lit(1e-2))?);
    }
    let (c1, _, r2) = sqrt_fit(&ks, &rs);
    Ok(((T::PI() * c1).powf(lit(2.0 / 3.0)), r2))
}

/// Square-root edge from the coupled pair F = 0, ∂ₓF = 0.
pub fn edge_coupled<T: Real>(env: &SolverEnv<T>) -> Result<EdgeReport<T>> {
    let (class, _, _) = match tail_d(env) {
        Ok(_) => classify_inner(env)?,
        // conditional systems without a bounded law still have a pole edge
        Err(_) if env.is_conditional() => (Class::Tw, T::infinity(), String::new()),
        Err(e) => return Err(e),
    };
    let (x, y, r1, r2) = critical_point(env)?;
    if let Some(l) = bounded_l(env) {
        if !(x > -T::one() / l) {
            return Err(Error::AssumptionViolated(format!("m1 at edge {x} is not above -1/l")));
        }
    }
    let vs = varsigma_constants(env, y, x)?;
    let n = count::<T>(env.n());
    let (regime, standardization, r2fit) = match class {
        Class::Gaussian => (
            Regime::Gaussian,
            Standardization {
                center: y,
                scale: (vs.vartheta / n).sqrt(),
                exponent: lit(0.5),
                family: LimitFamily::Normal,
            },
            None,
        ),
        Class::Weibull { .. } if !env.is_conditional() => {
            return Err(Error::WrongRegime("boundary edge regime; use edge_weibull_regime".into()))
        }
        _ => {
            let (gamma, r2) = gamma_fit(env, y)?;
            (
                Regime::TwMixture { gamma },
                Standardization {
                    center: y,
                    scale: n.powf(lit(-2.0 / 3.0)) / gamma,
                    exponent: lit(2.0 / 3.0),
                    family: LimitFamily::TracyWidomMixture,
                },
                Some(r2),
            )
        }
    };
    Ok(EdgeReport {
        l_plus: y,
        m1_at_edge: x,
        varsigma: vs,
        regime,
        standardization,
        residuals: [r1, r2],
        gamma_fit_r2: r2fit,
    })
}

/// Edge via whichever equation the regime calls for.
pub fn edge<T: Real>(env: &SolverEnv<T>) -> Result<EdgeReport<T>> {
    match classify_inner(env)?.0 {
        Class::Weibull { .. } => edge_weibull_regime(env),
        _ => edge_coupled(env),
    }
}

/// Square-root edge location and m₁ there, without constants or the γ fit.
pub fn edge_location<T: Real>(env: &SolverEnv<T>) -> Result<(T, T)> {
    let (x, y, _, _) = critical_point(env)?;
    Ok((y, x))
}

// ---------------------------------------------------------------------------
// unbounded weights

/// Largest root of h(μ) = 1 for the conditional system with unbounded weights.
pub fn mu1_divergent<T: Real>(env: &SolverEnv<T>, rule: D1Rule<T>) -> Result<Mu1<T>> {
    let Weights::Conditional { xi2, law } = &env.weights else {
        return Err(Error::InvalidParameter("mu1 needs realized weights".into()));
    };
    let d1 = match rule {
        D1Rule::Fixed(v) if v > T::zero() => v,
        D1Rule::Fixed(v) => return Err(Error::InvalidParameter(format!("d1 must be positive, got {v}"))),
        D1Rule::Auto { eps } => match law.map(|l| l.tail_class()) {
            Some(TailClass::PolyTail { alpha }) => count::<T>(env.n()).powf(T::one() / alpha - eps),
            Some(TailClass::ExpTail { .. }) => T::one(),
            _ => return Err(Error::UnsupportedTail("automatic d1 needs an unbounded weight law".into())),
        },
    };
    let top = xi2.iter().copied().fold(T::zero(), T::max);
    let t = top + d1;
    let sum: T = env.weight_mean(|s| s / (t - s))?;
    let big_s = env.kappa_w() * sum;
    let ks = env.kappa_sigma();
    let h = |mu: T| {
        let mut acc = T::zero();
        for &(s, f) in &env.atoms {
            acc = acc + f * s / (mu / t - s * big_s);
        }
        ks * acc
    };
    let a = sigma1(env) * t * big_s;
    let mut hi = a * lit(1e6);
    let mut doublings = 0;
    while h(hi) > T::one() {
        hi = hi + hi;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::NoConvergence { iterations: doublings, residual: wide(h(hi) - T::one()) });
        }
    }
    let mut lo = a;
    for _ in 0..400 {
        let mid = lo + (hi - lo) * lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu1 = lo + (hi - lo) * lit(0.5);
    Ok(Mu1 { mu1, d1, a, residual: (h(mu1) - T::one()).abs() })
}

/// Point prediction for λ₁ and the standardization of its limit law.
pub fn predict_lambda1<T: Real>(env: &SolverEnv<T>) -> Result<Prediction<T>> {
    let law = *env.law().ok_or_else(|| Error::InvalidParameter("prediction needs the weight law".into()))?;
    let n = env.n();
    let top = match &env.weights {
        Weights::Conditional { xi2, .. } => Some(xi2.iter().copied().fold(T::zero(), T::max)),
        Weights::Unconditional(_) => None,
    };
    match law.tail_class() {
        TailClass::PolyTail { .. } | TailClass::ExpTail { .. } => {
            let varphi = env.kappa_sigma() * env.pop.sigma_bar();
            let evt = law.evt_limit(n)?;
            let bn = law.b_n(n)?;
            let standardization = match evt.family {
                crate::weight_laws::EvtFamily::Frechet { alpha } => Standardization {
                    center: T::zero(),
                    scale: varphi * bn,
                    exponent: T::zero(),
                    family: LimitFamily::Frechet { alpha },
                },
                _ => Standardization {
                    center: varphi * bn,
                    scale: varphi * evt.scale,
                    exponent: T::zero(),
                    family: LimitFamily::Gumbel,
                },
            };
            let mu1 = if top.is_some() { Some(mu1_divergent(env, D1Rule::default())?) } else { None };
            Ok(Prediction { point: varphi * top.unwrap_or(bn), standardization, regime: None, mu1 })
        }
        TailClass::Degenerate { .. } => {
            let rep = edge_coupled(env)?;
            let standardization = Standardization {
                center: rep.l_plus,
                scale: T::zero(),
                exponent: T::zero(),
                family: LimitFamily::Degenerate,
            };
            Ok(Prediction { point: rep.l_plus, standardization, regime: Some(rep.regime), mu1: None })
        }
        TailClass::BoundedTail { l, .. } => {
            let rep = edge(env)?;
            let point = match (rep.regime, top) {
                (Regime::Weibull { .. }, Some(m)) => {
                    let c = (T::one() - env.phi() * rep.varsigma.s3) / rep.varsigma.s4;
                    rep.l_plus - c * (l - m) / (l * m)
                }
                _ => rep.l_plus,
            };
            Ok(Prediction { point, standardization: rep.standardization, regime: Some(rep.regime), mu1: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_model::ModelClass;
    use crate::population::PopulationSpec;
    use crate::weight_laws::WeightLaw;
    use approx::assert_relative_eq;

    fn env(class: ModelClass, law: WeightLaw<f64>, phi: f64) -> SolverEnv<f64> {
        let n = 1000;
        let p = (phi * n as f64).round() as usize;
        SolverEnv::unconditional(class, PopulationSpec::identity(p).unwrap(), law, n).unwrap()
    }

    fn beta13() -> WeightLaw<f64> {
        WeightLaw::scaled_beta(1.0, 1.0, 3.0).unwrap()
    }

    #[test]
    fn mp_edges() {
        for &phi in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            let e = env(ModelClass::Separable, WeightLaw::point_mass(1.0).unwrap(), phi);
            let rep = edge_coupled(&e).unwrap();
            let exact = (1.0 + phi.sqrt()).powi(2);
            assert!((rep.l_plus - exact).abs() < 1e-8, "phi {phi}: {} vs {exact}", rep.l_plus);
            assert_eq!(rep.varsigma.vartheta, 0.0);
            assert!(matches!(rep.regime, Regime::TwMixture { .. }));
        }
    }

    #[test]
    fn beta_constants_and_weibull_edge() {
        let e = env(ModelClass::Separable, beta13(), 2.0);
        let rep = edge_weibull_regime(&e).unwrap();
        let v = rep.varsigma;
        assert_relative_eq!(v.s1, 1.0, epsilon = 1e-9);
        assert_relative_eq!(v.s2, 0.5, epsilon = 1e-9);
        assert_relative_eq!(rep.l_plus, 2.5, epsilon = 1e-10);
        assert_relative_eq!(v.s3, 0.25, epsilon = 1e-9);
        assert_relative_eq!(v.s4, 0.5, epsilon = 1e-9);
        assert_eq!(rep.m1_at_edge, -1.0);
        assert!(matches!(classify_regime(&e).unwrap().regime, Regime::Weibull { .. }));

        let e4 = env(ModelClass::Separable, beta13(), 4.0);
        let rep4 = edge_weibull_regime(&e4).unwrap();
        assert_relative_eq!(rep4.l_plus, 4.5, epsilon = 1e-10);
        assert_relative_eq!(rep4.varsigma.s3, 1.0 / 16.0, epsilon = 1e-9);
    }

    #[test]
    fn elliptical_boundary_edge() {
        for &phi in &[2.0, 4.0] {
            let e = env(ModelClass::Elliptical, beta13(), phi);
            let rep = edge_weibull_regime(&e).unwrap();
            assert!(rep.residuals[0] <= 1e-10);
            assert_relative_eq!(rep.l_plus, 1.0 + 0.5 / phi, epsilon = 1e-9);
        }
    }

    #[test]
    fn gaussian_regime() {
        let e = env(ModelClass::Separable, beta13(), 0.5);
        assert!(matches!(edge_weibull_regime(&e), Err(Error::WrongRegime(_))));
        let rep = edge_coupled(&e).unwrap();
        assert_eq!(rep.regime, Regime::Gaussian);
        assert!(rep.residuals[0] <= 1e-8 && rep.residuals[1] <= 1e-8);
        assert!(rep.m1_at_edge > -1.0);
        assert!(1.0 / 0.5 < rep.varsigma.s3);
        assert!(rep.varsigma.vartheta > 0.0);
        assert_eq!(classify_regime(&e).unwrap().regime, Regime::Gaussian);
    }

    #[test]
    fn uniform_is_tw_mixture() {
        let e = env(ModelClass::Separable, WeightLaw::uniform(1.0).unwrap(), 1.0);
        let rep = edge_coupled(&e).unwrap();
        assert!(matches!(rep.regime, Regime::TwMixture { gamma } if gamma > 0.0));
        assert!(rep.gamma_fit_r2.unwrap() >= 0.99);
        assert!(density(rep.l_plus + 0.05, &e, 1e-4).unwrap() <= 1e-3);
        assert!(density(rep.l_plus - 0.05, &e, 1e-4).unwrap() > 0.0);
    }

    #[test]
    fn weibull_prediction_centering() {
        let pop = PopulationSpec::identity(4000).unwrap();
        let xi2 = beta13().sample_weights(2000, 11).unwrap();
        let top = xi2.iter().copied().fold(0.0, f64::max);
        let e = SolverEnv::conditional(ModelClass::Separable, pop, xi2, Some(beta13())).unwrap();
        let pred = predict_lambda1(&e).unwrap();
        let rep = edge_weibull_regime(&e).unwrap();
        let c = (1.0 - 2.0 * rep.varsigma.s3) / rep.varsigma.s4;
        assert_relative_eq!(pred.point, rep.l_plus - c * (1.0 - top) / top, epsilon = 1e-12);
        assert!((pred.point - (2.5 + top - 1.0)).abs() < 0.1);
    }

    #[test]
    fn point_mass_prediction_is_edge() {
        let e = env(ModelClass::Separable, WeightLaw::point_mass(1.0).unwrap(), 0.5);
        let pred = predict_lambda1(&e).unwrap();
        assert!((pred.point - (1.0 + 0.5f64.sqrt()).powi(2)).abs() < 1e-8);
        assert_eq!(pred.standardization.family, LimitFamily::Degenerate);
    }

    #[test]
    fn mu1_solves_h() {
        let pop = PopulationSpec::identity(1000).unwrap();
        let mut xi2: Vec<f64> = (0..2000).map(|i| 1.0 + (i % 17) as f64 * 0.1).collect();
        xi2[3] = 400.0;
        let law = WeightLaw::pareto(1.0, 3.0).unwrap();
        let e = SolverEnv::conditional(ModelClass::Separable, pop.clone(), xi2.clone(), Some(law)).unwrap();
        let m = mu1_divergent(&e, D1Rule::default()).unwrap();
        assert!(m.residual <= 1e-10);
        assert!((m.mu1 / (400.0 + m.d1) - 0.5).abs() < 0.1);
        xi2[3] = 800.0;
        let e2 = SolverEnv::conditional(ModelClass::Separable, pop, xi2, Some(law)).unwrap();
        let m2 = mu1_divergent(&e2, D1Rule::Fixed(m.d1)).unwrap();
        let ratio = m2.mu1 / m.mu1;
        assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn critical_case_is_an_error() {
        // separable, Σ = I, Beta(1,3): ς₃ at the boundary edge is 1/φ² so φ = 1 is critical
        let e = env(ModelClass::Separable, beta13(), 1.0);
        assert!(matches!(classify_regime(&e), Err(Error::CriticalCase { .. })));
    }
}
