//! Multiplier-bootstrap test for the number of factors.
//!
//! Reweighting the columns of the observed matrix by i.i.d. ξ²ₖ and comparing
//! the r0-th eigenvalue with the original one gives, for an outlier, a ratio
//! that is asymptotically normal around Eξ² with variance 𝖵/n.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::{top_eigenvalues, DiagGramOp, GramOp, LanczosOptions, Mat};
use crate::matrix_model::{DataSample, EntryDist, ModelKind};
use crate::scalar::{count, lit, wide, Real};
use crate::seed;
use crate::special;
use crate::weight_laws::WeightLaw;

#[derive(Clone, Debug, PartialEq)]
pub struct FactorTestConfig<T = f64> {
    /// Hypothesized lower bound on the factor count, at least 1.
    pub r0: usize,
    /// Bootstrap replicates B.
    pub replicates: usize,
    pub alpha: f64,
    /// Multiplier law.
    pub law: WeightLaw<T>,
    /// Fourth moment of the √n-standardized entries.
    pub m4: T,
}

impl<T: Real> FactorTestConfig<T> {
    pub fn new(r0: usize, replicates: usize, alpha: f64, law: WeightLaw<T>, m4: T) -> Result<Self> {
        let c = FactorTestConfig { r0, replicates, alpha, law, m4 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r0 == 0 {
            return invalid("r0 must be at least 1");
        }
        if self.replicates == 0 {
            return invalid("need at least one bootstrap replicate");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        Ok(())
    }

    pub fn with_r0(&self, r0: usize) -> Self {
        FactorTestConfig { r0, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorOutcome<T = f64> {
    pub p_value: f64,
    pub reject: bool,
    pub b_star: usize,
    pub lambda_hat: T,
    pub v: T,
    /// Standardized replicates √(n/𝖵)(μₖ/λ̂ − Eξ²).
    pub t_stats: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorCount {
    pub r_hat: usize,
    /// (r0, p-value) for every test that was run.
    pub p_values: Vec<(usize, f64)>,
}

/// Simulated factor data with its generating pieces.
#[derive(Clone, Debug)]
pub struct FactorData<T = f64> {
    pub sample: DataSample<T>,
    /// p × r loading matrix L′.
    pub loadings: Mat<T>,
    pub true_r: usize,
}

/// 𝖵 = m4·Eξ⁴ − (Eξ²)².
pub fn v_constant<T: Real>(m4: T, law: &WeightLaw<T>) -> Result<T> {
    let (m2, m4x) = law.moments()?;
    let v = m4 * m4x - m2 * m2;
    if !(v > T::zero()) {
        return Err(Error::Degenerate(format!("V = {v} is not positive for m4 = {m4} and {law}")));
    }
    Ok(v)
}

/// Ŷ = δ L′F + E with Gaussian loadings (row covariance diag(`loadings_cov`)),
/// standard Gaussian scores and noise.
pub fn build_factor_data<T: Real>(
    p: usize,
    n: usize,
    delta: T,
    loadings_cov: &[T],
    seed: u64,
) -> Result<FactorData<T>> {
    if p == 0 || n == 0 {
        return invalid("p and n must be positive");
    }
    if loadings_cov.iter().any(|v| !(*v > T::zero())) {
        return invalid("loading variances must be positive");
    }
    if delta < T::zero() {
        return invalid("factor strength must be nonnegative");
    }
    let r = loadings_cov.len();
    let mut rng = seed::rng(seed, &[]);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut l = Mat::zeros(p, r);
    for i in 0..p {
        for (j, &v) in loadings_cov.iter().enumerate() {
            l.set(i, j, lit::<T>(normal() * wide(v).sqrt()));
        }
    }
    let f = Mat::from_fn(r, n, |_, _| lit::<T>(normal()));
    let mut y = Mat::from_fn(p, n, |_, _| lit::<T>(normal()));
    if delta > T::zero() {
        for j in 0..n {
            for k in 0..r {
                let c = delta * f.get(k, j);
                let lk = l.col(k).to_vec();
                for (yi, li) in y.col_mut(j).iter_mut().zip(lk) {
                    *yi = *yi + c * li;
                }
            }
        }
    }
    let sample = DataSample {
        y,
        weights: vec![T::one(); n],
        kind: ModelKind::SeparableIid { entry: EntryDist::Gaussian },
        sigmas: vec![T::one(); p],
        law: None,
    };
    let true_r = if delta > T::zero() { r } else { 0 };
    Ok(FactorData { sample, loadings: l, true_r })
}

/// Reusable per-matrix state for bootstrap eigenvalues.
pub struct BootstrapPlan<'a, T> {
    y: &'a Mat<T>,
    /// YᵀY when n ≤ p.
    gram: Option<Mat<T>>,
    opts: LanczosOptions,
}

impl<'a, T: Real> BootstrapPlan<'a, T> {
    pub fn new(y: &'a Mat<T>) -> Self {
        let gram = if y.cols() <= y.rows() { Some(y.gram_cols()) } else { None };
        BootstrapPlan { y, gram, opts: LanczosOptions::default() }
    }

    /// Top `k` eigenvalues of Y diag(w) Yᵀ.
    pub fn top(&self, w: &[T], k: usize) -> Result<Vec<T>> {
        match &self.gram {
            Some(g) => top_eigenvalues(&DiagGramOp::new(g, w.iter().map(|v| v.sqrt()).collect()), k, self.opts),
            None => top_eigenvalues(&GramOp::new(self.y, Some(w)), k, self.opts),
        }
    }

    fn replicate(&self, law: &WeightLaw<T>, r0: usize, root: u64, k: u64) -> Result<T> {
        let mut rng = seed::rng(root, &[k]);
        let w: Vec<T> = (0..self.y.cols()).map(|_| lit(law.draw_f64(&mut rng))).collect();
        Ok(self.top(&w, r0)?[r0 - 1])
    }

    /// r0-th eigenvalue of Y Dₖ² Yᵀ for k = 1..B; at most 1% of replicates may fail.
    pub fn eigs(&self, law: &WeightLaw<T>, replicates: usize, r0: usize, root: u64) -> Result<Vec<T>> {
        if r0 == 0 || r0 > self.y.rows().min(self.y.cols()) {
            return invalid(format!("r0 = {r0} is outside 1..=min(p, n)"));
        }
        let raw: Vec<Result<T>> =
            (0..replicates as u64).into_par_iter().map(|k| self.replicate(law, r0, root, k)).collect();
        let failed = raw.iter().filter(|r| r.is_err()).count();
        if failed * 100 > replicates {
            return Err(raw.into_iter().find_map(|r| r.err()).expect("failure present"));
        }
        Ok(raw.into_iter().filter_map(|r| r.ok()).collect())
    }
}

/// r0-th bootstrap eigenvalue for each of `replicates` multiplier draws.
pub fn bootstrap_eigs<T: Real>(
    y: &Mat<T>,
    law: &WeightLaw<T>,
    replicates: usize,
    r0: usize,
    root_seed: u64,
) -> Result<Vec<T>> {
    BootstrapPlan::new(y).eigs(law, replicates, r0, root_seed)
}

fn run_test<T: Real>(
    plan: &BootstrapPlan<'_, T>,
    cfg: &FactorTestConfig<T>,
    root_seed: u64,
) -> Result<FactorOutcome<T>> {
    cfg.validate()?;
    if cfg.law.is_degenerate() {
        return Err(Error::Degenerate("point-mass multipliers give zero bootstrap variance".into()));
    }
    let v = v_constant(cfg.m4, &cfg.law)?;
    let mean = cfg.law.mean()?;
    let ones = vec![T::one(); plan.y.cols()];
    let lambda_hat = *plan
        .top(&ones, cfg.r0)?
        .get(cfg.r0 - 1)
        .ok_or_else(|| Error::InvalidParameter(format!("r0 = {} exceeds the matrix rank bound", cfg.r0)))?;
    if !(lambda_hat > T::zero()) {
        return Err(Error::Degenerate(format!("eigenvalue {} of the data is zero", cfg.r0)));
    }
    let mu = plan.eigs(&cfg.law, cfg.replicates, cfg.r0, root_seed)?;
    let scale = (count::<T>(plan.y.cols()) / v).sqrt();
    let t_stats: Vec<T> = mu.iter().map(|&m| scale * (m / lambda_hat - mean)).collect();
    let z: T = lit(special::normal_quantile(1.0 - cfg.alpha / 2.0));
    let b_star = t_stats.iter().filter(|t| t.abs() <= z).count();
    let p_value = 1.0 - b_star as f64 / t_stats.len() as f64;
    Ok(FactorOutcome { p_value, reject: p_value < cfg.alpha, b_star, lambda_hat, v, t_stats })
}

/// Resampling test of H₀: r ≥ r0.
pub fn algorithm1_test<T: Real>(y: &Mat<T>, cfg: &FactorTestConfig<T>, root_seed: u64) -> Result<FactorOutcome<T>> {
    run_test(&BootstrapPlan::new(y), cfg, root_seed)
}

/// Tests r0 = 1, 2, … upward and returns the last accepted r0 before the
/// first rejection (0 when r0 = 1 is rejected).
pub fn estimate_r_factor<T: Real>(
    y: &Mat<T>,
    template: &FactorTestConfig<T>,
    r_star: usize,
    root_seed: u64,
) -> Result<FactorCount> {
    let plan = BootstrapPlan::new(y);
    let mut p_values = Vec::new();
    let mut r_hat = 0;
    for r0 in 1..=r_star.min(y.rows().min(y.cols())) {
        let out = run_test(&plan, &template.with_r0(r0), seed::derive(root_seed, &[r0 as u64]))?;
        p_values.push((r0, out.p_value));
        if out.reject {
            break;
        }
        r_hat = r0;
    }
    Ok(FactorCount { r_hat, p_values })
}
