//! Spike counting for elliptical data from gap ratios of the top eigenvalues.
//!
//! Under the null the non-outlier eigenvalues inherit the spacings of the
//! largest weights, so the critical values come from the same gap-ratio
//! functionals evaluated on simulated order statistics of ξ².

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, wide, Real};
use crate::seed;
use crate::weight_laws::{TailClass, WeightLaw};

/// Which statistic is used; each has its own calibrating functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpikeStatistic {
    /// max over r0 < i ≤ r* of (μᵢ − μᵢ₊₁)/(μᵢ₊₁ − μᵢ₊₂), calibrated by G1.
    Max,
    /// (μ_{r0+1} − μ_{r0+2})/(μ_{r*+1} − μ_{r*+2}), calibrated by G2.
    Ratio,
}

impl SpikeStatistic {
    pub fn name(self) -> &'static str {
        match self {
            SpikeStatistic::Max => "T",
            SpikeStatistic::Ratio => "T_r0",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikeTestConfig<T = f64> {
    pub r0: usize,
    pub r_star: usize,
    pub alpha: f64,
    /// Calibration replicates N.
    pub replicates: usize,
    pub law: WeightLaw<T>,
    pub n: usize,
}

impl<T: Real> SpikeTestConfig<T> {
    pub fn new(r0: usize, r_star: usize, alpha: f64, replicates: usize, law: WeightLaw<T>, n: usize) -> Result<Self> {
        let cfg = SpikeTestConfig { r0, r_star, alpha, replicates, law, n };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r0 >= self.r_star {
            return invalid(format!("need r0 < r_star, got {} and {}", self.r0, self.r_star));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.replicates < 100 {
            return invalid(format!("need at least 100 calibration replicates, got {}", self.replicates));
        }
        if self.n < self.r_star + 2 {
            return invalid(format!("n = {} is too small for r_star = {}", self.n, self.r_star));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestOutcome<T = f64> {
    pub statistic: T,
    pub critical_value: T,
    pub reject: bool,
    pub calibration_seed: Option<u64>,
    /// Consecutive gap ratios for i = r0+1 ..= r*.
    pub gap_ratios: Vec<T>,
    /// A zero denominator gap was met.
    pub degenerate: bool,
}

/// Sequential estimate of the number of spikes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpikeCount {
    pub r_hat: usize,
    /// No r0 below r* was accepted.
    pub saturated: bool,
}

fn ratio<T: Real>(num: T, den: T) -> T {
    if den > T::zero() {
        num / den
    } else {
        T::infinity()
    }
}

fn check_len<T>(eigs: &[T], r_star: usize) -> Result<()> {
    if eigs.len() < r_star + 2 {
        return invalid(format!("need at least {} eigenvalues, got {}", r_star + 2, eigs.len()));
    }
    Ok(())
}

/// (μᵢ − μᵢ₊₁)/(μᵢ₊₁ − μᵢ₊₂) for i = r0+1 ..= r* (1-based, descending input).
pub fn gap_ratios<T: Real>(eigs: &[T], r0: usize, r_star: usize) -> Result<Vec<T>> {
    check_len(eigs, r_star)?;
    Ok((r0..r_star).map(|i| ratio(eigs[i] - eigs[i + 1], eigs[i + 1] - eigs[i + 2])).collect())
}

/// Max gap ratio over r0 < i ≤ r*; +∞ on a zero denominator.
pub fn stat_t<T: Real>(eigs: &[T], r0: usize, r_star: usize) -> Result<T> {
    if r0 >= r_star {
        return invalid("need r0 < r_star");
    }
    Ok(gap_ratios(eigs, r0, r_star)?.into_iter().fold(T::neg_infinity(), T::max))
}

/// First gap after r0 over the gap after r*.
pub fn stat_t_r0<T: Real>(eigs: &[T], r0: usize, r_star: usize) -> Result<T> {
    if r0 >= r_star {
        return invalid("need r0 < r_star");
    }
    check_len(eigs, r_star)?;
    Ok(ratio(eigs[r0] - eigs[r0 + 1], eigs[r_star] - eigs[r_star + 1]))
}

pub fn statistic<T: Real>(which: SpikeStatistic, eigs: &[T], r0: usize, r_star: usize) -> Result<T> {
    match which {
        SpikeStatistic::Max => stat_t(eigs, r0, r_star),
        SpikeStatistic::Ratio => stat_t_r0(eigs, r0, r_star),
    }
}

/// Gap-ratio functional on descending order statistics `top` with k = r* − r0.
fn g_functional(which: SpikeStatistic, top: &[f64], k: usize) -> f64 {
    match which {
        SpikeStatistic::Max => {
            (0..k).map(|i| ratio(top[i] - top[i + 1], top[i + 1] - top[i + 2])).fold(f64::NEG_INFINITY, f64::max)
        }
        SpikeStatistic::Ratio => ratio(top[0] - top[1], top[k] - top[k + 1]),
    }
}

/// Descending top `k` of `n` draws; redrawn while any of the needed gaps is zero.
fn top_order_stats<T: Real>(law: &WeightLaw<T>, n: usize, k: usize, root: u64, rep: u64) -> (Vec<f64>, usize) {
    let mut rng = seed::rng(root, &[rep]);
    let mut buf = vec![0.0; n];
    let mut redraws = 0;
    loop {
        for v in buf.iter_mut() {
            *v = law.draw_f64(&mut rng);
        }
        let cut = n - k;
        buf.select_nth_unstable_by(cut, |a, b| a.partial_cmp(b).expect("finite"));
        let mut top = buf[cut..].to_vec();
        top.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        if top.windows(2).all(|w| w[0] > w[1]) || redraws >= 100 {
            return (top, redraws);
        }
        redraws += 1;
    }
}

/// Empirical null sample of the calibrating functional.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration<T = f64> {
    pub which: SpikeStatistic,
    pub r0: usize,
    pub r_star: usize,
    pub alpha: f64,
    pub delta: T,
    /// Replicates redrawn because of tied order statistics.
    pub resamples: usize,
    pub seed: u64,
    /// Sorted functional values.
    pub sample: Vec<f64>,
}

impl<T: Real> Calibration<T> {
    /// Fraction of the null sample at or above `stat`.
    pub fn p_value(&self, stat: T) -> f64 {
        let s = wide(stat);
        let below = self.sample.partition_point(|&g| g < s);
        (self.sample.len() - below) as f64 / self.sample.len() as f64
    }
}

/// Smallest δ with #{g ≤ δ}/N ≥ 1 − α over a sorted sample.
pub fn upper_quantile(sorted: &[f64], alpha: f64) -> f64 {
    let n = sorted.len();
    let k = ((1.0 - alpha) * n as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(n) - 1]
}

/// Critical value for one (r0, statistic) from N simulated weight samples.
pub fn calibrate_critical<T: Real>(
    cfg: &SpikeTestConfig<T>,
    which: SpikeStatistic,
    seed: u64,
) -> Result<Calibration<T>> {
    cfg.validate()?;
    let table = calibrate_table(&cfg.law, cfg.n, cfg.r_star, cfg.alpha, cfg.replicates, seed)?;
    Ok(table.calibration(which, cfg.r0))
}

/// Null samples of both functionals for every r0 < r*, sharing one set of draws.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalTable {
    pub r_star: usize,
    pub alpha: f64,
    pub seed: u64,
    pub resamples: usize,
    /// Indexed [r0] -> sorted sample.
    g1: Vec<Vec<f64>>,
    g2: Vec<Vec<f64>>,
}

impl CriticalTable {
    pub fn delta<T: Real>(&self, which: SpikeStatistic, r0: usize) -> T {
        lit(upper_quantile(self.sample(which, r0), self.alpha))
    }

    pub fn sample(&self, which: SpikeStatistic, r0: usize) -> &[f64] {
        match which {
            SpikeStatistic::Max => &self.g1[r0],
            SpikeStatistic::Ratio => &self.g2[r0],
        }
    }

    pub fn calibration<T: Real>(&self, which: SpikeStatistic, r0: usize) -> Calibration<T> {
        Calibration {
            which,
            r0,
            r_star: self.r_star,
            alpha: self.alpha,
            delta: self.delta(which, r0),
            resamples: self.resamples,
            seed: self.seed,
            sample: self.sample(which, r0).to_vec(),
        }
    }

    /// Rows (r0, statistic, alpha, δ).
    pub fn rows(&self) -> Vec<(usize, SpikeStatistic, f64, f64)> {
        let mut out = Vec::new();
        for r0 in 0..self.r_star {
            for which in [SpikeStatistic::Max, SpikeStatistic::Ratio] {
                out.push((r0, which, self.alpha, self.delta::<f64>(which, r0)));
            }
        }
        out
    }
}

pub fn calibrate_table<T: Real>(
    law: &WeightLaw<T>,
    n: usize,
    r_star: usize,
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> Result<CriticalTable> {
    if law.is_degenerate() {
        return Err(Error::Degenerate("point-mass weights have no spacings".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) || replicates == 0 || r_star == 0 || n < r_star + 2 {
        return invalid("calibration needs alpha in (0,1), N > 0, r_star >= 1 and n >= r_star + 2");
    }
    let k = r_star + 2;
    let draws: Vec<(Vec<f64>, usize)> =
        (0..replicates as u64).into_par_iter().map(|rep| top_order_stats(law, n, k, seed, rep)).collect();
    let resamples = draws.iter().map(|d| d.1).sum();
    let mut g1 = vec![Vec::with_capacity(replicates); r_star];
    let mut g2 = vec![Vec::with_capacity(replicates); r_star];
    for (top, _) in &draws {
        for r0 in 0..r_star {
            g1[r0].push(g_functional(SpikeStatistic::Max, top, r_star - r0));
            g2[r0].push(g_functional(SpikeStatistic::Ratio, top, r_star - r0));
        }
    }
    for v in g1.iter_mut().chain(g2.iter_mut()) {
        v.sort_by(|a, b| a.total_cmp(b));
    }
    Ok(CriticalTable { r_star, alpha, seed, resamples, g1, g2 })
}

/// Rejects H₀: r = r0 iff the statistic exceeds δ.
pub fn spike_test<T: Real>(
    eigs: &[T],
    r0: usize,
    r_star: usize,
    which: SpikeStatistic,
    delta: T,
) -> Result<TestOutcome<T>> {
    let stat = statistic(which, eigs, r0, r_star)?;
    let ratios = gap_ratios(eigs, r0, r_star)?;
    let degenerate = ratios.iter().any(|r| r.is_infinite()) || !stat.is_finite();
    Ok(TestOutcome {
        statistic: stat,
        critical_value: delta,
        reject: stat > delta,
        calibration_seed: None,
        gap_ratios: ratios,
        degenerate,
    })
}

/// inf{r0 ≥ 0 : statistic(r0) < δ(r0)}, or r* when every r0 < r* is rejected.
pub fn estimate_r<T: Real, F>(eigs: &[T], r_star: usize, which: SpikeStatistic, mut delta: F) -> Result<SpikeCount>
where
    F: FnMut(usize) -> Result<T>,
{
    for r0 in 0..r_star {
        if statistic(which, eigs, r0, r_star)? < delta(r0)? {
            return Ok(SpikeCount { r_hat: r0, saturated: false });
        }
    }
    Ok(SpikeCount { r_hat: r_star, saturated: true })
}

/// Both sequential estimators with critical values from `table`.
pub fn estimate_r_both<T: Real>(eigs: &[T], table: &CriticalTable) -> Result<(SpikeCount, SpikeCount)> {
    let r1 = estimate_r(eigs, table.r_star, SpikeStatistic::Max, |r0| Ok(table.delta(SpikeStatistic::Max, r0)))?;
    let r2 = estimate_r(eigs, table.r_star, SpikeStatistic::Ratio, |r0| Ok(table.delta(SpikeStatistic::Ratio, r0)))?;
    Ok((r1, r2))
}

/// Detectability scale: n^{1/α} ln n for polynomial tails, (ln n)^{1/β}
/// for exponential tails.
pub fn spike_strength_threshold<T: Real>(law: &WeightLaw<T>, n: usize) -> Result<T> {
    let nf = n as f64;
    match law.tail_class() {
        TailClass::PolyTail { alpha } => Ok(lit(nf.powf(1.0 / wide(alpha)) * nf.ln())),
        TailClass::ExpTail { beta } => Ok(lit(nf.ln().powf(1.0 / wide(beta)))),
        _ => Err(Error::UnsupportedTail(format!("{law} has bounded support"))),
    }
}
