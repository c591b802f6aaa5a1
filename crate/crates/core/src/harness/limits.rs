//! Monte-Carlo check of the largest-eigenvalue limit laws.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::LanczosOptions;
use crate::matrix_model::{sample_top_eigenvalues, ModelKind};
use crate::population::PopulationSpec;
use crate::seed;
use crate::special::normal_cdf;
use crate::stats::{iqr, ks_distance};
use crate::stieltjes::{edge_location, predict_lambda1, LimitFamily, Regime, SolverEnv, Standardization};
use crate::weight_laws::{EvtFamily, WeightLaw};

#[derive(Clone, Debug)]
pub struct LimitLawSetup {
    pub kind: ModelKind,
    pub pop: PopulationSpec<f64>,
    pub law: WeightLaw<f64>,
    pub n: usize,
    pub replicates: usize,
}

#[derive(Clone, Debug)]
pub struct LimitLawReport {
    pub standardization: Standardization<f64>,
    pub regime: Option<Regime<f64>>,
    /// `None` when the family has no CDF to compare against (TW mixture).
    pub ks_distance: Option<f64>,
    /// Standardized λ₁, or λ₁ − L̂₊ with L̂₊ from the realized weights when
    /// no CDF check is made.
    pub values: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub iqr: f64,
}

impl LimitLawReport {
    pub fn cdf_checked(&self) -> bool {
        self.ks_distance.is_some()
    }
}

/// CDF of a limit family, if it has one.
pub fn limit_cdf(family: LimitFamily<f64>) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    match family {
        LimitFamily::Frechet { alpha } => Some(Box::new(move |x| EvtFamily::Frechet { alpha }.cdf(x))),
        LimitFamily::Gumbel => Some(Box::new(|x| EvtFamily::<f64>::Gumbel.cdf(x))),
        LimitFamily::Weibull { shape } => Some(Box::new(move |x| EvtFamily::Weibull { shape }.cdf(x))),
        LimitFamily::Normal => Some(Box::new(normal_cdf)),
        LimitFamily::TracyWidomMixture | LimitFamily::Degenerate => None,
    }
}

/// Simulates λ₁ and compares its standardization with the predicted limit.
/// Replicate k uses seed derive(root_seed, [k]).
pub fn validate_limit_law(setup: &LimitLawSetup, root_seed: u64) -> Result<LimitLawReport> {
    let class = setup.kind.class();
    let env = SolverEnv::unconditional(class, setup.pop.clone(), setup.law, setup.n)?;
    let pred = predict_lambda1(&env)?;
    let st = pred.standardization;
    if st.family == LimitFamily::Degenerate {
        return Err(Error::Degenerate("point-mass weights have no fluctuation limit".into()));
    }
    let cdf = limit_cdf(st.family);
    let draws: Vec<Result<(f64, f64)>> = (0..setup.replicates as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed::derive(root_seed, &[k]);
            let top =
                sample_top_eigenvalues(setup.kind, &setup.pop, &setup.law, setup.n, 1, s, LanczosOptions::default())?;
            let l1 = top.eigenvalues[0];
            let v = if cdf.is_some() {
                st.apply(l1)
            } else {
                let cond = SolverEnv::conditional(class, setup.pop.clone(), top.weights, Some(setup.law))?;
                l1 - edge_location(&cond)?.0
            };
            Ok((l1, v))
        })
        .collect();
    let draws: Vec<(f64, f64)> = draws.into_iter().collect::<Result<_>>()?;
    let (lambda1, values): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    let ks = cdf.map(|f| ks_distance(&values, f));
    Ok(LimitLawReport { standardization: st, regime: pred.regime, ks_distance: ks, iqr: iqr(&values), values, lambda1 })
}
