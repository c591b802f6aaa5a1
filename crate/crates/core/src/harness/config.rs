//! Experiment configuration read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::matrix_model::{EntryDist, ModelKind};
use crate::population::{johnstone_spiked, PopulationSpec};
use crate::weight_laws::{Family, WeightLaw};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TypeIError,
    Power,
    EstimatorCdr,
    Robustness,
    FactorTypeIPower,
    FactorCdr,
    LimitLaw,
    EdgeScan,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TypeIError => "type_i_error",
            ExperimentKind::Power => "power",
            ExperimentKind::EstimatorCdr => "estimator_cdr",
            ExperimentKind::Robustness => "robustness",
            ExperimentKind::FactorTypeIPower => "factor_type_i_power",
            ExperimentKind::FactorCdr => "factor_cdr",
            ExperimentKind::LimitLaw => "limit_law",
            ExperimentKind::EdgeScan => "edge_scan",
        }
    }
}

/// `{family = "pareto", params = {x_min = 0.75, alpha = 3}}`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl LawSpec {
    pub fn new(family: &str, params: &[(&str, f64)]) -> Self {
        LawSpec { family: family.into(), params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }

    /// Parses the compact form `family:key=value,key=value`.
    pub fn parse(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = BTreeMap::new();
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got {kv:?}")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("bad number in {kv:?}")))?;
            params.insert(k.trim().to_string(), v);
        }
        Ok(LawSpec { family: family.trim().to_string(), params })
    }

    fn get(&self, key: &str) -> Result<f64> {
        self.params.get(key).copied().ok_or_else(|| Error::Config(format!("law {} needs parameter {key}", self.family)))
    }

    fn check_keys(&self, keys: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("law {} has unknown parameter {k}", self.family))),
            None => Ok(()),
        }
    }

    pub fn family(&self) -> Result<Family<f64>> {
        let f = self.family.to_ascii_lowercase().replace('-', "_");
        let (fam, keys): (Family<f64>, &[&str]) = match f.as_str() {
            "pareto" => (Family::Pareto { x_min: self.get("x_min")?, alpha: self.get("alpha")? }, &["x_min", "alpha"]),
            "gamma" => (Family::Gamma { shape: self.get("shape")?, rate: self.get("rate")? }, &["shape", "rate"]),
            "exponential" | "exp" => (Family::Exponential { rate: self.get("rate")? }, &["rate"]),
            "squared_student_t" | "t2" => (Family::SquaredStudentT { nu: self.get("nu")? }, &["nu"]),
            "chi_squared" | "chisq" => (Family::ChiSquared { k: self.get("k")? }, &["k"]),
            "scaled_beta" => {
                (Family::ScaledBeta { l: self.get("l")?, a: self.get("a")?, b: self.get("b")? }, &["l", "a", "b"])
            }
            "uniform" => (Family::Uniform { l: self.get("l")? }, &["l"]),
            "point_mass" => (Family::PointMass { c: self.get("c")? }, &["c"]),
            other => return Err(Error::Config(format!("unknown law family {other}"))),
        };
        self.check_keys(keys)?;
        Ok(fam)
    }

    /// The law, admitting parameter choices outside the theory (e.g. t₃²).
    pub fn resolve(&self) -> Result<WeightLaw<f64>> {
        WeightLaw::fixture(self.family()?).map_err(|e| Error::Config(format!("law {}: {e}", self.family)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    #[default]
    Elliptical,
    Separable,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Default)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntrySpec {
    #[default]
    Gaussian,
    Rademacher,
    StudentT {
        nu: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum BaseSpec {
    Named(String),
    List(Vec<f64>),
}

impl Default for BaseSpec {
    fn default() -> Self {
        BaseSpec::Named("identity".into())
    }
}

/// `population = {p, base = "identity" | [..], spikes = [..]}`; `p` defaults
/// to round(φn) per cell.
#[derive(Clone, Debug, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PopulationCfg {
    pub p: Option<usize>,
    #[serde(default)]
    pub base: BaseSpec,
    #[serde(default)]
    pub spikes: Vec<f64>,
}

impl PopulationCfg {
    /// Dimension used for a cell with aspect ratio `phi`.
    pub fn dimension(&self, n: usize, phi: f64) -> usize {
        match (&self.base, self.p) {
            (BaseSpec::List(v), _) => v.len(),
            (_, Some(p)) => p,
            _ => ((phi * n as f64).round() as usize).max(1),
        }
    }

    /// Σ for a cell, with `extra` spikes merged into the configured ones.
    pub fn build(&self, n: usize, phi: f64, extra: &[f64]) -> Result<PopulationSpec<f64>> {
        let p = self.dimension(n, phi);
        let mut spikes: Vec<f64> = self.spikes.iter().chain(extra).copied().collect();
        spikes.sort_by(|a, b| b.total_cmp(a));
        match &self.base {
            BaseSpec::Named(s) if s == "identity" => Ok(johnstone_spiked(p, &spikes)?.spectrum()),
            BaseSpec::Named(s) => Err(Error::Config(format!("unknown population base {s}"))),
            BaseSpec::List(v) => {
                let mut sig = v.clone();
                if spikes.len() >= sig.len() {
                    return Err(Error::Config("more spikes than population entries".into()));
                }
                sig[..spikes.len()].copy_from_slice(&spikes);
                PopulationSpec::new(sig)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputCfg {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

fn d_seed() -> u64 {
    0
}
fn d_replicates() -> usize {
    2000
}
fn d_n() -> usize {
    400
}
fn d_phis() -> Vec<f64> {
    vec![1.0]
}
fn d_alpha() -> f64 {
    0.1
}
fn d_r0() -> usize {
    2
}
fn d_r_star() -> usize {
    6
}
fn d_calibration() -> usize {
    10_000
}
fn d_deltas() -> Vec<f64> {
    vec![3.0]
}
fn d_loadings() -> Vec<f64> {
    vec![1.3, 0.8, 0.5]
}
fn d_bootstrap() -> usize {
    1000
}
fn d_m4() -> f64 {
    3.0
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "d_seed")]
    pub root_seed: u64,
    #[serde(default = "d_replicates")]
    pub replicates: usize,
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_phis")]
    pub phis: Vec<f64>,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub entry: EntrySpec,
    /// Data weight laws, or multiplier laws for the factor experiments.
    #[serde(default)]
    pub laws: Vec<LawSpec>,
    #[serde(default)]
    pub population: PopulationCfg,
    #[serde(default = "d_r0")]
    pub r0: usize,
    #[serde(default = "d_r_star")]
    pub r_star: usize,
    #[serde(default = "d_calibration")]
    pub calibration_replicates: usize,
    /// Extra spike values swept by `power` and `estimator_cdr`.
    #[serde(default)]
    pub spike_grid: Vec<f64>,
    /// Misspecified calibration laws for `robustness`.
    #[serde(default)]
    pub calibration_laws: Vec<LawSpec>,
    /// Factor strengths δ.
    #[serde(default = "d_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "d_loadings")]
    pub loadings_cov: Vec<f64>,
    #[serde(default = "d_bootstrap")]
    pub bootstrap_replicates: usize,
    #[serde(default = "d_m4")]
    pub m4: f64,
    #[serde(default)]
    pub output: OutputCfg,
}

impl ExperimentConfig {
    /// Minimal config of the given kind; every other field takes its default.
    pub fn new(experiment: ExperimentKind, laws: Vec<LawSpec>) -> Self {
        ExperimentConfig {
            experiment,
            root_seed: d_seed(),
            replicates: d_replicates(),
            n: d_n(),
            phis: d_phis(),
            alpha: d_alpha(),
            model: ModelSpec::default(),
            entry: EntrySpec::default(),
            laws,
            population: PopulationCfg::default(),
            r0: d_r0(),
            r_star: d_r_star(),
            calibration_replicates: d_calibration(),
            spike_grid: Vec::new(),
            calibration_laws: Vec::new(),
            deltas: d_deltas(),
            loadings_cov: d_loadings(),
            bootstrap_replicates: d_bootstrap(),
            m4: d_m4(),
            output: OutputCfg::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative output paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.output.csv, &mut cfg.output.svg].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn model_kind(&self) -> ModelKind {
        match self.model {
            ModelSpec::Elliptical => ModelKind::Elliptical,
            ModelSpec::Separable => ModelKind::SeparableIid {
                entry: match self.entry {
                    EntrySpec::Gaussian => EntryDist::Gaussian,
                    EntrySpec::Rademacher => EntryDist::Rademacher,
                    EntrySpec::StudentT { nu } => EntryDist::StudentT { nu },
                },
            },
        }
    }

    /// Aspect ratios of the grid; a fixed population list pins a single φ.
    pub fn grid_phis(&self) -> Vec<f64> {
        match (&self.population.base, self.population.p) {
            (BaseSpec::List(v), _) => vec![v.len() as f64 / self.n as f64],
            (_, Some(p)) => vec![p as f64 / self.n as f64],
            _ => self.phis.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.n < 2 {
            return bad("n must be at least 2".into());
        }
        if self.phis.is_empty() || self.phis.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return bad("phis must be a nonempty list of positive numbers".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.laws.is_empty() {
            return bad("at least one law is required".into());
        }
        for l in self.laws.iter().chain(&self.calibration_laws) {
            l.resolve()?;
        }
        for &phi in &self.grid_phis() {
            self.population.build(self.n, phi, &[])?;
        }
        use ExperimentKind::*;
        match self.experiment {
            TypeIError | Power | Robustness | EstimatorCdr => {
                if self.r_star == 0 || self.r0 >= self.r_star {
                    return bad(format!("need r0 < r_star, got {} and {}", self.r0, self.r_star));
                }
                if self.calibration_replicates < 100 {
                    return bad("calibration_replicates must be at least 100".into());
                }
                if self.n < self.r_star + 2 {
                    return bad("n is too small for r_star".into());
                }
            }
            FactorTypeIPower | FactorCdr => {
                if self.bootstrap_replicates == 0 {
                    return bad("bootstrap_replicates must be at least 1".into());
                }
                if self.loadings_cov.is_empty() || self.loadings_cov.iter().any(|v| !(*v > 0.0)) {
                    return bad("loadings_cov must be positive".into());
                }
                if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d >= 0.0)) {
                    return bad("deltas must be nonnegative".into());
                }
                if self.experiment == FactorTypeIPower && self.r0 == 0 {
                    return bad("r0 must be at least 1 for the factor test".into());
                }
            }
            LimitLaw | EdgeScan => {}
        }
        match self.experiment {
            Power if self.spike_grid.is_empty() => bad("power needs a spike_grid".into()),
            Robustness if self.calibration_laws.is_empty() => bad("robustness needs calibration_laws".into()),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            experiment = "type_i_error"
            root_seed = 7
            replicates = 20
            phis = [0.5, 1, 2]
            laws = [
              { family = "gamma", params = { shape = 5, rate = 5 } },
              { family = "squared_student_t", params = { nu = 3 } },
            ]
            population = { base = "identity", spikes = [25, 20] }
            [output]
            csv = "out.csv"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::TypeIError);
        assert_eq!(cfg.laws.len(), 2);
        assert!(cfg.laws[1].resolve().unwrap().violates_assumptions());
        let pop = cfg.population.build(400, 0.5, &[]).unwrap();
        assert_eq!(pop.p(), 200);
        assert_eq!(&pop.sigmas()[..3], &[25.0, 20.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("experiment = \"nope\"\nlaws=[]").is_err());
        let base = "experiment = \"power\"\nlaws = [{family=\"exponential\", params={rate=1}}]\n";
        assert!(ExperimentConfig::from_toml(base).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{base}spike_grid=[10]\nreplicates=0")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{base}spike_grid=[10]")).is_ok());
        let l = LawSpec::new("pareto", &[("x_min", 1.0), ("alpah", 3.0)]);
        assert!(l.resolve().is_err());
        let l = LawSpec::parse("pareto:x_min=0.75, alpha=3").unwrap();
        assert_eq!(l, LawSpec::new("pareto", &[("x_min", 0.75), ("alpha", 3.0)]));
        assert!(LawSpec::parse("gamma:shape").is_err());
    }

    #[test]
    fn extra_spikes_are_sorted_in() {
        let p = PopulationCfg { p: None, base: BaseSpec::default(), spikes: vec![25.0, 20.0] };
        let s = p.build(100, 1.0, &[40.0]).unwrap();
        assert_eq!(&s.sigmas()[..4], &[40.0, 25.0, 20.0, 1.0]);
    }
}
