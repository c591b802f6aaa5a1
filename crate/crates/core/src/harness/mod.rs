//! Reproducible Monte-Carlo experiment runner.
//!
//! A run walks the grid of cells in order; within a cell replicate k draws
//! from seed derive(root, [label(cell), k]) and results are collected in
//! replicate order, so the output does not depend on the worker count.

mod config;
mod limits;
mod output;

pub use config::{BaseSpec, EntrySpec, ExperimentConfig, ExperimentKind, LawSpec, ModelSpec, OutputCfg, PopulationCfg};
pub use limits::{limit_cdf, validate_limit_law, LimitLawReport, LimitLawSetup};
pub use output::{bar_chart_svg, emit_outputs, read_csv, write_csv, ResultRow, CSV_HEADER};

use rayon::prelude::*;

use crate::bootstrap::{algorithm1_test, build_factor_data, estimate_r_factor, FactorTestConfig};
use crate::error::{Error, Result};
use crate::linalg::LanczosOptions;
use crate::matrix_model::sample_top_eigenvalues;
use crate::seed;
use crate::spike::{calibrate_table, estimate_r_both, spike_test, SpikeStatistic};
use crate::stats::{mean_sd, proportion_se};
use crate::stieltjes::{classify_regime, predict_lambda1, SolverEnv};
use crate::weight_laws::WeightLaw;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SPECTRAL_EDGE_THREADS";

/// Worker cap from `SPECTRAL_EDGE_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Runs `f` on a dedicated pool with at most `threads` workers (all cores
/// when `None`).
pub fn with_workers<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        b = b.num_threads(k);
    }
    let pool = b.build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Rows of a run together with the cells that did not complete.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub rows: Vec<ResultRow>,
    pub failed_cells: Vec<String>,
}

impl RunReport {
    pub fn complete(&self) -> bool {
        self.failed_cells.is_empty()
    }
}

#[derive(Clone, Debug)]
struct Cell {
    label: String,
    law: WeightLaw<f64>,
    calibration: Option<WeightLaw<f64>>,
    phi: f64,
    /// Extra spike (spike experiments) or factor strength δ.
    extra: Option<f64>,
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    use ExperimentKind::*;
    let laws: Vec<WeightLaw<f64>> = cfg.laws.iter().map(LawSpec::resolve).collect::<Result<_>>()?;
    let cal: Vec<WeightLaw<f64>> = cfg.calibration_laws.iter().map(LawSpec::resolve).collect::<Result<_>>()?;
    let extras: Vec<Option<f64>> = match cfg.experiment {
        Power => cfg.spike_grid.iter().map(|&s| Some(s)).collect(),
        EstimatorCdr if !cfg.spike_grid.is_empty() => cfg.spike_grid.iter().map(|&s| Some(s)).collect(),
        FactorTypeIPower | FactorCdr => cfg.deltas.iter().map(|&d| Some(d)).collect(),
        _ => vec![None],
    };
    let cals: Vec<Option<WeightLaw<f64>>> =
        if cfg.experiment == Robustness { cal.into_iter().map(Some).collect() } else { vec![None] };
    let extra_key = if matches!(cfg.experiment, FactorTypeIPower | FactorCdr) { "delta" } else { "spike" };
    let mut out = Vec::new();
    for law in &laws {
        for c in &cals {
            for &phi in &cfg.grid_phis() {
                for &e in &extras {
                    let mut label = format!("law={law}");
                    if let Some(c) = c {
                        label.push_str(&format!(";calibration={c}"));
                    }
                    label.push_str(&format!(";phi={}", fmt_num(phi)));
                    if let Some(e) = e {
                        label.push_str(&format!(";{extra_key}={}", fmt_num(e)));
                    }
                    out.push(Cell { label, law: *law, calibration: *c, phi, extra: e });
                }
            }
        }
    }
    Ok(out)
}

struct RowSink<'a> {
    experiment: &'a str,
    cell: &'a str,
    rows: Vec<ResultRow>,
}

impl RowSink<'_> {
    fn push(&mut self, metric: &str, value: f64, se: Option<f64>, r: usize) {
        self.rows.push(ResultRow {
            experiment: self.experiment.into(),
            cell: self.cell.into(),
            metric: metric.into(),
            value,
            se,
            replicates: r,
        });
    }

    fn proportion(&mut self, metric: &str, hits: usize, r: usize) {
        let p = hits as f64 / r as f64;
        self.push(metric, p, proportion_se(p, r), r);
    }

    fn mean(&mut self, metric: &str, xs: &[f64]) {
        let (m, sd) = mean_sd(xs);
        let se = (xs.len() > 1).then(|| sd / (xs.len() as f64).sqrt());
        self.push(metric, m, se, xs.len());
    }
}

fn replicate_map<R: Send>(reps: usize, f: impl Fn(u64) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    let out: Vec<Result<R>> = (0..reps as u64).into_par_iter().map(f).collect();
    out.into_iter().collect()
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell, root: u64, sink: &mut RowSink<'_>) -> Result<()> {
    use ExperimentKind::*;
    let r = cfg.replicates;
    let n = cfg.n;
    let kind = cfg.model_kind();
    match cfg.experiment {
        TypeIError | Power | Robustness | EstimatorCdr => {
            let extra: Vec<f64> = cell.extra.into_iter().collect();
            let pop = cfg.population.build(n, cell.phi, &extra)?;
            let cal_law = cell.calibration.unwrap_or(cell.law);
            let table = calibrate_table(
                &cal_law,
                n,
                cfg.r_star,
                cfg.alpha,
                cfg.calibration_replicates,
                seed::derive(root, &[u64::MAX]),
            )?;
            let k = cfg.r_star + 2;
            let opts = LanczosOptions::default();
            let draws = replicate_map(r, |rep| {
                let mut top = sample_top_eigenvalues(kind, &pop, &cell.law, n, k, seed::derive(root, &[rep]), opts)?;
                top.eigenvalues.truncate(k);
                Ok(top.eigenvalues)
            });
            let eigs = draws?;
            if cfg.experiment == EstimatorCdr {
                let truth = cfg.population.spikes.len() + extra.len();
                let mut hits = [0usize; 2];
                let mut means = [Vec::with_capacity(r), Vec::with_capacity(r)];
                for e in &eigs {
                    let (a, b) = estimate_r_both(e, &table)?;
                    for (i, c) in [a, b].iter().enumerate() {
                        hits[i] += (c.r_hat == truth) as usize;
                        means[i].push(c.r_hat as f64);
                    }
                }
                sink.proportion("cdr_r1", hits[0], r);
                sink.proportion("cdr_r2", hits[1], r);
                sink.mean("mean_r1", &means[0]);
                sink.mean("mean_r2", &means[1]);
            } else {
                for which in [SpikeStatistic::Max, SpikeStatistic::Ratio] {
                    let delta: f64 = table.delta(which, cfg.r0);
                    let mut hits = 0;
                    for e in &eigs {
                        hits += spike_test(e, cfg.r0, cfg.r_star, which, delta)?.reject as usize;
                    }
                    sink.proportion(&format!("reject_{}", which.name()), hits, r);
                }
            }
        }
        FactorTypeIPower | FactorCdr => {
            let p = cfg.population.dimension(n, cell.phi);
            let delta = cell.extra.unwrap_or(0.0);
            let template = FactorTestConfig::new(cfg.r0.max(1), cfg.bootstrap_replicates, cfg.alpha, cell.law, cfg.m4)?;
            let out = replicate_map(r, |rep| {
                let s = seed::derive(root, &[rep]);
                let data = build_factor_data(p, n, delta, &cfg.loadings_cov, s)?;
                let boot_seed = seed::derive(s, &[1]);
                if cfg.experiment == FactorTypeIPower {
                    let o = algorithm1_test(&data.sample.y, &template, boot_seed)?;
                    Ok((o.reject as usize as f64, o.p_value, data.true_r))
                } else {
                    let c = estimate_r_factor(&data.sample.y, &template, cfg.r_star, boot_seed)?;
                    Ok(((c.r_hat == data.true_r) as usize as f64, c.r_hat as f64, data.true_r))
                }
            })?;
            let hits = out.iter().filter(|o| o.0 > 0.5).count();
            let second: Vec<f64> = out.iter().map(|o| o.1).collect();
            if cfg.experiment == FactorTypeIPower {
                sink.proportion("reject", hits, r);
                sink.mean("mean_p_value", &second);
            } else {
                sink.proportion("cdr", hits, r);
                sink.mean("mean_r_hat", &second);
            }
        }
        LimitLaw => {
            let setup =
                LimitLawSetup { kind, pop: cfg.population.build(n, cell.phi, &[])?, law: cell.law, n, replicates: r };
            let rep = validate_limit_law(&setup, root)?;
            match rep.ks_distance {
                Some(d) => {
                    sink.push("ks_distance", d, None, r);
                    sink.push("ks_pvalue", crate::stats::ks_pvalue(d, r), None, r);
                }
                None => sink.push("no_cdf_check", 1.0, None, r),
            }
            sink.push("iqr", rep.iqr, None, r);
            sink.push("scale", rep.standardization.scale, None, 1);
        }
        EdgeScan => {
            let pop = cfg.population.build(n, cell.phi, &[])?;
            let env = SolverEnv::unconditional(kind.class(), pop, cell.law, n)?;
            if cell.law.support_sup().is_some() && !cell.law.is_degenerate() {
                let rr = classify_regime(&env)?;
                sink.push(&format!("regime_{}", rr.regime.name()), 1.0, None, 1);
                sink.push("varsigma3", rr.varsigma3, None, 1);
                sink.push("inv_phi", rr.inv_phi, None, 1);
            }
            let pred = predict_lambda1(&env)?;
            sink.push("predicted_lambda1", pred.point, None, 1);
            sink.push("scale", pred.standardization.scale, None, 1);
        }
    }
    Ok(())
}

/// Runs every cell of the grid. Cell failures become `failed` rows and are
/// listed in the report; they never stop the run.
pub fn run_experiment(cfg: &ExperimentConfig, root_seed: u64) -> Result<RunReport> {
    cfg.validate()?;
    let name = cfg.experiment.name();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for cell in cells(cfg)? {
        let root = seed::derive(root_seed, &[seed::label(&cell.label)]);
        let mut sink = RowSink { experiment: name, cell: &cell.label, rows: Vec::new() };
        match run_cell(cfg, &cell, root, &mut sink) {
            Ok(()) => rows.extend(sink.rows),
            Err(e) => {
                sink.rows.clear();
                sink.push(&format!("failed: {e}"), f64::NAN, None, 0);
                rows.extend(sink.rows);
                failed.push(cell.label.clone());
            }
        }
    }
    Ok(RunReport { rows, failed_cells: failed })
}
