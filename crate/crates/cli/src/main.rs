use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use spectral_edge::bootstrap::{algorithm1_test, FactorTestConfig};
use spectral_edge::harness::{
    emit_outputs, run_experiment, threads_from_env, validate_limit_law, with_workers, write_csv, ExperimentConfig,
    LawSpec, LimitLawSetup,
};
use spectral_edge::linalg::LanczosOptions;
use spectral_edge::matrix_model::{
    read_matrix_csv, read_spectrum_csv, sample_top_eigenvalues, write_spectra_csv, EntryDist, ModelKind, Spectrum,
};
use spectral_edge::population::{johnstone_spiked, PopulationSpec};
use spectral_edge::spike::{calibrate_table, spike_strength_threshold, spike_test, SpikeStatistic};
use spectral_edge::stieltjes::{classify_regime, density, edge, predict_lambda1, EdgeReport, SolverEnv};
use spectral_edge::weight_laws::WeightLaw;

#[derive(Parser)]
#[command(name = "spectral-edge", version, about = "Largest-eigenvalue limits, spike tests and factor bootstrap")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw spectra and write the top eigenvalues as CSV.
    Simulate(SimulateArgs),
    /// Compute the right edge, its constants and the λ₁ standardization.
    SolveEdge(SolveEdgeArgs),
    /// Classify the edge regime.
    Classify(ModelArgs),
    /// Test H₀: r = r0 spikes on an observed spectrum.
    SpikeTest(SpikeTestArgs),
    /// Tabulate critical values (r0, which, alpha, delta).
    Calibrate(CalibrateArgs),
    /// Multiplier-bootstrap test of H₀: r ≥ r0 factors on a data matrix.
    FactorTest(FactorTestArgs),
    /// Simulate λ₁ and compare with its predicted limit law.
    ValidateLimits(ValidateArgs),
    /// Run an experiment grid from a TOML config.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Elliptical,
    Separable,
    SeparableRademacher,
}

impl Model {
    fn kind(self) -> ModelKind {
        match self {
            Model::Elliptical => ModelKind::Elliptical,
            Model::Separable => ModelKind::separable_gaussian(),
            Model::SeparableRademacher => ModelKind::SeparableIid { entry: EntryDist::Rademacher },
        }
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "separable")]
    model: Model,
    /// Weight law as family:key=value,... (e.g. pareto:x_min=0.75,alpha=3).
    #[arg(long)]
    law: String,
    #[arg(long, default_value_t = 1.0)]
    phi: f64,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Spikes prepended to an identity population.
    #[arg(long, value_delimiter = ',')]
    spikes: Vec<f64>,
}

impl ModelArgs {
    fn law(&self) -> Result<WeightLaw<f64>> {
        Ok(LawSpec::parse(&self.law)?.resolve()?)
    }

    fn pop(&self) -> Result<PopulationSpec<f64>> {
        let p = ((self.phi * self.n as f64).round() as usize).max(1);
        Ok(johnstone_spiked(p, &self.spikes)?.spectrum())
    }

    fn env(&self) -> Result<SolverEnv<f64>> {
        Ok(SolverEnv::unconditional(self.model.kind().class(), self.pop()?, self.law()?, self.n)?)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    /// Number of leading eigenvalues kept per replicate.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (replicate_id,rank,eigenvalue); stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveEdgeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Density grid start:end:count written as E,rho CSV.
    #[arg(long)]
    density_grid: Option<String>,
    #[arg(long)]
    density_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    T,
    TR0,
    Both,
}

impl Which {
    fn list(self) -> Vec<SpikeStatistic> {
        match self {
            Which::T => vec![SpikeStatistic::Max],
            Which::TR0 => vec![SpikeStatistic::Ratio],
            Which::Both => vec![SpikeStatistic::Max, SpikeStatistic::Ratio],
        }
    }
}

#[derive(Args)]
struct SpikeTestArgs {
    #[arg(long)]
    r0: usize,
    #[arg(long)]
    r_star: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Weight law used for calibration.
    #[arg(long)]
    law: String,
    /// Sample size n of the observed data.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    calibration: usize,
    #[arg(long, value_enum, default_value = "both")]
    statistic: Which,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Spectrum CSV (one column, or replicate_id,rank,eigenvalue).
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    law: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r_star: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FactorTestArgs {
    #[arg(long)]
    r0: usize,
    #[arg(long = "B", default_value_t = 1000)]
    b: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long)]
    multiplier: String,
    /// Fourth moment of the standardized entries.
    #[arg(long, default_value_t = 3.0)]
    m4: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dense matrix CSV, rows = variables, columns = samples.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 2000)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes the per-replicate standardized values.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides root_seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.csv from the config.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn print_block(pairs: &[(&str, String)]) {
    let width = pairs.iter().map(|p| p.0.len()).max().unwrap_or(0);
    for (k, v) in pairs {
        println!("{k:<width$} = {v}");
    }
}

fn edge_block(r: &EdgeReport<f64>) -> Vec<(&'static str, String)> {
    let s = r.standardization;
    let mut v = vec![
        ("l_plus", format!("{:.12}", r.l_plus)),
        ("m1_at_edge", format!("{:.12}", r.m1_at_edge)),
        ("regime", r.regime.name().to_string()),
        ("varsigma1", r.varsigma.s1.to_string()),
        ("varsigma2", r.varsigma.s2.to_string()),
        ("varsigma3", r.varsigma.s3.to_string()),
        ("varsigma4", r.varsigma.s4.to_string()),
        ("vartheta", r.varsigma.vartheta.to_string()),
        ("center", s.center.to_string()),
        ("scale", s.scale.to_string()),
        ("exponent", s.exponent.to_string()),
        ("limit", format!("{:?}", s.family)),
        ("residual_F", format!("{:e}", r.residuals[0])),
        ("residual_dF", format!("{:e}", r.residuals[1])),
    ];
    if let Some(r2) = r.gamma_fit_r2 {
        v.push(("gamma_fit_r2", r2.to_string()));
    }
    v
}

fn simulate(a: SimulateArgs) -> Result<bool> {
    let law = a.model.law()?;
    let pop = a.model.pop()?;
    let spectra: Vec<Spectrum<f64>> = (0..a.replicates as u64)
        .map(|r| {
            let s = spectral_edge::seed::derive(a.seed, &[r]);
            let top =
                sample_top_eigenvalues(a.model.model.kind(), &pop, &law, a.model.n, a.k, s, LanczosOptions::default())?;
            Ok(Spectrum { values: top.eigenvalues, p: pop.p(), n: a.model.n })
        })
        .collect::<Result<_>>()?;
    let refs: Vec<(u64, &Spectrum<f64>)> = spectra.iter().enumerate().map(|(i, s)| (i as u64, s)).collect();
    match a.output {
        Some(p) => write_spectra_csv(File::create(&p).with_context(|| format!("creating {}", p.display()))?, &refs)?,
        None => write_spectra_csv(io::stdout().lock(), &refs)?,
    }
    Ok(true)
}

fn solve_edge(a: SolveEdgeArgs) -> Result<bool> {
    let env = a.model.env()?;
    let law = a.model.law()?;
    if law.support_sup().is_some() {
        let rep = edge(&env)?;
        print_block(&edge_block(&rep));
        if let Some(g) = &a.density_grid {
            let parts: Vec<&str> = g.split(':').collect();
            let [lo, hi, k] = parts[..] else { bail!("density grid must be start:end:count") };
            let (lo, hi, k): (f64, f64, usize) = (lo.parse()?, hi.parse()?, k.parse()?);
            let mut w: Box<dyn Write> = match &a.density_out {
                Some(p) => Box::new(File::create(p)?),
                None => Box::new(io::stdout().lock()),
            };
            writeln!(w, "E,rho")?;
            let eta = spectral_edge::stieltjes::default_eta(rep.l_plus);
            for i in 0..k.max(2) {
                let e = lo + (hi - lo) * i as f64 / (k.max(2) - 1) as f64;
                writeln!(w, "{e},{}", density(e, &env, eta)?)?;
            }
        }
    } else {
        let p = predict_lambda1(&env)?;
        let s = p.standardization;
        print_block(&[
            ("l_plus", "unbounded (edge follows the largest weight)".into()),
            ("predicted_lambda1", p.point.to_string()),
            ("center", s.center.to_string()),
            ("scale", s.scale.to_string()),
            ("limit", format!("{:?}", s.family)),
            ("tail_class", format!("{:?}", law.tail_class())),
        ]);
    }
    Ok(true)
}

fn classify(a: ModelArgs) -> Result<bool> {
    let r = classify_regime(&a.env()?)?;
    let mut v = vec![
        ("regime", r.regime.name().to_string()),
        ("inv_phi", r.inv_phi.to_string()),
        ("varsigma3", r.varsigma3.to_string()),
        ("rationale", r.rationale.clone()),
    ];
    if let Some(d) = r.vartheta_dominates {
        v.push(("vartheta_dominates", d.to_string()));
    }
    print_block(&v);
    Ok(true)
}

fn spike_cmd(a: SpikeTestArgs) -> Result<bool> {
    let law = LawSpec::parse(&a.law)?.resolve()?;
    let eigs = read_spectrum_csv(BufReader::new(File::open(&a.input).with_context(|| a.input.display().to_string())?))?;
    if a.r0 >= a.r_star {
        bail!("need r0 < r_star");
    }
    let table = calibrate_table(&law, a.n, a.r_star, a.alpha, a.calibration, a.seed)?;
    let mut out = Vec::new();
    for which in a.statistic.list() {
        let delta: f64 = table.delta(which, a.r0);
        let o = spike_test(&eigs, a.r0, a.r_star, which, delta)?;
        let p = table.calibration::<f64>(which, a.r0).p_value(o.statistic);
        let n = which.name();
        out.push((format!("{n}.statistic"), o.statistic.to_string()));
        out.push((format!("{n}.critical_value"), o.critical_value.to_string()));
        out.push((format!("{n}.p_value"), p.to_string()));
        out.push((format!("{n}.reject"), o.reject.to_string()));
        if o.degenerate {
            out.push((format!("{n}.degenerate"), "true".into()));
        }
    }
    if let Ok(t) = spike_strength_threshold(&law, a.n) {
        out.push(("strength_threshold".into(), t.to_string()));
    }
    out.push(("calibration_seed".into(), a.seed.to_string()));
    let pairs: Vec<(&str, String)> = out.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    print_block(&pairs);
    Ok(true)
}

fn calibrate(a: CalibrateArgs) -> Result<bool> {
    let law = LawSpec::parse(&a.law)?.resolve()?;
    let table = calibrate_table(&law, a.n, a.r_star, a.alpha, a.replicates, a.seed)?;
    let w: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["r0", "which", "alpha", "delta"])?;
    for (r0, which, alpha, delta) in table.rows() {
        w.write_record([r0.to_string(), which.name().to_string(), alpha.to_string(), delta.to_string()])?;
    }
    w.flush()?;
    Ok(true)
}

fn factor_cmd(a: FactorTestArgs) -> Result<bool> {
    let law = LawSpec::parse(&a.multiplier)?.resolve()?;
    let y = read_matrix_csv(BufReader::new(File::open(&a.input).with_context(|| a.input.display().to_string())?))?;
    let cfg = FactorTestConfig::new(a.r0, a.b, a.alpha, law, a.m4)?;
    let o = algorithm1_test(&y, &cfg, a.seed)?;
    println!("{{");
    println!("  p_value: {},", o.p_value);
    println!("  B_star: {},", o.b_star);
    println!("  reject: {},", o.reject);
    println!("  lambda_hat: {},", o.lambda_hat);
    println!("  V: {}", o.v);
    println!("}}");
    Ok(true)
}

fn validate(a: ValidateArgs) -> Result<bool> {
    let setup = LimitLawSetup {
        kind: a.model.model.kind(),
        pop: a.model.pop()?,
        law: a.model.law()?,
        n: a.model.n,
        replicates: a.replicates,
    };
    let r = validate_limit_law(&setup, a.seed)?;
    let s = r.standardization;
    let mut v = vec![
        ("limit", format!("{:?}", s.family)),
        ("center", s.center.to_string()),
        ("scale", s.scale.to_string()),
        ("replicates", a.replicates.to_string()),
        ("iqr", r.iqr.to_string()),
    ];
    match r.ks_distance {
        Some(d) => {
            v.push(("ks_distance", d.to_string()));
            v.push(("ks_pvalue", spectral_edge::stats::ks_pvalue(d, a.replicates).to_string()));
        }
        None => v.push(("cdf_check", "none (scaling diagnostics only; values are lambda1 - edge)".into())),
    }
    print_block(&v);
    if let Some(p) = a.output {
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(["replicate", "lambda1", "value"])?;
        for (i, (l, x)) in r.lambda1.iter().zip(&r.values).enumerate() {
            w.write_record([i.to_string(), l.to_string(), x.to_string()])?;
        }
        w.flush()?;
    }
    Ok(true)
}

fn run(a: RunArgs) -> Result<bool> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let seed = a.seed.unwrap_or(cfg.root_seed);
    let report = run_experiment(&cfg, seed)?;
    match a.csv.as_ref().or(cfg.output.csv.as_ref()) {
        Some(p) => {
            let svgs = emit_outputs(&report.rows, p, cfg.output.svg.as_deref())?;
            eprintln!("wrote {} rows to {}", report.rows.len(), p.display());
            for s in svgs {
                eprintln!("wrote {}", s.display());
            }
        }
        None => write_csv(io::stdout().lock(), &report.rows)?,
    }
    for c in &report.failed_cells {
        eprintln!("cell failed: {c}");
    }
    Ok(report.complete())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads_from_env().map_err(anyhow::Error::from).and_then(|threads| {
        with_workers(threads, move || match cli.cmd {
            Cmd::Simulate(a) => simulate(a),
            Cmd::SolveEdge(a) => solve_edge(a),
            Cmd::Classify(a) => classify(a),
            Cmd::SpikeTest(a) => spike_cmd(a),
            Cmd::Calibrate(a) => calibrate(a),
            Cmd::FactorTest(a) => factor_cmd(a),
            Cmd::ValidateLimits(a) => validate(a),
            Cmd::Run(a) => run(a),
        })?
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
