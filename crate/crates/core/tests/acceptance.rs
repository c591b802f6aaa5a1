//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Set ACCEPTANCE_ONLY=1,2,13 to run a subset; the others print SKIP.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex;
use spectral_edge::bootstrap::{algorithm1_test, build_factor_data, v_constant, FactorTestConfig};
use spectral_edge::harness::{
    limit_cdf, run_experiment, validate_limit_law, with_workers, write_csv, ExperimentConfig, ExperimentKind, LawSpec,
    LimitLawSetup, ModelSpec, ResultRow,
};
use spectral_edge::matrix_model::{ModelClass, ModelKind};
use spectral_edge::population::PopulationSpec;
use spectral_edge::seed;
use spectral_edge::special::normal_cdf;
use spectral_edge::stats::{iqr, ks_distance, ks_pvalue, quantile};
use spectral_edge::stieltjes::{density, edge, edge_coupled, solve_m1, Regime, SolverEnv};
use spectral_edge::weight_laws::WeightLaw;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn say(s: &str) {
    // written past the test harness capture so the lines always appear
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{s}");
    let _ = out.flush();
}

fn law(spec: &str) -> WeightLaw<f64> {
    LawSpec::parse(spec).unwrap().resolve().unwrap()
}

fn identity(n: usize, phi: f64) -> PopulationSpec<f64> {
    PopulationSpec::identity((phi * n as f64).round() as usize).unwrap()
}

fn sep() -> ModelKind {
    ModelKind::separable_gaussian()
}

fn c1_mp_edges() -> Verdict {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for phi in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let env =
            SolverEnv::unconditional(ModelClass::Separable, identity(1000, phi), law("point_mass:c=1"), 1000).unwrap();
        let r = edge_coupled(&env).unwrap();
        worst = worst.max((r.l_plus - (1.0 + phi.sqrt()).powi(2)).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-8 && secs < 1.0,
        format!("max |L+ - (1+sqrt(phi))^2| = {worst:.2e} (<= 1e-8), {secs:.3} s (< 1 s)"),
    )
}

fn c2_beta_constants() -> Verdict {
    let env =
        SolverEnv::unconditional(ModelClass::Separable, identity(1000, 2.0), law("scaled_beta:l=1,a=1,b=3"), 1000)
            .unwrap();
    let r = edge(&env).unwrap();
    let v = r.varsigma;
    let errs = [v.s2 - 0.5, v.s1 - 1.0, r.l_plus - 2.5, v.s3 - 0.25, v.s4 - 0.5];
    let worst = errs.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let weibull = matches!(r.regime, Regime::Weibull { .. });
    verdict(
        worst <= 1e-8 && weibull,
        format!(
            "s1={:.12} s2={:.12} s3={:.12} s4={:.12} L+={:.12} regime={} max err {worst:.1e} (<= 1e-8)",
            v.s1,
            v.s2,
            v.s3,
            v.s4,
            r.l_plus,
            r.regime.name()
        ),
    )
}

fn limit_ks(kind: ModelKind, law_spec: &str, phi: f64, n: usize, r: usize, seed: u64, tol: f64) -> Verdict {
    let t = Instant::now();
    let setup = LimitLawSetup { kind, pop: identity(n, phi), law: law(law_spec), n, replicates: r };
    let rep = validate_limit_law(&setup, seed).unwrap();
    let d = rep.ks_distance.unwrap();
    let cdf = limit_cdf(rep.standardization.family).unwrap();
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.5 {
            lo = mid
        } else {
            hi = mid
        }
    }
    verdict(
        d <= tol,
        format!(
            "{law_spec} phi={phi} n={n} R={r}: limit {:?}, KS = {d:.4} (<= {tol}), p = {:.3}, median {:.3} vs limit {:.3}, IQR {:.3} [{:.0} s]",
            rep.standardization.family,
            ks_pvalue(d, r),
            quantile(&rep.values, 0.5),
            lo,
            rep.iqr,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c7_tw_scaling() -> Verdict {
    let t = Instant::now();
    let r = 1000;
    let mut iqrs = Vec::new();
    for n in [1000usize, 2000] {
        let setup = LimitLawSetup { kind: sep(), pop: identity(n, 1.0), law: law("uniform:l=1"), n, replicates: r };
        let rep = validate_limit_law(&setup, 7).unwrap();
        assert!(rep.ks_distance.is_none());
        iqrs.push(iqr(&rep.values));
    }
    let ratio = iqrs[0] / iqrs[1];
    verdict(
        (1.35..=2.05).contains(&ratio),
        format!(
            "IQR(lambda1 - L+hat) n=1000: {:.5}, n=2000: {:.5}, ratio {ratio:.3} in [1.35, 2.05] (2^(2/3) = 1.587), R={r}, {:.0} s",
            iqrs[0],
            iqrs[1],
            t.elapsed().as_secs_f64()
        ),
    )
}

fn figure1_laws() -> Vec<LawSpec> {
    vec![
        LawSpec::new("gamma", &[("shape", 5.0), ("rate", 5.0)]),
        LawSpec::new("pareto", &[("x_min", 0.75), ("alpha", 3.0)]),
        LawSpec::new("exponential", &[("rate", 1.0)]),
        LawSpec::new("squared_student_t", &[("nu", 3.0)]),
    ]
}

fn spike_cfg(kind: ExperimentKind, laws: Vec<LawSpec>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind, laws);
    c.replicates = 2000;
    c.n = 400;
    c.phis = vec![0.5, 1.0, 2.0];
    c.population.spikes = vec![25.0, 20.0];
    c.r0 = 2;
    c.r_star = 6;
    c.calibration_replicates = 10_000;
    c
}

fn band_check(rows: &[ResultRow], lo: f64, hi: f64) -> Verdict {
    let mut bad = Vec::new();
    let mut all = Vec::new();
    for r in rows {
        all.push(format!("{:.3}", r.value));
        if !(r.value >= lo && r.value <= hi) {
            bad.push(format!("{} {} = {:.4}", r.cell, r.metric, r.value));
        }
    }
    let detail = if bad.is_empty() {
        format!("all {} rates in [{lo}, {hi}]: {}", rows.len(), all.join(" "))
    } else {
        format!("{}/{} outside [{lo}, {hi}]: {}", bad.len(), rows.len(), bad.join("; "))
    };
    verdict(bad.is_empty() && !rows.is_empty(), detail)
}

fn timed(t: Instant, v: Verdict) -> Verdict {
    verdict(v.pass, format!("{} [{:.0} s]", v.detail, t.elapsed().as_secs_f64()))
}

fn c8_spike_size() -> Verdict {
    let t = Instant::now();
    let rep = run_experiment(&spike_cfg(ExperimentKind::TypeIError, figure1_laws()), 8).unwrap();
    if !rep.complete() {
        return verdict(false, format!("failed cells: {:?}", rep.failed_cells));
    }
    timed(t, band_check(&rep.rows, 0.07, 0.13))
}

fn c9_spike_power() -> Verdict {
    let t = Instant::now();
    let mut c = spike_cfg(ExperimentKind::Power, figure1_laws());
    c.phis = vec![0.5];
    c.spike_grid = vec![POWER_TOP_SPIKE];
    let rep = run_experiment(&c, 9).unwrap();
    if !rep.complete() {
        return verdict(false, format!("failed cells: {:?}", rep.failed_cells));
    }
    timed(t, band_check(&rep.rows, 0.9, 1.0))
}

/// Largest third spike of the power sweep.
const POWER_TOP_SPIKE: f64 = 100.0;

fn c10_robustness() -> Verdict {
    let t = Instant::now();
    let mut c = spike_cfg(ExperimentKind::Robustness, vec![LawSpec::new("pareto", &[("x_min", 0.75), ("alpha", 3.0)])]);
    c.calibration_laws = vec![
        LawSpec::new("pareto", &[("x_min", 1.0), ("alpha", 4.0)]),
        LawSpec::new("squared_student_t", &[("nu", 2.0)]),
    ];
    let rep = run_experiment(&c, 10).unwrap();
    if !rep.complete() {
        return verdict(false, format!("failed cells: {:?}", rep.failed_cells));
    }
    timed(t, band_check(&rep.rows, 0.05, 0.16))
}

fn c11_bootstrap_clt() -> Verdict {
    let t = Instant::now();
    let data = build_factor_data(400, 400, 3.0, &[1.3, 0.8, 0.5], 11).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for i in 1..=3 {
        let cfg = FactorTestConfig::new(i, 2000, 0.1, law("exponential:rate=1"), 3.0).unwrap();
        let o = algorithm1_test(&data.sample.y, &cfg, seed::derive(11, &[i as u64])).unwrap();
        let ts: Vec<f64> = o.t_stats.clone();
        let d = ks_distance(&ts, normal_cdf);
        let var = ts.iter().map(|x| x * x).sum::<f64>() / ts.len() as f64;
        parts.push(format!("i={i}: KS {d:.3}, E T^2 {var:.3}"));
        worst = worst.max(d);
    }
    verdict(
        worst <= 0.08,
        format!("{} (max {worst:.3} <= 0.08) [{:.0} s]", parts.join(", "), t.elapsed().as_secs_f64()),
    )
}

/// Outer replicates per cell for the Algorithm 1 check.
const ALG1_REPLICATES: usize = 20;

fn c12_algorithm1() -> Verdict {
    let t = Instant::now();
    let laws = vec![
        LawSpec::new("gamma", &[("shape", 15.0), ("rate", 15.0)]),
        LawSpec::new("exponential", &[("rate", 1.0)]),
        LawSpec::new("chi_squared", &[("k", 1.0)]),
    ];
    let mut c = ExperimentConfig::new(ExperimentKind::FactorTypeIPower, laws);
    c.replicates = ALG1_REPLICATES;
    c.n = 400;
    c.phis = vec![0.5, 1.0, 2.0];
    c.r0 = 3;
    c.bootstrap_replicates = 1000;
    c.deltas = vec![3.0];
    let size = run_experiment(&c, 12).unwrap();
    c.deltas = vec![0.0];
    let power = run_experiment(&c, 12).unwrap();
    if !size.complete() || !power.complete() {
        return verdict(false, format!("failed cells: {:?} {:?}", size.failed_cells, power.failed_cells));
    }
    let pick =
        |rows: &[ResultRow]| -> Vec<ResultRow> { rows.iter().filter(|r| r.metric == "reject").cloned().collect() };
    let a = band_check(&pick(&size.rows), 0.07, 0.13);
    let b = band_check(&pick(&power.rows), 0.9, 1.0);
    verdict(
        a.pass && b.pass,
        format!(
            "R={ALG1_REPLICATES} per cell; size: {}; power: {} [{:.0} s]",
            a.detail,
            b.detail,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c13_v_constants() -> Verdict {
    let vals = [
        (v_constant(3.0, &law("exponential:rate=1")).unwrap(), 5.0),
        (v_constant(3.0, &law("chi_squared:k=1")).unwrap(), 8.0),
        (v_constant(3.0, &law("gamma:shape=15,rate=15")).unwrap(), 2.2),
    ];
    let worst = vals.iter().fold(0.0f64, |a, (v, e)| a.max((v - e).abs()));
    verdict(
        worst <= 1e-12,
        format!("V = {:?}, max err {worst:.1e} (<= 1e-12)", vals.iter().map(|v| v.0).collect::<Vec<_>>()),
    )
}

fn c14_solver_contracts() -> Verdict {
    let phi = 0.5;
    let env =
        SolverEnv::unconditional(ModelClass::Separable, identity(1000, phi), law("point_mass:c=1"), 1000).unwrap();
    let (lo, hi) = ((1.0 - phi.sqrt()).powi(2), (1.0 + phi.sqrt()).powi(2));
    let mut worst_res: f64 = 0.0;
    let mut min_im = f64::INFINITY;
    for k in 0..50 {
        let e = -0.5 + 5.0 * k as f64 / 49.0;
        let eta = [1e-2, 1e-1, 1.0][k % 3];
        let t = solve_m1(Complex::new(e, eta), &env).unwrap();
        worst_res = worst_res.max(t.residual);
        min_im = min_im.min(t.m1.im);
    }
    // Gauss-Legendre on the substitution E = c + h·sin θ to absorb the edge roots
    let (c, h) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let m = 400;
    let mut mass = 0.0;
    for j in 0..m {
        let th = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
        let e = c + h * th.sin();
        let rho = density(e, &env, 1e-7).unwrap();
        mass += rho * h * th.cos() * std::f64::consts::PI / m as f64;
    }
    verdict(
        worst_res <= 1e-10 && min_im > 0.0 && (mass - 1.0).abs() <= 0.01,
        format!("max residual {worst_res:.1e} (<= 1e-10), min Im m1 {min_im:.3e} (> 0), mass {mass:.5} (1 +- 0.01)"),
    )
}

fn c15_spacings() -> Verdict {
    let t = Instant::now();
    let (n, reps, k) = (400usize, 2000usize, 100usize);
    let l = law("exponential:rate=1");
    let mut spacings = vec![Vec::with_capacity(reps); k];
    for rep in 0..reps {
        let mut w = l.sample_weights(n, seed::derive(15, &[rep as u64])).unwrap();
        w.sort_by(|a, b| b.total_cmp(a));
        for i in 0..k {
            spacings[i].push(w[i] - w[i + 1]);
        }
    }
    let mut pass = 0;
    let mut literal = 0;
    for (i, s) in spacings.iter().enumerate() {
        let rate = (i + 1) as f64;
        if ks_pvalue(ks_distance(s, |x| 1.0 - (-rate * x.max(0.0)).exp()), reps) >= 0.05 {
            pass += 1;
        }
        let lit_rate = 1.0 / (n - i - 1) as f64;
        if ks_pvalue(ks_distance(s, |x| 1.0 - (-lit_rate * x.max(0.0)).exp()), reps) >= 0.05 {
            literal += 1;
        }
    }
    let frac = pass as f64 / k as f64;
    verdict(
        frac >= 0.9,
        format!(
            "spacing i ~ Exp(rate i), i=1..{k}: {pass}/{k} pass at 5% ({frac:.2} >= 0.90); rate 1/(n-i) as printed: {literal}/{k} [{:.1} s]",
            t.elapsed().as_secs_f64()
        ),
    )
}

fn small_configs() -> Vec<ExperimentConfig> {
    use ExperimentKind::*;
    let laws = || {
        vec![LawSpec::new("pareto", &[("x_min", 0.75), ("alpha", 3.0)]), LawSpec::new("exponential", &[("rate", 1.0)])]
    };
    let mut out = Vec::new();
    for kind in [TypeIError, Power, EstimatorCdr, Robustness, FactorTypeIPower, FactorCdr, LimitLaw, EdgeScan] {
        let mut c = ExperimentConfig::new(kind, laws());
        c.replicates = 8;
        c.n = 80;
        c.phis = vec![0.5, 1.5];
        c.calibration_replicates = 300;
        c.population.spikes = vec![25.0, 20.0];
        c.spike_grid = vec![60.0];
        c.calibration_laws = vec![LawSpec::new("squared_student_t", &[("nu", 2.0)])];
        c.bootstrap_replicates = 30;
        c.r0 = 2;
        c.r_star = 4;
        c.model = if matches!(kind, LimitLaw) { ModelSpec::Separable } else { ModelSpec::Elliptical };
        if kind == EdgeScan {
            c.laws.push(LawSpec::new("scaled_beta", &[("l", 1.0), ("a", 1.0), ("b", 3.0)]));
            c.phis = vec![0.5, 2.0];
        }
        if kind == LimitLaw {
            c.population.spikes.clear();
        }
        out.push(c);
    }
    out
}

fn c16_determinism() -> Verdict {
    let t = Instant::now();
    let mut mismatched = Vec::new();
    let mut incomplete = Vec::new();
    for cfg in small_configs() {
        let mut csv = |threads: usize| -> Vec<u8> {
            let rep = with_workers(Some(threads), || run_experiment(&cfg, 16)).unwrap().unwrap();
            if !rep.complete() {
                incomplete.push(format!("{}: {:?}", cfg.experiment.name(), rep.failed_cells));
            }
            let mut buf = Vec::new();
            write_csv(&mut buf, &rep.rows).unwrap();
            buf
        };
        let a = csv(1);
        let b = csv(3);
        let c = csv(2);
        if a != b || a != c {
            mismatched.push(cfg.experiment.name());
        }
    }
    verdict(
        mismatched.is_empty(),
        format!(
            "8 experiment kinds at 1, 3 and 2 workers: mismatches {mismatched:?}; incomplete cells {incomplete:?} [{:.0} s]",
            t.elapsed().as_secs_f64()
        ),
    )
}

#[test]
fn acceptance() {
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    type Check = fn() -> Verdict;
    let checks: Vec<(usize, &str, Check)> = vec![
        (1, "MP edge oracle", c1_mp_edges),
        (2, "closed-form constants", c2_beta_constants),
        (3, "Frechet limit", || limit_ks(sep(), "pareto:x_min=0.75,alpha=3", 1.0, 2000, 2000, 3, 0.05)),
        (4, "Gumbel limit", || limit_ks(sep(), "exponential:rate=1", 1.0, 2000, 2000, 4, 0.08)),
        (5, "Weibull limit", || limit_ks(sep(), "scaled_beta:l=1,a=1,b=3", 2.0, 2000, 2000, 5, 0.08)),
        (6, "Gaussian regime", || limit_ks(sep(), "scaled_beta:l=1,a=1,b=3", 0.5, 2000, 2000, 6, 0.08)),
        (7, "TW-mixture scaling", c7_tw_scaling),
        (8, "spike test size", c8_spike_size),
        (9, "spike test power", c9_spike_power),
        (10, "robustness size", c10_robustness),
        (11, "bootstrap conditional CLT", c11_bootstrap_clt),
        (12, "Algorithm 1 size/power", c12_algorithm1),
        (13, "V constants", c13_v_constants),
        (14, "solver contracts", c14_solver_contracts),
        (15, "spacing law", c15_spacings),
        (16, "determinism", c16_determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in checks {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            say(&format!("SKIP {id:>2} {name}"));
            continue;
        }
        let v = check();
        say(&format!("{} {id:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail));
        if !v.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
