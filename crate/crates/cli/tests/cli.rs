//! End-to-end checks of the binary: outputs, exit codes, worker cap.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_spectral-edge");

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(BIN);
    c.args(args).env_remove("SPECTRAL_EDGE_THREADS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("se-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = r#"
experiment = "type_i_error"
root_seed = 3
replicates = 10
n = 60
phis = [0.5]
r0 = 2
r_star = 4
calibration_replicates = 200
laws = [{ family = "exponential", params = { rate = 1 } }]
population = { base = "identity", spikes = [25, 20] }
[output]
csv = "res/out.csv"
svg = "res/plot.svg"
"#;

#[test]
fn solve_edge_reports_mp_edge() {
    let o = run(&["solve-edge", "--law", "point_mass:c=1", "--phi", "0.25", "--n", "400"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let line = s.lines().find(|l| l.trim_start().starts_with("l_plus")).expect("l_plus line");
    let v: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    assert!((v - 2.25).abs() < 1e-8, "{s}");
}

#[test]
fn classify_prints_regime() {
    let o = run(&["classify", "--law", "scaled_beta:l=1,a=1,b=3", "--phi", "2", "--n", "1000"], &[]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Weibull"), "{}", stdout(&o));
}

#[test]
fn run_writes_outputs_and_is_reproducible() {
    let dir = scratch("run");
    let cfg = write_config(&dir, SMALL);
    let a = run(&["run", "--config", cfg.to_str().unwrap()], &[("SPECTRAL_EDGE_THREADS", "1")]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let first = std::fs::read(dir.join("res/out.csv")).unwrap();
    assert!(dir.join("res/plot_reject_T.svg").exists());
    let other = dir.join("again.csv");
    let b = run(
        &["run", "--config", cfg.to_str().unwrap(), "--csv", other.to_str().unwrap()],
        &[("SPECTRAL_EDGE_THREADS", "3")],
    );
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(first, std::fs::read(&other).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("experiment,cell,metric,value,se,R\n"));
    assert_eq!(text.lines().count(), 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failed_cells_give_exit_one() {
    let dir = scratch("fail");
    let body = SMALL.replace(
        r#"laws = [{ family = "exponential", params = { rate = 1 } }]"#,
        r#"laws = [{ family = "exponential", params = { rate = 1 } }, { family = "point_mass", params = { c = 1 } }]"#,
    );
    let cfg = write_config(&dir, &body);
    let o = run(&["run", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(dir.join("res/out.csv")).unwrap();
    assert!(text.contains("failed"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_input_gives_exit_two() {
    assert_eq!(run(&["run", "--config", "/nonexistent/cfg.toml"], &[]).status.code(), Some(2));
    let o = run(&["classify", "--law", "point_mass:c=1"], &[("SPECTRAL_EDGE_THREADS", "0")]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["classify", "--law", "pareto:alpah=3"], &[]).status.code(), Some(2));
}

#[test]
fn simulate_then_spike_test() {
    let dir = scratch("spike");
    let spec = dir.join("spec.csv");
    let o = run(
        &[
            "simulate",
            "--law",
            "exponential:rate=1",
            "--phi",
            "0.5",
            "--n",
            "100",
            "--spikes",
            "30,25,20",
            "--k",
            "8",
            "--seed",
            "4",
            "--output",
            spec.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(
        &[
            "spike-test",
            "--r0",
            "0",
            "--r-star",
            "5",
            "--law",
            "exponential:rate=1",
            "--n",
            "100",
            "--calibration",
            "300",
            "--input",
            spec.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("reject"), "{s}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn calibrate_writes_table() {
    let dir = scratch("cal");
    let out = dir.join("cal.csv");
    let o = run(
        &[
            "calibrate",
            "--law",
            "gamma:shape=5,rate=5",
            "--n",
            "80",
            "--r-star",
            "4",
            "--replicates",
            "200",
            "--output",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("r0,which,alpha,delta"));
    assert_eq!(text.lines().count(), 1 + 2 * 4);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn factor_test_on_matrix_csv() {
    let dir = scratch("factor");
    let y = dir.join("y.csv");
    let data = spectral_edge::bootstrap::build_factor_data(60, 50, 3.0, &[1.3, 0.8, 0.5], 2).unwrap();
    spectral_edge::matrix_model::write_matrix_csv(std::fs::File::create(&y).unwrap(), &data.sample.y).unwrap();
    let args =
        ["factor-test", "--r0", "1", "--B", "40", "--multiplier", "exponential:rate=1", "--input", y.to_str().unwrap()];
    let a = run(&args, &[("SPECTRAL_EDGE_THREADS", "1")]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let s = stdout(&a);
    for key in ["p_value", "B_star", "reject", "lambda_hat", "V"] {
        assert!(s.contains(key), "{key} missing: {s}");
    }
    let b = run(&args, &[("SPECTRAL_EDGE_THREADS", "2")]);
    assert_eq!(s, stdout(&b));
    std::fs::remove_dir_all(&dir).unwrap();
}
