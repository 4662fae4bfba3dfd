use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qbm::scenario::{Manifest, ScenarioConfig, MANIFEST_FILE};

const BASE: &str = r#"
seed = 3
[oscillator]
mass = 1.0
spring_constant = 1.0
hbar = 1.0
[bath]
kind = "ohmic"
gamma = 0.2
[thermal]
kt = 5.0
[grid]
nq = 96
np = 96
"#;

const RUNS: &str = r#"
[output]
plot_script = true

[[run]]
name = "coeffs"
mode = "coefficients"
t_final = 2.0
dt = 0.05

[[run]]
name = "eq"
mode = "equilibrium-check"
lambdas = [-1, 0]
t_final = 1.0
dt = 0.1

[[run]]
name = "mc"
mode = "kramers-compare"
initial = { kind = "gaussian", mean = [2.0, 0.0], cov = [[2.0, 0.0], [0.0, 2.0]] }
t_final = 1.0
dt = 0.1
samples = 4
paths = 4000
z_max = 5.0
"#;

fn qbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbm")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn empty_run_list_writes_only_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "empty.toml", BASE);
    let out = tmp.path().join("out");
    let o = qbm(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let entries: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, vec![std::ffi::OsString::from(MANIFEST_FILE)]);
}

#[test]
fn runs_are_deterministic_and_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &format!("{BASE}{RUNS}"));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = qbm(&["run", &cfg, "--out", dir.to_str().unwrap(), "--seed", "17"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["coeffs.csv", "eq.csv", "mc.csv", "plot.gp"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f} differs between identical runs");
    }
    let csv = fs::read_to_string(a.join("coeffs.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,two_gamma,omega2,d_pp,d_qp"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0.000000000000e+00");
    assert!(first[1].contains("e-01") || first[1].contains("e+00"), "{}", first[1]);

    let report = qbm(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(0));
    let text = stdout(&report);
    let pass_rows = text.lines().filter(|l| l.starts_with("PASS")).count();
    assert_eq!(pass_rows, 6, "{text}");
    assert!(text.contains("max |z|"), "{text}");

    let manifest = Manifest::read(&a.join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.seed, 17);
    assert_eq!(manifest.config_hash.len(), 64);
    let echoed = ScenarioConfig::parse(&manifest.config.to_toml().unwrap()).unwrap();
    assert_eq!(echoed, manifest.config);
    let original = ScenarioConfig::parse_with_overrides(&format!("{BASE}{RUNS}"), &["seed=17".into()]).unwrap();
    assert_eq!(manifest.config, original);
}

#[test]
fn failed_tolerance_is_a_fail_row() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "{BASE}\n[[run]]\nname = \"strict\"\nmode = \"equilibrium-check\"\nlambdas = [0]\nt_final = 0.5\ndt = 0.1\ntolerance = 1e-30\n"
    );
    let cfg = write_config(tmp.path(), "s.toml", &text);
    let out = tmp.path().join("out");
    let o = qbm(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report = qbm(&["report", out.to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(1));
    let text = stdout(&report);
    let row = text.lines().find(|l| l.starts_with("FAIL")).expect("a FAIL row");
    assert!(row.contains("stationary-lambda+0"), "{row}");
}

#[test]
fn overrides_change_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &format!("{BASE}{RUNS}"));
    let out = tmp.path().join("out");
    let o = qbm(&[
        "run", &cfg, "--out", out.to_str().unwrap(),
        "--set", "run.0.t_final=0.5", "--set", "run.1.lambdas=[1]", "--set", "run.2.paths=100",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("coeffs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 11);
    let eq = fs::read_to_string(out.join("eq.csv")).unwrap();
    assert!(eq.lines().skip(1).all(|l| l.starts_with("1,")), "{eq}");
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let unknown = write_config(tmp.path(), "u.toml", &format!("{BASE}\nextra_key = 1\n"));
    assert_eq!(qbm(&["run", &unknown, "--out", out.to_str().unwrap()]).status.code(), Some(2));
    let bad = write_config(tmp.path(), "b.toml", &BASE.replace("kt = 5.0", "kt = -5.0"));
    assert_eq!(qbm(&["run", &bad, "--out", out.to_str().unwrap()]).status.code(), Some(2));
    let missing = tmp.path().join("nope.toml");
    assert_eq!(qbm(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qbm(&["run", &unknown, "--set", "novalue"]).status.code(), Some(2));
    assert_eq!(qbm(&["report", tmp.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_abort_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    // a hot packet on a grid far narrower than the thermal spread leaks mass off the edge
    let text = format!(
        "{}\n[[run]]\nname = \"leak\"\nmode = \"evolve\"\nlambda = 0\nt_final = 20.0\ndt = 0.1\ninitial = {{ kind = \"packet\", sigma = 1.0 }}\n",
        BASE.replace("kt = 5.0", "kt = 50.0").replace("nq = 96", "nq = 96\nq_half = 7.0\np_half = 7.0")
    );
    let cfg = write_config(tmp.path(), "s.toml", &text);
    let out = tmp.path().join("out");
    let o = qbm(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let m = Manifest::read(&out.join(MANIFEST_FILE)).unwrap();
    assert!(m.runs[0].error.as_deref().unwrap().contains("leak"), "{:?}", m.runs[0].error);
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", BASE);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = qbm(&["run", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn decohere_mode_tabulates_both_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
[oscillator]
spring_constant = 0.0
[bath]
kind = "ohmic"
gamma = 0.01
[thermal]
kt = 1.0
[[run]]
name = "thermal"
mode = "decohere"
regime = "thermal-initial"
cat = { d = 6.0, sigma = 1.0 }
times = [0.0, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1]
points = 1025
"#;
    let cfg = write_config(tmp.path(), "d.toml", text);
    let out = tmp.path().join("out");
    let o = qbm(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("thermal.csv")).unwrap();
    assert!(csv.starts_with("t,a_simulated,a_closed_form,in_regime,regime,"));
    let m = Manifest::read(&out.join(MANIFEST_FILE)).unwrap();
    let names: Vec<&str> = m.runs[0].checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["attenuation-invariants", "closed-form-agreement", "decoherence-time"]);
}
