//! End-to-end tests of the `freefront` binary: exit codes, artifact
//! layout, determinism, and re-parse of every emitted file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn freefront() -> Command {
    Command::new(env!("CARGO_BIN_EXE_freefront"))
}

fn run(cmd: &str, config: &str, out: &Path) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    fs::write(&cfg_path, config).unwrap();
    freefront()
        .arg(cmd)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SIM_CONFIG: &str = r#"
schema_version = 1
command = "simulate"
seed = 7

[params]
lambda = 1.5
mu = 1.0
b = 1.0
c = 1.0
d = 1.0
m = 1.0
rho = 2.0

[init]
h0 = 1.0
kind = "cosine"
amp_u = 0.5
amp_v = 0.5

[solver]
n_grid = 64
dt = "auto"
t_max = 1.0
snapshot_dt = 0.5
"#;

/// Re-parse a versioned CSV: checks the schema comment, the header, and
/// that every cell in numeric columns parses as f64.
fn assert_csv_parses(path: &Path, header: &str, numeric_cols: &[usize]) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# schema_version=1", "{}", path.display());
    assert_eq!(lines.next().unwrap(), header, "{}", path.display());
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), header.split(',').count(), "{line}");
        for &i in numeric_cols {
            if !cols[i].is_empty() {
                cols[i].parse::<f64>().unwrap_or_else(|e| panic!("{line}: {e}"));
            }
        }
        rows += 1;
    }
    assert!(rows > 0, "{} has no data rows", path.display());
}

#[test]
fn simulate_writes_artifacts_and_round_trips() {
    let out = tempfile::tempdir().unwrap();
    let res = run("simulate", SIM_CONFIG, out.path());
    assert!(res.status.success(), "{}", stderr(&res));
    assert_csv_parses(
        &out.path().join("trajectory.csv"),
        "t,h,h_prime,front_gradient,sup_u,sup_v",
        &[0, 1, 2, 3, 4, 5],
    );
    // snapshots at t = 0, 0.5, 1.0
    for i in 0..3 {
        assert_csv_parses(
            &out.path().join(format!("snapshots/snapshot_{i:04}.csv")),
            "xi,x,u,v",
            &[0, 1, 2, 3],
        );
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["command"], "simulate");
    assert_eq!(meta["seed"], 7);
}

#[test]
fn validation_errors_name_the_inequality_and_exit_1() {
    let out = tempfile::tempdir().unwrap();
    let bad = SIM_CONFIG.replace("rho = 2.0", "rho = 0.0");
    let res = run("simulate", &bad, out.path());
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("rho must be positive"), "{}", stderr(&res));
}

#[test]
fn sweep_axes_with_simulate_exit_1() {
    let out = tempfile::tempdir().unwrap();
    let bad = format!("{SIM_CONFIG}\n[sweep]\nh0 = [1.0]\nrho = [1.0]\n");
    let res = run("simulate", &bad, out.path());
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("only valid with the sweep command"));
}

#[test]
fn numerical_failure_exits_2_with_partial_trajectory() {
    let out = tempfile::tempdir().unwrap();
    let bad = SIM_CONFIG
        .replace("dt = \"auto\"", "dt = 5.0")
        .replace("t_max = 1.0", "t_max = 500.0")
        .replace("lambda = 1.5", "lambda = 2.0");
    let res = run("simulate", &bad, out.path());
    assert_eq!(res.status.code(), Some(2), "{}", stderr(&res));
    assert!(out.path().join("trajectory.csv").exists(), "partial kept");
}

const SWEEP_CONFIG: &str = r#"
schema_version = 1
command = "sweep"
seed = 3
threads = 2

[params]
lambda = 2.0
mu = 1.0
b = 1.0
c = 1.0
d = 1.0
m = 1.0
rho = 1.0

[init]
h0 = 0.5
kind = "cosine"
amp_u = 0.1
amp_v = 0.1

[solver]
n_grid = 64
dt = "auto"
t_max = 40.0

[sweep]
h0 = [0.5, 1.7]
rho = [0.001, 10.0]
"#;

#[test]
fn sweep_grid_produces_expected_verdicts() {
    let out = tempfile::tempdir().unwrap();
    let res = run("sweep", SWEEP_CONFIG, out.path());
    assert!(res.status.success(), "{}", stderr(&res));
    let text = fs::read_to_string(out.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let verdict = row.split(',').nth(2).unwrap();
        assert!(!verdict.is_empty());
    }
    // h0 = 1.7 exceeds Lambda = pi/2: spreading for every rho
    for row in rows.iter().filter(|r| r.starts_with("1.7,")) {
        assert!(row.contains(",spreading,"), "{row}");
    }
    assert_csv_parses(
        &out.path().join("sweep.csv"),
        "h0,rho,verdict,h_final,speed",
        &[0, 1, 3, 4],
    );
    assert_csv_parses(
        &out.path().join("runs/run_000_000.csv"),
        "t,h,h_prime,front_gradient,sup_u,sup_v",
        &[0, 1, 2, 3, 4, 5],
    );
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let out1 = tempfile::tempdir().unwrap();
    let out2 = tempfile::tempdir().unwrap();
    let r1 = run("sweep", SWEEP_CONFIG, out1.path());
    let r2 = run("sweep", SWEEP_CONFIG, out2.path());
    assert!(r1.status.success() && r2.status.success());
    let a = fs::read(out1.path().join("sweep.csv")).unwrap();
    let b = fs::read(out2.path().join("sweep.csv")).unwrap();
    assert_eq!(a, b, "sweep summary must be deterministic");
    for entry in fs::read_dir(out1.path().join("runs")).unwrap() {
        let name = entry.unwrap().file_name();
        let pa = out1.path().join("runs").join(&name);
        let pb = out2.path().join("runs").join(&name);
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{name:?}");
    }
}

#[test]
fn classify_emits_verdict_json() {
    let out = tempfile::tempdir().unwrap();
    let config = SIM_CONFIG
        .replace("command = \"simulate\"", "command = \"classify\"")
        .replace("t_max = 1.0", "t_max = 40.0")
        .replace("rho = 2.0", "rho = 50.0");
    let res = run("classify", &config, out.path());
    assert!(res.status.success(), "{}", stderr(&res));
    let verdict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("verdict.json")).unwrap())
            .unwrap();
    assert_eq!(verdict["verdict"], "spreading");
    assert!(verdict["evidence"]["rule"].as_str().unwrap().contains("Lambda"));
}

#[test]
fn semiwave_equilibrium_thresholds_compare_commands() {
    // semiwave
    let out = tempfile::tempdir().unwrap();
    let config = r#"
schema_version = 1
command = "semiwave"

[semiwave]
a = 1.0
b = 1.0
d = 1.0
rho = 1.0
tol = 1e-6
"#;
    let res = run("semiwave", config, out.path());
    assert!(res.status.success(), "{}", stderr(&res));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("semiwave.json")).unwrap())
            .unwrap();
    let c = report["c"].as_f64().unwrap();
    assert!(c > 0.0 && c < 2.0);
    assert_csv_parses(&out.path().join("semiwave.csv"), "y,q,qprime", &[0, 1, 2]);

    // equilibrium
    let out = tempfile::tempdir().unwrap();
    let config = r#"
schema_version = 1
command = "equilibrium"

[params]
lambda = 1.5
mu = 1.0
b = 1.0
c = 1.0
d = 1.0
m = 1.0
rho = 1.0
"#;
    let res = run("equilibrium", config, out.path());
    assert!(res.status.success(), "{}", stderr(&res));
    let eq: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("equilibrium.json")).unwrap())
            .unwrap();
    assert!((eq["closed_form"]["u_star"].as_f64().unwrap() - 0.8903882).abs() < 1e-6);
    assert_eq!(eq["converged"], true);
    assert_eq!(eq["monotone"], true);

    // thresholds
    let out = tempfile::tempdir().unwrap();
    let config = config.replace("command = \"equilibrium\"", "command = \"thresholds\"");
    let res = run("thresholds", &config, out.path());
    assert!(res.status.success(), "{}", stderr(&res));
    let th: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("thresholds.json")).unwrap())
            .unwrap();
    assert!(th["lambda_barrier"].as_f64().unwrap() > 0.0);
    assert!(th["sigma1"].as_array().unwrap().len() >= 2);

    // compare (sandwich only, short horizon)
    let out = tempfile::tempdir().unwrap();
    let config = r#"
schema_version = 1
command = "compare"

[params]
lambda = 1.5
mu = 1.0
b = 1.0
c = 1.0
d = 1.0
m = 1.0
rho = 2.0

[init]
h0 = 1.0
kind = "cosine"
amp_u = 0.5
amp_v = 0.5

[solver]
n_grid = 80
dt = "auto"
t_max = 2.0
snapshot_dt = 0.5

[compare]
tol = 1e-3
"#;
    let res = run("compare", config, out.path());
    assert!(res.status.success(), "{}", stderr(&res));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("compare.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 6);
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path: PathBuf = dir.path().join("run.toml");
    fs::write(&cfg_path, SIM_CONFIG).unwrap();
    let env_out = dir.path().join("env_out");
    let res = freefront()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg_path)
        .env("FREEFRONT_OUT", &env_out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(env_out.join("trajectory.csv").exists());
}
