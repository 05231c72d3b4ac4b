use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eprb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eprb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_replay_fields(v: &Value, command: &str) {
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["command"], command);
    assert!(v["seed"].is_u64());
    assert!(v["grid"]["spec"].is_string());
    assert!(v["tolerances"]["analytic"].is_f64());
    assert!(v["tolerances"]["sigma"].is_f64());
}

fn table_model(dir: &Path, name: &str, claims_oi: bool, correlated: bool) -> String {
    let mut tables = Vec::new();
    for a in [0, 90] {
        for b in [0, 90] {
            for lambda in 0..2 {
                let p = match (correlated, lambda) {
                    (true, _) => "[[0.5, 0.0], [0.0, 0.5]]",
                    (false, 0) => "[[0.0, 1.0], [0.0, 0.0]]",
                    (false, _) => "[[0.0, 0.0], [1.0, 0.0]]",
                };
                tables.push(format!(r#"{{"a": {a}, "b": {b}, "lambda": {lambda}, "p": {p}}}"#));
            }
        }
    }
    let json = format!(
        r#"{{"schema_version": 1, "name": "{name}", "weights": [0.5, 0.5], "a_degrees": [0, 90], "b_degrees": [0, 90],
        "flags": {{"deterministic": false, "claims_pi": true, "claims_oi": {claims_oi}}}, "tables": [{}]}}"#,
        tables.join(",")
    );
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn pipeline_reports_step_one_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let out = eprb(&[
        "pipeline",
        "--a",
        "0",
        "--b",
        "60",
        "--outcome-a",
        "+1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("cov = -0.500000"));
    let v = read_json(&path);
    assert_replay_fields(&v, "pipeline");
    let cov = v["result"]["quantum"]["steps"][0]["quantities"]["covariance"]
        .as_f64()
        .unwrap();
    assert!((cov + 0.5).abs() < 1e-12);
    assert_eq!(v["result"]["quantum"]["outcome_a"], 1);
}

#[test]
fn pipeline_is_deterministic_in_seed() {
    let run = |seed: &str| {
        let out = eprb(&["pipeline", "--a", "10", "--b", "75", "--seed", seed, "--out", "-"]);
        assert_eq!(code(&out), 0);
        stdout(&out)
    };
    assert_eq!(run("5"), run("5"));
}

#[test]
fn pipeline_model_is_quantum_consistent() {
    let out = eprb(&[
        "pipeline",
        "--a",
        "0",
        "--b",
        "60",
        "--outcome-a",
        "-1",
        "--model",
        "oi-violating-qm",
        "--samples",
        "20000",
        "--grid-step",
        "45",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(
        text.contains("QM consistency: step I ✓  step II bayes ✓  step II frozen ✓  step III ✓"),
        "{text}"
    );
}

#[test]
fn pipeline_csv_has_fixed_columns() {
    let out = eprb(&[
        "pipeline",
        "--a",
        "0",
        "--b",
        "60",
        "--outcome-a",
        "+1",
        "--outcome-b",
        "-1",
        "--format",
        "csv",
        "--out",
        "-",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("schema_version,tool_version,command,seed,samples,grid,tol_exact,tol_analytic,sigma,conditioning,step,a_deg,b_deg"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn missing_b_is_usage_error() {
    let out = eprb(&["pipeline", "--a", "0"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--b"));
}

#[test]
fn invalid_values_are_usage_errors() {
    assert_eq!(code(&eprb(&["pipeline", "--a", "0", "--b", "inf"])), 2);
    assert_eq!(
        code(&eprb(&["pipeline", "--a", "0", "--b", "10", "--outcome-a", "2"])),
        2
    );
    assert_eq!(code(&eprb(&["check", "--model", "no-such-model"])), 2);
    assert_eq!(code(&eprb(&["check"])), 2);
    assert_eq!(code(&eprb(&["check", "--model", "qm"])), 2);
    assert_eq!(code(&eprb(&["chsh", "--angles", "0,0,45,135"])), 2);
    assert_eq!(code(&eprb(&["chsh", "--scan", "0"])), 2);
    assert_eq!(code(&eprb(&["ks", "--mode", "sideways"])), 2);
    assert_eq!(code(&eprb(&["scan", "--step", "-1"])), 2);
    assert_eq!(code(&eprb(&["pipeline", "--a", "0", "--b", "1", "--grid", "0:180"])), 2);
    assert_eq!(code(&eprb(&["pipeline", "--a", "0", "--b", "1", "--samples", "0"])), 2);
    assert_eq!(code(&eprb(&["frobnicate"])), 2);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&eprb(&["--help"])), 0);
    assert_eq!(code(&eprb(&["--version"])), 0);
}

#[test]
fn check_bell_local_and_pi_violating() {
    let out = eprb(&["check", "--model", "bell-local", "--samples", "20000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("bell-local: PI ✓ OI ✓"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let out = eprb(&["check", "--model", "pi-violating", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("pi-violating: PI ✗ OI ✓"));
    let v = read_json(&path);
    assert_replay_fields(&v, "check");
    let c = &v["result"]["rows"][0]["classification"];
    assert_eq!(c["parameter_independence"], false);
    assert_eq!(c["outcome_independence"], true);
}

#[test]
fn check_all_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("all.csv");
    let out = eprb(&[
        "check",
        "--all",
        "--samples",
        "20000",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().next().unwrap().ends_with("implications_hold,consistent"));
    assert!(text.lines().skip(1).all(|l| l.ends_with("true,true")));
}

#[test]
fn check_table_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let honest = table_model(dir.path(), "anti", true, false);
    let out = eprb(&["check", "--model-file", &honest, "--grid", "0:90:90"]);
    assert_eq!(
        code(&out),
        0,
        "{}{}",
        stdout(&out),
        String::from_utf8_lossy(&out.stderr)
    );

    let liar = table_model(dir.path(), "liar", true, true);
    let out = eprb(&["check", "--model-file", &liar, "--grid", "0:90:90"]);
    assert_eq!(code(&out), 3, "{}", stdout(&out));

    let missing = dir.path().join("absent.json");
    assert_eq!(code(&eprb(&["check", "--model-file", missing.to_str().unwrap()])), 2);
}

#[test]
fn chsh_quantum_standard_angles() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let out = eprb(&[
        "chsh",
        "--model",
        "qm",
        "--standard-angles",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = read_json(&path);
    assert_replay_fields(&v, "chsh");
    let s = v["result"]["result"]["abs_s"].as_f64().unwrap();
    assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn chsh_bell_local_within_classical_band() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    let out = eprb(&[
        "chsh",
        "--model",
        "bell-local",
        "--standard-angles",
        "--samples",
        "1000000",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let r = &read_json(&path)["result"]["result"];
    let s = r["abs_s"].as_f64().unwrap();
    let se = r["std_error"].as_f64().unwrap();
    assert!(s <= 2.0 + 5.0 * se + 1e-9, "{s} ± {se}");
    assert_eq!(r["within_classical"], true);
}

#[test]
fn chsh_quantum_scan() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.json");
    let out = eprb(&["chsh", "--model", "qm", "--scan", "15", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = read_json(&path);
    assert!(v["result"].get("result").is_none());
    let max = v["result"]["scan"]["max_abs_s"].as_f64().unwrap();
    assert!(max <= 2.0 * 2f64.sqrt() + 1e-9);
    assert!(max >= 2.0 * 2f64.sqrt() - 1e-9);
}

#[test]
fn ks_default_and_modes() {
    let out = eprb(&["ks"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("noncontextual: 0/16"));
    assert!(text.contains("pair-level: 8/16"));
    assert!(text.contains("local-contextual: 128/256"));

    let out = eprb(&["ks", "--mode", "local-contextual"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("128/256"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ks.json");
    let out = eprb(&["ks", "--mode", "per-preparation", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = read_json(&path);
    assert_replay_fields(&v, "ks");
    assert_eq!(v["result"]["mode"], "per-preparation");
    assert_eq!(v["result"]["enumerations"][0]["preparation_mode"], "per-preparation");
    assert_eq!(v["result"]["enumerations"][0]["satisfying"], 128);
}

#[test]
fn ks_perturbed_identities_fail() {
    let out = eprb(&["ks", "--perturb", "0.01"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn scan_emits_one_row_per_angle() {
    let out = eprb(&[
        "scan",
        "--from",
        "0",
        "--to",
        "180",
        "--step",
        "30",
        "--model",
        "pi-violating",
        "--format",
        "csv",
        "--out",
        "-",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut rows = text.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let theta = header.iter().position(|c| *c == "theta_deg").unwrap();
    let qm = header.iter().position(|c| *c == "qm_correlation").unwrap();
    let model = header.iter().position(|c| *c == "model_correlation").unwrap();
    let rows: Vec<Vec<String>> = rows.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 7);
    for r in rows {
        let t: f64 = r[theta].parse().unwrap();
        let e: f64 = r[qm].parse().unwrap();
        let m: f64 = r[model].parse().unwrap();
        assert!((e + t.to_radians().cos()).abs() < 1e-12);
        assert!((m - e).abs() < 1e-12);
    }
}
