use std::path::Path;
use std::process::{Command, Output};

use minimax_fom::diagnostics::read_trace_csv;
use minimax_fom::problems::{Instance, InstanceSpec};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_minimax-fom"));
    c.env_remove("MINIMAX_FOM_SEED");
    c
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn gen_then_run_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let trace = dir.path().join("trace.csv");
    let out = bin().args(["gen", "--n", "8", "--m", "6", "--seed", "4", "--out"]).arg(&inst).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let loaded = Instance::load(&inst).unwrap();
    assert_eq!(loaded, Instance::generate(&InstanceSpec::new(8, 6, 10.0, 4)).unwrap());

    let out = bin().args(["run", "--no-timing", "--instance"]).arg(&inst).arg("--out").arg(&trace).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_trace_csv(std::fs::File::open(&trace).unwrap()).unwrap();
    assert_eq!(rows[0].metric, 1.0);
    assert!(rows.last().unwrap().metric <= 1e-9);
    assert!(rows.iter().all(|r| r.wall_ms.is_none()));

    let out = bin().arg("check").arg(&trace).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("residual_bound:"));
}

#[test]
fn gen_writes_json_to_stdout_and_honours_seed_env() {
    let out = bin().args(["gen", "--n", "4", "--m", "3", "--seed", "9"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let a = Instance::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let out = bin().args(["gen", "--n", "4", "--m", "3"]).env("MINIMAX_FOM_SEED", "9").output().unwrap();
    let b = Instance::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.spec.seed, 9);
}

#[test]
fn baseline_run_and_iteration_cap() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("eg.csv");
    let out = bin()
        .args(["run", "--solver", "eg", "--eta", "0.5", "--n", "5", "--m", "5", "--no-timing", "--out"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = bin().args(["run", "--max-iters", "3", "--n", "5", "--m", "5"]).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("not reached"));
    // A baseline needs a step size.
    let out = bin().args(["run", "--solver", "ogda"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("table1.json");
    write(&cfg, r#"{"experiment": "table1", "dims": [[10, 10]], "kappas": [10], "seeds": [0, 1]}"#);
    let mut bodies = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = bin().args(["bench", "--no-timing", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        bodies.push(std::fs::read(out_dir.join("table1.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    let text = String::from_utf8(bodies.remove(0)).unwrap();
    assert!(text.starts_with("experiment,n,m,kappa,sigma,case,seed,solver,eta,selected,status,iterations,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn bench_seed_flag_replaces_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t2.json");
    write(&cfg, r#"{"experiment": "table2", "dims": [[10, 10]], "seeds": [0, 1, 2], "cases": ["affine"]}"#);
    let out = bin().args(["bench", "--no-timing", "--seed", "5", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("table2,10,10,10,1,affine,5,mspACM,"));
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["bench", "--config"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing.json"));

    let bad = dir.path().join("bad.json");
    write(&bad, r#"{"experiment": "table1", "thresholds": [1e-3, 1e-1]}"#);
    let out = bin().args(["bench", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(code(&out), 2);

    let out = bin().args(["bench", "--config"]).arg(&bad).env("MINIMAX_FOM_SEED", "x").output().unwrap();
    assert_eq!(code(&out), 2);

    let out = bin().args(["run", "--sigma", "fast"]).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn check_reports_failed_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let mut body = String::from("k,metric,residual_norm,contraction_ok,residual_bound_ok,gnorm_ok,wall_ms\n0,1,1,,,,\n");
    for k in 1..15 {
        let ok = if k == 7 { "false" } else { "true" };
        body.push_str(&format!("{k},{},1,{ok},true,,\n", 0.5f64.powi(k)));
    }
    write(&trace, &body);
    let out = bin().arg("check").arg(&trace).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("contraction first fails at k=7"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("linear rate: 0.5000"));

    write(&trace, &body.replace("false", "true"));
    assert_eq!(code(&bin().arg("check").arg(&trace).output().unwrap()), 0);
    assert_eq!(code(&bin().arg("check").arg(dir.path().join("none.csv")).output().unwrap()), 2);
}
