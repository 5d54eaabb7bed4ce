use std::process::{Command, Output};

use serde_json::Value;

fn haar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haar"))
        .args(args)
        .env_remove("HAAR_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn reports(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).expect("json line")).collect()
}

#[test]
fn catalog_lists_builtins() {
    let o = haar(&["catalog"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for name in ["velocity:<c>", "shear:<n>", "normal:<mean>,<sd>", "arctan:<c>", "real-n:<n>", "custom"] {
        assert!(text.contains(name), "missing {name}");
    }
    let json = haar(&["catalog", "--json"]);
    let rows = reports(&json);
    assert!(rows.iter().any(|r| r["name"] == "beta" && r["kind"] == "distribution"));
}

#[test]
fn velocity_transport_passes() {
    let o = haar(&["transport", "--builtin", "velocity:1", "--checks", "axioms,invariance"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("(-1, 1)"));
}

#[test]
fn custom_exp_transport_is_the_log_group() {
    let o = haar(&[
        "transport", "--forward", "exp(x)", "--inverse", "ln(x)", "--codomain", "(0,inf)", "--json", "--samples", "200",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let rs = reports(&o);
    assert!(rs.iter().any(|r| r["check"] == "pushforward" && r["verdict"] == "pass"));
    assert!(rs.iter().all(|r| r["schema"] == 1));
}

#[test]
fn parse_errors_exit_2() {
    let malformed = haar(&["transport", "--forward", "exp(x", "--inverse", "ln(x)", "--codomain", "(0,inf)"]);
    assert_eq!(code(&malformed), 2);
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("syntax"));
    assert_eq!(code(&haar(&["transport", "--builtin", "hyperbolic:1"])), 2);
    assert_eq!(code(&haar(&["transport", "--builtin", "log", "--checks", "nonsense"])), 2);
    assert_eq!(code(&haar(&["integrate", "--measure", "lebesgue", "[1,0)"])), 2);
    assert_eq!(code(&haar(&["transport", "--builtin", "velocity:1", "--tol", "-1"])), 2);
}

#[test]
fn construction_errors_exit_3() {
    // A density that vanishes everywhere has null parts.
    let o = haar(&["haarize", "--sigma-finite", "density", "--density", "0*x"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    // The map's domain must be the base carrier.
    let o = haar(&["transport", "--forward", "x", "--inverse", "x", "--domain", "(0,1)", "--codomain", "(0,1)"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn check_failures_exit_1() {
    let o = haar(&["transport", "--builtin", "velocity:1", "--checks", "axioms", "--tol", "1e-30", "--json"]);
    assert_eq!(code(&o), 1);
    let r = &reports(&o)[0];
    assert_eq!(r["verdict"], "fail");
    assert!(!r["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn inapplicable_check_is_a_config_error() {
    assert_eq!(code(&haar(&["verify", "--builtin", "log", "--checks", "jacobian"])), 2);
}

#[test]
fn haarized_normal_is_invariant() {
    let o = haar(&["haarize", "--dist", "normal:0,1", "--checks", "invariance", "--json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(reports(&o)[0]["verdict"], "pass");
}

#[test]
fn haarized_uniform_needs_no_escape() {
    let o = haar(&["haarize", "--dist", "uniform", "--checks", "axioms"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("escape        none"));
}

#[test]
fn sigma_finite_lebesgue_reports_invariance() {
    let o = haar(&["haarize", "--sigma-finite", "lebesgue", "--checks", "invariance", "--samples", "20"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("K = 40"));
    assert!(text.contains("invariance"));
}

fn mass(args: &[&str]) -> f64 {
    let o = haar(args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    stdout(&o).trim().parse().unwrap()
}

#[test]
fn integrate_examples() {
    assert!((mass(&["integrate", "--measure", "velocity:1", "[0,0.5)"]) - 0.549306).abs() < 1e-6);
    assert_eq!(mass(&["integrate", "--measure", "lebesgue", "[2,5)"]), 3.0);
    let m = mass(&["integrate", "--density", "1/x", "--carrier", "(0,inf)", "[1,2.718281828)"]);
    assert!((m - 1.0).abs() < 1e-6);
    let union = mass(&["integrate", "--measure", "lebesgue", "[0,0.5)u[0.7,0.9)"]);
    assert!((union - 0.7).abs() < 1e-15);
    let o = haar(&["integrate", "--measure", "dist:normal:0,1", "--json", "[0,inf)"]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((v["mass"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(v["set"], serde_json::json!([[0.0, "inf"]]));
}

#[test]
fn json_reports_are_byte_identical_per_seed() {
    let args = ["verify", "--builtin", "arctan:2", "--checks", "axioms,invariance", "--samples", "100", "--json"];
    let run = |seed: &str| {
        let mut a = args.to_vec();
        a.extend(["--seed", seed]);
        haar(&a).stdout
    };
    assert_eq!(run("9"), run("9"));
    assert_ne!(run("9"), run("10"));
    let env = Command::new(env!("CARGO_BIN_EXE_haar")).args(args).env("HAAR_SEED", "9").output().unwrap();
    assert_eq!(env.stdout, run("9"));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let report = dir.path().join("report.jsonl");
    std::fs::write(
        &cfg,
        format!(
            "seed = 3\n[construction]\nbuiltin = \"velocity:2\"\n[checks]\nnames = [\"axioms\", \"abelian\"]\nsamples = 10\n[output]\nreport = {:?}\n",
            report.display().to_string()
        ),
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let o = haar(&["verify", "--config", path, "--json"]);
    assert_eq!(code(&o), 0);
    let rs = reports(&o);
    assert_eq!(rs.len(), 2);
    assert_eq!(rs[0]["samples"], 10);
    assert_eq!(std::fs::read(&report).unwrap(), o.stdout);

    let o = haar(&["verify", "--config", path, "--json", "--samples", "25", "--checks", "abelian"]);
    let rs = reports(&o);
    assert_eq!(rs.len(), 1);
    assert_eq!(rs[0]["samples"], 25);
    assert_eq!(rs[0]["target"], "velocity:2");

    std::fs::write(&cfg, "[construction]\nbogus = 1\n").unwrap();
    assert_eq!(code(&haar(&["verify", "--config", path])), 2);
}
