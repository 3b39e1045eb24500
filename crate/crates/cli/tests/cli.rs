use std::process::{Command, Output};

fn xrego(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xrego")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tau_closed_form_prints_exact_value() {
    let o = xrego(&["bounds", "--tau", "r=0.5", "d=2", "D=10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.00390625");
}

#[test]
fn bounds_table_and_json() {
    let o = xrego(&["bounds", "--tau", "r=0.2,0.5", "d=1,2", "D=10", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "r,d,D,tau,log10_tau");
    assert_eq!(text.lines().count(), 5);

    let o = xrego(&["bounds", "--k-xi", "xi=0.9", "tau=0.1", "rho=1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["k_xi"], 24);
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(xrego(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(xrego(&["bounds", "--tau", "--bogus"]).status.code(), Some(1));
    assert_eq!(xrego(&["bounds", "--tau", "r=0.5", "d=2"]).status.code(), Some(1));
    let o = xrego(&["experiment", "--config", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config"));
    assert_eq!(xrego(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nseeds = 1\nalgorithms = [\"la-rego\"]\n[problems]\nnames = [\"branin\"]\ndims = [5]\n",
    )
    .unwrap();
    // A directory where the record file should be.
    let out = dir.path().join("blocked");
    std::fs::create_dir(&out).unwrap();
    let o = xrego(&["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_then_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let records = dir.path().join("records.jsonl");
    let csv = dir.path().join("profile.csv");
    let svg = dir.path().join("profile.svg");
    std::fs::write(
        &cfg,
        "schema_version = 1\nseeds = 2\nmax_embeddings = 4\nalgorithms = [\"a-rego-cheap\", \"la-rego\"]\n\
         [problems]\nnames = [\"branin\", \"six-hump-camel\"]\ndims = [8]\n",
    )
    .unwrap();
    let o = xrego(&["experiment", "--config", cfg.to_str().unwrap(), "--out", records.to_str().unwrap(), "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&records).unwrap().lines().count(), 8);

    let o = xrego(&["profile", records.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("alpha,a-rego-cheap,la-rego"));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));

    let o = xrego(&["experiment", "--config", cfg.to_str().unwrap(), "--out", records.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["computed"], 0);
    assert_eq!(v["skipped"], 8);
}

#[test]
fn run_and_suite() {
    let o = xrego(&["run", "--problem", "branin", "--dim", "20", "--algorithm", "a-rego-cheap", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["problem"]["dim"], 20);
    assert!(v["result"]["embeddings"].as_u64().unwrap() >= 1);

    assert_eq!(xrego(&["run", "--problem", "nosuch"]).status.code(), Some(1));

    let o = xrego(&["suite", "--dim", "5", "--format", "csv"]);
    let text = stdout(&o);
    // Problems with effective dimension above 5 are left out.
    assert!(text.contains("branin,5,2"));
    assert!(!text.contains("hartmann-6"));
}

#[test]
fn verify_small_grid_has_no_violations() {
    let o = xrego(&["verify", "--trials", "2000", "D=5", "d=1,2", "r=0.5", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["violations"], 0);
    assert_eq!(v["points"].as_array().unwrap().len(), 2);

    let o = xrego(&["verify", "--grid", "planar", "--trials", "5000"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("exact"));
}
