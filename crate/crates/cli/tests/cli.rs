use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const HEADLINE_LAW: &str = "law = { truncated_uniform = { theta_star = 2.356194490192345 } }";

fn billiard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_billiard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

/// Runs a config from its own directory, where relative `out` paths land.
fn run(config: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    Command::new(env!("CARGO_BIN_EXE_billiard"))
        .args(&args)
        .current_dir(config.parent().unwrap())
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn empty_chain_writes_only_a_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "scenario = \"simulate_chain\"\nseed = 1\nout = \"out\"\nn_max = 0\nbody = { disc = { r = 1.0 } }\nlaw = \"cosine\"\n");
    let out = run(&cfg, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("n,s,phi,theta,tau,T"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["verdict_pass"], true);
    assert_eq!(manifest["seed"], 1);
}

#[test]
fn process_rate_outside_the_hypothesis_exits_two() {
    let dir = TempDir::new().unwrap();
    let body = format!("scenario = \"process_rate\"\nseed = 4\nout = \"out\"\nbody = {{ disc = {{ r = 1.0 }} }}\n{HEADLINE_LAW}\nparams = {{ theta_star = 1.0471975511965976, eta = 0.05, eps = 0.01 }}\n");
    let out = run(&write_config(dir.path(), "c.toml", &body), &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("(2π/3, π)"), "{}", stderr(&out));
}

#[test]
fn missing_seed_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "scenario = \"simulate_chain\"\nout = \"out\"\nn_max = 5\nbody = { disc = { r = 1.0 } }\nlaw = \"cosine\"\n");
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("seed"), "{}", stderr(&out));
    // The command-line seed fills the gap.
    let out = run(&cfg, &["--seed", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "scenario = \"simulate_chain\"\nseed = 1\nn_max = 5\nbogus = 2\nbody = { disc = { r = 1.0 } }\nlaw = \"cosine\"\n");
    let out = billiard(&["validate-config", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

fn dominance_config(dir: &Path) -> PathBuf {
    let body = format!("scenario = \"verify_dominance\"\nseed = 7\nout = \"out\"\nreplicas = 2000\nn_max = 6\nbins = 40\nbody = {{ disc = {{ r = 1.0 }} }}\n{HEADLINE_LAW}\n");
    write_config(dir, "dominance.toml", &body)
}

#[test]
fn small_dominance_run_passes() {
    let dir = TempDir::new().unwrap();
    let out = run(&dominance_config(dir.path()), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("out/dominance.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.lines().skip(1).all(|l| l.ends_with("true")));
    let cert = fs::read_to_string(dir.path().join("out/certificate.json")).unwrap();
    assert!(billiard_core::rates::RateCertificate::from_json(&cert).is_ok());
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let cfg = dominance_config(dir.path());
    let (one, four) = (dir.path().join("one"), dir.path().join("four"));
    assert!(
        run(&cfg, &["--workers", "1", "--out", one.to_str().unwrap()])
            .status
            .success()
    );
    assert!(
        run(&cfg, &["--workers", "4", "--out", four.to_str().unwrap()])
            .status
            .success()
    );
    for file in ["dominance.csv", "dominance.json", "certificate.json"] {
        assert_eq!(
            fs::read(one.join(file)).unwrap(),
            fs::read(four.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn inflated_lower_bound_fails_verification() {
    let dir = TempDir::new().unwrap();
    let body = format!("scenario = \"verify_lb\"\nseed = 8\nout = \"out\"\nreplicas = 20000\nclaim = \"disc_second_time\"\ninflate = 10.0\nbody = {{ disc = {{ r = 1.0 }} }}\n{HEADLINE_LAW}\nparams = {{ eta = 0.117 }}\n");
    let out = run(&write_config(dir.path(), "c.toml", &body), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(dir.path().join("out/lb_report.json").exists());
}

#[test]
fn json_configs_and_seed_override() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"scenario": "simulate_chain", "seed": 1, "out": "out", "n_max": 20, "body": {"ellipse": {"a": 2.0, "b": 1.0}}, "law": "uniform_half"}"#,
    );
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    assert!(run(&cfg, &["--out", a.to_str().unwrap()]).status.success());
    assert!(run(&cfg, &["--out", b.to_str().unwrap()]).status.success());
    assert!(run(&cfg, &["--seed", "2", "--out", c.to_str().unwrap()])
        .status
        .success());
    let read = |p: &Path| fs::read_to_string(p.join("trajectory.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(read(&a).lines().count(), 21);
}

#[test]
fn shipped_configs_validate() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        let dir = TempDir::new().unwrap();
        let out = billiard(&[
            "validate-config",
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}: {}", path.display(), stderr(&out));
        seen += 1;
    }
    assert_eq!(seen, 9);
}

#[test]
fn schemas_are_json() {
    for which in ["config", "certificate"] {
        let out = billiard(&["schema", which]);
        assert!(out.status.success());
        let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(
            value.get("properties").is_some() || value.get("oneOf").is_some(),
            "{which}"
        );
    }
}
