use std::fs;
use std::path::Path;
use std::process::Command;

use intervalcg::cli::{run_with, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["intervalcg".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn only_subdir(dir: &Path) -> std::path::PathBuf {
    let entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1, "{entries:?}");
    entries[0].clone()
}

#[test]
fn solve_writes_record_and_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().to_str().unwrap();
    let (code, out, err) = run(&["solve", "--problem", "iq-shared-min", "--variant", "dy", "--seed", "7", "--out-dir", out_dir]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("status Critical"), "{out}");
    let dir = only_subdir(tmp.path());
    let json = fs::read_to_string(dir.join("runs/iq-shared-min_DY_7.json")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(rec["status"], "Critical");
    assert_eq!(rec["curvature_rule"], "|psi(x+td; d)| <= sigma*|psi(x; d)|");
    let trace = fs::read_to_string(dir.join("trace.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["k"], 0);
    assert!(first.get("norm_v").is_some());
}

#[test]
fn usage_errors_exit_one() {
    let (code, _, err) = run(&["solve", "--rho", "0.5", "--sigma", "0.1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("ERROR:usage"), "{err}");

    let (code, _, err) = run(&["solve", "--problem", "nope"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("ERROR:problem"), "{err}");

    let (code, _, err) = run(&["bench", "--variants", "prp"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("ERROR:usage"), "{err}");

    let (code, _, err) = run(&["bench", "--seeds", "9..3"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("ERROR:usage"), "{err}");

    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("ERROR:usage"), "{err}");

    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("list-problems"));
}

#[test]
fn list_problems_prints_registry() {
    let (code, out, _) = run(&["list-problems"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 6);
    assert!(out.lines().any(|l| l.starts_with("deg-real-sd") && l.contains("n=10") && l.contains("m=1")));
}

#[test]
fn defaults_and_config_precedence() {
    let (code, out, _) = run(&["solve", "--problem", "iq-convex-2", "--print-config"]);
    assert_eq!(code, EXIT_OK);
    let resolved: toml::Table = toml::from_str(&out).unwrap();
    assert_eq!(resolved["rho"].as_float(), Some(0.001));
    assert_eq!(resolved["sigma"].as_float(), Some(0.1));
    assert_eq!(resolved["eps"].as_float(), Some(1e-6));
    assert_eq!(resolved["wolfe"].as_str(), Some("strong"));

    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "problem = \"bk1-analogue\"\nsigma = 0.4\nrho = 0.01\nvariant = \"cd\"\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, out, _) = run(&["--config-file", cfg, "solve", "--sigma", "0.2", "--print-config"]);
    assert_eq!(code, EXIT_OK);
    let resolved: toml::Table = toml::from_str(&out).unwrap();
    assert_eq!(resolved["problem"].as_str(), Some("bk1-analogue"));
    assert_eq!(resolved["sigma"].as_float(), Some(0.2));
    assert_eq!(resolved["rho"].as_float(), Some(0.01));
    assert_eq!(resolved["variant"].as_str(), Some("cd"));

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "colour = 3\n").unwrap();
    let (code, _, err) = run(&["--config-file", bad.to_str().unwrap(), "list-problems"]);
    assert_eq!(code, EXIT_USAGE, "{err}");
}

#[test]
fn bench_then_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().to_str().unwrap();
    let (code, _, err) = run(&[
        "bench", "--problems", "iq-convex-2,bk1-analogue", "--variants", "fr,mdy", "--seeds", "0..2", "--parallelism", "2",
        "--out-dir", out_dir,
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let dir = only_subdir(tmp.path());
    let runs = fs::read_to_string(dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 3);
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
    assert_eq!(fs::read_dir(dir.join("runs")).unwrap().count(), 12);

    let runs_path = dir.join("runs.csv");
    let (code, _, err) = run(&["profile", "--runs", runs_path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let csv = fs::read_to_string(dir.join("profile_iterations.csv")).unwrap();
    assert!(csv.starts_with("z,FR,mDY\n"), "{csv}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("profile_time.json")).unwrap()).unwrap();
    assert_eq!(json["metric"], "CpuTime");
}

#[test]
fn seed_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_intervalcg"))
        .args(["solve", "--problem", "iq-convex-2", "--print-config"])
        .env("ICG_SEED", "31")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed = 31"));

    let out = Command::new(env!("CARGO_BIN_EXE_intervalcg"))
        .args(["solve", "--problem", "iq-convex-2", "--seed", "4", "--print-config"])
        .env("ICG_SEED", "31")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed = 4"));

    let out = Command::new(env!("CARGO_BIN_EXE_intervalcg")).arg("bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
