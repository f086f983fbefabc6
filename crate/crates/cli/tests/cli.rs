use std::path::{Path, PathBuf};
use std::process::Command;

use damcmc_cli::trace_file::TraceFile;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn damcmc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_damcmc")).args(args).output().expect("binary runs")
}

fn run_to(config: &str, out: &Path, extra: &[&str]) -> i32 {
    let cfg = configs().join(config);
    let mut args = vec!["damcmc", "run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    damcmc_cli::main_with_args(args)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const LASSO: &str = r#"
seed = 1
iterations = 50
burn_in = 10
chains = 3
kernel = "da"
[data]
path = "d.csv"
response = "y"
center = true
[model]
family = "lasso"
lambda = 1.0
"#;

const DATA: &str = "y,a,b\n1.0,0.5,2\n-0.3,1.5,1\n0.7,-1,0\n2.1,0.2,3\n-1.0,-0.8,-1\n";

#[test]
fn every_shipped_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if !name.ends_with(".toml") || name == "schedule.toml" {
            continue;
        }
        let out = dir.path().join(name.replace(".toml", ".csv"));
        assert_eq!(run_to(&name, &out, &[]), 0, "{name}");
        let t = TraceFile::load(&out).unwrap();
        let chains: usize = t.meta("chains").unwrap().parse().unwrap();
        let n: usize = t.meta("iterations").unwrap().parse().unwrap();
        assert_eq!(t.rows.len(), chains * n, "{name}");
    }
}

#[test]
fn trace_has_metadata_and_one_row_per_draw() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", DATA);
    let cfg = write(dir.path(), "c.toml", LASSO);
    let out = dir.path().join("trace.csv");
    let code = damcmc_cli::main_with_args(["damcmc", "run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let t = TraceFile::load(&out).unwrap();
    assert_eq!(t.rows.len(), 150);
    assert_eq!(t.columns, ["chain", "iteration", "beta.a", "beta.b", "sigma2"]);
    assert_eq!(t.meta("seed"), Some("1"));
    assert_eq!(t.meta("kernel"), Some("da"));
    assert!(t.meta("software").unwrap().starts_with("damcmc "));
    assert_eq!(t.meta("config_sha256").unwrap().len(), 64);
    assert_eq!(t.meta("data_sha256").unwrap().len(), 64);
    assert!(t.metadata.iter().all(|(k, _)| !k.contains("time") && !k.contains("date")));
    assert_eq!(t.rows[149][..2], [2.0, 49.0]);
}

#[test]
fn output_path_comes_from_config_relative_to_it() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", DATA);
    let cfg = write(dir.path(), "c.toml", &LASSO.replace("kernel = \"da\"", "kernel = \"da\"\noutput = \"runs/t.csv\""));
    assert_eq!(damcmc_cli::main_with_args(["damcmc", "run", cfg.to_str().unwrap()]), 0);
    assert!(dir.path().join("runs/t.csv").exists());
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(run_to("lasso-adda.toml", &a, &[]), 0);
    assert_eq!(run_to("lasso-adda.toml", &b, &["--seed", "7"]), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    assert_eq!(run_to("lasso-adda.toml", &c, &["--seed", "8"]), 0);
    let (ta, tc) = (TraceFile::load(&a).unwrap(), TraceFile::load(&c).unwrap());
    assert_ne!(ta.meta("config_sha256"), tc.meta("config_sha256"));
    assert_ne!(ta.rows, tc.rows);
}

#[test]
fn thread_count_does_not_change_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let cfg = configs().join("lasso.toml");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(damcmc_cli::main_with_args(["damcmc", "--threads", "1", "run", cfg, "--out", a.to_str().unwrap()]), 0);
    let out = Command::new(env!("CARGO_BIN_EXE_damcmc"))
        .args(["run", cfg, "--out", b.to_str().unwrap()])
        .env("DAMCMC_THREADS", "4")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn trace_goes_to_stdout_without_a_destination() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", DATA);
    let cfg = write(dir.path(), "c.toml", LASSO);
    let out = damcmc(&["run", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let t = TraceFile::parse(&out.stdout).unwrap();
    assert_eq!(t.rows.len(), 150);
}

#[test]
fn validation_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases = [
        ("missing-data.toml", LASSO.replace("d.csv", "nowhere.csv")),
        ("unknown-key.toml", LASSO.replace("chains = 3", "chains = 3\ncolour = \"red\"")),
        ("bad-kernel.toml", LASSO.replace("\"da\"", "\"haar-pxda\"")),
        ("adda-no-section.toml", LASSO.replace("\"da\"", "\"adda\"")),
        ("uncentered.toml", LASSO.replace("center = true", "")),
        ("no-column.toml", LASSO.replace("response = \"y\"", "response = \"q\"")),
        ("zero-iterations.toml", LASSO.replace("iterations = 50", "iterations = 0")),
    ];
    write(d, "d.csv", DATA);
    for (name, text) in cases {
        let cfg = write(d, name, &text);
        let out = damcmc(&["run", cfg.to_str().unwrap(), "--out", d.join("x.csv").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    assert!(!d.join("x.csv").exists());
    assert_eq!(damcmc(&["run", d.join("absent.toml").to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(damcmc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(damcmc(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_failure_exits_with_two() {
    // The coin asks for every block while the script cuts one off, so the
    // manager stalls.
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::copy(configs().join("binary.csv"), d.join("binary.csv")).unwrap();
    write(d, "schedule.toml", "[[epochs]]\narrivals = [1, 2]\ntruncated = [0]\n");
    let text = std::fs::read_to_string(configs().join("logistic-scripted.toml")).unwrap();
    let cfg = write(d, "c.toml", &text.replace("epsilon = 0.2", "epsilon = 1.0"));
    let out = damcmc(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stalled"));
}

#[test]
fn diagnose_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (da, px) = (d.join("da.csv"), d.join("px.csv"));
    let probit = std::fs::read_to_string(configs().join("probit.toml")).unwrap();
    std::fs::copy(configs().join("grouped.csv"), d.join("grouped.csv")).unwrap();
    let da_cfg = write(d, "da.toml", &probit.replace("\"haar-pxda\"", "\"da\""));
    let px_cfg = write(d, "px.toml", &probit);
    for (cfg, out) in [(&da_cfg, &da), (&px_cfg, &px)] {
        assert_eq!(damcmc_cli::main_with_args(["damcmc", "run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    }

    let csv_out = d.join("report.csv");
    let code = damcmc_cli::main_with_args([
        "damcmc",
        "diagnose",
        da.to_str().unwrap(),
        "--lags",
        "1,2",
        "--functional",
        "sumsq:u.",
        "--out",
        csv_out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv_out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "trace,chain,functional,draws,mean,se,ess,acf.1,acf.2");
    assert_eq!(lines.count(), 4);

    let out = damcmc(&["diagnose", da.to_str().unwrap(), px.to_str().unwrap(), "--compare", "sumsq:u."]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["traces"].as_array().unwrap().len(), 2);
    assert_eq!(v["traces"][1]["kernel"], "haar-pxda");
    let rows = v["comparison"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["kernel"], "da");

    let bad = damcmc(&["diagnose", da.to_str().unwrap(), "--compare", "nope"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(damcmc(&["diagnose", d.join("missing.csv").to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn diagnose_accepts_plain_csv() {
    let dir = tempfile::tempdir().unwrap();
    let text: String = std::iter::once("a,b\n".to_string())
        .chain((0..200).map(|i| format!("{},{}\n", (i * 37 % 101) as f64, (i % 7) as f64)))
        .collect();
    let p = write(dir.path(), "plain.csv", &text);
    let out = damcmc(&["diagnose", p.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
}

#[test]
fn verify_reports_every_check_and_fails_under_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json");
    let out = damcmc(&["verify", "--suite", "toy", "--suite", "haar", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 6);
    assert!(checks.iter().all(|c| c["passed"] == true && c["name"].is_string()));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().filter(|l| l.starts_with("PASS")).count(), 6);

    let out = damcmc(&["verify", "--suite", "toy", "--mutate", "perturb-conditional"]);
    assert_ne!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["mutation"], "perturb-conditional");
    assert_eq!(damcmc(&["verify", "--suite", "everything"]).status.code(), Some(1));
}

#[test]
fn adda_report_is_deterministic_and_cheaper_below_full_wait() {
    let cfg = configs().join("lasso-adda.toml");
    let a = damcmc(&["adda-report", cfg.to_str().unwrap()]);
    let b = damcmc(&["adda-report", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1][5] < rows[0][5] && rows[2][5] < rows[0][5]);

    let one = damcmc(&["adda-report", cfg.to_str().unwrap(), "--configs", "0.5:0.1"]);
    assert_eq!(String::from_utf8(one.stdout).unwrap().lines().filter(|l| !l.starts_with('#')).count(), 2);
    let probit = configs().join("probit.toml");
    assert_eq!(damcmc(&["adda-report", probit.to_str().unwrap()]).status.code(), Some(1));
}
