//! End-to-end tests of the `tdsched` binary: experiment fan-out, output
//! layout, overrides, failure modes, and the self-check suite.

use std::path::Path;
use std::process::{Command, Output};

fn tdsched() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tdsched"));
    // Keep the ambient environment from steering output locations.
    cmd.env_remove("TDSCHED_OUT_DIR");
    cmd
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).expect("write config");
    path
}

/// A small, fast population: 2 simulated seconds, a handful of bearers.
const SMALL: &str = "\
sim_duration_s = 2.0

[traffic]
voice_bearers = 5
data_bearers = 3

[cell]
num_rbs = 4
";

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_fans_out_and_writes_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_root = dir.path().join("results");
    let out = tdsched()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "1", "--seed", "2"])
        .args(["--scheduler", "greedy-knapsack", "--scheduler", "priority-only"])
        .arg("--out")
        .arg(&out_root)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    for sched in ["greedy-knapsack", "priority-only"] {
        for seed in ["seed-1", "seed-2"] {
            let report = out_root.join(sched).join(seed).join("report.json");
            assert!(report.is_file(), "missing {}", report.display());
        }
    }
    let comparison = std::fs::read_to_string(out_root.join("comparison.csv")).unwrap();
    assert!(
        comparison.starts_with("baseline,qci,metric,reference_mean,baseline_mean,improvement_pct"),
        "unexpected comparison header: {}",
        comparison.lines().next().unwrap_or_default()
    );
    assert!(comparison.contains("priority-only"), "comparison lists the baseline");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run_into = |name: &str| {
        let out_root = dir.path().join(name);
        let out = tdsched()
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--seed", "9", "--scheduler", "greedy-knapsack"])
            .arg("--out")
            .arg(&out_root)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        out_root.join("greedy-knapsack").join("seed-9")
    };
    let a = run_into("a");
    let b = run_into("b");
    for name in ["report.json", "qci_throughput.csv", "fairness_qci1.csv"] {
        let bytes_a = std::fs::read(a.join(name)).unwrap();
        let bytes_b = std::fs::read(b.join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} differs between identical invocations");
    }
}

#[test]
fn trace_flag_writes_one_row_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_root = dir.path().join("results");
    let out = tdsched()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "1", "--scheduler", "greedy-knapsack", "--trace"])
        .arg("--out")
        .arg(&out_root)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let trace =
        std::fs::read_to_string(out_root.join("greedy-knapsack/seed-1/trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 1 + 200, "header plus one row per 10 ms epoch of 2 s");
    assert!(lines[0].starts_with("epoch,load,"), "unexpected header {}", lines[0]);
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim_duration_s = 2.0\nmystery_knob = 1\n");
    let out = tdsched().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success(), "bad config accepted");
    assert!(
        stderr(&out).contains("mystery_knob"),
        "error does not name the offending key: {}",
        stderr(&out)
    );
}

#[test]
fn unknown_scheduler_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = tdsched()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--scheduler", "round-robin"])
        .output()
        .unwrap();
    assert!(!out.status.success(), "bogus scheduler accepted");
    assert!(
        stderr(&out).contains("round-robin"),
        "error does not name the offending scheduler: {}",
        stderr(&out)
    );
}

#[test]
fn env_var_supplies_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_root = dir.path().join("from-env");
    let out = tdsched()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "1", "--scheduler", "greedy-knapsack"])
        .env("TDSCHED_OUT_DIR", &out_root)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(out_root.join("greedy-knapsack/seed-1/report.json").is_file());
}

#[test]
fn compare_rebuilds_the_comparison_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_root = dir.path().join("results");
    let out = tdsched()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "1"])
        .args(["--scheduler", "greedy-knapsack", "--scheduler", "rank-only-knapsack"])
        .arg("--out")
        .arg(&out_root)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let table = out_root.join("comparison.csv");
    let original = std::fs::read_to_string(&table).unwrap();
    std::fs::remove_file(&table).unwrap();
    let out = tdsched().args(["compare", "--out"]).arg(&out_root).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let rebuilt = std::fs::read_to_string(&table).unwrap();
    assert_eq!(rebuilt, original, "rebuilt comparison differs from the original");
}

#[test]
fn validate_skips_hurst_on_short_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim_duration_s = 2.0\n");
    let out = tdsched().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    let text = stdout(&out);
    assert!(out.status.success(), "stdout: {text}\nstderr: {}", stderr(&out));
    assert!(
        text.contains("hurst-selfsimilarity: SKIP"),
        "short run did not skip the Hurst check: {text}"
    );
    assert!(!text.contains("FAIL"), "unexpected failing check: {text}");
}

#[test]
fn validate_fails_when_overload_cannot_exceed_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim_duration_s = 2.0\n\n[traffic]\noverload_multiplier = 1.0\n",
    );
    let out = tdsched().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    let text = stdout(&out);
    assert!(!out.status.success(), "validate passed an overload-free setup: {text}");
    assert!(
        text.contains("overload-exceeds-capacity: FAIL"),
        "missing failing check line: {text}"
    );
}
