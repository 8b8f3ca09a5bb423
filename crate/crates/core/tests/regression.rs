//! Golden-file regression: a seeded 60 s run of the default configuration,
//! frozen table by table. Any behavior change in traffic generation,
//! channel evolution, ranking, allocation, serving, or accounting moves
//! these tables.
//!
//! The goldens were generated by this same code path, reviewed for
//! invariant compliance (exact conservation, zero voice loss, the
//! guaranteed-class/best-effort loss ordering), and committed. They encode
//! platform math (`tanh` comes from the system libm), so regenerate them
//! when the toolchain image changes: run the command in `golden/` via
//! `tdsched run --seed 42 --duration 60 --scheduler greedy-knapsack` and
//! copy the four files.

use std::path::Path;

use tdsched::config::{ExperimentConfig, SchedulerKind};
use tdsched::engine;
use tdsched::metrics::write_report_files;

#[test]
fn default_run_matches_golden_tables() {
    let cfg = ExperimentConfig::default();
    let report = engine::run(&cfg, SchedulerKind::GreedyKnapsack, 42).expect("run failed");

    // Voice floor under the default load: nearly every delivered voice
    // packet sits inside its 100 ms budget.
    let voice = report.qci_row(1).expect("voice class populated");
    let within = voice.within_budget_fraction.expect("voice packets delivered");
    assert!(within >= 0.99, "voice within-budget fraction {within:.4} below 0.99");
    assert_eq!(voice.loss_mbps, 0.0, "voice class lost traffic");

    let dir = tempfile::tempdir().expect("tempdir");
    write_report_files(&report, dir.path()).expect("write failed");

    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for name in ["qci_throughput.csv", "qci_loss.csv", "qci_latency.csv", "bearer_summary.csv"] {
        let fresh = std::fs::read_to_string(dir.path().join(name)).expect(name);
        let golden = std::fs::read_to_string(golden_dir.join(name)).expect(name);
        assert_eq!(fresh, golden, "{name} diverged from the golden table");
    }
}
