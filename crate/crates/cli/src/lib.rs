//! Experiment driver behind the `tdsched` binary: replication fan-out,
//! cross-policy comparison tables, and the self-check suite.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::Context;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tdsched::channel::{wideband_estimated_throughput, McsTable};
use tdsched::config::{ExperimentConfig, SchedulerKind};
use tdsched::engine;
use tdsched::metrics::{
    hurst_rescaled_range, hurst_variance_time, write_report_files, MetricsReport,
};
use tdsched::ranking::{
    overall_rank, throughput_metric, RankInputs, RankWeights,
};
use tdsched::rng::{derive, Stream};
use tdsched::scheduler::{
    greedy_knapsack, oracle_optimal_value, priority_only, rank_only_knapsack, CandidateItem,
};
use tdsched::traffic::{DataParams, DataSource, VoiceParams, VoiceSource};
use tdsched::BearerId;

/// One completed replication.
pub struct RunOutcome {
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub dir: PathBuf,
    pub report: MetricsReport,
}

/// Run every (scheduler × seed) pair in `cfg`, writing each report set under
/// `out_root/<scheduler>/seed-<seed>/` plus a cross-policy `comparison.csv`,
/// and return the outcomes sorted by scheduler then seed.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_root: &Path,
    trace: bool,
) -> anyhow::Result<Vec<RunOutcome>> {
    cfg.validate()?;
    let pairs: Vec<(SchedulerKind, u64)> = cfg
        .schedulers
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let results: Vec<anyhow::Result<RunOutcome>> = thread::scope(|scope| {
        let handles: Vec<_> = pairs
            .iter()
            .map(|&(scheduler, seed)| {
                scope.spawn(move || -> anyhow::Result<RunOutcome> {
                    let dir = out_root.join(scheduler.name()).join(format!("seed-{seed}"));
                    fs::create_dir_all(&dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                    let report = if trace {
                        let mut writer =
                            std::io::BufWriter::new(fs::File::create(dir.join("trace.csv"))?);
                        let report =
                            engine::run_with_trace(cfg, scheduler, seed, Some(&mut writer))?;
                        writer.flush()?;
                        report
                    } else {
                        engine::run(cfg, scheduler, seed)?
                    };
                    write_report_files(&report, &dir)?;
                    Ok(RunOutcome { scheduler, seed, dir, report })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("replication thread panicked")).collect()
    });
    let mut outcomes: Vec<RunOutcome> = results
        .into_iter()
        .collect::<anyhow::Result<Vec<_>>>()
        .context("a replication failed")?;
    outcomes.sort_by_key(|o| (o.scheduler.name(), o.seed));
    let rows = comparison_rows(&outcomes);
    write_comparison_csv(&rows, &out_root.join("comparison.csv"))?;
    Ok(outcomes)
}

/// Per-QCI mean of one metric for one policy against the reference policy,
/// with the improvement the reference achieves over it.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub baseline: SchedulerKind,
    pub qci: u8,
    pub metric: &'static str,
    pub reference_mean: f64,
    pub baseline_mean: f64,
    /// Positive means the reference policy did better on this metric.
    /// `None` when the baseline mean is zero.
    pub improvement_pct: Option<f64>,
}

const COMPARED_METRICS: [&str; 3] = ["throughput_mbps", "loss_mbps", "latency_ms"];

fn metric_value(report: &MetricsReport, qci: u8, metric: &str) -> Option<f64> {
    let row = report.qci_row(qci)?;
    match metric {
        "throughput_mbps" => Some(row.throughput_mbps),
        "loss_mbps" => Some(row.loss_mbps),
        "latency_ms" => row.latency_ms,
        _ => None,
    }
}

fn mean_over_seeds(outcomes: &[RunOutcome], kind: SchedulerKind, qci: u8, metric: &str) -> Option<f64> {
    let values: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.scheduler == kind)
        .filter_map(|o| metric_value(&o.report, qci, metric))
        .collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Build the comparison table: the greedy knapsack policy (when present,
/// otherwise the first policy run) against every other policy, per QCI and
/// metric, averaged over seeds. Lower is better for loss and latency,
/// higher for throughput; `improvement_pct` is signed accordingly.
pub fn comparison_rows(outcomes: &[RunOutcome]) -> Vec<ComparisonRow> {
    let present: Vec<SchedulerKind> = {
        let mut seen = Vec::new();
        for o in outcomes {
            if !seen.contains(&o.scheduler) {
                seen.push(o.scheduler);
            }
        }
        seen
    };
    let Some(&reference) = present
        .iter()
        .find(|&&s| s == SchedulerKind::GreedyKnapsack)
        .or_else(|| present.first())
    else {
        return Vec::new();
    };
    let qcis: BTreeSet<u8> = outcomes
        .iter()
        .flat_map(|o| o.report.per_qci.iter().map(|r| r.qci))
        .collect();
    let mut rows = Vec::new();
    for &baseline in present.iter().filter(|&&s| s != reference) {
        for &qci in &qcis {
            for metric in COMPARED_METRICS {
                let (Some(reference_mean), Some(baseline_mean)) = (
                    mean_over_seeds(outcomes, reference, qci, metric),
                    mean_over_seeds(outcomes, baseline, qci, metric),
                ) else {
                    continue;
                };
                let improvement_pct = if baseline_mean == 0.0 {
                    None
                } else if metric == "throughput_mbps" {
                    Some((reference_mean - baseline_mean) / baseline_mean * 100.0)
                } else {
                    Some((baseline_mean - reference_mean) / baseline_mean * 100.0)
                };
                rows.push(ComparisonRow {
                    baseline,
                    qci,
                    metric,
                    reference_mean,
                    baseline_mean,
                    improvement_pct,
                });
            }
        }
    }
    rows
}

pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> anyhow::Result<()> {
    let mut text = String::from("baseline,qci,metric,reference_mean,baseline_mean,improvement_pct\n");
    for row in rows {
        let improvement = row.improvement_pct.map(|v| v.to_string()).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.baseline.name(),
            row.qci,
            row.metric,
            row.reference_mean,
            row.baseline_mean,
            improvement
        ));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reload previously written reports from `run_experiment`'s directory
/// layout so the comparison table can be rebuilt without re-running.
pub fn load_outcomes(out_root: &Path) -> anyhow::Result<Vec<RunOutcome>> {
    let mut outcomes = Vec::new();
    for scheduler_entry in fs::read_dir(out_root)
        .with_context(|| format!("reading {}", out_root.display()))?
    {
        let scheduler_dir = scheduler_entry?.path();
        if !scheduler_dir.is_dir() {
            continue;
        }
        let Ok(scheduler) = scheduler_dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .parse::<SchedulerKind>()
        else {
            continue;
        };
        for seed_entry in fs::read_dir(&scheduler_dir)? {
            let dir = seed_entry?.path();
            let report_path = dir.join("report.json");
            if !report_path.is_file() {
                continue;
            }
            let report: MetricsReport = serde_json::from_str(&fs::read_to_string(&report_path)?)
                .with_context(|| format!("parsing {}", report_path.display()))?;
            let seed = report.meta.seed;
            outcomes.push(RunOutcome { scheduler, seed, dir, report });
        }
    }
    if outcomes.is_empty() {
        anyhow::bail!("no report.json files found under {}", out_root.display());
    }
    outcomes.sort_by_key(|o| (o.scheduler.name(), o.seed));
    Ok(outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "SKIP",
        })
    }
}

pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

fn pass(name: &'static str, detail: String) -> CheckResult {
    CheckResult { name, status: CheckStatus::Pass, detail }
}

fn fail(name: &'static str, detail: String) -> CheckResult {
    CheckResult { name, status: CheckStatus::Fail, detail }
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<CandidateItem>, Vec<(CandidateItem, u8)>, u32) {
    let n = rng.random_range(1..=12);
    let mut items = Vec::with_capacity(n);
    let mut prioritized = Vec::with_capacity(n);
    for i in 0..n {
        let item = CandidateItem {
            bearer_id: BearerId(i as u32),
            rank: rng.random_range(0.0..=30.0),
            size_rbs: rng.random_range(1..=10),
        };
        items.push(item);
        prioritized.push((item, rng.random_range(1..=9)));
    }
    let budget = rng.random_range(1..=40);
    (items, prioritized, budget)
}

fn check_greedy_matches_oracle(instances: u32) -> CheckResult {
    let name = "greedy-matches-oracle";
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f7261636c65);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let (items, _, budget) = random_instance(&mut rng);
        let greedy = match greedy_knapsack(&items, budget) {
            Ok(d) => d.total_value,
            Err(e) => return fail(name, format!("instance {i}: {e}")),
        };
        let oracle = match oracle_optimal_value(&items, budget) {
            Ok(v) => v,
            Err(e) => return fail(name, format!("instance {i}: {e}")),
        };
        let gap = (greedy - oracle).abs();
        worst = worst.max(gap);
        if gap > 1e-9 {
            return fail(name, format!("instance {i}: greedy {greedy} vs optimum {oracle}"));
        }
    }
    pass(name, format!("{instances} random instances, worst gap {worst:.3e}"))
}

fn check_greedy_dominates_baselines(instances: u32) -> CheckResult {
    let name = "greedy-dominates-baselines";
    let mut rng = ChaCha8Rng::seed_from_u64(0x646f6d);
    for i in 0..instances {
        let (items, prioritized, budget) = random_instance(&mut rng);
        let run = |r: tdsched::Result<tdsched::scheduler::AllocationDecision>| r.map(|d| d.total_value);
        let (greedy, rank_only, priority) = match (
            run(greedy_knapsack(&items, budget)),
            run(rank_only_knapsack(&items, budget)),
            run(priority_only(&prioritized, budget)),
        ) {
            (Ok(g), Ok(r), Ok(p)) => (g, r, p),
            _ => return fail(name, format!("instance {i} failed to allocate")),
        };
        if greedy < rank_only - 1e-9 || greedy < priority - 1e-9 {
            return fail(
                name,
                format!("instance {i}: greedy {greedy} < rank-only {rank_only} or priority-only {priority}"),
            );
        }
    }
    pass(name, format!("{instances} random instances"))
}

fn check_ranking_properties(weights: &RankWeights) -> CheckResult {
    let name = "ranking-properties";
    if let Err(e) = weights.validate() {
        return fail(name, e.to_string());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x72616e6b);
    for case in 0..200 {
        let base = RankInputs {
            throughput: rng.random_range(0.0..4.0),
            loss: rng.random_range(0.0..4.0),
            delay: rng.random_range(0.0..4.0),
            queue: rng.random_range(0.0..4.0),
            priority: rng.random_range(0.0..1.0),
        };
        let rank = match overall_rank(&base, weights) {
            Ok(r) => r,
            Err(e) => return fail(name, format!("case {case}: {e}")),
        };
        if !(0.0..=weights.sum()).contains(&rank) {
            return fail(name, format!("case {case}: rank {rank} outside [0, {}]", weights.sum()));
        }
        // Raising any one metric must not lower the rank.
        let bump = rng.random_range(0.1..2.0);
        let bumped = [
            RankInputs { throughput: base.throughput + bump, ..base },
            RankInputs { loss: base.loss + bump, ..base },
            RankInputs { delay: base.delay + bump, ..base },
            RankInputs { queue: base.queue + bump, ..base },
            RankInputs { priority: base.priority + bump, ..base },
        ];
        for (metric, inputs) in bumped.iter().enumerate() {
            match overall_rank(inputs, weights) {
                Ok(r) if r + 1e-12 >= rank => {}
                Ok(r) => {
                    return fail(name, format!("case {case}: metric {metric} bump lowered rank {rank} -> {r}"))
                }
                Err(e) => return fail(name, format!("case {case}: {e}")),
            }
        }
        // The throughput metric is a ratio: common scaling cancels.
        let est = rng.random_range(1.0..1e7);
        let avg = rng.random_range(1.0..1e7);
        let scale = rng.random_range(1e-3..1e3);
        let (a, b) = match (throughput_metric(est, avg), throughput_metric(est * scale, avg * scale)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return fail(name, format!("case {case}: throughput metric rejected valid input")),
        };
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return fail(name, format!("case {case}: scale variance {a} vs {b}"));
        }
    }
    // A zero weight removes that metric's influence entirely.
    let mut zeroed = *weights;
    zeroed.loss = 0.0;
    let lo = RankInputs { loss: 0.0, ..RankInputs::default() };
    let hi = RankInputs { loss: 5.0, ..RankInputs::default() };
    match (overall_rank(&lo, &zeroed), overall_rank(&hi, &zeroed)) {
        (Ok(a), Ok(b)) if a == b => {}
        (Ok(a), Ok(b)) => return fail(name, format!("zero loss weight still moved rank {a} -> {b}")),
        _ => return fail(name, "rank rejected zero-weight input".to_owned()),
    }
    pass(name, "bounds, monotonicity, scale invariance, zero-weight independence".to_owned())
}

/// Mean offered load of the configured population, in bps, at the given
/// data-rate multiplier.
fn offered_load_bps(cfg: &ExperimentConfig, multiplier: f64) -> f64 {
    let t = &cfg.traffic;
    let voice_mean = f64::from(t.voice_bearers) * t.voice_peak_bps() * t.activity_factor;
    let data_mean = f64::from(t.data_bearers) * t.data_rate_bps * multiplier;
    voice_mean + data_mean
}

/// Estimated cell capacity in bps: units per second times the population
/// mean per-unit capacity at the configured mean CQIs.
fn estimated_capacity_bps(cfg: &ExperimentConfig) -> anyhow::Result<f64> {
    let mcs = match &cfg.channel.mcs_table_path {
        Some(path) => McsTable::from_csv_path(path)?,
        None => McsTable::standard(),
    };
    let edge = cfg.channel.cell_edge_fraction;
    let per_unit = (1.0 - edge) * mcs.rb_capacity_bits(cfg.channel.mean_cqi_center)?
        + edge * mcs.rb_capacity_bits(cfg.channel.mean_cqi_edge)?;
    Ok(wideband_estimated_throughput(per_unit, cfg.cell.units_per_epoch(), cfg.cell.epoch_s())?)
}

fn check_overload_exceeds_capacity(cfg: &ExperimentConfig) -> CheckResult {
    let name = "overload-exceeds-capacity";
    let capacity = match estimated_capacity_bps(cfg) {
        Ok(c) => c,
        Err(e) => return fail(name, e.to_string()),
    };
    let overload = offered_load_bps(cfg, cfg.traffic.overload_multiplier);
    let detail = format!(
        "overload offers {:.2} Mbps against ~{:.2} Mbps capacity",
        overload / 1e6,
        capacity / 1e6
    );
    if overload > capacity {
        pass(name, detail)
    } else {
        fail(name, format!("{detail}; overload intervals never stress the cell"))
    }
}

fn check_voice_duty_cycle(cfg: &ExperimentConfig) -> CheckResult {
    let name = "voice-duty-cycle";
    let params = VoiceParams {
        frame_period_ms: cfg.traffic.voice_frame_ms,
        frame_bytes: cfg.traffic.voice_frame_bytes,
        mean_talkspurt_s: cfg.traffic.mean_talkspurt_s,
        activity_factor: cfg.traffic.activity_factor,
    };
    let horizon_ms = 600_000.0;
    let sources = 16;
    let mut duty_sum = 0.0;
    for entity in 0..sources {
        let mut source =
            match VoiceSource::new(BearerId(entity as u32), params, derive(0xd017, Stream::Voice, entity)) {
                Ok(s) => s,
                Err(e) => return fail(name, e.to_string()),
            };
        let frames = source.step(horizon_ms).len();
        duty_sum += frames as f64 * params.frame_period_ms / horizon_ms;
    }
    let duty = duty_sum / sources as f64;
    let target = cfg.traffic.activity_factor;
    let detail = format!("mean duty {duty:.3} over {sources} sources x 600 s, target {target}");
    if (duty - target).abs() <= 0.05 {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

/// Aggregate generated workload (bits per 10 ms bin, before packet
/// bucketing) from `sources` data sources over `duration_s`, at
/// multiplier 1. The fluid workload carries the source's scaling behavior
/// without packet-size quantization noise.
fn data_workload_series(cfg: &ExperimentConfig, sources: u64, duration_s: f64) -> anyhow::Result<Vec<f64>> {
    let params = DataParams {
        mean_rate_bps: cfg.traffic.data_rate_bps,
        hurst_target: cfg.traffic.hurst_target,
        ..DataParams::default()
    };
    let bins = (duration_s * 100.0) as usize;
    let mut series = vec![0.0f64; bins];
    for entity in 0..sources {
        let mut source = DataSource::new(BearerId(entity as u32), params, derive(0x4855, Stream::Data, entity))?;
        for (bin, slot) in series.iter_mut().enumerate() {
            let t = bin as f64 * 10.0;
            source.step(t, t + 10.0, 1.0);
            *slot += source.last_window_fluid_bits();
        }
    }
    Ok(series)
}

fn check_hurst(cfg: &ExperimentConfig) -> CheckResult {
    let name = "hurst-selfsimilarity";
    if cfg.sim_duration_s < 60.0 {
        return CheckResult {
            name,
            status: CheckStatus::Skip,
            detail: format!(
                "configured duration {} s is too short to claim self-similarity",
                cfg.sim_duration_s
            ),
        };
    }
    let series = match data_workload_series(cfg, 16, 120.0) {
        Ok(s) => s,
        Err(e) => return fail(name, e.to_string()),
    };
    let estimate = match hurst_variance_time(&series) {
        Ok(h) => h,
        Err(e) => return fail(name, e.to_string()),
    };
    let cross = match hurst_rescaled_range(&series) {
        Ok(h) => h,
        Err(e) => return fail(name, e.to_string()),
    };
    let target = cfg.traffic.hurst_target;
    let (lo, hi) = (target - 0.1, (target + 0.05).min(0.99));
    let detail = format!(
        "variance-time H = {estimate:.3}, rescaled-range H = {cross:.3} on a 120 s workload trace, target {target}"
    );
    if !(lo..=hi).contains(&estimate) {
        fail(name, format!("{detail}; variance-time outside [{lo:.2}, {hi:.2}]"))
    } else if (estimate - cross).abs() > 0.1 {
        fail(name, format!("{detail}; estimators disagree by more than 0.1"))
    } else {
        pass(name, detail)
    }
}

fn check_engine_invariants(cfg: &ExperimentConfig) -> CheckResult {
    let name = "engine-invariants";
    // A short run with a capped population: the engine aborts on any
    // capacity, conservation, or rate-bound breach.
    let mut small = cfg.clone();
    small.sim_duration_s = 2.0;
    small.traffic.voice_bearers = cfg.traffic.voice_bearers.min(10);
    small.traffic.data_bearers = cfg.traffic.data_bearers.min(5);
    small.cell.num_rbs = cfg.cell.num_rbs.min(5);
    for kind in SchedulerKind::ALL {
        if let Err(e) = engine::run(&small, kind, 17) {
            return fail(name, format!("{kind}: {e}"));
        }
    }
    pass(name, "2 s run per policy with per-epoch invariant checks".to_owned())
}

/// The built-in self-check suite. Any `Fail` should block further use of
/// the configuration.
pub fn validate_config(cfg: &ExperimentConfig) -> anyhow::Result<Vec<CheckResult>> {
    cfg.validate()?;
    Ok(vec![
        check_greedy_matches_oracle(300),
        check_greedy_dominates_baselines(300),
        check_ranking_properties(&cfg.weights),
        check_overload_exceeds_capacity(cfg),
        check_voice_duty_cycle(cfg),
        check_hurst(cfg),
        check_engine_invariants(cfg),
    ])
}

/// Print check results in the stable one-line-per-check format and report
/// whether everything passed.
pub fn print_checks(results: &[CheckResult], mut out: impl Write) -> anyhow::Result<bool> {
    let mut ok = true;
    for check in results {
        writeln!(out, "check {}: {} — {}", check.name, check.status, check.detail)?;
        if check.status == CheckStatus::Fail {
            ok = false;
        }
    }
    Ok(ok)
}
