//! Run statistics: per-QCI tables, fairness, CDFs, Hurst estimation, and
//! the report writers.
//!
//! Everything here is pure aggregation over the engine's ledger tallies.
//! File output is deterministic: rows are emitted in sorted key order and
//! floats use the standard shortest round-trip decimal form, so identical
//! runs produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::BearerId;

/// Jain's fairness index, `(sum x)^2 / (n * sum x^2)`.
///
/// Lives in `[1/n, 1]`; 1 iff all values are equal. The all-zero vector is
/// defined as perfectly fair (1.0) since no one has more than anyone else.
pub fn jain_index(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("fairness of an empty population is undefined".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Contract(format!("fairness inputs must be finite and >= 0, got {v}")));
        }
        sum += v;
        sum_sq += v * v;
    }
    if sum_sq == 0.0 {
        return Ok(1.0);
    }
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

/// Empirical CDF: sorted values with cumulative fraction `(j+1)/n`.
pub fn cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("CDF of an empty sample is undefined".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("CDF inputs must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len() as f64;
    Ok(sorted.into_iter().enumerate().map(|(j, v)| (v, (j + 1) as f64 / n)).collect())
}

fn least_squares_slope(points: &[(f64, f64)]) -> Result<f64> {
    let n = points.len() as f64;
    if points.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 points for a slope estimate".into()));
    }
    let mx = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in points {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        return Err(Error::InvalidInput("degenerate abscissae in slope estimate".into()));
    }
    Ok(num / den)
}

/// Minimum series length for the Hurst estimators.
pub const HURST_MIN_SAMPLES: usize = 1024;

fn check_hurst_input(series: &[f64]) -> Result<()> {
    if series.len() < HURST_MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "Hurst estimation needs >= {HURST_MIN_SAMPLES} samples, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("Hurst input must be finite".into()));
    }
    let first = series[0];
    if series.iter().all(|v| *v == first) {
        return Err(Error::InvalidInput("Hurst estimate of a constant series is degenerate".into()));
    }
    Ok(())
}

/// Variance-time Hurst estimator.
///
/// Aggregates the series at dyadic block sizes, regresses the log variance
/// of the block means on the log block size, and maps the slope via
/// `H = 1 + slope / 2` (slope -1 for i.i.d. noise, hence H = 0.5).
pub fn hurst_variance_time(series: &[f64]) -> Result<f64> {
    check_hurst_input(series)?;
    let mut points = Vec::new();
    let mut m = 1usize;
    // Keep >= 32 blocks per level so each variance estimate is stable.
    while series.len() / m >= 32 {
        let blocks: Vec<f64> = series
            .chunks_exact(m)
            .map(|c| c.iter().sum::<f64>() / m as f64)
            .collect();
        let n = blocks.len() as f64;
        let mean = blocks.iter().sum::<f64>() / n;
        let var = blocks.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (n - 1.0);
        if var > 0.0 {
            points.push(((m as f64).ln(), var.ln()));
        }
        m *= 2;
    }
    let slope = least_squares_slope(&points)?;
    Ok(1.0 + slope / 2.0)
}

/// Rescaled-range (R/S) Hurst estimator, for cross-checking the
/// variance-time value.
///
/// For each dyadic window size, the series is cut into windows; each
/// window's range of the mean-adjusted cumulative sum is divided by its
/// standard deviation, and the log of the mean R/S is regressed on the log
/// window size. The slope is the H estimate.
pub fn hurst_rescaled_range(series: &[f64]) -> Result<f64> {
    check_hurst_input(series)?;
    let mut points = Vec::new();
    let mut n = 16usize;
    while series.len() / n >= 4 {
        let mut ratios = Vec::new();
        for window in series.chunks_exact(n) {
            let mean = window.iter().sum::<f64>() / n as f64;
            let mut cum = 0.0;
            let mut min = 0.0f64;
            let mut max = 0.0f64;
            let mut var = 0.0;
            for v in window {
                cum += v - mean;
                min = min.min(cum);
                max = max.max(cum);
                var += (v - mean) * (v - mean);
            }
            let std = (var / n as f64).sqrt();
            if std > 0.0 {
                ratios.push((max - min) / std);
            }
        }
        if !ratios.is_empty() {
            let mean_rs = ratios.iter().sum::<f64>() / ratios.len() as f64;
            if mean_rs > 0.0 {
                points.push(((n as f64).ln(), mean_rs.ln()));
            }
        }
        n *= 2;
    }
    least_squares_slope(&points)
}

/// Final per-bearer ledger totals handed from the engine to the reporters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BearerTally {
    pub bearer_id: BearerId,
    pub user_id: u32,
    pub qci: u8,
    /// All bits generated for this bearer, accepted or not.
    pub offered_bits: u64,
    /// Bits fully transmitted (including partial-packet progress).
    pub served_bits: u64,
    /// Bits rejected on buffer overflow.
    pub dropped_bits: u64,
    /// Bits still waiting (queue plus any partial packet remainder).
    pub queued_bits: u64,
    pub delivered_packets: u64,
    /// Sum of delivered-packet delays, for the mean.
    pub delay_sum_ms: f64,
    /// Delivered packets whose delay met the class budget.
    pub delivered_within_budget: u64,
}

impl BearerTally {
    /// The exact ledger identity every bearer must satisfy.
    pub fn is_conserved(&self) -> bool {
        self.offered_bits == self.served_bits + self.dropped_bits + self.queued_bits
    }

    fn mean_delay_ms(&self) -> Option<f64> {
        (self.delivered_packets > 0).then(|| self.delay_sum_ms / self.delivered_packets as f64)
    }

    fn loss_rate(&self) -> Option<f64> {
        (self.offered_bits > 0).then(|| self.dropped_bits as f64 / self.offered_bits as f64)
    }
}

/// One row of the per-QCI summary tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QciRow {
    pub qci: u8,
    pub bearers: u32,
    /// Mean served rate across the class, Mbps.
    pub throughput_mbps: f64,
    /// Mean offered rate across the class, Mbps.
    pub offered_mbps: f64,
    /// Dropped-traffic rate, Mbps — the loss table's unit.
    pub loss_mbps: f64,
    /// Dimensionless dropped/offered ratio (None when nothing was offered).
    pub loss_rate: Option<f64>,
    /// Mean delay over delivered packets, ms (None when none delivered).
    pub latency_ms: Option<f64>,
    pub delivered_packets: u64,
    /// Fraction of delivered packets inside the class delay budget.
    pub within_budget_fraction: Option<f64>,
}

/// Build the per-QCI rows. Classes with no bearers are absent, not zero.
pub fn per_qci_report(tallies: &[BearerTally], duration_s: f64) -> Result<Vec<QciRow>> {
    if !(duration_s > 0.0) {
        return Err(Error::InvalidInput(format!("duration must be positive, got {duration_s}")));
    }
    let mut grouped: BTreeMap<u8, Vec<&BearerTally>> = BTreeMap::new();
    for t in tallies {
        if !t.is_conserved() {
            return Err(Error::Contract(format!(
                "bearer {} violates conservation: offered {} != served {} + dropped {} + queued {}",
                t.bearer_id.0, t.offered_bits, t.served_bits, t.dropped_bits, t.queued_bits
            )));
        }
        grouped.entry(t.qci).or_default().push(t);
    }
    let mut rows = Vec::new();
    for (qci, group) in grouped {
        let served: u64 = group.iter().map(|t| t.served_bits).sum();
        let offered: u64 = group.iter().map(|t| t.offered_bits).sum();
        let dropped: u64 = group.iter().map(|t| t.dropped_bits).sum();
        let delivered: u64 = group.iter().map(|t| t.delivered_packets).sum();
        let delay_sum: f64 = group.iter().map(|t| t.delay_sum_ms).sum();
        let within: u64 = group.iter().map(|t| t.delivered_within_budget).sum();
        rows.push(QciRow {
            qci,
            bearers: group.len() as u32,
            throughput_mbps: served as f64 / duration_s / 1e6,
            offered_mbps: offered as f64 / duration_s / 1e6,
            loss_mbps: dropped as f64 / duration_s / 1e6,
            loss_rate: (offered > 0).then(|| dropped as f64 / offered as f64),
            latency_ms: (delivered > 0).then(|| delay_sum / delivered as f64),
            delivered_packets: delivered,
            within_budget_fraction: (delivered > 0).then(|| within as f64 / delivered as f64),
        });
    }
    Ok(rows)
}

/// One sample of the QCI-1 fairness series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessSample {
    pub t_s: f64,
    /// Jain index over the window throughputs of full-window talkers.
    pub jain: f64,
    /// Bearers whose offered traffic filled most of the window.
    pub active_bearers: u32,
}

/// Per-bearer summary row for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BearerRow {
    pub bearer_id: BearerId,
    pub user_id: u32,
    pub qci: u8,
    pub mean_cqi_target: u8,
    pub offered_bits: u64,
    pub served_bits: u64,
    pub dropped_bits: u64,
    pub queued_bits_final: u64,
    pub mean_throughput_bps: f64,
    pub loss_rate: Option<f64>,
    pub mean_latency_ms: Option<f64>,
    pub delivered_packets: u64,
}

/// Run identification attached to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema_version: u32,
    pub scheduler: String,
    pub seed: u64,
    pub duration_s: f64,
    pub epoch_ms: f64,
    pub rb_units_per_epoch: u32,
    pub config_sha256: String,
}

/// A CDF series attached to one QCI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QciCdf {
    pub qci: u8,
    /// `(value, cumulative fraction)`, fractions climbing to 1.
    pub points: Vec<(f64, f64)>,
}

/// Everything a single run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub meta: RunMeta,
    pub per_qci: Vec<QciRow>,
    pub per_bearer: Vec<BearerRow>,
    pub fairness_qci1: Vec<FairnessSample>,
    /// Per-QCI CDF of per-bearer mean latency (delivered bearers only).
    pub cdf_latency_ms: Vec<QciCdf>,
    /// Per-QCI CDF of per-bearer loss rate (bearers with offered traffic).
    pub cdf_loss_rate: Vec<QciCdf>,
}

impl MetricsReport {
    /// Assemble a report from raw tallies plus the fairness series the
    /// engine sampled along the way.
    pub fn assemble(
        meta: RunMeta,
        tallies: &[BearerTally],
        mean_cqi_targets: &BTreeMap<BearerId, u8>,
        fairness_qci1: Vec<FairnessSample>,
    ) -> Result<Self> {
        let per_qci = per_qci_report(tallies, meta.duration_s)?;
        let mut per_bearer = Vec::with_capacity(tallies.len());
        for t in tallies {
            per_bearer.push(BearerRow {
                bearer_id: t.bearer_id,
                user_id: t.user_id,
                qci: t.qci,
                mean_cqi_target: *mean_cqi_targets.get(&t.bearer_id).ok_or_else(|| {
                    Error::Contract(format!("bearer {} has no channel target recorded", t.bearer_id.0))
                })?,
                offered_bits: t.offered_bits,
                served_bits: t.served_bits,
                dropped_bits: t.dropped_bits,
                queued_bits_final: t.queued_bits,
                mean_throughput_bps: t.served_bits as f64 / meta.duration_s,
                loss_rate: t.loss_rate(),
                mean_latency_ms: t.mean_delay_ms(),
                delivered_packets: t.delivered_packets,
            });
        }
        per_bearer.sort_by_key(|r| r.bearer_id);

        let mut by_qci: BTreeMap<u8, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for t in tallies {
            let entry = by_qci.entry(t.qci).or_default();
            if let Some(d) = t.mean_delay_ms() {
                entry.0.push(d);
            }
            if let Some(l) = t.loss_rate() {
                entry.1.push(l);
            }
        }
        let mut cdf_latency_ms = Vec::new();
        let mut cdf_loss_rate = Vec::new();
        for (qci, (delays, losses)) in by_qci {
            if !delays.is_empty() {
                cdf_latency_ms.push(QciCdf { qci, points: cdf(&delays)? });
            }
            if !losses.is_empty() {
                cdf_loss_rate.push(QciCdf { qci, points: cdf(&losses)? });
            }
        }
        Ok(MetricsReport { meta, per_qci, per_bearer, fairness_qci1, cdf_latency_ms, cdf_loss_rate })
    }

    pub fn qci_row(&self, qci: u8) -> Option<&QciRow> {
        self.per_qci.iter().find(|r| r.qci == qci)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write the report as JSON plus the documented CSV tables. Returns the
/// paths written. Output is byte-stable for identical reports.
pub fn write_report_files(report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let json_path = dir.join("report.json");
    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Engine(format!("report serialization failed: {e}")))?;
    json.push('\n');
    fs::write(&json_path, json)?;
    written.push(json_path);

    let mut throughput = String::from("qci,bearers,throughput_mbps,offered_mbps\n");
    let mut loss = String::from("qci,loss_mbps,loss_rate\n");
    let mut latency = String::from("qci,latency_ms,delivered_packets,within_budget_fraction\n");
    for row in &report.per_qci {
        throughput.push_str(&format!(
            "{},{},{},{}\n",
            row.qci, row.bearers, row.throughput_mbps, row.offered_mbps
        ));
        loss.push_str(&format!("{},{},{}\n", row.qci, row.loss_mbps, fmt_opt(row.loss_rate)));
        latency.push_str(&format!(
            "{},{},{},{}\n",
            row.qci,
            fmt_opt(row.latency_ms),
            row.delivered_packets,
            fmt_opt(row.within_budget_fraction)
        ));
    }
    for (name, body) in [
        ("qci_throughput.csv", throughput),
        ("qci_loss.csv", loss),
        ("qci_latency.csv", latency),
    ] {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }

    let mut bearers = String::from(
        "bearer_id,user_id,qci,mean_cqi_target,offered_bits,served_bits,dropped_bits,queued_bits_final,mean_throughput_bps,loss_rate,mean_latency_ms,delivered_packets\n",
    );
    for r in &report.per_bearer {
        bearers.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.bearer_id.0,
            r.user_id,
            r.qci,
            r.mean_cqi_target,
            r.offered_bits,
            r.served_bits,
            r.dropped_bits,
            r.queued_bits_final,
            r.mean_throughput_bps,
            fmt_opt(r.loss_rate),
            fmt_opt(r.mean_latency_ms),
            r.delivered_packets
        ));
    }
    let path = dir.join("bearer_summary.csv");
    fs::write(&path, bearers)?;
    written.push(path);

    let mut fairness = String::from("t_s,jain,active_bearers\n");
    for s in &report.fairness_qci1 {
        fairness.push_str(&format!("{},{},{}\n", s.t_s, s.jain, s.active_bearers));
    }
    let path = dir.join("fairness_qci1.csv");
    fs::write(&path, fairness)?;
    written.push(path);

    for (prefix, series) in [("cdf_latency_qci", &report.cdf_latency_ms), ("cdf_loss_qci", &report.cdf_loss_rate)] {
        for qci_cdf in series.iter() {
            let mut body = String::from("value,fraction\n");
            for (v, f) in &qci_cdf.points {
                body.push_str(&format!("{v},{f}\n"));
            }
            let path = dir.join(format!("{prefix}{}.csv", qci_cdf.qci));
            fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}
