//! Experiment configuration: TOML parsing, defaults, and validation.
//!
//! Every key has a default, so an empty file is a valid config. Unknown
//! keys are rejected outright — a typo should fail loudly, not silently
//! fall back to a default. Validation happens in one pass after parsing so
//! error messages can name the offending key and value.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ranking::RankWeights;
use crate::traffic::{LoadSchedule, LoadState, TrafficMix, DEFAULT_SCHEDULE_S};

/// Which allocation policy drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SchedulerKind {
    GreedyKnapsack,
    RankOnlyKnapsack,
    PriorityOnly,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] =
        [SchedulerKind::GreedyKnapsack, SchedulerKind::RankOnlyKnapsack, SchedulerKind::PriorityOnly];

    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::GreedyKnapsack => "greedy-knapsack",
            SchedulerKind::RankOnlyKnapsack => "rank-only-knapsack",
            SchedulerKind::PriorityOnly => "priority-only",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy-knapsack" | "greedy" => Ok(SchedulerKind::GreedyKnapsack),
            "rank-only-knapsack" | "rank-only" => Ok(SchedulerKind::RankOnlyKnapsack),
            "priority-only" | "priority" => Ok(SchedulerKind::PriorityOnly),
            other => Err(Error::Config(format!(
                "unknown scheduler {other:?}; expected greedy-knapsack, rank-only-knapsack, or priority-only"
            ))),
        }
    }
}

impl TryFrom<String> for SchedulerKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SchedulerKind> for String {
    fn from(k: SchedulerKind) -> String {
        k.name().to_owned()
    }
}

/// Cell geometry: the epoch's resource budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellConfig {
    /// Resource blocks per subframe.
    pub num_rbs: u32,
    /// Subframes per scheduling epoch.
    pub subframes_per_epoch: u32,
    /// Scheduling epoch (time window) length.
    pub epoch_ms: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig { num_rbs: 25, subframes_per_epoch: 10, epoch_ms: 10.0 }
    }
}

impl CellConfig {
    /// RB-subframe units one epoch can grant — the knapsack budget B.
    pub fn units_per_epoch(&self) -> u32 {
        self.num_rbs * self.subframes_per_epoch
    }

    pub fn epoch_s(&self) -> f64 {
        self.epoch_ms / 1000.0
    }
}

/// One schedule interval as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub duration_s: f64,
    pub state: LoadState,
}

fn default_schedule_entries() -> Vec<ScheduleEntry> {
    DEFAULT_SCHEDULE_S
        .iter()
        .enumerate()
        .map(|(i, &duration_s)| ScheduleEntry {
            duration_s,
            state: if i % 2 == 0 { LoadState::Normal } else { LoadState::Overload },
        })
        .collect()
}

/// Traffic population and source parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    pub voice_bearers: u32,
    pub data_bearers: u32,
    /// Long-run mean rate of one data bearer under normal load, bps.
    pub data_rate_bps: f64,
    pub hurst_target: f64,
    /// Data-rate scaling during Overload intervals.
    pub overload_multiplier: f64,
    pub activity_factor: f64,
    pub mean_talkspurt_s: f64,
    pub voice_frame_ms: f64,
    pub voice_frame_bytes: u32,
    pub mix: TrafficMix,
    pub schedule: Vec<ScheduleEntry>,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            voice_bearers: 300,
            data_bearers: 100,
            data_rate_bps: 60_000.0,
            hurst_target: 0.9,
            overload_multiplier: 3.0,
            activity_factor: 0.5,
            mean_talkspurt_s: 5.0,
            voice_frame_ms: 20.0,
            voice_frame_bytes: 40,
            mix: TrafficMix::default(),
            schedule: default_schedule_entries(),
        }
    }
}

impl TrafficConfig {
    pub fn load_schedule(&self) -> Result<LoadSchedule> {
        LoadSchedule::new(self.schedule.iter().map(|e| (e.duration_s, e.state)).collect())
    }

    /// Peak rate of one talking voice source, bps.
    pub fn voice_peak_bps(&self) -> f64 {
        f64::from(self.voice_frame_bytes) * 8.0 / (self.voice_frame_ms / 1000.0)
    }
}

/// Channel quality populations and the optional custom MCS table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    /// Fraction of bearers given the cell-edge mean CQI.
    pub cell_edge_fraction: f64,
    pub mean_cqi_center: u8,
    pub mean_cqi_edge: u8,
    /// Per-epoch probability that a bearer's CQI moves.
    pub cqi_step_probability: f64,
    /// CSV file overriding the built-in capacity ladder.
    pub mcs_table_path: Option<PathBuf>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            cell_edge_fraction: 0.2,
            mean_cqi_center: 10,
            mean_cqi_edge: 7,
            cqi_step_probability: crate::channel::DEFAULT_STEP_PROBABILITY,
            mcs_table_path: None,
        }
    }
}

/// Rate-policy bounds applied per bearer class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConfig {
    /// GBR of a voice bearer, bps.
    pub voice_gbr_bps: f64,
    /// GBR of a GBR data bearer (streaming/gaming), bps.
    pub data_gbr_bps: f64,
    /// MBR = factor x GBR for every GBR bearer.
    pub mbr_factor: f64,
    pub ambr_per_user_bps: f64,
    pub ambr_per_apn_bps: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            voice_gbr_bps: 16_000.0,
            data_gbr_bps: 60_000.0,
            mbr_factor: 4.0,
            ambr_per_user_bps: 2_000_000.0,
            ambr_per_apn_bps: 2_000_000.0,
        }
    }
}

/// Per-bearer queue capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BufferConfig {
    pub voice_bytes: u32,
    pub data_bytes: u32,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig { voice_bytes: 8 * 1024, data_bytes: 128 * 1024 }
    }
}

/// Averaging parameters: the PF past-average EWMA and the metrics window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AveragingConfig {
    /// EWMA smoothing factor for past/scheduled-rate averages.
    pub alpha: f64,
    /// Floor under the PF past-average denominator, bps.
    pub past_avg_floor_bps: f64,
    /// Sliding window for loss/fairness statistics, seconds.
    pub window_s: f64,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        AveragingConfig { alpha: 0.01, past_avg_floor_bps: 1000.0, window_s: 1.0 }
    }
}

/// The complete, validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub schedulers: Vec<SchedulerKind>,
    pub sim_duration_s: f64,
    pub out_dir: Option<PathBuf>,
    pub cell: CellConfig,
    pub traffic: TrafficConfig,
    pub channel: ChannelConfig,
    pub weights: RankWeights,
    pub rates: RateConfig,
    pub buffers: BufferConfig,
    pub averaging: AveragingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: vec![1],
            schedulers: vec![SchedulerKind::GreedyKnapsack],
            sim_duration_s: 60.0,
            out_dir: None,
            cell: CellConfig::default(),
            traffic: TrafficConfig::default(),
            channel: ChannelConfig::default(),
            weights: RankWeights::default(),
            rates: RateConfig::default(),
            buffers: BufferConfig::default(),
            averaging: AveragingConfig::default(),
        }
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl ExperimentConfig {
    /// Parse and validate a TOML config file. An empty file yields the
    /// defaults.
    pub fn parse(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Parse and validate config text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        require(!self.seeds.is_empty(), || "at least one seed is required".into())?;
        require(!self.schedulers.is_empty(), || "at least one scheduler is required".into())?;
        require(self.sim_duration_s > 0.0 && self.sim_duration_s.is_finite(), || {
            format!("sim_duration_s must be positive, got {}", self.sim_duration_s)
        })?;
        require(self.cell.num_rbs >= 1, || format!("num_rbs must be >= 1, got {}", self.cell.num_rbs))?;
        require(self.cell.subframes_per_epoch >= 1, || {
            format!("subframes_per_epoch must be >= 1, got {}", self.cell.subframes_per_epoch)
        })?;
        require(self.cell.epoch_ms > 0.0 && self.cell.epoch_ms.is_finite(), || {
            format!("epoch_ms must be positive, got {}", self.cell.epoch_ms)
        })?;

        let t = &self.traffic;
        require(t.data_rate_bps >= 0.0, || format!("data_rate_bps must be >= 0, got {}", t.data_rate_bps))?;
        require(t.hurst_target > 0.5 && t.hurst_target < 1.0, || {
            format!("hurst_target must lie in (0.5, 1), got {}", t.hurst_target)
        })?;
        require(t.overload_multiplier >= 1.0, || {
            format!("overload_multiplier must be >= 1, got {}", t.overload_multiplier)
        })?;
        require(t.activity_factor > 0.0 && t.activity_factor < 1.0, || {
            format!("activity_factor must lie in (0, 1), got {}", t.activity_factor)
        })?;
        require(t.mean_talkspurt_s > 0.0, || {
            format!("mean_talkspurt_s must be positive, got {}", t.mean_talkspurt_s)
        })?;
        require(t.voice_frame_ms > 0.0, || format!("voice_frame_ms must be positive, got {}", t.voice_frame_ms))?;
        require(t.voice_frame_bytes >= 1, || "voice_frame_bytes must be >= 1".into())?;
        t.load_schedule()?;

        let c = &self.channel;
        require((0.0..=1.0).contains(&c.cell_edge_fraction), || {
            format!("cell_edge_fraction must lie in [0, 1], got {}", c.cell_edge_fraction)
        })?;
        for (name, cqi) in [("mean_cqi_center", c.mean_cqi_center), ("mean_cqi_edge", c.mean_cqi_edge)] {
            require((1..=15).contains(&cqi), || format!("{name} must lie in 1..=15, got {cqi}"))?;
        }
        require((0.0..=1.0).contains(&c.cqi_step_probability), || {
            format!("cqi_step_probability must lie in [0, 1], got {}", c.cqi_step_probability)
        })?;

        self.weights.validate()?;

        let r = &self.rates;
        require(r.voice_gbr_bps > 0.0, || format!("voice_gbr_bps must be positive, got {}", r.voice_gbr_bps))?;
        require(r.data_gbr_bps > 0.0, || format!("data_gbr_bps must be positive, got {}", r.data_gbr_bps))?;
        require(r.mbr_factor >= 1.0, || format!("mbr_factor must be >= 1, got {}", r.mbr_factor))?;
        require(r.ambr_per_user_bps > 0.0, || "ambr_per_user_bps must be positive".into())?;
        require(r.ambr_per_apn_bps > 0.0, || "ambr_per_apn_bps must be positive".into())?;

        require(self.buffers.voice_bytes >= 1 && self.buffers.data_bytes >= 1, || {
            "buffer capacities must be >= 1 byte".into()
        })?;

        let a = &self.averaging;
        require(a.alpha > 0.0 && a.alpha < 1.0, || format!("alpha must lie in (0, 1), got {}", a.alpha))?;
        require(a.past_avg_floor_bps > 0.0, || {
            format!("past_avg_floor_bps must be positive, got {}", a.past_avg_floor_bps)
        })?;
        require(a.window_s >= self.cell.epoch_s(), || {
            format!("window_s must be at least one epoch, got {}", a.window_s)
        })?;
        Ok(())
    }

    /// SHA-256 of the canonical serialized config, for report metadata.
    pub fn sha256_hex(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Epochs in one run.
    pub fn total_epochs(&self) -> u64 {
        (self.sim_duration_s * 1000.0 / self.cell.epoch_ms).round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.cell.num_rbs, 25);
        assert_eq!(cfg.cell.units_per_epoch(), 250);
        assert_eq!(cfg.cell.epoch_ms, 10.0);
        assert_eq!(cfg.traffic.voice_bearers, 300);
        assert_eq!(cfg.traffic.data_bearers, 100);
        assert_eq!(cfg.traffic.hurst_target, 0.9);
        assert_eq!(cfg.weights, RankWeights::default());
        assert_eq!(cfg.traffic.schedule.len(), 11);
    }

    #[test]
    fn zero_rbs_rejected() {
        let err = ExperimentConfig::from_toml_str("[cell]\nnum_rbs = 0\n").unwrap_err();
        assert!(err.to_string().contains("num_rbs"), "message was: {err}");
    }

    #[test]
    fn unknown_key_rejected_by_name() {
        let err = ExperimentConfig::from_toml_str("speling_mistake = 3\n").unwrap_err();
        assert!(err.to_string().contains("speling_mistake"), "message was: {err}");
        let err = ExperimentConfig::from_toml_str("[traffic]\nvoice_berers = 10\n").unwrap_err();
        assert!(err.to_string().contains("voice_berers"), "message was: {err}");
    }

    #[test]
    fn scheduler_names_round_trip() {
        for kind in SchedulerKind::ALL {
            assert_eq!(kind.name().parse::<SchedulerKind>().unwrap(), kind);
        }
        assert_eq!("greedy".parse::<SchedulerKind>().unwrap(), SchedulerKind::GreedyKnapsack);
        assert_eq!("priority".parse::<SchedulerKind>().unwrap(), SchedulerKind::PriorityOnly);
        assert!("round-robin".parse::<SchedulerKind>().is_err());
        let cfg = ExperimentConfig::from_toml_str(
            "schedulers = [\"greedy-knapsack\", \"priority-only\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.schedulers, vec![SchedulerKind::GreedyKnapsack, SchedulerKind::PriorityOnly]);
    }

    #[test]
    fn custom_schedule_parses() {
        let cfg = ExperimentConfig::from_toml_str(
            "[traffic]\nschedule = [{ duration_s = 2.0, state = \"overload\" }, { duration_s = 1.0, state = \"normal\" }]\n",
        )
        .unwrap();
        let sched = cfg.traffic.load_schedule().unwrap();
        assert_eq!(sched.state_at(0.5), LoadState::Overload);
        assert_eq!(sched.state_at(2.5), LoadState::Normal);
    }

    #[test]
    fn out_of_range_values_name_the_key() {
        for (toml, key) in [
            ("[traffic]\nactivity_factor = 1.5\n", "activity_factor"),
            ("[traffic]\nhurst_target = 0.4\n", "hurst_target"),
            ("[traffic]\noverload_multiplier = 0.5\n", "overload_multiplier"),
            ("[channel]\nmean_cqi_center = 16\n", "mean_cqi_center"),
            ("[averaging]\nalpha = 1.0\n", "alpha"),
            ("sim_duration_s = 0.0\n", "sim_duration_s"),
        ] {
            let err = ExperimentConfig::from_toml_str(toml).unwrap_err();
            assert!(err.to_string().contains(key), "expected {key} in: {err}");
        }
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig::default();
        assert_eq!(a.sha256_hex(), b.sha256_hex());
        let mut c = ExperimentConfig::default();
        c.sim_duration_s = 61.0;
        assert_ne!(a.sha256_hex(), c.sha256_hex());
        assert_eq!(a.sha256_hex().len(), 64);
    }

    #[test]
    fn voice_peak_rate() {
        // 40 bytes every 20 ms = 16 kbps, by hand.
        assert_eq!(TrafficConfig::default().voice_peak_bps(), 16_000.0);
    }

    #[test]
    fn epoch_accounting() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.total_epochs(), 6000);
        assert_eq!(cfg.cell.epoch_s(), 0.01);
    }
}
