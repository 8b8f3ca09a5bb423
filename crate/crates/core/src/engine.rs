//! The single-cell epoch simulator.
//!
//! Each epoch: advance the load schedule, step every traffic source and
//! enqueue (or overflow-drop) its packets, step every channel, build the
//! candidate set (rank + size for every bearer with rate-eligible backlog),
//! invoke the configured allocation policy, serve FIFO with byte-level
//! continuation across epochs, hand leftover whole units back out in ratio
//! order, then update the running averages and ledgers.
//!
//! The loop is single-threaded and deterministic per seed. Accounting is
//! exact: bit counters are integers and the conservation identity
//! `offered = served + dropped + queued` is checked for every bearer every
//! epoch — a breach aborts the run rather than skewing results silently.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use rand_chacha::ChaCha8Rng;

use crate::channel::{required_rbs, wideband_estimated_throughput, ChannelState, McsTable};
use crate::config::{ExperimentConfig, SchedulerKind};
use crate::error::{Error, Result};
use crate::metrics::{jain_index, BearerTally, FairnessSample, MetricsReport, RunMeta};
use crate::qos::{ambr_cap_bits, gbr_cap_bits, BearerType, QciClass, QciTable, RatePolicy};
use crate::ranking::{
    normalize_metric, overall_rank, priority_metric, throughput_metric,
    update_past_average_throughput, RankInputs,
};
use crate::rng::{derive, Stream};
use crate::scheduler::{greedy_knapsack, priority_only, rank_only_knapsack, CandidateItem};
use crate::traffic::{
    assign_traffic_mix, BearerProfile, DataParams, DataSource, LoadSchedule, LoadState, Packet,
    VoiceParams, VoiceSource,
};
use crate::BearerId;

/// Outcome of offering one packet to a bearer queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    /// Rejected whole on buffer overflow — the only loss mechanism.
    Dropped,
}

/// A packet mid-transmission: popped from the queue, its unsent remainder
/// carried into the next epoch.
#[derive(Debug, Clone, Copy)]
struct PartialPacket {
    packet: Packet,
    remaining_bits: u64,
}

/// Fixed-length rings over the last `window` epochs, with running sums.
#[derive(Debug, Clone)]
struct WindowRing {
    served: Vec<u64>,
    offered: Vec<u64>,
    dropped: Vec<u64>,
    idx: usize,
    served_sum: u64,
    offered_sum: u64,
    dropped_sum: u64,
}

impl WindowRing {
    fn new(len: usize) -> Self {
        WindowRing {
            served: vec![0; len],
            offered: vec![0; len],
            dropped: vec![0; len],
            idx: 0,
            served_sum: 0,
            offered_sum: 0,
            dropped_sum: 0,
        }
    }

    fn push(&mut self, served: u64, offered: u64, dropped: u64) {
        self.served_sum = self.served_sum + served - self.served[self.idx];
        self.offered_sum = self.offered_sum + offered - self.offered[self.idx];
        self.dropped_sum = self.dropped_sum + dropped - self.dropped[self.idx];
        self.served[self.idx] = served;
        self.offered[self.idx] = offered;
        self.dropped[self.idx] = dropped;
        self.idx = (self.idx + 1) % self.served.len();
    }
}

#[derive(Debug, Clone)]
enum SourceKind {
    Voice(VoiceSource),
    Data(DataSource),
}

/// All live state of one bearer inside the simulation.
#[derive(Debug, Clone)]
struct BearerRuntime {
    id: BearerId,
    user_id: u32,
    qci: QciClass,
    policy: RatePolicy,
    source: SourceKind,
    channel: ChannelState,
    channel_rng: ChaCha8Rng,
    mean_cqi: u8,
    buffer_capacity_bits: u64,
    queue: VecDeque<Packet>,
    queue_bits: u64,
    partial: Option<PartialPacket>,
    // Cumulative ledger, exact.
    offered_bits: u64,
    served_bits: u64,
    dropped_bits: u64,
    delivered_packets: u64,
    delay_sum_ms: f64,
    delivered_within_budget: u64,
    // Running averages.
    past_avg_bps: f64,
    sched_avg_bps: f64,
    // Sliding-window counters and this epoch's scratch.
    window: WindowRing,
    epoch_offered_bits: u64,
    epoch_dropped_bits: u64,
}

impl BearerRuntime {
    /// Bits waiting to be sent: whole queued packets plus any partial
    /// remainder.
    fn backlog_bits(&self) -> u64 {
        self.queue_bits + self.partial.map_or(0, |p| p.remaining_bits)
    }

    /// Age of the oldest unfinished packet relative to `now_ms`.
    fn hol_age_ms(&self, now_ms: f64) -> f64 {
        let arrival = self
            .partial
            .map(|p| p.packet.arrival_time_ms)
            .or_else(|| self.queue.front().map(|p| p.arrival_time_ms));
        arrival.map_or(0.0, |a| (now_ms - a).max(0.0))
    }

    /// Count an arrival and enqueue it if it fits whole; otherwise drop it
    /// whole. The boundary is inclusive: a packet that exactly fills the
    /// buffer is accepted.
    fn enqueue_with_overflow(&mut self, packet: Packet) -> EnqueueOutcome {
        let bits = packet.size_bits();
        self.offered_bits += bits;
        self.epoch_offered_bits += bits;
        if self.backlog_bits() + bits <= self.buffer_capacity_bits {
            self.queue.push_back(packet);
            self.queue_bits += bits;
            EnqueueOutcome::Accepted
        } else {
            self.dropped_bits += bits;
            self.epoch_dropped_bits += bits;
            EnqueueOutcome::Dropped
        }
    }

    /// Transmit up to `budget_bits` from the head of the queue. Packets
    /// finish in FIFO order; a packet cut short carries its remainder to a
    /// later epoch. Completed packets record their delay against
    /// `delivered_at_ms`. Returns the bits actually sent.
    fn serve(&mut self, budget_bits: u64, delivered_at_ms: f64) -> u64 {
        let mut remaining = budget_bits;
        let mut sent = 0;
        while remaining > 0 {
            if let Some(partial) = &mut self.partial {
                let take = partial.remaining_bits.min(remaining);
                partial.remaining_bits -= take;
                remaining -= take;
                sent += take;
                if partial.remaining_bits == 0 {
                    let packet = partial.packet;
                    self.partial = None;
                    self.record_delivery(&packet, delivered_at_ms);
                } else {
                    break;
                }
            } else if let Some(packet) = self.queue.pop_front() {
                self.queue_bits -= packet.size_bits();
                self.partial = Some(PartialPacket { packet, remaining_bits: packet.size_bits() });
            } else {
                break;
            }
        }
        self.served_bits += sent;
        sent
    }

    fn record_delivery(&mut self, packet: &Packet, delivered_at_ms: f64) {
        let delay = (delivered_at_ms - packet.arrival_time_ms).max(0.0);
        self.delivered_packets += 1;
        self.delay_sum_ms += delay;
        if delay <= f64::from(self.qci.delay_budget_ms) {
            self.delivered_within_budget += 1;
        }
    }

    /// The exact per-bearer ledger identity; a breach is an engine bug.
    fn check_conservation(&self) -> Result<()> {
        let rhs = self.served_bits + self.dropped_bits + self.backlog_bits();
        if self.offered_bits != rhs {
            return Err(Error::Engine(format!(
                "bearer {} leaks bits: offered {} != served {} + dropped {} + queued {}",
                self.id.0,
                self.offered_bits,
                self.served_bits,
                self.dropped_bits,
                self.backlog_bits()
            )));
        }
        Ok(())
    }

    fn tally(&self) -> BearerTally {
        BearerTally {
            bearer_id: self.id,
            user_id: self.user_id,
            qci: self.qci.label,
            offered_bits: self.offered_bits,
            served_bits: self.served_bits,
            dropped_bits: self.dropped_bits,
            queued_bits: self.backlog_bits(),
            delivered_packets: self.delivered_packets,
            delay_sum_ms: self.delay_sum_ms,
            delivered_within_budget: self.delivered_within_budget,
        }
    }
}

/// Per-epoch accounting totals, for the optional trace and the capacity
/// invariant.
#[derive(Debug, Clone, Copy)]
pub struct EpochLedger {
    pub epoch_index: u64,
    pub load: LoadState,
    pub capacity_units: u32,
    pub units_used: u32,
    pub offered_bits: u64,
    pub served_bits: u64,
    pub dropped_bits: u64,
}

/// Whether bearer `index` belongs to the cell-edge population: spreads the
/// edge fraction evenly across the index range.
fn is_cell_edge(index: usize, fraction: f64) -> bool {
    ((index as f64 + 1.0) * fraction).floor() > (index as f64 * fraction).floor()
}

fn ceil_units(bits: u64, cap_bits: f64) -> u64 {
    if bits == 0 {
        0
    } else {
        (bits as f64 / cap_bits).ceil() as u64
    }
}

struct World<'a> {
    cfg: &'a ExperimentConfig,
    scheduler: SchedulerKind,
    mcs: McsTable,
    schedule: LoadSchedule,
    bearers: Vec<BearerRuntime>,
    /// EWMA of each user's aggregate Non-GBR served rate.
    user_aggregate_bps: BTreeMap<u32, f64>,
    user_ambr_bound_bps: BTreeMap<u32, f64>,
    fairness: Vec<FairnessSample>,
    window_epochs: usize,
}

impl<'a> World<'a> {
    fn new(cfg: &'a ExperimentConfig, scheduler: SchedulerKind, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mcs = match &cfg.channel.mcs_table_path {
            Some(path) => McsTable::from_csv_path(path)?,
            None => McsTable::standard(),
        };
        let schedule = cfg.traffic.load_schedule()?;
        let qci_table = QciTable::standard();
        let mut mix_rng = derive(seed, Stream::Mix, 0);
        let assigned = assign_traffic_mix(
            cfg.traffic.voice_bearers,
            cfg.traffic.data_bearers,
            &cfg.traffic.mix,
            &mut mix_rng,
        )?;
        let window_epochs = ((cfg.averaging.window_s / cfg.cell.epoch_s()).round() as usize).max(1);

        let voice_params = VoiceParams {
            frame_period_ms: cfg.traffic.voice_frame_ms,
            frame_bytes: cfg.traffic.voice_frame_bytes,
            mean_talkspurt_s: cfg.traffic.mean_talkspurt_s,
            activity_factor: cfg.traffic.activity_factor,
        };
        let data_params = DataParams {
            mean_rate_bps: cfg.traffic.data_rate_bps,
            hurst_target: cfg.traffic.hurst_target,
            ..DataParams::default()
        };

        let mut bearers = Vec::with_capacity(assigned.len());
        let mut user_aggregate_bps = BTreeMap::new();
        let mut user_ambr_bound_bps = BTreeMap::new();
        for (index, (profile, qci_label)) in assigned.iter().enumerate() {
            let id = BearerId(index as u32);
            let user_id = index as u32; // one bearer per user
            let qci = qci_table.lookup(*qci_label)?.clone();
            let policy = match qci.bearer_type {
                BearerType::Gbr => {
                    let gbr = match profile {
                        BearerProfile::Voice => cfg.rates.voice_gbr_bps,
                        BearerProfile::Data => cfg.rates.data_gbr_bps,
                    };
                    RatePolicy::gbr(
                        gbr,
                        gbr * cfg.rates.mbr_factor,
                        cfg.rates.ambr_per_user_bps,
                        cfg.rates.ambr_per_apn_bps,
                    )?
                }
                BearerType::NonGbr => {
                    RatePolicy::non_gbr(cfg.rates.ambr_per_user_bps, cfg.rates.ambr_per_apn_bps)?
                }
            };
            if policy.gbr.is_none() {
                user_aggregate_bps.insert(user_id, 0.0);
                user_ambr_bound_bps
                    .insert(user_id, policy.ambr_per_user_bps.min(policy.ambr_per_apn_bps));
            }
            let source = match profile {
                BearerProfile::Voice => SourceKind::Voice(VoiceSource::new(
                    id,
                    voice_params,
                    derive(seed, Stream::Voice, index as u64),
                )?),
                BearerProfile::Data => SourceKind::Data(DataSource::new(
                    id,
                    data_params,
                    derive(seed, Stream::Data, index as u64),
                )?),
            };
            let mean_cqi = if is_cell_edge(index, cfg.channel.cell_edge_fraction) {
                cfg.channel.mean_cqi_edge
            } else {
                cfg.channel.mean_cqi_center
            };
            let buffer_bytes = match profile {
                BearerProfile::Voice => cfg.buffers.voice_bytes,
                BearerProfile::Data => cfg.buffers.data_bytes,
            };
            bearers.push(BearerRuntime {
                id,
                user_id,
                qci,
                policy,
                source,
                channel: ChannelState::with_drift(mean_cqi, cfg.channel.cqi_step_probability)?,
                channel_rng: derive(seed, Stream::Channel, index as u64),
                mean_cqi,
                buffer_capacity_bits: u64::from(buffer_bytes) * 8,
                queue: VecDeque::new(),
                queue_bits: 0,
                partial: None,
                offered_bits: 0,
                served_bits: 0,
                dropped_bits: 0,
                delivered_packets: 0,
                delay_sum_ms: 0.0,
                delivered_within_budget: 0,
                past_avg_bps: cfg.averaging.past_avg_floor_bps,
                sched_avg_bps: 0.0,
                window: WindowRing::new(window_epochs),
                epoch_offered_bits: 0,
                epoch_dropped_bits: 0,
            });
        }
        Ok(World {
            cfg,
            scheduler,
            mcs,
            schedule,
            bearers,
            user_aggregate_bps,
            user_ambr_bound_bps,
            fairness: Vec::new(),
            window_epochs,
        })
    }

    /// Additional bits this bearer may be granted this epoch under its rate
    /// policy: the MBR bound for GBR bearers, the min-AMBR bound otherwise.
    fn rate_cap_bits(&self, bearer: &BearerRuntime, epoch_s: f64) -> Result<u64> {
        let cap = if bearer.policy.gbr.is_some() {
            gbr_cap_bits(&bearer.policy, epoch_s, bearer.sched_avg_bps)?
        } else {
            let aggregate = self.user_aggregate_bps.get(&bearer.user_id).copied().unwrap_or(0.0);
            ambr_cap_bits(aggregate, &bearer.policy, epoch_s)
        };
        Ok(cap.max(0.0).floor() as u64)
    }

    fn rank_of(
        &self,
        bearer: &BearerRuntime,
        cap_bits: f64,
        budget_units: u32,
        epoch_s: f64,
        now_ms: f64,
    ) -> Result<f64> {
        let loss = if bearer.window.offered_sum > 0 {
            normalize_metric(
                bearer.window.dropped_sum as f64 / bearer.window.offered_sum as f64,
                bearer.qci.loss_rate_threshold,
            )?
        } else {
            0.0
        };
        let inputs = RankInputs {
            throughput: throughput_metric(
                wideband_estimated_throughput(cap_bits, budget_units, epoch_s)?,
                bearer.past_avg_bps,
            )?,
            loss,
            delay: normalize_metric(bearer.hol_age_ms(now_ms), f64::from(bearer.qci.delay_budget_ms))?,
            queue: normalize_metric(
                bearer.backlog_bits() as f64,
                bearer.buffer_capacity_bits as f64,
            )?,
            priority: priority_metric(bearer.qci.priority)?,
        };
        overall_rank(&inputs, &self.cfg.weights)
    }

    fn epoch(&mut self, index: u64, trace: &mut Option<&mut dyn Write>) -> Result<()> {
        let epoch_ms = self.cfg.cell.epoch_ms;
        let epoch_s = self.cfg.cell.epoch_s();
        let t_start_ms = index as f64 * epoch_ms;
        let t_end_ms = t_start_ms + epoch_ms;
        let budget_units = self.cfg.cell.units_per_epoch();
        let load = self.schedule.state_at(t_start_ms / 1000.0);
        let multiplier = match load {
            LoadState::Overload => self.cfg.traffic.overload_multiplier,
            LoadState::Normal => 1.0,
        };

        // Arrivals first: packets landing inside this epoch are eligible
        // for service at its end.
        for bearer in &mut self.bearers {
            bearer.epoch_offered_bits = 0;
            bearer.epoch_dropped_bits = 0;
            let packets = match &mut bearer.source {
                SourceKind::Voice(v) => v.step(t_end_ms),
                SourceKind::Data(d) => d.step(t_start_ms, t_end_ms, multiplier),
            };
            for packet in packets {
                bearer.enqueue_with_overflow(packet);
            }
        }

        for bearer in &mut self.bearers {
            bearer.channel.step(&mut bearer.channel_rng);
        }

        // Candidate set: every bearer with rate-eligible backlog.
        let n = self.bearers.len();
        let mut eligible = vec![0u64; n];
        let mut cap_bits = vec![0.0f64; n];
        let mut items: Vec<CandidateItem> = Vec::new();
        let mut prioritized: Vec<(CandidateItem, u8)> = Vec::new();
        for i in 0..n {
            let cap = self.mcs.rb_capacity_bits(self.bearers[i].channel.cqi())?;
            cap_bits[i] = cap;
            if self.bearers[i].backlog_bits() == 0 {
                continue;
            }
            let rate_cap = self.rate_cap_bits(&self.bearers[i], epoch_s)?;
            let elig = self.bearers[i].backlog_bits().min(rate_cap);
            if elig == 0 {
                continue;
            }
            eligible[i] = elig;
            let rank = self.rank_of(&self.bearers[i], cap, budget_units, epoch_s, t_end_ms)?;
            let item = CandidateItem {
                bearer_id: self.bearers[i].id,
                rank,
                size_rbs: required_rbs(elig, cap)?,
            };
            items.push(item);
            prioritized.push((item, self.bearers[i].qci.priority));
        }

        let decision = match self.scheduler {
            SchedulerKind::GreedyKnapsack => greedy_knapsack(&items, budget_units)?,
            SchedulerKind::RankOnlyKnapsack => rank_only_knapsack(&items, budget_units)?,
            SchedulerKind::PriorityOnly => priority_only(&prioritized, budget_units)?,
        };

        // Serving pass: whole granted units only; the fractional grant's
        // floor plus any units a drained bearer could not use go back into
        // the pool.
        let mut served_now = vec![0u64; n];
        let mut units_used: u64 = 0;
        for id in &decision.order {
            let i = id.0 as usize;
            let k = decision.granted_rbs[id].floor() as u64;
            if k == 0 {
                continue;
            }
            let budget_bits = (k as f64 * cap_bits[i]).floor() as u64;
            let target = budget_bits.min(eligible[i]);
            if target == 0 {
                continue;
            }
            let sent = self.bearers[i].serve(target, t_end_ms);
            if sent != target {
                return Err(Error::Engine(format!(
                    "bearer {} served {sent} of a {target}-bit grant despite sufficient backlog",
                    id.0
                )));
            }
            served_now[i] = sent;
            units_used += ceil_units(sent, cap_bits[i]);
        }
        if units_used > u64::from(budget_units) {
            return Err(Error::Engine(format!(
                "epoch {index}: {units_used} units used exceeds the budget {budget_units}"
            )));
        }

        // Leftover redistribution in the policy's own order, still under
        // each bearer's rate cap.
        let mut pool = u64::from(budget_units) - units_used;
        if pool > 0 {
            for id in &decision.order {
                if pool == 0 {
                    break;
                }
                let i = id.0 as usize;
                let remaining = eligible[i] - served_now[i];
                if remaining == 0 {
                    continue;
                }
                let grant = ceil_units(remaining, cap_bits[i]).min(pool);
                let target = ((grant as f64 * cap_bits[i]).floor() as u64).min(remaining);
                if target == 0 {
                    continue;
                }
                let sent = self.bearers[i].serve(target, t_end_ms);
                if sent != target {
                    return Err(Error::Engine(format!(
                        "bearer {} served {sent} of a {target}-bit leftover grant",
                        id.0
                    )));
                }
                served_now[i] += sent;
                pool -= ceil_units(sent, cap_bits[i]);
            }
            // Work conservation: capacity may only sit idle when no
            // eligible backlog remains anywhere.
            if pool > 0 {
                for i in 0..n {
                    if eligible[i] > served_now[i] {
                        return Err(Error::Engine(format!(
                            "epoch {index}: {pool} units idle while bearer {i} has eligible backlog"
                        )));
                    }
                }
            }
        }

        // Averages, windows, and the per-epoch invariants.
        let alpha = self.cfg.averaging.alpha;
        let mut user_rate: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, bearer) in self.bearers.iter_mut().enumerate() {
            bearer.past_avg_bps = update_past_average_throughput(
                bearer.past_avg_bps,
                served_now[i] as f64,
                epoch_s,
                alpha,
                self.cfg.averaging.past_avg_floor_bps,
            )?;
            match bearer.policy.gbr {
                Some(gbr) => {
                    bearer.sched_avg_bps =
                        (1.0 - alpha) * bearer.sched_avg_bps + alpha * (served_now[i] as f64 / epoch_s);
                    if bearer.sched_avg_bps > gbr.mbr_bps * (1.0 + 1e-9) + 1e-6 {
                        return Err(Error::Engine(format!(
                            "bearer {} windowed rate {} exceeds its MBR {}",
                            bearer.id.0, bearer.sched_avg_bps, gbr.mbr_bps
                        )));
                    }
                }
                None => {
                    *user_rate.entry(bearer.user_id).or_insert(0.0) += served_now[i] as f64 / epoch_s;
                }
            }
            bearer.window.push(served_now[i], bearer.epoch_offered_bits, bearer.epoch_dropped_bits);
            bearer.check_conservation()?;
        }
        for (user, aggregate) in self.user_aggregate_bps.iter_mut() {
            let rate = user_rate.get(user).copied().unwrap_or(0.0);
            *aggregate = (1.0 - alpha) * *aggregate + alpha * rate;
            let bound = self.user_ambr_bound_bps[user];
            if *aggregate > bound * (1.0 + 1e-9) + 1e-6 {
                return Err(Error::Engine(format!(
                    "user {user} aggregate rate {aggregate} exceeds its AMBR bound {bound}"
                )));
            }
        }

        // QCI-1 fairness sample over window throughputs. The population is
        // bearers that talked for (most of) the whole window: equal-demand
        // peers, so the index isolates scheduler equity rather than the
        // offered-traffic spread of spurts starting or ending mid-window.
        let window_s = self.window_epochs as f64 * epoch_s;
        let full_talker_bits = (0.8 * self.cfg.traffic.voice_peak_bps() * window_s) as u64;
        let mut qci1_present = false;
        let mut active_rates = Vec::new();
        for bearer in &self.bearers {
            if bearer.qci.label == 1 {
                qci1_present = true;
                if bearer.window.offered_sum >= full_talker_bits {
                    active_rates.push(bearer.window.served_sum as f64 / window_s);
                }
            }
        }
        if qci1_present {
            let (jain, active) = if active_rates.is_empty() {
                (1.0, 0)
            } else {
                (jain_index(&active_rates)?, active_rates.len() as u32)
            };
            self.fairness.push(FairnessSample { t_s: t_end_ms / 1000.0, jain, active_bearers: active });
        }

        if let Some(writer) = trace.as_deref_mut() {
            let ledger = EpochLedger {
                epoch_index: index,
                load,
                capacity_units: budget_units,
                units_used: (u64::from(budget_units) - pool.min(u64::from(budget_units))) as u32,
                offered_bits: self.bearers.iter().map(|b| b.epoch_offered_bits).sum(),
                served_bits: served_now.iter().sum(),
                dropped_bits: self.bearers.iter().map(|b| b.epoch_dropped_bits).sum(),
            };
            writeln!(
                writer,
                "{},{},{},{},{},{},{}",
                ledger.epoch_index,
                match ledger.load {
                    LoadState::Normal => "normal",
                    LoadState::Overload => "overload",
                },
                ledger.capacity_units,
                ledger.units_used,
                ledger.offered_bits,
                ledger.served_bits,
                ledger.dropped_bits
            )?;
        }
        Ok(())
    }

    fn into_report(self, seed: u64) -> Result<MetricsReport> {
        let tallies: Vec<BearerTally> = self.bearers.iter().map(BearerRuntime::tally).collect();
        let targets: BTreeMap<BearerId, u8> =
            self.bearers.iter().map(|b| (b.id, b.mean_cqi)).collect();
        let meta = RunMeta {
            schema_version: 1,
            scheduler: self.scheduler.name().to_owned(),
            seed,
            duration_s: self.cfg.sim_duration_s,
            epoch_ms: self.cfg.cell.epoch_ms,
            rb_units_per_epoch: self.cfg.cell.units_per_epoch(),
            config_sha256: self.cfg.sha256_hex(),
        };
        MetricsReport::assemble(meta, &tallies, &targets, self.fairness)
    }
}

/// Run one replication to completion and return its report.
pub fn run(config: &ExperimentConfig, scheduler: SchedulerKind, seed: u64) -> Result<MetricsReport> {
    run_with_trace(config, scheduler, seed, None)
}

/// [`run`], optionally streaming a per-epoch CSV ledger to `trace`.
pub fn run_with_trace(
    config: &ExperimentConfig,
    scheduler: SchedulerKind,
    seed: u64,
    mut trace: Option<&mut dyn Write>,
) -> Result<MetricsReport> {
    let mut world = World::new(config, scheduler, seed)?;
    if let Some(writer) = trace.as_deref_mut() {
        writeln!(writer, "epoch,load,capacity_units,units_used,offered_bits,served_bits,dropped_bits")?;
    }
    for index in 0..config.total_epochs() {
        world.epoch(index, &mut trace)?;
    }
    world.into_report(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.sim_duration_s = 5.0;
        cfg.traffic.voice_bearers = 5;
        cfg.traffic.data_bearers = 3;
        cfg.cell.num_rbs = 2;
        cfg
    }

    fn test_runtime(buffer_bits: u64) -> BearerRuntime {
        let qci = QciTable::standard().lookup(1).unwrap().clone();
        BearerRuntime {
            id: BearerId(0),
            user_id: 0,
            qci,
            policy: RatePolicy::gbr(16_000.0, 64_000.0, 2e6, 2e6).unwrap(),
            source: SourceKind::Voice(
                VoiceSource::new(BearerId(0), VoiceParams::default(), derive(1, Stream::Voice, 0))
                    .unwrap(),
            ),
            channel: ChannelState::new(10).unwrap(),
            channel_rng: derive(1, Stream::Channel, 0),
            mean_cqi: 10,
            buffer_capacity_bits: buffer_bits,
            queue: VecDeque::new(),
            queue_bits: 0,
            partial: None,
            offered_bits: 0,
            served_bits: 0,
            dropped_bits: 0,
            delivered_packets: 0,
            delay_sum_ms: 0.0,
            delivered_within_budget: 0,
            past_avg_bps: 1000.0,
            sched_avg_bps: 0.0,
            window: WindowRing::new(10),
            epoch_offered_bits: 0,
            epoch_dropped_bits: 0,
        }
    }

    fn packet(at_ms: f64, bytes: u32) -> Packet {
        Packet { arrival_time_ms: at_ms, size_bytes: bytes, bearer_id: BearerId(0) }
    }

    #[test]
    fn enqueue_boundary_is_inclusive() {
        let mut rt = test_runtime(1000);
        // 125 bytes = exactly 1000 bits: fits.
        assert_eq!(rt.enqueue_with_overflow(packet(0.0, 125)), EnqueueOutcome::Accepted);
        assert_eq!(rt.enqueue_with_overflow(packet(1.0, 1)), EnqueueOutcome::Dropped);
        assert_eq!(rt.dropped_bits, 8);
        assert_eq!(rt.backlog_bits(), 1000);
        rt.check_conservation().unwrap();
    }

    #[test]
    fn serve_with_partial_continuation() {
        let mut rt = test_runtime(100_000);
        rt.enqueue_with_overflow(packet(0.0, 50)); // 400 bits
        rt.enqueue_with_overflow(packet(0.0, 50));
        // Budget covers 1.5 packets: one delivered, half the next pending.
        assert_eq!(rt.serve(600, 10.0), 600);
        assert_eq!(rt.delivered_packets, 1);
        assert_eq!(rt.backlog_bits(), 200);
        assert_eq!(rt.delay_sum_ms, 10.0);
        rt.check_conservation().unwrap();
        // The remainder finishes next epoch; its delay spans both.
        assert_eq!(rt.serve(500, 20.0), 200);
        assert_eq!(rt.delivered_packets, 2);
        assert_eq!(rt.delay_sum_ms, 30.0);
        assert_eq!(rt.backlog_bits(), 0);
        rt.check_conservation().unwrap();
    }

    #[test]
    fn serve_zero_budget_sends_nothing() {
        let mut rt = test_runtime(100_000);
        rt.enqueue_with_overflow(packet(0.0, 50));
        assert_eq!(rt.serve(0, 10.0), 0);
        assert_eq!(rt.delivered_packets, 0);
    }

    #[test]
    fn zero_traffic_run_completes() {
        let mut cfg = ExperimentConfig::default();
        cfg.sim_duration_s = 2.0;
        cfg.traffic.voice_bearers = 0;
        cfg.traffic.data_bearers = 0;
        let report = run(&cfg, SchedulerKind::GreedyKnapsack, 1).unwrap();
        assert!(report.per_qci.is_empty());
        assert!(report.per_bearer.is_empty());
        assert!(report.fairness_qci1.is_empty());
    }

    #[test]
    fn single_voice_bearer_is_uncontended() {
        let mut cfg = ExperimentConfig::default();
        cfg.sim_duration_s = 30.0;
        cfg.traffic.voice_bearers = 1;
        cfg.traffic.data_bearers = 0;
        let report = run(&cfg, SchedulerKind::GreedyKnapsack, 1).unwrap();
        let row = report.qci_row(1).expect("voice class present");
        assert_eq!(row.loss_mbps, 0.0);
        assert!(row.delivered_packets > 0, "no packets delivered in 30 s");
        let latency = row.latency_ms.unwrap();
        // One epoch plus a frame period bounds the uncontended delay.
        assert!(latency <= 30.0, "uncontended latency was {latency} ms");
        assert_eq!(row.within_budget_fraction, Some(1.0));
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let cfg = small_config();
        let a = run(&cfg, SchedulerKind::GreedyKnapsack, 3).unwrap();
        let b = run(&cfg, SchedulerKind::GreedyKnapsack, 3).unwrap();
        assert_eq!(a, b);
        let c = run(&cfg, SchedulerKind::GreedyKnapsack, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn all_policies_hold_the_invariants() {
        // The engine aborts on any capacity, conservation, MBR, or AMBR
        // breach, so completing is the assertion.
        let cfg = small_config();
        for kind in SchedulerKind::ALL {
            let report = run(&cfg, kind, 7).unwrap();
            assert_eq!(report.meta.scheduler, kind.name());
            for row in &report.per_bearer {
                assert_eq!(
                    row.offered_bits,
                    row.served_bits + row.dropped_bits + row.queued_bits_final
                );
            }
        }
    }

    #[test]
    fn mbr_caps_a_saturating_gbr_bearer() {
        let mut cfg = ExperimentConfig::default();
        cfg.sim_duration_s = 20.0;
        cfg.traffic.voice_bearers = 0;
        cfg.traffic.data_bearers = 1;
        // All gaming: QCI 3, a GBR class.
        cfg.traffic.mix = crate::traffic::TrafficMix {
            voip: 0.0,
            best_effort: 0.0,
            interactive: 0.0,
            streaming: 0.0,
            gaming: 100.0,
        };
        cfg.traffic.data_rate_bps = 500_000.0;
        cfg.rates.data_gbr_bps = 60_000.0;
        cfg.rates.mbr_factor = 1.0;
        let report = run(&cfg, SchedulerKind::GreedyKnapsack, 2).unwrap();
        let row = &report.per_bearer[0];
        assert_eq!(row.qci, 3);
        // Offered far above MBR: the served rate must respect the cap and
        // the excess must overflow.
        assert!(row.mean_throughput_bps <= 60_000.0 * 1.01);
        assert!(row.dropped_bits > 0, "expected overflow drops under a tight MBR");
    }

    #[test]
    fn trace_has_one_row_per_epoch() {
        let mut cfg = small_config();
        cfg.sim_duration_s = 1.0;
        let mut buf = Vec::new();
        run_with_trace(&cfg, SchedulerKind::GreedyKnapsack, 1, Some(&mut buf)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 101, "header plus one row per epoch");
        assert!(lines[0].starts_with("epoch,load,"));
        assert!(lines[1].starts_with("0,normal,20,"));
    }

    #[test]
    fn edge_population_split() {
        assert_eq!((0..10).filter(|i| is_cell_edge(*i, 0.2)).count(), 2);
        assert_eq!((0..10).filter(|i| is_cell_edge(*i, 0.0)).count(), 0);
        assert_eq!((0..10).filter(|i| is_cell_edge(*i, 1.0)).count(), 10);
    }
}
