//! Link adaptation: CQI ladder, per-RB capacity, and channel evolution.
//!
//! Capacity is expressed per RB-subframe unit (one resource block for one
//! subframe, 168 resource elements). A bearer's reported CQI picks a row of
//! the MCS table; the CQI itself evolves as a bounded mean-reverting random
//! walk so that cell-center and cell-edge users keep distinct long-run
//! channel quality without ever leaving the 1..=15 range.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Resource elements in one RB-subframe unit (12 subcarriers x 14 symbols).
pub const RESOURCE_ELEMENTS_PER_UNIT: f64 = 168.0;

/// Spectral efficiency (bits per resource element) for CQI 1..=15.
const CQI_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223,
    3.9023, 4.5234, 5.1152, 5.5547,
];

/// CQI to bits-per-unit table.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    bits_per_unit: [f64; 15],
}

impl McsTable {
    /// The standard 15-step ladder.
    pub fn standard() -> Self {
        let mut bits_per_unit = [0.0; 15];
        for (slot, eff) in bits_per_unit.iter_mut().zip(CQI_EFFICIENCY) {
            *slot = eff * RESOURCE_ELEMENTS_PER_UNIT;
        }
        McsTable { bits_per_unit }
    }

    /// Build from explicit `(cqi, bits_per_unit)` pairs. Requires exactly
    /// CQI 1..=15 once each with strictly increasing positive capacities.
    pub fn from_pairs(pairs: &[(u8, f64)]) -> Result<Self> {
        if pairs.len() != 15 {
            return Err(Error::Config(format!("MCS table needs 15 rows, got {}", pairs.len())));
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by_key(|(cqi, _)| *cqi);
        let mut bits_per_unit = [0.0; 15];
        let mut prev = 0.0;
        for (i, (cqi, bits)) in sorted.iter().enumerate() {
            if *cqi as usize != i + 1 {
                return Err(Error::Config(format!("MCS table must cover CQI 1..=15 once each, got CQI {cqi}")));
            }
            if !bits.is_finite() || *bits <= prev {
                return Err(Error::Config(format!(
                    "MCS capacities must be positive and strictly increasing; CQI {cqi} has {bits}"
                )));
            }
            bits_per_unit[i] = *bits;
            prev = *bits;
        }
        Ok(McsTable { bits_per_unit })
    }

    /// Load from a two-column CSV (`cqi,bits_per_unit`, header optional).
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Config(format!("{}:{}: expected two columns", path.display(), lineno + 1)));
            };
            if lineno == 0 && a.parse::<u8>().is_err() {
                continue; // header row
            }
            let cqi: u8 = a
                .parse()
                .map_err(|_| Error::Config(format!("{}:{}: bad CQI {a:?}", path.display(), lineno + 1)))?;
            let bits: f64 = b
                .parse()
                .map_err(|_| Error::Config(format!("{}:{}: bad capacity {b:?}", path.display(), lineno + 1)))?;
            pairs.push((cqi, bits));
        }
        McsTable::from_pairs(&pairs)
    }

    /// Bits one RB-subframe unit carries at the given CQI.
    pub fn rb_capacity_bits(&self, cqi: u8) -> Result<f64> {
        if !(1..=15).contains(&cqi) {
            return Err(Error::InvalidInput(format!("CQI {cqi} out of range 1..=15")));
        }
        Ok(self.bits_per_unit[cqi as usize - 1])
    }
}

impl Default for McsTable {
    fn default() -> Self {
        McsTable::standard()
    }
}

/// Default chance per epoch that the CQI moves at all.
pub const DEFAULT_STEP_PROBABILITY: f64 = 0.3;
/// Strength of the pull back toward the long-run mean, per CQI step of
/// displacement.
const MEAN_PULL: f64 = 0.12;

/// Per-bearer channel state: a bounded random walk on CQI 1..=15 that
/// reverts toward a per-bearer mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    cqi: u8,
    mean_cqi: u8,
    step_probability: f64,
}

impl ChannelState {
    /// Start at the long-run mean with the default drift.
    pub fn new(mean_cqi: u8) -> Result<Self> {
        ChannelState::with_drift(mean_cqi, DEFAULT_STEP_PROBABILITY)
    }

    /// Start at the long-run mean with an explicit per-epoch move
    /// probability. Zero freezes the CQI.
    pub fn with_drift(mean_cqi: u8, step_probability: f64) -> Result<Self> {
        if !(1..=15).contains(&mean_cqi) {
            return Err(Error::Config(format!("mean CQI {mean_cqi} out of range 1..=15")));
        }
        if !(0.0..=1.0).contains(&step_probability) {
            return Err(Error::Config(format!(
                "CQI step probability must lie in [0, 1], got {step_probability}"
            )));
        }
        Ok(ChannelState { cqi: mean_cqi, mean_cqi, step_probability })
    }

    pub fn cqi(&self) -> u8 {
        self.cqi
    }

    /// Advance one epoch. With the configured probability the CQI moves one
    /// step; the step direction is biased toward the mean in proportion to
    /// the current displacement.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if rng.random::<f64>() >= self.step_probability {
            return;
        }
        let displacement = f64::from(self.mean_cqi) - f64::from(self.cqi);
        let p_up = (0.5 + MEAN_PULL * displacement).clamp(0.05, 0.95);
        if rng.random::<f64>() < p_up {
            if self.cqi < 15 {
                self.cqi += 1;
            }
        } else if self.cqi > 1 {
            self.cqi -= 1;
        }
    }
}

/// Rate the whole carrier would deliver at this capacity: what the bearer
/// would get if every unit of the epoch were granted to it.
pub fn wideband_estimated_throughput(
    rb_capacity_bits: f64,
    units_per_epoch: u32,
    epoch_s: f64,
) -> Result<f64> {
    if !(rb_capacity_bits > 0.0) || !rb_capacity_bits.is_finite() {
        return Err(Error::InvalidInput(format!("per-unit capacity must be positive, got {rb_capacity_bits}")));
    }
    if !(epoch_s > 0.0) {
        return Err(Error::InvalidInput(format!("epoch duration must be positive, got {epoch_s}")));
    }
    Ok(rb_capacity_bits * f64::from(units_per_epoch) / epoch_s)
}

/// Units needed to carry `eligible_bits` at the given per-unit capacity.
/// Zero backlog needs zero units; anything positive rounds up.
pub fn required_rbs(eligible_bits: u64, rb_capacity_bits: f64) -> Result<u32> {
    if !(rb_capacity_bits > 0.0) || !rb_capacity_bits.is_finite() {
        return Err(Error::InvalidInput(format!("per-unit capacity must be positive, got {rb_capacity_bits}")));
    }
    if eligible_bits == 0 {
        return Ok(0);
    }
    let units = (eligible_bits as f64 / rb_capacity_bits).ceil();
    if units > f64::from(u32::MAX) {
        return Err(Error::InvalidInput(format!("demand of {eligible_bits} bits overflows the unit count")));
    }
    Ok(units as u32)
}
