//! Bearer ranking: bounded per-metric scores combined into a single rank.
//!
//! Each QoS metric is normalized against its class constraint, squashed
//! through tanh so that no single metric can dominate unboundedly, scaled by
//! a weight, and summed. The rank of a bearer therefore lives in
//! `[0, sum_of_weights)` and saturates as any metric runs far past its
//! constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-metric weights. The rank is `sum(w_i * tanh(v_i))`, so the maximum
/// attainable rank is the sum of the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankWeights {
    pub throughput: f64,
    pub loss: f64,
    pub delay: f64,
    pub queue: f64,
    pub priority: f64,
}

impl Default for RankWeights {
    fn default() -> Self {
        // Delay dominates: a bearer nearing its delay budget outranks one
        // merely behind on throughput.
        RankWeights { throughput: 4.0, loss: 4.0, delay: 16.0, queue: 4.0, priority: 2.0 }
    }
}

impl RankWeights {
    pub fn sum(&self) -> f64 {
        self.throughput + self.loss + self.delay + self.queue + self.priority
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("throughput", self.throughput),
            ("loss", self.loss),
            ("delay", self.delay),
            ("queue", self.queue),
            ("priority", self.priority),
        ] {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Config(format!("rank weight {name} must be finite and >= 0, got {w}")));
            }
        }
        if self.sum() <= 0.0 {
            return Err(Error::Config("rank weights must not all be zero".into()));
        }
        Ok(())
    }
}

/// Normalized metric values for one bearer, each `measured / constraint`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RankInputs {
    /// Estimated achievable rate over the past average served rate.
    pub throughput: f64,
    /// Observed loss rate over the class loss threshold.
    pub loss: f64,
    /// Head-of-line delay over the class delay budget.
    pub delay: f64,
    /// Queue occupancy over buffer capacity.
    pub queue: f64,
    /// Class urgency, `(10 - priority) / 9`.
    pub priority: f64,
}

/// One weighted, squashed metric: `weight * tanh(value)`.
///
/// Both arguments must be finite and non-negative; metric values are ratios
/// of non-negative quantities, so a negative here means a caller bug.
pub fn rank_component(value: f64, weight: f64) -> Result<f64> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::Contract(format!("metric value must be finite and >= 0, got {value}")));
    }
    if !weight.is_finite() || weight < 0.0 {
        return Err(Error::Contract(format!("metric weight must be finite and >= 0, got {weight}")));
    }
    Ok(weight * value.tanh())
}

/// Normalize a measured quantity against its constraint.
pub fn normalize_metric(measured: f64, constraint: f64) -> Result<f64> {
    if !(constraint > 0.0) || !constraint.is_finite() {
        return Err(Error::Contract(format!("metric constraint must be positive, got {constraint}")));
    }
    if !measured.is_finite() || measured < 0.0 {
        return Err(Error::Contract(format!("measured value must be finite and >= 0, got {measured}")));
    }
    Ok(measured / constraint)
}

/// Throughput metric: estimated wideband rate over past average served rate.
///
/// The past average is kept above a configured floor by its update rule, so
/// a zero here is a caller bug, not a data condition.
pub fn throughput_metric(wideband_estimated_bps: f64, past_average_bps: f64) -> Result<f64> {
    normalize_metric(wideband_estimated_bps, past_average_bps)
}

/// Class urgency on a 0-1 scale: priority 1 maps to 1.0, priority 9 to 1/9.
pub fn priority_metric(priority: u8) -> Result<f64> {
    if !(1..=9).contains(&priority) {
        return Err(Error::Contract(format!("priority {priority} out of range 1..=9")));
    }
    Ok(f64::from(10 - priority) / 9.0)
}

/// Combined rank: the sum of the five weighted, squashed metrics.
pub fn overall_rank(inputs: &RankInputs, weights: &RankWeights) -> Result<f64> {
    Ok(rank_component(inputs.throughput, weights.throughput)?
        + rank_component(inputs.loss, weights.loss)?
        + rank_component(inputs.delay, weights.delay)?
        + rank_component(inputs.queue, weights.queue)?
        + rank_component(inputs.priority, weights.priority)?)
}

/// Exponentially weighted running average of served throughput, floored.
///
/// `new_avg = (1 - alpha) * prev + alpha * (served_bits / epoch_s)`, then
/// clamped up to `floor_bps` so the throughput metric's denominator never
/// collapses to zero for an idle bearer.
pub fn update_past_average_throughput(
    prev_avg_bps: f64,
    served_bits: f64,
    epoch_s: f64,
    alpha: f64,
    floor_bps: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("EWMA smoothing factor must lie in (0, 1), got {alpha}")));
    }
    if !(epoch_s > 0.0) {
        return Err(Error::Config(format!("epoch duration must be positive, got {epoch_s}")));
    }
    if served_bits < 0.0 || prev_avg_bps < 0.0 {
        return Err(Error::Contract("served bits and previous average must be >= 0".into()));
    }
    let instant_bps = served_bits / epoch_s;
    Ok(((1.0 - alpha) * prev_avg_bps + alpha * instant_bps).max(floor_bps))
}
