//! Time-domain downlink scheduling for an LTE-like cell.
//!
//! The crate models one cell whose radio capacity is a fixed budget of
//! resource-block units per scheduling epoch. Each epoch, bearers with
//! backlog become knapsack items — value from a QoS-aware ranking function,
//! weight from the resource blocks their eligible bits require at the
//! current channel quality — and an allocation policy divides the budget
//! among them. A discrete-event simulator drives the loop with voice and
//! self-similar data traffic, per-class rate caps, finite buffers, and a
//! normal/overload duty cycle, producing per-class throughput, loss,
//! latency, and fairness reports.
//!
//! Modules:
//! - [`qos`]: bearer classes, rate policies, per-epoch rate caps.
//! - [`ranking`]: the bounded per-bearer urgency score.
//! - [`scheduler`]: greedy fractional-knapsack allocation and two
//!   reference policies, plus an exhaustive optimum for cross-checking.
//! - [`channel`]: CQI random walks and the MCS capacity table.
//! - [`traffic`]: voice and heavy-tailed data sources, the load schedule,
//!   and the class mix.
//! - [`engine`]: the epoch loop.
//! - [`metrics`]: fairness, CDFs, Hurst estimators, and report files.
//! - [`config`]: the TOML experiment configuration.

pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod qos;
pub mod ranking;
pub mod rng;
pub mod scheduler;
pub mod traffic;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

/// Identifies one bearer (and, one-to-one in this model, one user).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct BearerId(pub u32);

impl std::fmt::Display for BearerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
