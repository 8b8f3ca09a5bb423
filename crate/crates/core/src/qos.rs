//! QoS class table and rate-policy constraints.
//!
//! Houses the nine standardized QCI classes (priority, packet delay budget,
//! packet error loss rate, GBR/Non-GBR split) and the per-bearer rate policy
//! (GBR/MBR for guaranteed bearers, per-user and per-APN AMBR for the rest)
//! that bound what any scheduler may grant in an epoch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bearer rate-policy category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BearerType {
    /// Guaranteed bit rate bearer (QCI 1-4). Carries GBR and MBR bounds.
    Gbr,
    /// Non-guaranteed bearer (QCI 5-9). Bounded by the user/APN AMBR.
    NonGbr,
}

/// One row of the standardized QCI class table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QciClass {
    /// Class label, 1..=9.
    pub label: u8,
    pub bearer_type: BearerType,
    /// Scheduling priority, 1..=9 (1 = highest).
    pub priority: u8,
    /// Packet delay budget in milliseconds.
    pub delay_budget_ms: u32,
    /// Packet error loss rate threshold.
    pub loss_rate_threshold: f64,
    pub example_service: String,
}

fn row(
    label: u8,
    bearer_type: BearerType,
    priority: u8,
    delay_budget_ms: u32,
    loss_rate_threshold: f64,
    example_service: &str,
) -> QciClass {
    QciClass {
        label,
        bearer_type,
        priority,
        delay_budget_ms,
        loss_rate_threshold,
        example_service: example_service.to_owned(),
    }
}

/// The nine-row QCI class table, indexable by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QciTable {
    classes: Vec<QciClass>,
}

impl QciTable {
    /// The standardized table.
    pub fn standard() -> Self {
        use BearerType::*;
        QciTable {
            classes: vec![
                row(1, Gbr, 2, 100, 1e-2, "Conversational Voice"),
                row(2, Gbr, 4, 150, 1e-3, "Conversational Video (Live Streaming)"),
                row(3, Gbr, 3, 50, 1e-3, "Real Time Gaming"),
                row(4, Gbr, 5, 300, 1e-6, "Non-Conversational Video (Buffered Streaming)"),
                row(5, NonGbr, 1, 100, 1e-6, "IMS Signalling"),
                row(6, NonGbr, 6, 300, 1e-6, "Video (Buffered Streaming), TCP-based"),
                row(7, NonGbr, 7, 100, 1e-3, "Voice, Video (Live Streaming), Interactive Gaming"),
                row(8, NonGbr, 8, 300, 1e-6, "Video (Buffered Streaming), TCP-based"),
                row(9, NonGbr, 9, 300, 1e-6, "Video (Buffered Streaming), TCP-based"),
            ],
        }
    }

    /// Build a table from explicit rows, enforcing the structural invariants:
    /// exactly nine rows, labels 1..=9 each once, labels 1-4 GBR and 5-9
    /// Non-GBR, priorities in 1..=9, positive delay budgets, loss thresholds
    /// in (0, 1).
    pub fn from_rows(classes: Vec<QciClass>) -> Result<Self> {
        if classes.len() != 9 {
            return Err(Error::Config(format!(
                "QCI table must have exactly 9 rows, got {}",
                classes.len()
            )));
        }
        let mut seen = [false; 10];
        for c in &classes {
            if !(1..=9).contains(&c.label) {
                return Err(Error::Config(format!("QCI label {} out of range 1..=9", c.label)));
            }
            if seen[c.label as usize] {
                return Err(Error::Config(format!("duplicate QCI label {}", c.label)));
            }
            seen[c.label as usize] = true;
            let expected = if c.label <= 4 { BearerType::Gbr } else { BearerType::NonGbr };
            if c.bearer_type != expected {
                return Err(Error::Config(format!(
                    "QCI {} must be {:?}; labels 1-4 are GBR, 5-9 are Non-GBR",
                    c.label, expected
                )));
            }
            if !(1..=9).contains(&c.priority) {
                return Err(Error::Config(format!("QCI {} priority out of range 1..=9", c.label)));
            }
            if c.delay_budget_ms == 0 {
                return Err(Error::Config(format!("QCI {} delay budget must be positive", c.label)));
            }
            if !(c.loss_rate_threshold > 0.0 && c.loss_rate_threshold < 1.0) {
                return Err(Error::Config(format!(
                    "QCI {} loss threshold must lie in (0, 1)",
                    c.label
                )));
            }
        }
        let mut classes = classes;
        classes.sort_by_key(|c| c.label);
        Ok(QciTable { classes })
    }

    /// Look up a class by label.
    pub fn lookup(&self, label: u8) -> Result<&QciClass> {
        if !(1..=9).contains(&label) {
            return Err(Error::InvalidInput(format!("QCI label {label} out of range 1..=9")));
        }
        Ok(&self.classes[label as usize - 1])
    }

    pub fn classes(&self) -> &[QciClass] {
        &self.classes
    }
}

/// Look up a label in the standardized table.
pub fn qci_lookup(label: u8) -> Result<QciClass> {
    QciTable::standard().lookup(label).cloned()
}

/// GBR/MBR bounds for a guaranteed bearer, in bits per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbrRate {
    pub gbr_bps: f64,
    pub mbr_bps: f64,
}

/// Rate-policy bounds for one bearer.
///
/// `gbr` is present exactly for GBR bearers. The AMBR fields bound the
/// aggregate Non-GBR rate of the owning user and of its APN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePolicy {
    pub gbr: Option<GbrRate>,
    pub ambr_per_user_bps: f64,
    pub ambr_per_apn_bps: f64,
}

impl RatePolicy {
    /// Policy for a GBR bearer. Requires `mbr_bps >= gbr_bps`; equality is
    /// the release-8 special case.
    pub fn gbr(gbr_bps: f64, mbr_bps: f64, ambr_per_user_bps: f64, ambr_per_apn_bps: f64) -> Result<Self> {
        if gbr_bps < 0.0 || mbr_bps < gbr_bps {
            return Err(Error::Config(format!(
                "rate policy requires 0 <= GBR <= MBR, got gbr={gbr_bps} mbr={mbr_bps}"
            )));
        }
        if ambr_per_user_bps <= 0.0 || ambr_per_apn_bps <= 0.0 {
            return Err(Error::Config("AMBR rates must be positive".into()));
        }
        Ok(RatePolicy {
            gbr: Some(GbrRate { gbr_bps, mbr_bps }),
            ambr_per_user_bps,
            ambr_per_apn_bps,
        })
    }

    /// Policy for a Non-GBR bearer.
    pub fn non_gbr(ambr_per_user_bps: f64, ambr_per_apn_bps: f64) -> Result<Self> {
        if ambr_per_user_bps <= 0.0 || ambr_per_apn_bps <= 0.0 {
            return Err(Error::Config("AMBR rates must be positive".into()));
        }
        Ok(RatePolicy { gbr: None, ambr_per_user_bps, ambr_per_apn_bps })
    }
}

/// Maximum additional bits grantable to a GBR bearer this epoch so that its
/// running average scheduled rate stays at or below MBR.
///
/// `already_scheduled_bps` is the bearer's windowed average scheduled rate.
/// Because the average is an EWMA with smoothing constant in (0, 1), granting
/// at most `(MBR - avg) * epoch` bits keeps the updated average <= MBR.
pub fn gbr_cap_bits(policy: &RatePolicy, epoch_s: f64, already_scheduled_bps: f64) -> Result<f64> {
    let gbr = policy.gbr.ok_or_else(|| {
        Error::Contract("gbr_cap_bits called on a Non-GBR rate policy".into())
    })?;
    Ok(((gbr.mbr_bps - already_scheduled_bps) * epoch_s).max(0.0))
}

/// Additional bits grantable to a user's Non-GBR bearers this epoch so that
/// the aggregate rate stays below `min(per-user AMBR, per-APN AMBR)`.
///
/// Returns 0 when the aggregate already meets or exceeds the bound.
pub fn ambr_cap_bits(user_aggregate_bps: f64, policy: &RatePolicy, epoch_s: f64) -> f64 {
    let bound = policy.ambr_per_user_bps.min(policy.ambr_per_apn_bps);
    ((bound - user_aggregate_bps) * epoch_s).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_standard_values() {
        let one = qci_lookup(1).unwrap();
        assert_eq!(one.bearer_type, BearerType::Gbr);
        assert_eq!(one.priority, 2);
        assert_eq!(one.delay_budget_ms, 100);
        assert_eq!(one.loss_rate_threshold, 1e-2);

        let nine = qci_lookup(9).unwrap();
        assert_eq!(nine.bearer_type, BearerType::NonGbr);
        assert_eq!(nine.priority, 9);
        assert_eq!(nine.delay_budget_ms, 300);
        assert_eq!(nine.loss_rate_threshold, 1e-6);

        let three = qci_lookup(3).unwrap();
        assert_eq!(three.bearer_type, BearerType::Gbr);
        assert_eq!(three.priority, 3);
        assert_eq!(three.delay_budget_ms, 50);
        assert_eq!(three.loss_rate_threshold, 1e-3);
    }

    #[test]
    fn table_structure() {
        let t = QciTable::standard();
        assert_eq!(t.classes().len(), 9);
        for (i, c) in t.classes().iter().enumerate() {
            assert_eq!(c.label as usize, i + 1);
            let expected = if c.label <= 4 { BearerType::Gbr } else { BearerType::NonGbr };
            assert_eq!(c.bearer_type, expected);
        }
    }

    #[test]
    fn lookup_is_pure() {
        assert_eq!(qci_lookup(4).unwrap(), qci_lookup(4).unwrap());
    }

    #[test]
    fn lookup_rejects_out_of_range() {
        assert!(qci_lookup(0).is_err());
        assert!(qci_lookup(10).is_err());
    }

    #[test]
    fn from_rows_rejects_swapped_bearer_type() {
        let mut rows = QciTable::standard().classes().to_vec();
        rows[0].bearer_type = BearerType::NonGbr;
        assert!(QciTable::from_rows(rows).is_err());
    }

    #[test]
    fn gbr_cap_at_mbr_is_zero() {
        let p = RatePolicy::gbr(64_000.0, 128_000.0, 2e6, 2e6).unwrap();
        assert_eq!(gbr_cap_bits(&p, 0.010, 128_000.0).unwrap(), 0.0);
    }

    #[test]
    fn gbr_cap_from_idle_is_mbr_times_epoch() {
        // 128000 bps * 0.01 s = 1280 bits, by hand.
        let p = RatePolicy::gbr(64_000.0, 128_000.0, 2e6, 2e6).unwrap();
        assert_eq!(gbr_cap_bits(&p, 0.010, 0.0).unwrap(), 1280.0);
    }

    #[test]
    fn gbr_cap_release8_equal_rates() {
        let p = RatePolicy::gbr(64_000.0, 64_000.0, 2e6, 2e6).unwrap();
        assert_eq!(gbr_cap_bits(&p, 0.010, 64_000.0).unwrap(), 0.0);
    }

    #[test]
    fn gbr_cap_rejects_non_gbr() {
        let p = RatePolicy::non_gbr(2e6, 2e6).unwrap();
        assert!(matches!(gbr_cap_bits(&p, 0.010, 0.0), Err(Error::Contract(_))));
    }

    #[test]
    fn mbr_below_gbr_rejected() {
        assert!(RatePolicy::gbr(128_000.0, 64_000.0, 2e6, 2e6).is_err());
    }

    #[test]
    fn ambr_cap_examples() {
        let p = RatePolicy::non_gbr(1e6, 2e6).unwrap();
        // min(1e6, 2e6) * 0.01 = 10000 bits, by hand.
        assert_eq!(ambr_cap_bits(0.0, &p, 0.010), 10_000.0);
        // At the bound.
        assert_eq!(ambr_cap_bits(1e6, &p, 0.010), 0.0);
        // APN cap already exceeded: clamp to zero.
        let p = RatePolicy::non_gbr(1e6, 0.4e6).unwrap();
        assert_eq!(ambr_cap_bits(0.5e6, &p, 0.010), 0.0);
    }
}
