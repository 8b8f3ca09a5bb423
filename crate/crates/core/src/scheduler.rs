//! Resource allocation over one epoch: fractional-knapsack schedulers.
//!
//! Candidates are bearers with a rank (value) and a resource demand in
//! RB-subframe units (size). The epoch budget is the knapsack capacity.
//! Three policies share the same fill loop and differ only in ordering:
//!
//! * greedy: by rank/size ratio, descending — optimal for the fractional
//!   relaxation;
//! * rank-only: by rank, descending — ignores cost;
//! * priority-only: by QCI priority, ascending — ignores measured QoS.
//!
//! [`oracle_optimal_value`] independently computes the true LP optimum by
//! enumerating the polytope's vertices, for cross-checking the greedy.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::BearerId;

/// One bearer's demand for the epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateItem {
    pub bearer_id: BearerId,
    /// Value of serving this bearer's backlog in full. Non-negative.
    pub rank: f64,
    /// RB-subframe units needed to serve the backlog in full. At least 1.
    pub size_rbs: u32,
}

/// Result of one epoch's allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDecision {
    /// Fraction of each candidate's demand granted, in `[0, 1]`. Every
    /// candidate appears, including those granted nothing.
    pub fractions: BTreeMap<BearerId, f64>,
    /// Granted RB-subframe units per candidate, `fraction * size`.
    pub granted_rbs: BTreeMap<BearerId, f64>,
    /// Objective value, `sum(fraction * rank)`.
    pub total_value: f64,
    /// All candidates in the order the policy considered them. Callers can
    /// replay this order to hand leftover capacity to the same bearers.
    pub order: Vec<BearerId>,
}

fn validate(candidates: &[CandidateItem]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for c in candidates {
        if !c.rank.is_finite() || c.rank < 0.0 {
            return Err(Error::InvalidInput(format!(
                "candidate {} has invalid rank {}",
                c.bearer_id.0, c.rank
            )));
        }
        if c.size_rbs == 0 {
            return Err(Error::InvalidInput(format!(
                "candidate {} has zero size; demandless bearers are not candidates",
                c.bearer_id.0
            )));
        }
        if !seen.insert(c.bearer_id) {
            return Err(Error::InvalidInput(format!("duplicate candidate bearer {}", c.bearer_id.0)));
        }
    }
    Ok(())
}

/// Fill the budget over `ordered`: whole grants while items fit, then one
/// fractional grant that exactly exhausts the remainder, then zeros.
fn fill(ordered: &[CandidateItem], budget_rbs: u32) -> AllocationDecision {
    let mut fractions = BTreeMap::new();
    let mut granted_rbs = BTreeMap::new();
    let mut total_value = 0.0;
    let mut remaining = f64::from(budget_rbs);
    let mut order = Vec::with_capacity(ordered.len());

    for c in ordered {
        order.push(c.bearer_id);
        let size = f64::from(c.size_rbs);
        let (x, grant) = if remaining <= 0.0 {
            (0.0, 0.0)
        } else if size <= remaining {
            remaining -= size;
            (1.0, size)
        } else {
            // First item that does not fit takes everything left.
            let grant = remaining;
            remaining = 0.0;
            (grant / size, grant)
        };
        total_value += x * c.rank;
        fractions.insert(c.bearer_id, x);
        granted_rbs.insert(c.bearer_id, grant);
    }

    AllocationDecision { fractions, granted_rbs, total_value, order }
}

/// Ratio-ordered greedy: optimal for the fractional knapsack.
///
/// Ties on ratio go to the smaller item (same value sooner, more left over),
/// then to the lower bearer id for determinism.
pub fn greedy_knapsack(candidates: &[CandidateItem], budget_rbs: u32) -> Result<AllocationDecision> {
    validate(candidates)?;
    let mut ordered = candidates.to_vec();
    ordered.sort_by(|a, b| {
        let ra = a.rank / f64::from(a.size_rbs);
        let rb = b.rank / f64::from(b.size_rbs);
        rb.partial_cmp(&ra)
            .expect("ranks validated finite")
            .then(a.size_rbs.cmp(&b.size_rbs))
            .then(a.bearer_id.cmp(&b.bearer_id))
    });
    Ok(fill(&ordered, budget_rbs))
}

/// Baseline that orders by rank alone, ignoring the resource cost.
pub fn rank_only_knapsack(candidates: &[CandidateItem], budget_rbs: u32) -> Result<AllocationDecision> {
    validate(candidates)?;
    let mut ordered = candidates.to_vec();
    ordered.sort_by(|a, b| {
        b.rank
            .partial_cmp(&a.rank)
            .expect("ranks validated finite")
            .then(a.size_rbs.cmp(&b.size_rbs))
            .then(a.bearer_id.cmp(&b.bearer_id))
    });
    Ok(fill(&ordered, budget_rbs))
}

/// Baseline that orders by QCI priority alone (1 = most urgent), ignoring
/// measured QoS entirely. Candidates are paired with their class priority.
pub fn priority_only(candidates: &[(CandidateItem, u8)], budget_rbs: u32) -> Result<AllocationDecision> {
    let items: Vec<CandidateItem> = candidates.iter().map(|(c, _)| *c).collect();
    validate(&items)?;
    for (c, p) in candidates {
        if !(1..=9).contains(p) {
            return Err(Error::InvalidInput(format!(
                "candidate {} has priority {p} out of range 1..=9",
                c.bearer_id.0
            )));
        }
    }
    let mut ordered = candidates.to_vec();
    ordered.sort_by(|(a, pa), (b, pb)| {
        pa.cmp(pb).then(a.size_rbs.cmp(&b.size_rbs)).then(a.bearer_id.cmp(&b.bearer_id))
    });
    let ordered: Vec<CandidateItem> = ordered.into_iter().map(|(c, _)| c).collect();
    Ok(fill(&ordered, budget_rbs))
}

/// True optimum of the fractional relaxation, by vertex enumeration.
///
/// Every vertex of `{ sum(x_i s_i) <= B, 0 <= x_i <= 1 }` has at most one
/// fractional coordinate, so the optimum is found by trying every subset
/// taken whole plus at most one partial item filling the remainder.
/// Exponential in `n`; capped at 20 items.
pub fn oracle_optimal_value(candidates: &[CandidateItem], budget_rbs: u32) -> Result<f64> {
    validate(candidates)?;
    let n = candidates.len();
    if n > 20 {
        return Err(Error::InvalidInput(format!(
            "oracle enumerates 2^n subsets; n = {n} exceeds the cap of 20"
        )));
    }
    let budget = f64::from(budget_rbs);
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << n) {
        let mut used = 0.0;
        let mut value = 0.0;
        for (i, c) in candidates.iter().enumerate() {
            if mask & (1 << i) != 0 {
                used += f64::from(c.size_rbs);
                value += c.rank;
            }
        }
        if used > budget {
            continue;
        }
        best = best.max(value);
        let remaining = budget - used;
        if remaining > 0.0 {
            for (i, c) in candidates.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    let frac = (remaining / f64::from(c.size_rbs)).min(1.0);
                    best = best.max(value + frac * c.rank);
                }
            }
        }
    }
    Ok(best)
}
