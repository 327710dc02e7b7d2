//! Partition as a scheduling decision problem.
//!
//! For a multiset `C` with sum `Σ`, one processor is alive on `[0, Σ/2]`
//! and again on `[Σ/2, Σ]`, every element is a task injected at time zero
//! and the checkpoint is `Σ + 1`. Pending cost zero is reachable iff `C`
//! splits into two halves of equal sum.

use thiserror::Error;

use super::opt::{dec_c_sched, OptError};
use crate::model::{AdversarialPattern, AdversaryEvent, SystemParams};
use crate::time::{Rational, TimePoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("partition needs at least two elements, got {0}")]
    TooFewElements(usize),
    #[error("partition elements must be positive")]
    NonPositive,
    #[error(transparent)]
    Opt(#[from] OptError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionInstance {
    pub pattern: AdversarialPattern,
    pub checkpoint: TimePoint,
    pub omega: u64,
}

pub fn reduce_partition(set: &[u64]) -> Result<ReductionInstance, PartitionError> {
    if set.len() <= 1 {
        return Err(PartitionError::TooFewElements(set.len()));
    }
    if set.contains(&0) {
        return Err(PartitionError::NonPositive);
    }
    let sum: u64 = set.iter().sum();
    let lmin = *set.iter().min().expect("non-empty");
    let lmax = *set.iter().max().expect("non-empty");
    let params = SystemParams::new(1, Rational::ONE, lmin, lmax, lmax.div_ceil(lmin));
    let half = Rational::frac(i128::from(sum), 2);
    let total = Rational::from_u64(sum);
    let mut events: Vec<AdversaryEvent> =
        set.iter().enumerate().map(|(i, &x)| AdversaryEvent::inject(Rational::ZERO, i as u64 + 1, x)).collect();
    events.push(AdversaryEvent::crash(half, 1));
    events.push(AdversaryEvent::restart(half, 1));
    events.push(AdversaryEvent::crash(total, 1));
    Ok(ReductionInstance { pattern: AdversarialPattern::new(params, events), checkpoint: total + Rational::ONE, omega: 0 })
}

pub fn solve_partition_via_scheduling(set: &[u64]) -> Result<bool, PartitionError> {
    let instance = reduce_partition(set)?;
    Ok(dec_c_sched(&instance.pattern, instance.checkpoint, instance.omega)?)
}

/// Direct subset-sum check: does some subset sum to exactly half?
pub fn has_equal_split(set: &[u64]) -> bool {
    let sum: u64 = set.iter().sum();
    if sum % 2 == 1 {
        return false;
    }
    let target = (sum / 2) as usize;
    let mut reachable = vec![false; target + 1];
    reachable[0] = true;
    for &x in set {
        let x = x as usize;
        for s in (x..=target).rev() {
            reachable[s] |= reachable[s - x];
        }
    }
    reachable[target]
}
