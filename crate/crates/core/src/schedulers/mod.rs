//! Online scheduling policies.
//!
//! A policy sees an LIS-sorted snapshot of the pending set returned by a get,
//! plus the calling processor's local memory, and names the task to run.
//! Memory is reset whenever the processor restarts.

use std::collections::BTreeSet;
use std::fmt::Debug;

use thiserror::Error;

use crate::model::{ProcId, SystemParams, TaskId, TaskSpec};
use crate::time::Rational;

pub mod burst;
pub mod laf;
pub mod lis;
pub mod reference;
pub mod thresholds;

pub use burst::{burst_select, Burst, BurstMemory};
pub use laf::{laf_select, Laf, LafMemory};
pub use lis::{lis_select, Lis};
pub use reference::{LargestCostFirst, SmallestCostFirst};
pub use thresholds::{gamma, non_competitive_check, sufficient_speedup, SufficientSpeedup};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedulerError {
    #[error("invalid costs lmin={lmin} lmax={lmax}")]
    InvalidCosts { lmin: u64, lmax: u64 },
    #[error("gamma is undefined for lmin={lmin}, lmax={lmax} at speedup {speedup}")]
    UndefinedGamma { lmin: u64, lmax: u64, speedup: Rational },
    #[error("{scheduler} requires beta >= ceil(lmax/lmin) = {required}, got {beta}")]
    BetaTooSmall { scheduler: &'static str, beta: u64, required: u64 },
    #[error("burst requires (γℓmin+ℓmax)/ℓmax ≤ s < ℓmax/ℓmin, i.e. {low} <= s < {high}; got s = {speedup}")]
    BurstSpeedupRange { low: Rational, high: Rational, speedup: Rational },
    #[error("burst handles exactly the two costs lmin={lmin} and lmax={lmax}; task {task} has cost {cost}")]
    NotTwoCost { task: TaskId, cost: u64, lmin: u64, lmax: u64 },
    #[error("{scheduler} handles only the costs lmin={lmin} and lmax={lmax}; pattern contains cost {cost}")]
    UnsupportedCost { scheduler: &'static str, cost: u64, lmin: u64, lmax: u64 },
    #[error("empty pending set offered to a scheduler")]
    EmptyPending,
}

/// A deterministic work-conserving scheduling policy.
pub trait Scheduler: Clone + Debug {
    type Memory: Clone + Default + Debug + PartialEq;

    fn name(&self) -> &'static str;

    /// Rejects parameter combinations the policy does not support.
    fn check(&self, _params: &SystemParams, _costs: &BTreeSet<u64>) -> Result<(), SchedulerError> {
        Ok(())
    }

    /// Chooses a task from `pending`, which is non-empty and sorted by
    /// (arrival, cost, id).
    fn select(
        &self,
        pending: &[TaskSpec],
        proc: ProcId,
        memory: &mut Self::Memory,
    ) -> Result<TaskId, SchedulerError>;

    /// Called after the processor informed the repository of `task`.
    fn on_report(&self, _memory: &mut Self::Memory, _task: &TaskSpec) {}
}

/// Position `(p · stride) mod len` used by every redundancy-avoiding rule.
pub(crate) fn spread_index(proc: ProcId, stride: u64, len: usize) -> usize {
    debug_assert!(len > 0);
    ((u128::from(proc.0) * u128::from(stride)) % len as u128) as usize
}
