//! Simple cost-greedy policies used as adversary targets.

use super::{Scheduler, SchedulerError};
use crate::model::{ProcId, TaskId, TaskSpec};

/// Oldest task among those of the largest pending cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LargestCostFirst;

/// Oldest task among those of the smallest pending cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SmallestCostFirst;

impl Scheduler for LargestCostFirst {
    type Memory = ();

    fn name(&self) -> &'static str {
        "largest-first"
    }

    fn select(&self, pending: &[TaskSpec], _proc: ProcId, _memory: &mut ()) -> Result<TaskId, SchedulerError> {
        pending
            .iter()
            .min_by_key(|t| (std::cmp::Reverse(t.cost), t.arrival, t.id))
            .map(|t| t.id)
            .ok_or(SchedulerError::EmptyPending)
    }
}

impl Scheduler for SmallestCostFirst {
    type Memory = ();

    fn name(&self) -> &'static str {
        "smallest-first"
    }

    fn select(&self, pending: &[TaskSpec], _proc: ProcId, _memory: &mut ()) -> Result<TaskId, SchedulerError> {
        pending
            .iter()
            .min_by_key(|t| (t.cost, t.arrival, t.id))
            .map(|t| t.id)
            .ok_or(SchedulerError::EmptyPending)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Rational;

    #[test]
    fn greedy_choices() {
        let pending = vec![
            TaskSpec::new(1, Rational::ZERO, 1),
            TaskSpec::new(2, Rational::ZERO, 3),
            TaskSpec::new(3, Rational::ONE, 3),
        ];
        assert_eq!(LargestCostFirst.select(&pending, ProcId(1), &mut ()).unwrap(), TaskId(2));
        assert_eq!(SmallestCostFirst.select(&pending, ProcId(1), &mut ()).unwrap(), TaskId(1));
        assert_eq!(LargestCostFirst.select(&[], ProcId(1), &mut ()), Err(SchedulerError::EmptyPending));
    }
}
