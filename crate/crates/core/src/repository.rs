//! The shared repository: pending tasks with inject, get and inform.
//!
//! At a single instant the repository processes all informs first, then all
//! injects, then all gets. A get on an empty repository blocks; blocked
//! processors are released at the next instant with an injection and see the
//! pending set as it stands after that instant's injects.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{ProcId, TaskId, TaskSpec};
use crate::time::TimePoint;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepositoryError {
    #[error("inform of task {task} by processor {proc}, which was never injected")]
    UnknownTask { proc: ProcId, task: TaskId },
    #[error("task id {0} injected twice")]
    DuplicateInject(TaskId),
    #[error("processor {0} issued a get while already blocked")]
    AlreadyBlocked(ProcId),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepositoryState {
    pending: Vec<TaskSpec>,
    injected: BTreeSet<TaskId>,
    informed: BTreeSet<TaskId>,
    blocked: BTreeSet<ProcId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InformOutcome {
    pub proc: ProcId,
    pub task: TaskId,
    /// The task had already been removed by an earlier inform.
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GetResult {
    Tasks(Vec<TaskSpec>),
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstantOutcome {
    pub informs: Vec<InformOutcome>,
    /// Results of this instant's gets, in the order they were issued.
    pub gets: Vec<(ProcId, GetResult)>,
    /// Previously blocked processors released by this instant's injects.
    pub released: Vec<(ProcId, Vec<TaskSpec>)>,
}

impl RepositoryState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pending tasks in injection order.
    pub fn pending(&self) -> &[TaskSpec] {
        &self.pending
    }

    pub fn pending_count(&self) -> u64 {
        self.pending.len() as u64
    }

    pub fn pending_cost(&self) -> u64 {
        self.pending.iter().map(|t| t.cost).sum()
    }

    pub fn is_informed(&self, id: TaskId) -> bool {
        self.informed.contains(&id)
    }

    pub fn blocked(&self) -> &BTreeSet<ProcId> {
        &self.blocked
    }

    /// A crashed processor stops waiting.
    pub fn unblock(&mut self, proc: ProcId) {
        self.blocked.remove(&proc);
    }

    pub fn apply_instant(
        &mut self,
        _t: TimePoint,
        informs: &[(ProcId, TaskId)],
        injects: &[TaskSpec],
        gets: &[ProcId],
    ) -> Result<InstantOutcome, RepositoryError> {
        let mut outcome = InstantOutcome::default();
        for &(proc, task) in informs {
            if !self.injected.contains(&task) {
                return Err(RepositoryError::UnknownTask { proc, task });
            }
            let duplicate = !self.informed.insert(task);
            if !duplicate {
                self.pending.retain(|t| t.id != task);
            }
            outcome.informs.push(InformOutcome { proc, task, duplicate });
        }

        for task in injects {
            if !self.injected.insert(task.id) {
                return Err(RepositoryError::DuplicateInject(task.id));
            }
            self.pending.push(*task);
        }

        if !injects.is_empty() && !self.blocked.is_empty() {
            let snapshot = self.pending.clone();
            outcome.released =
                std::mem::take(&mut self.blocked).into_iter().map(|p| (p, snapshot.clone())).collect();
        }

        for &proc in gets {
            if self.blocked.contains(&proc) {
                return Err(RepositoryError::AlreadyBlocked(proc));
            }
            if self.pending.is_empty() {
                self.blocked.insert(proc);
                outcome.gets.push((proc, GetResult::Blocked));
            } else {
                outcome.gets.push((proc, GetResult::Tasks(self.pending.clone())));
            }
        }
        Ok(outcome)
    }
}
