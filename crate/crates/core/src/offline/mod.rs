//! Offline references: the exact optimum, the Partition reduction and the
//! lower-bound adversary.

pub mod adversary;
pub mod opt;
pub mod partition;

pub use adversary::{lower_bound_adversary, phase_log_csv, AdversaryError, AdversaryRun, LemmaChecks, PhaseRecord, Scenario};
pub use opt::{dec_c_sched, dec_t_sched, opt_brute_force, opt_search, Checkpoint, OptBudget, OptError, OptResult};
pub use partition::{has_equal_split, reduce_partition, solve_partition_via_scheduling, PartitionError, ReductionInstance};
