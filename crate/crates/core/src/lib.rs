//! Simulation and verification of online scheduling on crash-prone
//! processors with speedup.
//!
//! - [`time`]: exact rational instants.
//! - [`model`], [`trace`], [`io`]: patterns, traces and their file formats.
//! - [`repository`], [`engine`]: the shared task repository and the
//!   discrete-event simulator.
//! - [`schedulers`]: LIS, Burst, LAF and the speedup thresholds.
//! - [`offline`]: exact offline optimum, the Partition reduction and the
//!   lower-bound adversary.
//! - [`analysis`]: bound verifiers and the redundancy audit.
//! - [`fuzz`]: seeded random instances for the verifiers.

pub mod analysis;
pub mod engine;
pub mod fuzz;
pub mod io;
pub mod model;
pub mod offline;
pub mod repository;
pub mod schedulers;
pub mod time;
pub mod trace;

pub use model::{AdversarialPattern, AdversaryEvent, EventKind, ProcId, SystemParams, TaskId, TaskSpec};
pub use time::{Rational, TimePoint};
pub use trace::RunTrace;
