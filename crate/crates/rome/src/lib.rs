//! ROME: a trace-driven discrete-event simulator for multi-resource HPC job
//! scheduling.
//!
//! The scheduling pipeline runs at every job submission or job end event:
//!
//! 1. [`policies`] orders the waiting queue by the base policy (FCFS or WFP)
//!    and cuts a window of the first `w` jobs.
//! 2. [`moga`] solves the multi-objective selection problem over the window
//!    (maximize per-resource utilization subject to free capacity) with a
//!    non-dominated-sorting genetic algorithm, backed by an exact
//!    enumeration oracle for small windows.
//! 3. [`decision`] picks one selection from the Pareto front using the
//!    administrator's compute-first trade-off preferences.
//!
//! [`simcore`] drives the event loop and enforces resource conservation,
//! [`trace`] ingests or generates job traces, and [`metrics`] turns
//! simulation results into utilization/wait-time reports.

pub mod cli;
pub mod decision;
pub mod metrics;
pub mod moga;
pub mod policies;
pub mod simcore;
pub mod trace;

pub use decision::{select_solution, PreferenceConfig};
pub use moga::{evolve, exact_front, hypervolume_2d, GaParams, ParetoFront, Selection};
pub use policies::{order_fcfs, order_wfp, take_window, QueuePolicy, Window, WindowConfig};
pub use simcore::{run_simulation, SchedulerConfig, SchedulerKind, SimulationResult};
pub use trace::{generate_synthetic, parse_trace, validate_jobs, GenConfig, Job, SystemSpec};
