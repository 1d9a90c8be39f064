//! Exact event-driven simulation of the queue-and-charging chain, parallel
//! replications, and an exact stationary solver for the truncated chain.

mod engine;
mod oracle;
mod replicate;
mod resample;
mod stats;

pub use engine::{
    rng_for, run, step, ArrivalSnapshot, DelayObservation, Event, EventCounts, EventRecord, SimConfig, SimError,
    SimModel, SimResult, SimState, StopRule, Transition,
};
pub use oracle::{
    stationary_oracle, stationary_oracle_auto, stationary_oracle_with, OracleError, OracleMetrics,
    StationaryDistribution, DEFAULT_TAIL_TOLERANCE, MAX_WORK,
};
pub use replicate::{
    replicate, replicate_runs, Metric, MetricSummary, ReplicateError, ReplicationSummary, TrajectoryBand,
};
pub use resample::{resample, rolling_moments, GridPoint, RollingMoments};
pub use stats::{TimeAverages, TimeIntegrals};
