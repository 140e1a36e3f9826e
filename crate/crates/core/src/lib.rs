//! Aging and de-stress simulation for spiking neuron circuits.
//!
//! The library models how spike activity wears out the CMOS devices inside a
//! neuron circuit through NBTI and TDDB, applies a stop-and-go de-stress
//! policy that periodically drives devices sub-threshold, and quantifies the
//! resulting reliability/performance trade-off (aging totals, de-stress
//! overhead, inter-spike-interval distortion and spike disorder).
//!
//! Modules map onto the pipeline stages:
//! - [`aging`]: closed-form MTTF models and damage accumulation
//! - [`trace`]: spike trains, CSV ingestion, synthetic workloads, pulses
//! - [`schedule`]: de-stress policies, spike delay semantics, composition
//! - [`metrics`]: ISI, distortion, disorder, normalization
//! - [`harness`]: end-to-end runs and tDSI/temperature sweeps
//! - [`oracle`]: reference implementations for the test suites only

pub mod aging;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod schedule;
pub mod trace;

pub use aging::{
    aging_trajectory, final_aging, mttf_nbti, mttf_tddb, AgingRates, AgingState, DeviceParams,
    VoltageLevel, VoltagePhase, BOLTZMANN_EV_PER_K,
};
pub use error::{Result, SimError};
pub use harness::{
    run, run_with_trains, sweep, NeuronOutcome, RunConfig, SimReport, SweepConfig, WorkloadSource,
};
pub use metrics::{
    disorder, isi_distortion, mean_isi, normalize_aging, rate_profile, AgingTotals, MetricsReport,
    RateProfile,
};
pub use schedule::{
    compose_phases, compose_scheduled, periodic_windows, schedule, AgingFeed, DestressPolicy,
    DeviceAgingFeed, PolicyMode, ScheduledTrace, EMIT_EPS_MS,
};
pub use trace::{
    generate_poisson, load_trace, save_trace, trace_digest, PulseModel, SpikeTrain, WorkloadClass,
    WorkloadSpec,
};
