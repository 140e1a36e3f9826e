//! End-to-end runs (trace -> schedule -> phases -> aging -> metrics) and
//! parameter sweeps over the de-stress interval and temperature.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::aging::{AgingRates, AgingState, DeviceParams};
use crate::error::{Result, SimError};
use crate::metrics::{
    self, whole_bins, AgingTotals, MetricsReport,
};
use crate::schedule::{
    compose_scheduled, schedule, DestressPolicy, DeviceAgingFeed, PolicyMode, ScheduledTrace,
};
use crate::trace::{
    generate_poisson, load_trace, trace_digest, PulseModel, SpikeTrain, WorkloadSpec,
};

/// Where a run's spike trains come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WorkloadSource {
    Synthetic(WorkloadSpec),
    TraceFile { path: PathBuf, horizon_ms: Option<f64> },
}

impl WorkloadSource {
    pub fn label(&self) -> String {
        match self {
            WorkloadSource::Synthetic(spec) => spec.class.name().to_string(),
            WorkloadSource::TraceFile { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            WorkloadSource::Synthetic(spec) => spec.seed,
            WorkloadSource::TraceFile { .. } => 0,
        }
    }
}

/// Everything one simulation run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub run_id: String,
    pub workload: WorkloadSource,
    pub device: DeviceParams,
    pub policy: DestressPolicy,
    /// Per-run constant temperature, kelvin.
    pub temperature_k: f64,
    pub pulse: PulseModel,
    /// Bin width for the disorder rate profiles; `None` uses 1 ms.
    pub metrics_bin_width_ms: Option<f64>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_k > 0.0) {
            return Err(SimError::Config(format!(
                "temperature must be > 0 K, got {}",
                self.temperature_k
            )));
        }
        if self.run_id.contains(',') || self.run_id.contains('\n') {
            return Err(SimError::Config(
                "run_id must not contain commas or newlines (it names a CSV field)".into(),
            ));
        }
        self.device.validate()?;
        self.policy.validate()?;
        self.pulse.validate()?;
        if let Some(bw) = self.metrics_bin_width_ms {
            if !(bw > 0.0) {
                return Err(SimError::Config(format!("metrics bin width must be > 0, got {bw}")));
            }
        }
        if let WorkloadSource::Synthetic(spec) = &self.workload {
            spec.validate()?;
        }
        // The per-step recovery invariant: retention stays in [0, 1] for the
        // configured de-stress cycle.
        if self.device.nbti_recovery_rate * self.policy.tdsc_ms > 1.0 {
            return Err(SimError::Config(format!(
                "nbti_recovery_rate * tdsc must be <= 1, got {} * {}",
                self.device.nbti_recovery_rate, self.policy.tdsc_ms
            )));
        }
        Ok(())
    }
}

/// Interval and temperature grids swept against one base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub tdsi_values_ms: Vec<f64>,
    pub temperatures_k: Vec<f64>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.tdsi_values_ms.is_empty() || self.temperatures_k.is_empty() {
            return Err(SimError::Config("sweep grids must be non-empty".into()));
        }
        for &v in &self.tdsi_values_ms {
            if !(v > 0.0) {
                return Err(SimError::Config(format!("sweep tdsi {v} must be > 0")));
            }
        }
        for &k in &self.temperatures_k {
            if !(k > 0.0) {
                return Err(SimError::Config(format!("sweep temperature {k} must be > 0")));
            }
        }
        Ok(())
    }

    /// Baseline cell: smallest tDSI at 300 K when present, else the lowest
    /// temperature in the grid.
    pub fn baseline_cell(&self) -> (f64, f64) {
        let tdsi = self.tdsi_values_ms.iter().copied().fold(f64::INFINITY, f64::min);
        let temp = if self.temperatures_k.iter().any(|&t| t == 300.0) {
            300.0
        } else {
            self.temperatures_k.iter().copied().fold(f64::INFINITY, f64::min)
        };
        (tdsi, temp)
    }
}

/// Outcome of one neuron inside a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuronOutcome {
    pub neuron_id: u32,
    pub spike_count: usize,
    pub delayed_count: usize,
    pub nbti_aging: f64,
    pub tddb_aging: f64,
    pub mean_isi_original_ms: Option<f64>,
    pub mean_isi_adjusted_ms: Option<f64>,
    pub disorder: f64,
    /// Moved spikes as `(original_ms, adjusted_ms)` pairs.
    pub delays: Vec<(f64, f64)>,
    /// This neuron's de-stress windows.
    pub windows: Vec<(f64, f64)>,
    pub stall_fraction: f64,
}

/// Full result of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub run_id: String,
    pub workload: String,
    pub tdsi_ms: f64,
    pub tdsc_ms: f64,
    pub mode: PolicyMode,
    pub temperature_k: f64,
    pub seed: u64,
    pub trace_sha256: String,
    pub code_version: String,
    pub neurons: Vec<NeuronOutcome>,
    pub metrics: MetricsReport,
    /// Aging normalized against a sweep baseline; 1.0 for standalone runs.
    pub nbti_aging_norm: f64,
    pub tddb_aging_norm: f64,
    /// Measured de-stress fraction of the horizon (mean over neurons).
    pub stall_fraction: f64,
}

/// Deterministically runs one configuration.
pub fn run(config: &RunConfig) -> Result<SimReport> {
    config.validate()?;
    let trains = resolve_workload(&config.workload)?;
    run_with_trains(config, &trains)
}

fn resolve_workload(source: &WorkloadSource) -> Result<Vec<SpikeTrain>> {
    match source {
        WorkloadSource::Synthetic(spec) => generate_poisson(spec),
        WorkloadSource::TraceFile { path, horizon_ms } => load_trace(path, *horizon_ms),
    }
}

/// Runs one configuration against already-realized trains (shared across
/// sweep cells so differences are attributable to policy and temperature).
pub fn run_with_trains(config: &RunConfig, trains: &[SpikeTrain]) -> Result<SimReport> {
    config.validate()?;
    let feed = DeviceAgingFeed::new(&config.device, config.temperature_k, &config.pulse);
    let rates = AgingRates::new(&config.device, config.temperature_k);
    let bin_width = config.metrics_bin_width_ms.unwrap_or(1.0);

    let mut neurons = Vec::with_capacity(trains.len());
    for train in trains {
        let sched: ScheduledTrace = schedule(train, &config.policy, Some(&feed))
            .map_err(|e| SimError::Config(format!("run '{}': {e}", config.run_id)))?;
        let phases = compose_scheduled(&sched, &config.pulse);
        let end: AgingState = phases
            .iter()
            .fold(AgingState::new(), |s, p| s.step_with_rates(p, &rates));

        let (isi_orig, isi_adj) = if train.spike_count() >= 2 {
            (
                Some(metrics::mean_isi(&sched.original)?),
                Some(metrics::mean_isi(&sched.adjusted)?),
            )
        } else {
            (None, None)
        };
        let disorder = neuron_disorder(&sched, bin_width)?;
        neurons.push(NeuronOutcome {
            neuron_id: train.neuron_id,
            spike_count: train.spike_count(),
            delayed_count: sched.delayed_count,
            nbti_aging: end.nbti_damage,
            tddb_aging: end.tddb_damage,
            mean_isi_original_ms: isi_orig,
            mean_isi_adjusted_ms: isi_adj,
            disorder,
            delays: sched.delays(),
            windows: sched.destress_events.clone(),
            stall_fraction: sched.stall_fraction(),
        });
    }

    let metrics = aggregate(&neurons, &config.policy);
    let stall = mean(neurons.iter().map(|n| n.stall_fraction));
    Ok(SimReport {
        run_id: config.run_id.clone(),
        workload: config.workload.label(),
        tdsi_ms: config.policy.tdsi_ms,
        tdsc_ms: config.policy.tdsc_ms,
        mode: config.policy.mode,
        temperature_k: config.temperature_k,
        seed: config.workload.seed(),
        trace_sha256: trace_digest(trains),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        neurons,
        metrics,
        nbti_aging_norm: 1.0,
        tddb_aging_norm: 1.0,
        stall_fraction: stall,
    })
}

/// Disorder of one neuron: expected profile from the original train, actual
/// from the adjusted one, both binned over the original observation window.
fn neuron_disorder(sched: &ScheduledTrace, bin_width_ms: f64) -> Result<f64> {
    let horizon = sched.original.horizon_ms();
    if horizon < bin_width_ms {
        return Ok(0.0);
    }
    let n = whole_bins(horizon, bin_width_ms)?;
    let expected = metrics::rate_profile_with_bins(&sched.original, bin_width_ms, n)?;
    let actual = metrics::rate_profile_with_bins(&sched.adjusted, bin_width_ms, n)?;
    metrics::disorder(&expected, &actual)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn aggregate(neurons: &[NeuronOutcome], policy: &DestressPolicy) -> MetricsReport {
    let nbti = mean(neurons.iter().map(|n| n.nbti_aging));
    let tddb = mean(neurons.iter().map(|n| n.tddb_aging));
    let disorder = mean(neurons.iter().map(|n| n.disorder));
    let with_isi: Vec<&NeuronOutcome> =
        neurons.iter().filter(|n| n.mean_isi_original_ms.is_some()).collect();
    let excluded = neurons.len() - with_isi.len();
    let (isi_o, isi_a, dist, dist_rel) = if with_isi.is_empty() {
        (None, None, 0.0, 0.0)
    } else {
        let o = mean(with_isi.iter().map(|n| n.mean_isi_original_ms.unwrap()));
        let a = mean(with_isi.iter().map(|n| n.mean_isi_adjusted_ms.unwrap()));
        let d = mean(
            with_isi
                .iter()
                .map(|n| (n.mean_isi_adjusted_ms.unwrap() - n.mean_isi_original_ms.unwrap()).abs()),
        );
        let dr = mean(with_isi.iter().map(|n| {
            let orig = n.mean_isi_original_ms.unwrap();
            (n.mean_isi_adjusted_ms.unwrap() - orig).abs() / orig
        }));
        (Some(o), Some(a), d, dr)
    };
    MetricsReport {
        mean_isi_original_ms: isi_o,
        mean_isi_adjusted_ms: isi_a,
        isi_distortion_ms: dist,
        isi_distortion_rel: dist_rel,
        disorder,
        nbti_aging_total: nbti,
        tddb_aging_total: tddb,
        overhead: policy.overhead(),
        isi_excluded_neurons: excluded,
    }
}

/// Cross-product sweep over `tdsi x temperature` with a shared workload
/// realization. Reports carry aging normalized against the baseline cell.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SimReport>> {
    config.validate()?;
    let trains = resolve_workload(&config.base.workload)
        .map_err(|e| SimError::Config(format!("sweep workload: {e}")))?;
    let (base_tdsi, base_temp) = config.baseline_cell();

    let mut reports = Vec::new();
    for &tdsi in &config.tdsi_values_ms {
        for &temp in &config.temperatures_k {
            let cell_id = format!(
                "{}-{}-tdsi{}-T{}",
                config.base.run_id,
                config.base.workload.label(),
                fmt_num(tdsi),
                fmt_num(temp)
            );
            let mut cell = config.base.clone();
            cell.run_id = cell_id.clone();
            cell.policy.tdsi_ms = tdsi;
            cell.policy.tdsc_ms = cell.policy.tdsc_ms.min(tdsi);
            cell.temperature_k = temp;
            let report = run_with_trains(&cell, &trains)
                .map_err(|e| SimError::Config(format!("sweep cell '{cell_id}': {e}")))?;
            reports.push(report);
        }
    }

    // Normalize against the baseline cell, per mechanism.
    let mut totals = BTreeMap::new();
    for r in &reports {
        totals.insert(
            r.run_id.clone(),
            AgingTotals { nbti: r.metrics.nbti_aging_total, tddb: r.metrics.tddb_aging_total },
        );
    }
    let baseline_id = reports
        .iter()
        .find(|r| r.tdsi_ms == base_tdsi && r.temperature_k == base_temp)
        .map(|r| r.run_id.clone())
        .ok_or_else(|| SimError::Invariant("sweep baseline cell missing".into()))?;
    let normalized = metrics::normalize_aging(&totals, &baseline_id)?;
    for r in &mut reports {
        let n = &normalized[&r.run_id];
        r.nbti_aging_norm = n.nbti;
        r.tddb_aging_norm = n.tddb;
    }
    Ok(reports)
}

/// Compact float formatting for run ids (no trailing `.0` on integers).
pub fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::WorkloadClass;

    fn base_config(class: WorkloadClass, neurons: usize, horizon: f64) -> RunConfig {
        RunConfig {
            run_id: "test".into(),
            workload: WorkloadSource::Synthetic(WorkloadSpec::new(class, neurons, horizon, 42)),
            device: DeviceParams::default(),
            policy: DestressPolicy::periodic(10.0, 2.0),
            temperature_k: 300.0,
            pulse: PulseModel::default(),
            metrics_bin_width_ms: None,
        }
    }

    #[test]
    fn run_is_deterministic() {
        let cfg = base_config(WorkloadClass::Sparse, 3, 500.0);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn empty_workload_still_ages_tddb_and_reports_overhead() {
        let mut cfg = base_config(WorkloadClass::Sparse, 1, 200.0);
        // A trace file with one empty neuron is awkward to synthesize through
        // the generator, so run directly against an empty train.
        cfg.policy = DestressPolicy::periodic(10.0, 1.0);
        let train = SpikeTrain::new(0, vec![], 200.0).unwrap();
        let report = run_with_trains(&cfg, &[train]).unwrap();
        assert!(report.metrics.tddb_aging_total > 0.0);
        assert_eq!(report.metrics.overhead, 0.1);
        assert_eq!(report.metrics.isi_excluded_neurons, 1);
        assert!(report.metrics.mean_isi_original_ms.is_none());
    }

    #[test]
    fn zero_tdsc_keeps_metrics_identical() {
        let mut cfg = base_config(WorkloadClass::Dense, 2, 300.0);
        cfg.policy = DestressPolicy::periodic(10.0, 0.0);
        let report = run(&cfg).unwrap();
        assert_eq!(report.metrics.isi_distortion_ms, 0.0);
        assert_eq!(report.metrics.disorder, 0.0);
        assert_eq!(report.stall_fraction, 0.0);
    }

    #[test]
    fn sweep_shares_trace_across_cells_and_normalizes() {
        let cfg = SweepConfig {
            base: base_config(WorkloadClass::Sparse, 2, 400.0),
            tdsi_values_ms: vec![10.0, 20.0],
            temperatures_k: vec![300.0, 325.0],
        };
        let reports = sweep(&cfg).unwrap();
        assert_eq!(reports.len(), 4);
        let digest = &reports[0].trace_sha256;
        assert!(reports.iter().all(|r| &r.trace_sha256 == digest));
        let base = reports
            .iter()
            .find(|r| r.tdsi_ms == 10.0 && r.temperature_k == 300.0)
            .unwrap();
        assert_eq!(base.nbti_aging_norm, 1.0);
        assert_eq!(base.tddb_aging_norm, 1.0);
    }

    #[test]
    fn sweep_temperature_ordering() {
        let cfg = SweepConfig {
            base: base_config(WorkloadClass::Dense, 2, 300.0),
            tdsi_values_ms: vec![10.0],
            temperatures_k: vec![300.0, 325.0, 350.0],
        };
        let reports = sweep(&cfg).unwrap();
        let mut nbti: Vec<(f64, f64)> = reports
            .iter()
            .map(|r| (r.temperature_k, r.metrics.nbti_aging_total))
            .collect();
        nbti.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!(nbti[0].1 < nbti[1].1 && nbti[1].1 < nbti[2].1, "{nbti:?}");
        // TDDB has no temperature term.
        let tddb: Vec<f64> = reports.iter().map(|r| r.metrics.tddb_aging_total).collect();
        assert!((tddb[0] - tddb[1]).abs() < 1e-9 * tddb[0]);
    }

    #[test]
    fn overhead_column_matches_ratio_for_every_cell() {
        let cfg = SweepConfig {
            base: base_config(WorkloadClass::Sparse, 1, 300.0),
            tdsi_values_ms: vec![10.0, 25.0, 50.0],
            temperatures_k: vec![300.0],
        };
        for r in sweep(&cfg).unwrap() {
            assert_eq!(r.metrics.overhead, r.tdsc_ms / r.tdsi_ms);
        }
    }

    #[test]
    fn run_id_with_comma_is_rejected() {
        let mut cfg = base_config(WorkloadClass::Sparse, 1, 100.0);
        cfg.run_id = "bad,id".into();
        assert!(matches!(run(&cfg), Err(SimError::Config(_))));
    }

    #[test]
    fn recovery_invariant_checked_against_policy() {
        let mut cfg = base_config(WorkloadClass::Sparse, 1, 100.0);
        cfg.device.nbti_recovery_rate = 0.9;
        cfg.policy = DestressPolicy::periodic(10.0, 2.0);
        assert!(matches!(run(&cfg), Err(SimError::Config(_))));
    }
}
