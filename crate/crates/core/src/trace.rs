//! Spike-train data model, CSV ingestion, synthetic workload generation and
//! conversion of trains into voltage-phase sequences.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::aging::VoltagePhase;
use crate::error::{Result, SimError};

/// Ordered firing times of one neuron over an observation window `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub neuron_id: u32,
    times: Vec<f64>,
    horizon_ms: f64,
}

impl SpikeTrain {
    /// Builds a train, enforcing strictly increasing times within `[0, horizon]`.
    pub fn new(neuron_id: u32, times: Vec<f64>, horizon_ms: f64) -> Result<Self> {
        if !(horizon_ms > 0.0) {
            return Err(SimError::Validation(format!(
                "horizon must be > 0, got {horizon_ms} for neuron {neuron_id}"
            )));
        }
        let mut last = f64::NEG_INFINITY;
        for &t in &times {
            if !t.is_finite() || t < 0.0 || t > horizon_ms {
                return Err(SimError::Validation(format!(
                    "spike time {t} outside [0, {horizon_ms}] for neuron {neuron_id}"
                )));
            }
            if t <= last {
                return Err(SimError::Validation(format!(
                    "spike times must be strictly increasing for neuron {neuron_id}: {last} then {t}"
                )));
            }
            last = t;
        }
        Ok(SpikeTrain { neuron_id, times, horizon_ms })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon_ms(&self) -> f64 {
        self.horizon_ms
    }

    pub fn spike_count(&self) -> usize {
        self.times.len()
    }

    /// Expands each spike into a Read pulse of `pulse.pulse_width_ms` and fills
    /// the gaps with Idle phases. Overlapping or touching pulses coalesce into
    /// one longer Read phase (the device cannot be doubly stressed). Pulses are
    /// truncated at the horizon so the durations sum exactly to it.
    pub fn to_voltage_phases(&self, pulse: &PulseModel) -> Vec<VoltagePhase> {
        let read = read_intervals(&self.times, pulse.pulse_width_ms, self.horizon_ms);
        let mut phases = Vec::with_capacity(2 * read.len() + 1);
        let mut cursor = 0.0;
        for (start, end) in read {
            if start > cursor {
                phases.push(VoltagePhase::idle(start - cursor));
            }
            phases.push(VoltagePhase::read(end - start));
            cursor = end;
        }
        if cursor < self.horizon_ms {
            phases.push(VoltagePhase::idle(self.horizon_ms - cursor));
        }
        phases
    }
}

/// Union of per-spike pulse intervals `[t, t+width]`, clipped to `[0, horizon]`.
/// Zero-length results (spikes exactly at the horizon) are dropped.
pub fn read_intervals(times: &[f64], width_ms: f64, horizon_ms: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &t in times {
        let start = t.min(horizon_ms);
        let end = (t + width_ms).min(horizon_ms);
        if end <= start {
            continue;
        }
        match out.last_mut() {
            Some(last) if start <= last.1 => last.1 = last.1.max(end),
            _ => out.push((start, end)),
        }
    }
    out
}

/// Width of the `v_read` excursion each spike drives, ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseModel {
    pub pulse_width_ms: f64,
}

impl Default for PulseModel {
    fn default() -> Self {
        PulseModel { pulse_width_ms: 0.2 }
    }
}

impl PulseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_width_ms > 0.0) {
            return Err(SimError::Config(format!(
                "pulse width must be > 0, got {}",
                self.pulse_width_ms
            )));
        }
        Ok(())
    }
}

/// Firing-statistics class of a synthetic workload.
///
/// Sparse and Dense are homogeneous Poisson processes at low/high rates,
/// standing in for feed-forward image workloads and recurrent-reservoir
/// workloads respectively. Bursty modulates a Poisson process with a
/// two-state on/off dwell process at the same mean rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WorkloadClass {
    Sparse,
    Dense,
    Bursty,
}

impl WorkloadClass {
    /// Default mean firing rate in spikes/ms. The sparse:dense split is
    /// calibrated so the two classes respond differently to the de-stress
    /// interval sweep (see README).
    pub fn default_rate(&self) -> f64 {
        match self {
            WorkloadClass::Sparse => 0.2,
            WorkloadClass::Dense => 5.0,
            WorkloadClass::Bursty => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WorkloadClass::Sparse => "sparse",
            WorkloadClass::Dense => "dense",
            WorkloadClass::Bursty => "bursty",
        }
    }
}

impl fmt::Display for WorkloadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorkloadClass {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sparse" => Ok(WorkloadClass::Sparse),
            "dense" => Ok(WorkloadClass::Dense),
            "bursty" => Ok(WorkloadClass::Bursty),
            other => Err(SimError::Config(format!(
                "unknown workload class '{other}' (expected sparse|dense|bursty)"
            ))),
        }
    }
}

/// Parameters of a synthetic spike workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub class: WorkloadClass,
    /// Mean firing rate, spikes/ms.
    pub rate: f64,
    pub num_neurons: usize,
    pub horizon_ms: f64,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn new(class: WorkloadClass, num_neurons: usize, horizon_ms: f64, seed: u64) -> Self {
        WorkloadSpec { class, rate: class.default_rate(), num_neurons, horizon_ms, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0) {
            return Err(SimError::Config(format!("workload rate must be > 0, got {}", self.rate)));
        }
        if self.num_neurons == 0 {
            return Err(SimError::Config("workload needs at least one neuron".into()));
        }
        if !(self.horizon_ms > 0.0) {
            return Err(SimError::Config(format!(
                "workload horizon must be > 0, got {}",
                self.horizon_ms
            )));
        }
        Ok(())
    }
}

// Bursty dwell structure: 20% duty at 5x rate during on-bursts.
const BURST_DUTY: f64 = 0.2;
const BURST_MEAN_ON_MS: f64 = 20.0;

/// Generates one train per neuron, deterministically for a fixed seed.
///
/// Sparse/Dense draw a homogeneous Poisson process at `spec.rate`; Bursty
/// draws a Poisson process at `rate / duty` gated by exponential on/off
/// dwells so the mean rate still matches `spec.rate`.
pub fn generate_poisson(spec: &WorkloadSpec) -> Result<Vec<SpikeTrain>> {
    spec.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut trains = Vec::with_capacity(spec.num_neurons);
    for neuron in 0..spec.num_neurons {
        let child_seed: u64 = master.gen();
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed);
        let times = match spec.class {
            WorkloadClass::Sparse | WorkloadClass::Dense => {
                homogeneous_times(spec.rate, spec.horizon_ms, &mut rng)
            }
            WorkloadClass::Bursty => bursty_times(spec.rate, spec.horizon_ms, &mut rng),
        };
        trains.push(SpikeTrain::new(neuron as u32, times, spec.horizon_ms)?);
    }
    Ok(trains)
}

fn homogeneous_times(rate: f64, horizon_ms: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let exp = Exp::new(rate).expect("rate > 0");
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp.sample(rng).max(f64::MIN_POSITIVE);
        if t >= horizon_ms {
            break;
        }
        times.push(t);
    }
    times
}

fn bursty_times(mean_rate: f64, horizon_ms: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let on_rate = mean_rate / BURST_DUTY;
    let mean_off = BURST_MEAN_ON_MS * (1.0 - BURST_DUTY) / BURST_DUTY;
    let dwell_on = Exp::new(1.0 / BURST_MEAN_ON_MS).expect("positive dwell");
    let dwell_off = Exp::new(1.0 / mean_off).expect("positive dwell");
    let exp = Exp::new(on_rate).expect("rate > 0");
    let mut times = Vec::new();
    let mut t = 0.0;
    let mut on = rng.gen_bool(BURST_DUTY);
    while t < horizon_ms {
        let dwell = if on { dwell_on.sample(rng) } else { dwell_off.sample(rng) };
        let end = (t + dwell).min(horizon_ms);
        if on {
            let mut s = t;
            loop {
                s += exp.sample(rng).max(f64::MIN_POSITIVE);
                if s >= end {
                    break;
                }
                times.push(s);
            }
        }
        t = end;
        on = !on;
    }
    times
}

/// Parses a trace CSV (`neuron_id,time_ms` per row, no header) into one train
/// per distinct neuron id, sorted by id.
///
/// Rows need not be globally sorted; per-neuron times are sorted here and
/// exact duplicates are rejected. `horizon_ms` fixes the observation window
/// (spikes beyond it are a validation error); with `None` the window is the
/// maximum timestamp rounded up to a whole millisecond.
pub fn load_trace(path: &Path, horizon_ms: Option<f64>) -> Result<Vec<SpikeTrain>> {
    let text = fs::read_to_string(path)
        .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    let mut by_neuron: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut max_time = 0.0f64;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id_str, time_str) = line.split_once(',').ok_or_else(|| SimError::Parse {
            line: line_no,
            message: format!("expected 'neuron_id,time_ms', got '{line}'"),
        })?;
        let neuron_id: u32 = id_str.trim().parse().map_err(|_| SimError::Parse {
            line: line_no,
            message: format!("invalid neuron id '{}'", id_str.trim()),
        })?;
        let time: f64 = time_str.trim().parse().map_err(|_| SimError::Parse {
            line: line_no,
            message: format!("invalid spike time '{}'", time_str.trim()),
        })?;
        if !time.is_finite() || time < 0.0 {
            return Err(SimError::Parse {
                line: line_no,
                message: format!("spike time must be finite and >= 0, got {time}"),
            });
        }
        max_time = max_time.max(time);
        by_neuron.entry(neuron_id).or_default().push(time);
    }
    if by_neuron.is_empty() {
        return Ok(Vec::new());
    }
    let horizon = match horizon_ms {
        Some(h) => {
            if max_time > h {
                return Err(SimError::Validation(format!(
                    "trace contains spike at {max_time} ms beyond configured horizon {h} ms"
                )));
            }
            h
        }
        None => max_time.ceil().max(1.0),
    };
    let mut trains = Vec::with_capacity(by_neuron.len());
    for (neuron_id, mut times) in by_neuron {
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        for w in times.windows(2) {
            if w[0] == w[1] {
                return Err(SimError::Validation(format!(
                    "duplicate spike time {} for neuron {neuron_id}",
                    w[0]
                )));
            }
        }
        trains.push(SpikeTrain::new(neuron_id, times, horizon)?);
    }
    Ok(trains)
}

/// Writes trains in the trace CSV format, neurons ascending, times sorted.
pub fn save_trace(path: &Path, trains: &[SpikeTrain]) -> Result<()> {
    let mut out = String::new();
    let mut sorted: Vec<&SpikeTrain> = trains.iter().collect();
    sorted.sort_by_key(|t| t.neuron_id);
    for train in sorted {
        for &t in train.times() {
            out.push_str(&format!("{},{}\n", train.neuron_id, t));
        }
    }
    let mut file =
        fs::File::create(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    file.write_all(out.as_bytes())
        .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// SHA-256 over neuron ids and raw time bits; identifies a workload
/// realization in report provenance.
pub fn trace_digest(trains: &[SpikeTrain]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for train in trains {
        hasher.update(train.neuron_id.to_le_bytes());
        hasher.update(train.horizon_ms.to_bits().to_le_bytes());
        for &t in train.times() {
            hasher.update(t.to_bits().to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
