//! Stop-and-go de-stress scheduling: periodic (or aging-threshold) de-stress
//! windows, spike delay semantics, overhead accounting and composition of the
//! policy-aware voltage-phase timeline.

use serde::{Deserialize, Serialize};

use crate::aging::{AgingRates, DeviceParams, VoltagePhase};
use crate::error::{Result, SimError};
use crate::trace::{read_intervals, PulseModel, SpikeTrain};

/// Ordering offset applied when several delayed spikes re-emit at the same
/// window end. Keeps adjusted trains strictly increasing.
pub const EMIT_EPS_MS: f64 = 1e-9;

/// When de-stress windows open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyMode {
    /// Windows at `offset + k * tDSI` for `k = 1, 2, ...`.
    Periodic,
    /// A window opens when accumulated NBTI aging would exceed `aging_cap`,
    /// or when `tDSI` elapses since the last window start, whichever is first.
    Threshold,
}

impl std::fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicyMode::Periodic => f.write_str("periodic"),
            PolicyMode::Threshold => f.write_str("threshold"),
        }
    }
}

impl std::str::FromStr for PolicyMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(PolicyMode::Periodic),
            "threshold" => Ok(PolicyMode::Threshold),
            other => Err(SimError::Config(format!(
                "unknown policy mode '{other}' (expected periodic|threshold)"
            ))),
        }
    }
}

/// De-stress policy: interval, cycle time, trigger mode and phase offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DestressPolicy {
    pub mode: PolicyMode,
    /// De-stress interval, ms.
    pub tdsi_ms: f64,
    /// De-stress cycle time (unavailable time per window), ms.
    pub tdsc_ms: f64,
    /// Aging-units cap used by Threshold mode.
    pub aging_cap: Option<f64>,
    /// Shifts every periodic window start; defaults to zero.
    pub phase_offset_ms: f64,
}

impl DestressPolicy {
    pub fn periodic(tdsi_ms: f64, tdsc_ms: f64) -> Self {
        DestressPolicy {
            mode: PolicyMode::Periodic,
            tdsi_ms,
            tdsc_ms,
            aging_cap: None,
            phase_offset_ms: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tdsi_ms > 0.0) {
            return Err(SimError::Config(format!("tdsi_ms must be > 0, got {}", self.tdsi_ms)));
        }
        if !(self.tdsc_ms >= 0.0 && self.tdsc_ms <= self.tdsi_ms) {
            return Err(SimError::Config(format!(
                "tdsc_ms must satisfy 0 <= tdsc <= tdsi, got tdsc={} tdsi={}",
                self.tdsc_ms, self.tdsi_ms
            )));
        }
        if !(self.phase_offset_ms >= 0.0 && self.phase_offset_ms.is_finite()) {
            return Err(SimError::Config(format!(
                "phase_offset_ms must be >= 0, got {}",
                self.phase_offset_ms
            )));
        }
        if self.mode == PolicyMode::Threshold {
            match self.aging_cap {
                Some(cap) if cap > 0.0 => {}
                _ => {
                    return Err(SimError::Config(
                        "threshold mode requires aging_cap > 0".into(),
                    ))
                }
            }
            if self.tdsc_ms == 0.0 {
                return Err(SimError::Config(
                    "threshold mode requires tdsc_ms > 0 (a zero-length cycle cannot relieve the cap)"
                        .into(),
                ));
            }
        }
        Ok(())
    }

    /// De-stress overhead per the throughput-loss ratio `tDSC / tDSI`.
    pub fn overhead(&self) -> f64 {
        self.tdsc_ms / self.tdsi_ms
    }
}

/// A trace with its policy-adjusted counterpart and the windows that caused
/// the adjustment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduledTrace {
    pub original: SpikeTrain,
    pub adjusted: SpikeTrain,
    /// De-stress windows as `(start_ms, end_ms)` pairs, in time order.
    pub destress_events: Vec<(f64, f64)>,
    /// Spikes whose emission time moved.
    pub delayed_count: usize,
}

impl ScheduledTrace {
    /// `(original, adjusted)` pairs for spikes that moved.
    pub fn delays(&self) -> Vec<(f64, f64)> {
        self.original
            .times()
            .iter()
            .zip(self.adjusted.times().iter())
            .filter(|(o, a)| a > o)
            .map(|(&o, &a)| (o, a))
            .collect()
    }

    /// Total de-stress time clipped to the original horizon, divided by it.
    pub fn stall_fraction(&self) -> f64 {
        let horizon = self.original.horizon_ms();
        let total: f64 = self
            .destress_events
            .iter()
            .map(|&(s, e)| (e.min(horizon) - s.min(horizon)).max(0.0))
            .sum();
        total / horizon
    }
}

/// NBTI damage-rate view the threshold trigger integrates against.
///
/// The feed abstracts the device model so the scheduler can co-simulate
/// aging without depending on full device parameters.
pub trait AgingFeed {
    /// Damage rate (aging units/ms) while a spike pulse drives the neuron.
    fn read_rate(&self) -> f64;
    /// Damage rate (aging units/ms) while idle.
    fn idle_rate(&self) -> f64;
    /// Read-pulse width per spike, ms.
    fn pulse_width(&self) -> f64;
    /// Fraction of accumulated damage kept across a de-stress window.
    fn retention(&self, tdsc_ms: f64) -> f64;
}

/// [`AgingFeed`] backed by the closed-form device model.
#[derive(Debug, Clone)]
pub struct DeviceAgingFeed {
    read_rate: f64,
    idle_rate: f64,
    pulse_width: f64,
    recovery_rate: f64,
}

impl DeviceAgingFeed {
    pub fn new(params: &DeviceParams, temp_k: f64, pulse: &PulseModel) -> Self {
        let rates = AgingRates::new(params, temp_k);
        DeviceAgingFeed {
            read_rate: rates.nbti_read,
            idle_rate: rates.nbti_idle,
            pulse_width: pulse.pulse_width_ms,
            recovery_rate: rates.recovery_rate,
        }
    }
}

impl AgingFeed for DeviceAgingFeed {
    fn read_rate(&self) -> f64 {
        self.read_rate
    }

    fn idle_rate(&self) -> f64 {
        self.idle_rate
    }

    fn pulse_width(&self) -> f64 {
        self.pulse_width
    }

    fn retention(&self, tdsc_ms: f64) -> f64 {
        (1.0 - self.recovery_rate * tdsc_ms).max(0.0)
    }
}

/// Periodic window starts: `offset + k * tDSI` for `k >= 1`, while the start
/// lies strictly inside the horizon. Windows keep their full `tDSC` length
/// even when they straddle the horizon.
pub fn periodic_windows(policy: &DestressPolicy, horizon_ms: f64) -> Vec<(f64, f64)> {
    let mut windows = Vec::new();
    let mut k = 1u64;
    loop {
        let start = policy.phase_offset_ms + k as f64 * policy.tdsi_ms;
        if start >= horizon_ms {
            break;
        }
        windows.push((start, start + policy.tdsc_ms));
        k += 1;
    }
    windows
}

/// Applies a de-stress policy to one spike train.
///
/// Every spike whose time falls in a window `[start, end)` re-emits at the
/// window end; simultaneous re-emissions keep their order via `EMIT_EPS_MS`
/// offsets. No spike is dropped and relative order is preserved. Threshold
/// mode requires `aging_feed` and opens a window at the earlier of the exact
/// cap-crossing instant and `tDSI` after the previous window start.
pub fn schedule(
    train: &SpikeTrain,
    policy: &DestressPolicy,
    aging_feed: Option<&dyn AgingFeed>,
) -> Result<ScheduledTrace> {
    policy.validate()?;
    match policy.mode {
        PolicyMode::Periodic => {
            let windows = periodic_windows(policy, train.horizon_ms());
            Ok(apply_windows(train, policy, windows))
        }
        PolicyMode::Threshold => {
            let feed = aging_feed.ok_or_else(|| {
                SimError::Config("threshold mode requires an aging feed".into())
            })?;
            Ok(schedule_threshold(train, policy, feed))
        }
    }
}

/// Emission pass against a precomputed window list (periodic mode).
fn apply_windows(
    train: &SpikeTrain,
    policy: &DestressPolicy,
    windows: Vec<(f64, f64)>,
) -> ScheduledTrace {
    let mut adjusted = Vec::with_capacity(train.spike_count());
    let mut delayed = 0usize;
    let mut prev: Option<f64> = None;
    for &t in train.times() {
        let mut emit = t;
        loop {
            if let Some(end) = containing_window_end(&windows, emit) {
                emit = end;
                continue;
            }
            if let Some(p) = prev {
                if emit <= p {
                    emit = p + EMIT_EPS_MS;
                    continue;
                }
            }
            break;
        }
        if emit > t {
            delayed += 1;
        }
        prev = Some(emit);
        adjusted.push(emit);
    }
    finish_schedule(train, policy, windows, adjusted, delayed)
}

/// End of the nonzero-length window containing `t` (half-open containment).
fn containing_window_end(windows: &[(f64, f64)], t: f64) -> Option<f64> {
    // Windows are sorted by start; find the last window with start <= t.
    let idx = windows.partition_point(|&(s, _)| s <= t);
    if idx == 0 {
        return None;
    }
    let (s, e) = windows[idx - 1];
    if t >= s && t < e {
        Some(e)
    } else {
        None
    }
}

fn finish_schedule(
    train: &SpikeTrain,
    _policy: &DestressPolicy,
    windows: Vec<(f64, f64)>,
    adjusted_times: Vec<f64>,
    delayed: usize,
) -> ScheduledTrace {
    let horizon = adjusted_times
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(train.horizon_ms());
    let adjusted = SpikeTrain::new(train.neuron_id, adjusted_times, horizon)
        .expect("adjusted times are strictly increasing by construction");
    ScheduledTrace {
        original: train.clone(),
        adjusted,
        destress_events: windows,
        delayed_count: delayed,
    }
}

/// Event-driven co-simulation for threshold mode.
///
/// Walks the timeline tracking the NBTI level implied by the feed. Within a
/// constant-rate segment a cap crossing is solved exactly; the window opens
/// there (or at the periodic deadline if that comes first), cutting any
/// in-flight pulse and re-emitting queued spikes at the window end.
fn schedule_threshold(
    train: &SpikeTrain,
    policy: &DestressPolicy,
    feed: &dyn AgingFeed,
) -> ScheduledTrace {
    let cap = policy.aging_cap.expect("validated");
    let horizon = train.horizon_ms();
    let times = train.times();
    let width = feed.pulse_width();

    let mut windows: Vec<(f64, f64)> = Vec::new();
    let mut adjusted: Vec<f64> = Vec::with_capacity(times.len());
    let mut delayed = 0usize;

    let mut t = 0.0f64;
    let mut nbti = 0.0f64;
    let mut pulse_until = f64::NEG_INFINITY;
    let mut deadline = policy.phase_offset_ms + policy.tdsi_ms;
    let mut i = 0usize;
    let mut prev: Option<f64> = None;

    let mut open_window = |at: f64,
                           t: &mut f64,
                           nbti: &mut f64,
                           pulse_until: &mut f64,
                           deadline: &mut f64,
                           prev: &Option<f64>| {
        // Never open behind a just-emitted batch's ordering offsets.
        let start = prev.map_or(at, |p| at.max(p)).max(*t);
        *nbti = (*nbti * feed.retention(policy.tdsc_ms)).max(0.0);
        *pulse_until = pulse_until.min(start);
        windows.push((start, start + policy.tdsc_ms));
        *deadline = start + policy.tdsi_ms;
        *t = start + policy.tdsc_ms;
    };

    loop {
        // A window due exactly now (cap already met, or the timer expired)
        // opens before any spike due at the same instant, so such spikes are
        // delayed, matching the half-open [start, end) rule of periodic mode.
        if t < horizon && (nbti >= cap || deadline <= t) {
            let at = if nbti >= cap { t } else { deadline };
            open_window(at, &mut t, &mut nbti, &mut pulse_until, &mut deadline, &prev);
            continue;
        }

        // Emit every spike due at or before the current time.
        while i < times.len() && times[i] <= t {
            let mut emit = t.max(times[i]);
            if let Some(p) = prev {
                if emit <= p {
                    emit = p + EMIT_EPS_MS;
                }
            }
            if emit > times[i] {
                delayed += 1;
            }
            prev = Some(emit);
            pulse_until = pulse_until.max(emit + width);
            adjusted.push(emit);
            i += 1;
        }
        let done_spiking = i >= times.len();
        if done_spiking && t >= horizon {
            break;
        }

        // Next segment boundary: spike arrival, pulse end, timer deadline or horizon.
        let mut seg_end = f64::INFINITY;
        if !done_spiking {
            seg_end = seg_end.min(times[i]);
        }
        if pulse_until > t {
            seg_end = seg_end.min(pulse_until);
        }
        if t < horizon {
            seg_end = seg_end.min(horizon);
            if deadline < horizon {
                seg_end = seg_end.min(deadline);
            }
        }

        let rate = if t < pulse_until { feed.read_rate() } else { feed.idle_rate() };

        // Windows only open inside the observation horizon.
        if t < horizon {
            let crossing = if rate > 0.0 && nbti + rate * (seg_end - t) >= cap {
                Some(t + (cap - nbti) / rate)
            } else {
                None
            };
            let deadline_hit =
                if deadline <= seg_end && deadline < horizon { Some(deadline) } else { None };
            let open_at = match (crossing, deadline_hit) {
                (Some(c), Some(d)) => Some(c.min(d)),
                (Some(c), None) => Some(c),
                (None, Some(d)) => Some(d),
                (None, None) => None,
            };
            if let Some(raw_start) = open_at {
                if raw_start < horizon {
                    nbti += rate * (raw_start - t).max(0.0);
                    open_window(
                        raw_start,
                        &mut t,
                        &mut nbti,
                        &mut pulse_until,
                        &mut deadline,
                        &prev,
                    );
                    continue;
                }
            }
        }

        nbti += rate * (seg_end - t);
        t = seg_end;
    }

    finish_schedule(train, policy, windows, adjusted, delayed)
}

/// Voltage phases of the policy-adjusted train with de-stress phases inserted.
///
/// Composition precedence inside the original horizon: Destress overrides
/// Read (an in-flight pulse cut by a window does not resume), Read overrides
/// Idle. Durations sum exactly to the original horizon. Periodic only; the
/// threshold trigger needs an aging feed, so feed its [`ScheduledTrace`] to
/// [`compose_scheduled`] instead.
pub fn compose_phases(
    train: &SpikeTrain,
    policy: &DestressPolicy,
    pulse: &PulseModel,
) -> Result<Vec<VoltagePhase>> {
    if policy.mode == PolicyMode::Threshold {
        return Err(SimError::Config(
            "threshold mode requires an aging feed; schedule first and use compose_scheduled"
                .into(),
        ));
    }
    let sched = schedule(train, policy, None)?;
    Ok(compose_scheduled(&sched, pulse))
}

/// Phase composition for an already-scheduled trace (either mode).
pub fn compose_scheduled(sched: &ScheduledTrace, pulse: &PulseModel) -> Vec<VoltagePhase> {
    use crate::aging::VoltageLevel;

    let horizon = sched.original.horizon_ms();
    let destress = clip_merge(&sched.destress_events, horizon);
    let read_raw = read_intervals(sched.adjusted.times(), pulse.pulse_width_ms, horizon);
    let read = subtract_intervals(&read_raw, &destress);

    let mut edges: Vec<f64> = Vec::with_capacity(2 * (destress.len() + read.len()) + 2);
    edges.push(0.0);
    edges.push(horizon);
    for &(s, e) in destress.iter().chain(read.iter()) {
        edges.push(s);
        edges.push(e);
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup();

    let mut phases: Vec<VoltagePhase> = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let mid = a + (b - a) / 2.0;
        let level = if inside_any(&destress, mid) {
            VoltageLevel::Destress
        } else if inside_any(&read, mid) {
            VoltageLevel::Read
        } else {
            VoltageLevel::Idle
        };
        match phases.last_mut() {
            Some(last) if last.level == level => last.duration_ms += b - a,
            _ => phases.push(VoltagePhase { level, duration_ms: b - a }),
        }
    }
    phases
}

/// Clips windows to `[0, horizon]`, drops empties, merges abutting ones.
fn clip_merge(windows: &[(f64, f64)], horizon: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &(s, e) in windows {
        let s = s.clamp(0.0, horizon);
        let e = e.clamp(0.0, horizon);
        if e <= s {
            continue;
        }
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// Set difference of sorted, disjoint interval lists.
fn subtract_intervals(base: &[(f64, f64)], minus: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(base.len());
    for &(bs, be) in base {
        let mut cursor = bs;
        for &(ms, me) in minus {
            if me <= cursor {
                continue;
            }
            if ms >= be {
                break;
            }
            if ms > cursor {
                out.push((cursor, ms.min(be)));
            }
            cursor = cursor.max(me);
            if cursor >= be {
                break;
            }
        }
        if cursor < be {
            out.push((cursor, be));
        }
    }
    out
}

fn inside_any(intervals: &[(f64, f64)], t: f64) -> bool {
    let idx = intervals.partition_point(|&(s, _)| s <= t);
    if idx == 0 {
        return false;
    }
    let (s, e) = intervals[idx - 1];
    t >= s && t < e
}
