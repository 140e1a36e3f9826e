//! Reference implementations used by the test suites.
//!
//! Everything here recomputes results through a deliberately different
//! structure than the main code paths: per-phase scalar re-summation instead
//! of the state fold, a fixed-tick marching timeline instead of the
//! event-driven scheduler, and plain fold loops instead of the closed forms.
//! Production code must not call into this module.

use crate::aging::{DeviceParams, VoltageLevel, VoltagePhase};
use crate::schedule::{AgingFeed, DestressPolicy, PolicyMode};
use crate::trace::SpikeTrain;

/// Brute-force mean ISI: explicit sum of consecutive differences.
pub fn sum_mean_isi(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let mut acc = 0.0;
    for w in times.windows(2) {
        acc += w[1] - w[0];
    }
    Some(acc / (times.len() - 1) as f64)
}

/// Brute-force spike disorder: explicit fold of squared differences.
pub fn fold_disorder(expected: &[f64], actual: &[f64]) -> f64 {
    assert_eq!(expected.len(), actual.len());
    let mut acc = 0.0;
    for i in 0..expected.len() {
        let d = expected[i] - actual[i];
        acc += d * d;
    }
    acc / expected.len() as f64
}

/// Scalar re-summation of an aging trajectory with locally evaluated
/// closed forms (independent of the `aging` module's fold).
pub fn resum_aging(phases: &[VoltagePhase], temp_k: f64, p: &DeviceParams) -> (f64, f64) {
    let nbti_mttf = |v: f64| p.nbti_a / v.powf(p.nbti_gamma) * (p.nbti_ea / (p.boltzmann_k * temp_k)).exp();
    let tddb_mttf = |v: f64| p.tddb_a * (-p.tddb_gamma * v.sqrt()).exp();
    let mut nbti = 0.0f64;
    let mut tddb = 0.0f64;
    for phase in phases {
        let dt = phase.duration_ms;
        match phase.level {
            VoltageLevel::Read => {
                nbti += p.unit_scale * dt / nbti_mttf(p.v_read);
                tddb += p.unit_scale * dt / tddb_mttf(p.v_read);
            }
            VoltageLevel::Idle => {
                nbti += p.unit_scale * dt / nbti_mttf(p.v_idle);
                tddb += p.unit_scale * dt / tddb_mttf(p.v_idle);
            }
            VoltageLevel::Destress => {
                nbti *= (1.0 - p.nbti_recovery_rate * dt).max(0.0);
                tddb += p.unit_scale * dt / tddb_mttf(p.destress_voltage_frac * p.v_th);
            }
        }
    }
    (nbti, tddb)
}

/// Result of the tick-marching scheduler.
#[derive(Debug, Clone)]
pub struct TickSchedule {
    pub adjusted: Vec<f64>,
    pub delayed_count: usize,
    /// De-stress time inside `[0, horizon]`.
    pub stall_ms: f64,
    /// Windows recorded as flag transitions (merged when back to back).
    pub windows: Vec<(f64, f64)>,
    /// NBTI level sampled at each window-open instant (threshold mode only).
    pub nbti_at_open: Vec<f64>,
}

/// Fixed-tick periodic timeline: marches the clock in `tick_ms` steps and
/// derives the de-stress flag from modular arithmetic at each instant.
/// Exact when policy times are multiples of the tick.
pub fn tick_schedule_periodic(
    train: &SpikeTrain,
    policy: &DestressPolicy,
    tick_ms: f64,
) -> TickSchedule {
    assert_eq!(policy.mode, PolicyMode::Periodic);
    let horizon = train.horizon_ms();
    let times = train.times();
    let in_destress = |t: f64| -> bool {
        if policy.tdsc_ms == 0.0 {
            return false;
        }
        let rel = t - policy.phase_offset_ms;
        if rel < policy.tdsi_ms {
            return false;
        }
        let k = (rel / policy.tdsi_ms).floor();
        let start = policy.phase_offset_ms + k * policy.tdsi_ms;
        start < horizon && t >= start && t - start < policy.tdsc_ms
    };

    let mut adjusted = Vec::with_capacity(times.len());
    let mut delayed = 0usize;
    let mut queued: Vec<f64> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut stall_ticks = 0u64;
    let mut windows: Vec<(f64, f64)> = Vec::new();
    let mut open_since: Option<f64> = None;

    let emit = |original: f64, at: f64, prev: &mut Option<f64>, adjusted: &mut Vec<f64>, delayed: &mut usize| {
        let mut e = at.max(original);
        if let Some(p) = *prev {
            if e <= p {
                e = p + crate::schedule::EMIT_EPS_MS;
            }
        }
        if e > original {
            *delayed += 1;
        }
        *prev = Some(e);
        adjusted.push(e);
    };

    let mut i = 0usize;
    let mut step = 0u64;
    loop {
        let tau = step as f64 * tick_ms;
        let flag = in_destress(tau);
        match (flag, open_since) {
            (true, None) => open_since = Some(tau),
            (false, Some(s)) => {
                windows.push((s, tau));
                open_since = None;
            }
            _ => {}
        }
        if !flag && !queued.is_empty() {
            // The flag fell exactly at a window end (grid-aligned policies).
            let drained = std::mem::take(&mut queued);
            for q in drained {
                emit(q, tau, &mut prev, &mut adjusted, &mut delayed);
            }
        }
        if flag && tau < horizon {
            stall_ticks += 1;
        }
        while i < times.len() && times[i] < tau + tick_ms {
            let t = times[i];
            if in_destress(t) {
                queued.push(t);
            } else {
                emit(t, t, &mut prev, &mut adjusted, &mut delayed);
            }
            i += 1;
        }
        step += 1;
        if i >= times.len()
            && queued.is_empty()
            && tau >= horizon + policy.tdsc_ms + tick_ms
        {
            break;
        }
    }
    if let Some(s) = open_since {
        windows.push((s, s + policy.tdsc_ms));
    }

    TickSchedule {
        adjusted,
        delayed_count: delayed,
        stall_ms: stall_ticks as f64 * tick_ms,
        windows,
        nbti_at_open: Vec::new(),
    }
}

/// Fixed-tick threshold timeline. Aging is integrated exactly inside each
/// tick (splitting at pulse edges), but window-open decisions are taken at
/// tick boundaries, so window starts trail the event-driven scheduler by at
/// most one tick.
pub fn tick_schedule_threshold(
    train: &SpikeTrain,
    policy: &DestressPolicy,
    feed: &dyn AgingFeed,
    tick_ms: f64,
) -> TickSchedule {
    assert_eq!(policy.mode, PolicyMode::Threshold);
    let cap = policy.aging_cap.expect("threshold policy");
    let horizon = train.horizon_ms();
    let times = train.times();
    let width = feed.pulse_width();

    let mut adjusted = Vec::with_capacity(times.len());
    let mut delayed = 0usize;
    let mut queued: Vec<f64> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut windows: Vec<(f64, f64)> = Vec::new();
    let mut nbti_at_open: Vec<f64> = Vec::new();
    let mut stall = 0.0f64;

    let mut nbti = 0.0f64;
    let mut pulse_until = f64::NEG_INFINITY;
    let mut deadline = policy.phase_offset_ms + policy.tdsi_ms;
    let mut window_until: Option<f64> = None;

    let emit = |original: f64, at: f64, prev: &mut Option<f64>, adjusted: &mut Vec<f64>, delayed: &mut usize| {
        let mut e = at.max(original);
        if let Some(p) = *prev {
            if e <= p {
                e = p + crate::schedule::EMIT_EPS_MS;
            }
        }
        if e > original {
            *delayed += 1;
        }
        *prev = Some(e);
        adjusted.push(e);
    };

    let mut i = 0usize;
    let mut step = 0u64;
    loop {
        let tau = step as f64 * tick_ms;
        let tau_next = (step + 1) as f64 * tick_ms;

        if let Some(until) = window_until {
            if tau >= until {
                let drained = std::mem::take(&mut queued);
                for q in drained {
                    emit(q, until, &mut prev, &mut adjusted, &mut delayed);
                    pulse_until = pulse_until.max(adjusted.last().unwrap() + width);
                }
                window_until = None;
            }
        }

        if window_until.is_none() && tau < horizon && (nbti >= cap || tau >= deadline) {
            // Open at the tick boundary (the event-driven path opens at the
            // exact crossing earlier in the same tick).
            let start = prev.map_or(tau, |p| tau.max(p));
            nbti_at_open.push(nbti);
            nbti = (nbti * feed.retention(policy.tdsc_ms)).max(0.0);
            pulse_until = pulse_until.min(start);
            windows.push((start, start + policy.tdsc_ms));
            deadline = start + policy.tdsi_ms;
            window_until = Some(start + policy.tdsc_ms);
        }

        // March spikes and aging across [tau, tau_next).
        let mut cursor = tau;
        while cursor < tau_next {
            if let Some(until) = window_until {
                if cursor < until {
                    let hop = until.min(tau_next);
                    stall += (hop.min(horizon) - cursor.min(horizon)).max(0.0);
                    // Spikes falling inside the window queue for its end.
                    while i < times.len() && times[i] < hop {
                        queued.push(times[i]);
                        i += 1;
                    }
                    cursor = hop;
                    continue;
                }
            }
            while i < times.len() && times[i] <= cursor {
                emit(times[i], times[i], &mut prev, &mut adjusted, &mut delayed);
                pulse_until = pulse_until.max(adjusted.last().unwrap() + width);
                i += 1;
            }
            let mut seg_end = tau_next;
            if i < times.len() {
                seg_end = seg_end.min(times[i].max(cursor));
            }
            if pulse_until > cursor {
                seg_end = seg_end.min(pulse_until);
            }
            if seg_end <= cursor {
                seg_end = tau_next;
            }
            let rate =
                if cursor < pulse_until { feed.read_rate() } else { feed.idle_rate() };
            nbti += rate * (seg_end - cursor);
            cursor = seg_end;
        }

        step += 1;
        if i >= times.len() && queued.is_empty() && window_until.is_none() && tau >= horizon {
            break;
        }
    }

    TickSchedule { adjusted, delayed_count: delayed, stall_ms: stall, windows, nbti_at_open }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_mean_isi_basics() {
        assert_eq!(sum_mean_isi(&[1.0]), None);
        assert!((sum_mean_isi(&[1.0, 2.5, 7.5, 8.0]).unwrap() - 7.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fold_disorder_basics() {
        assert_eq!(fold_disorder(&[10.0, 20.0], &[12.0, 18.0]), 4.0);
        assert_eq!(fold_disorder(&[1.0], &[1.0]), 0.0);
    }

    #[test]
    fn tick_periodic_matches_module_example() {
        let train = SpikeTrain::new(0, vec![2.0, 12.0], 20.0).unwrap();
        let policy = DestressPolicy::periodic(10.0, 3.0);
        let out = tick_schedule_periodic(&train, &policy, 0.01);
        assert_eq!(out.adjusted, vec![2.0, 13.0]);
        assert_eq!(out.delayed_count, 1);
        assert!((out.stall_ms - 3.0).abs() < 1e-9);
    }
}
