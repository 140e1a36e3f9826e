//! Performance and reliability metrics: average inter-spike interval, ISI
//! distortion, binned-rate spike disorder and aging normalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::trace::SpikeTrain;

/// Spike arrival rates over `n` equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateProfile {
    /// Rates in spikes/ms, one per bin.
    pub values: Vec<f64>,
    pub bin_width_ms: f64,
}

/// Average inter-spike interval `(t_K - t_1) / (K - 1)`, the telescoped form
/// of the mean of consecutive differences.
///
/// Undefined for fewer than two spikes; the caller decides whether to skip
/// the neuron or report the metric as absent.
pub fn mean_isi(train: &SpikeTrain) -> Result<f64> {
    let times = train.times();
    let k = times.len();
    if k < 2 {
        return Err(SimError::UndefinedMetric(format!(
            "mean ISI needs at least 2 spikes, neuron {} has {k}",
            train.neuron_id
        )));
    }
    Ok((times[k - 1] - times[0]) / (k - 1) as f64)
}

/// Absolute difference between the mean ISIs of the adjusted and original
/// trains, in ms.
pub fn isi_distortion(original: &SpikeTrain, adjusted: &SpikeTrain) -> Result<f64> {
    if original.spike_count() != adjusted.spike_count() {
        return Err(SimError::Invariant(format!(
            "spike count mismatch: original {} vs adjusted {}",
            original.spike_count(),
            adjusted.spike_count()
        )));
    }
    Ok((mean_isi(adjusted)? - mean_isi(original)?).abs())
}

/// Mean squared per-bin rate error between expected and actual profiles,
/// in (spikes/ms)^2.
pub fn disorder(expected: &RateProfile, actual: &RateProfile) -> Result<f64> {
    if expected.values.len() != actual.values.len() {
        return Err(SimError::Validation(format!(
            "rate profile length mismatch: {} vs {}",
            expected.values.len(),
            actual.values.len()
        )));
    }
    if expected.bin_width_ms != actual.bin_width_ms {
        return Err(SimError::Validation(format!(
            "rate profile bin width mismatch: {} vs {}",
            expected.bin_width_ms, actual.bin_width_ms
        )));
    }
    let n = expected.values.len() as f64;
    Ok(expected
        .values
        .iter()
        .zip(actual.values.iter())
        .map(|(f, g)| (f - g) * (f - g))
        .sum::<f64>()
        / n)
}

/// Per-bin spike count divided by the bin width, over `floor(horizon / width)`
/// whole bins (a trailing partial bin is dropped).
pub fn rate_profile(train: &SpikeTrain, bin_width_ms: f64) -> Result<RateProfile> {
    let n = whole_bins(train.horizon_ms(), bin_width_ms)?;
    rate_profile_with_bins(train, bin_width_ms, n)
}

/// Number of whole bins the horizon divides into.
pub fn whole_bins(horizon_ms: f64, bin_width_ms: f64) -> Result<usize> {
    if !(bin_width_ms > 0.0) {
        return Err(SimError::Validation(format!(
            "bin width must be > 0, got {bin_width_ms}"
        )));
    }
    let n = (horizon_ms / bin_width_ms).floor() as usize;
    if n == 0 {
        return Err(SimError::Validation(format!(
            "horizon {horizon_ms} ms shorter than one bin of {bin_width_ms} ms"
        )));
    }
    Ok(n)
}

/// Rate profile over an explicit bin count. Spikes at or beyond `n * width`
/// are ignored, which lets the caller bin an adjusted train against the
/// original observation window.
pub fn rate_profile_with_bins(
    train: &SpikeTrain,
    bin_width_ms: f64,
    n: usize,
) -> Result<RateProfile> {
    if !(bin_width_ms > 0.0) || n == 0 {
        return Err(SimError::Validation("profile needs positive bin width and count".into()));
    }
    let mut counts = vec![0u64; n];
    for &t in train.times() {
        let idx = (t / bin_width_ms).floor() as usize;
        if idx < n {
            counts[idx] += 1;
        }
    }
    Ok(RateProfile {
        values: counts.iter().map(|&c| c as f64 / bin_width_ms).collect(),
        bin_width_ms,
    })
}

/// Per-mechanism aging totals of one run, used for normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgingTotals {
    pub nbti: f64,
    pub tddb: f64,
}

/// Divides each run's aging totals by the baseline run's, per mechanism.
///
/// Returns the totals keyed as the input, with the baseline mapping to 1.0.
pub fn normalize_aging(
    totals: &BTreeMap<String, AgingTotals>,
    baseline_key: &str,
) -> Result<BTreeMap<String, AgingTotals>> {
    let base = totals.get(baseline_key).ok_or_else(|| {
        SimError::Validation(format!("baseline run '{baseline_key}' not found"))
    })?;
    if base.nbti == 0.0 || base.tddb == 0.0 {
        return Err(SimError::Validation(format!(
            "baseline run '{baseline_key}' has zero aging (nbti={}, tddb={})",
            base.nbti, base.tddb
        )));
    }
    Ok(totals
        .iter()
        .map(|(k, v)| {
            (k.clone(), AgingTotals { nbti: v.nbti / base.nbti, tddb: v.tddb / base.tddb })
        })
        .collect())
}

/// Application-level metrics of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mean_isi_original_ms: Option<f64>,
    pub mean_isi_adjusted_ms: Option<f64>,
    /// |adjusted mean ISI - original mean ISI|, ms, averaged over neurons.
    pub isi_distortion_ms: f64,
    /// Distortion relative to the original mean ISI (secondary view).
    pub isi_distortion_rel: f64,
    /// Mean squared binned-rate error, (spikes/ms)^2, averaged over neurons.
    pub disorder: f64,
    pub nbti_aging_total: f64,
    pub tddb_aging_total: f64,
    pub overhead: f64,
    /// Neurons with fewer than two spikes, excluded from ISI aggregation.
    pub isi_excluded_neurons: usize,
}
