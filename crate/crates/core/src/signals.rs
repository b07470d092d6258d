//! Hourly regulation signals and their two-step aggregate.
//!
//! A signal hour holds `n` normalized samples in `[-1, 1]`, one per
//! sub-interval of length `1/n` hour. Positive samples ask the resource to
//! reduce grid consumption (regulation up), negative ones to increase it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per hour of the PJM RegA/RegD stream (two-second resolution).
pub const DEFAULT_SAMPLES_PER_HOUR: usize = 1800;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourSignal {
    pub hour_id: u32,
    pub samples: Vec<f64>,
}

impl HourSignal {
    pub fn new(hour_id: u32, samples: Vec<f64>) -> Self {
        HourSignal { hour_id, samples }
    }

    /// Checks length and sample range.
    pub fn validate(&self, samples_per_hour: usize) -> Result<()> {
        if self.samples.len() != samples_per_hour {
            return Err(Error::IncompleteHour {
                hour_id: self.hour_id,
                expected: samples_per_hour,
                found: self.samples.len(),
            });
        }
        for (k, &v) in self.samples.iter().enumerate() {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::SampleOutOfRange { hour_id: self.hour_id, step: k + 1, value: v });
            }
        }
        Ok(())
    }
}

/// Up/down aggregate of one signal hour. Durations are in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourAggregate {
    pub hour_id: u32,
    pub s_up: f64,
    pub s_dn: f64,
    pub dt_up: f64,
    pub dt_dn: f64,
    pub s_first: f64,
    pub s_mean: f64,
    pub mileage: f64,
}

/// Stable partition: nonnegative samples first, then negative ones, each
/// group in original order.
pub fn rearrange(samples: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    out.extend(samples.iter().copied().filter(|&s| s >= 0.0));
    out.extend(samples.iter().copied().filter(|&s| s < 0.0));
    out
}

/// Sum of absolute successive differences, unnormalized.
pub fn mileage(samples: &[f64]) -> f64 {
    samples.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Collapses an hour into one up and one down sub-period.
pub fn aggregate(hour: &HourSignal) -> Result<HourAggregate> {
    let n = hour.samples.len();
    if n == 0 {
        return Err(Error::IncompleteHour { hour_id: hour.hour_id, expected: 1, found: 0 });
    }
    let mut up_sum = 0.0;
    let mut up_n = 0usize;
    let mut dn_sum = 0.0;
    for (k, &s) in hour.samples.iter().enumerate() {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::SampleOutOfRange { hour_id: hour.hour_id, step: k + 1, value: s });
        }
        if s >= 0.0 {
            up_sum += s;
            up_n += 1;
        } else {
            dn_sum += s;
        }
    }
    let dn_n = n - up_n;
    let dt_up = up_n as f64 / n as f64;
    Ok(HourAggregate {
        hour_id: hour.hour_id,
        s_up: if up_n > 0 { up_sum / up_n as f64 } else { 0.0 },
        s_dn: if dn_n > 0 { dn_sum / dn_n as f64 } else { 0.0 },
        dt_up,
        dt_dn: 1.0 - dt_up,
        s_first: hour.samples[0],
        s_mean: (up_sum + dn_sum) / n as f64,
        mileage: mileage(&hour.samples),
    })
}

/// Resource-side energy (kWh) of following `samples` around grid power
/// `p` with capacity `r`, ignoring all limits.
pub fn unconstrained_energy(samples: &[f64], p: f64, r: f64, eta_c: f64, eta_d: f64) -> f64 {
    let dd = 1.0 / samples.len() as f64;
    samples
        .iter()
        .map(|&s| {
            let y = p - s * r;
            (eta_c * y.max(0.0) + y.min(0.0) / eta_d) * dd
        })
        .sum()
}
