//! Synthetic plug-in vehicle fleet, regulation signals and prices.
//!
//! The horizon starts at `start_hour` (noon by default) so that the
//! overnight connection window sits inside one day. Hour `t` covers
//! `[t, t + 1)` in horizon time. Energies are cumulative resource-side
//! kWh since the horizon start; powers are resource-side kW.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dayahead::HourPrices;
use crate::error::{Error, Result};
use crate::signals::HourSignal;
use crate::simulator::HourEnvelope;
use crate::uncertainty::CapacityForecast;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetConfig {
    pub n_vehicles: usize,
    pub battery_kwh: f64,
    pub slow_charger_kw: f64,
    pub fast_charger_kw: f64,
    pub fast_share: f64,
    pub eta: f64,
    /// Clock hour of horizon index 0.
    pub start_hour: f64,
    pub hours: usize,
    pub arrival_mean: f64,
    pub arrival_std: f64,
    pub arrival_window: (f64, f64),
    /// Clock hours of the next morning.
    pub departure_mean: f64,
    pub departure_std: f64,
    pub departure_window: (f64, f64),
    pub trip_kwh_mean: f64,
    pub trip_kwh_std: f64,
    pub reserve_soc: f64,
    pub target_soc: f64,
    /// Relative standard deviation of capacity forecast errors.
    pub noise_std: f64,
    /// Allows discharging to the grid; without it `p_minus = 0`.
    pub v2g: bool,
}

impl Default for FleetConfig {
    fn default() -> Self {
        FleetConfig {
            n_vehicles: 5000,
            battery_kwh: 24.0,
            slow_charger_kw: 3.3,
            fast_charger_kw: 6.6,
            fast_share: 0.5,
            eta: 0.92,
            start_hour: 12.0,
            hours: 24,
            arrival_mean: 18.0,
            arrival_std: 1.5,
            arrival_window: (14.0, 23.0),
            departure_mean: 7.5,
            departure_std: 1.0,
            departure_window: (5.0, 11.0),
            trip_kwh_mean: 8.0,
            trip_kwh_std: 3.0,
            reserve_soc: 0.2,
            target_soc: 0.9,
            noise_std: 0.05,
            v2g: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    /// Horizon-relative hours.
    pub arrival: f64,
    pub departure: f64,
    pub power_kw: f64,
    /// Energy that must be stored by departure.
    pub required_kwh: f64,
}

impl Vehicle {
    /// Latest-charging trajectory: `max(0, E - p (b - u))` while connected.
    pub fn e_minus(&self, u: f64) -> f64 {
        if u <= self.arrival {
            0.0
        } else if u >= self.departure {
            self.required_kwh
        } else {
            (self.required_kwh - self.power_kw * (self.departure - u)).max(0.0)
        }
    }

    /// Earliest-charging trajectory: `min(E, p (u - a))` while connected.
    pub fn e_plus(&self, u: f64) -> f64 {
        if u <= self.arrival {
            0.0
        } else if u >= self.departure {
            self.required_kwh
        } else {
            (self.power_kw * (u - self.arrival)).min(self.required_kwh)
        }
    }

    /// Connected hours within `[a, b)`.
    pub fn overlap(&self, a: f64, b: f64) -> f64 {
        (self.departure.min(b) - self.arrival.max(a)).max(0.0)
    }
}

/// Capacity of one hour: average power limits over the hour and energy
/// bounds at its end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityHour {
    pub p_plus: f64,
    pub p_minus: f64,
    pub e_minus: f64,
    pub e_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetEnvelope {
    pub hours: Vec<CapacityHour>,
}

impl FleetEnvelope {
    /// Step-level envelope of hour `t`; bounds start from the previous
    /// hour's end (zero at the horizon start).
    pub fn hour_envelope(&self, t: usize) -> HourEnvelope {
        let h = self.hours[t];
        let (s_lo, s_hi) = if t == 0 { (0.0, 0.0) } else { (self.hours[t - 1].e_minus, self.hours[t - 1].e_plus) };
        HourEnvelope {
            p_plus: h.p_plus,
            p_minus: h.p_minus,
            e_minus_start: s_lo,
            e_plus_start: s_hi,
            e_minus: h.e_minus,
            e_plus: h.e_plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    pub vehicles: Vec<Vehicle>,
    /// Aggregate envelope of the sampled behavior, used as the forecast mean.
    pub envelope: FleetEnvelope,
}

fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..100 {
        let z: f64 = StandardNormal.sample(rng);
        let v = mean + sd * z;
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
    mean.clamp(lo, hi)
}

fn validate(cfg: &FleetConfig) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidArgument(format!("fleet: {m}")));
    if cfg.n_vehicles == 0 || cfg.hours == 0 {
        return bad("needs vehicles and hours");
    }
    if !(cfg.battery_kwh > 0.0 && cfg.slow_charger_kw > 0.0 && cfg.fast_charger_kw > 0.0) {
        return bad("battery and charger ratings must be positive");
    }
    if !(0.0..=1.0).contains(&cfg.fast_share) || !(cfg.eta > 0.0 && cfg.eta <= 1.0) {
        return bad("fast_share and eta must lie in [0, 1] and (0, 1]");
    }
    if !(0.0 <= cfg.reserve_soc && cfg.reserve_soc < cfg.target_soc && cfg.target_soc <= 1.0) {
        return bad("need 0 <= reserve_soc < target_soc <= 1");
    }
    if !(cfg.noise_std >= 0.0 && cfg.noise_std < 0.12) {
        return bad("noise_std must lie in [0, 0.12)");
    }
    Ok(())
}

/// Samples vehicle behavior and aggregates the envelope.
pub fn sample_fleet(cfg: &FleetConfig, seed: u64) -> Result<Fleet> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = cfg.hours as f64;
    let mut vehicles = Vec::with_capacity(cfg.n_vehicles);
    for _ in 0..cfg.n_vehicles {
        let (alo, ahi) = cfg.arrival_window;
        let (dlo, dhi) = cfg.departure_window;
        let arrival_clock = truncated_normal(&mut rng, cfg.arrival_mean, cfg.arrival_std, alo, ahi);
        let departure_clock = truncated_normal(&mut rng, cfg.departure_mean, cfg.departure_std, dlo, dhi) + 24.0;
        let arrival = (arrival_clock - cfg.start_hour).clamp(0.0, horizon);
        let departure = (departure_clock - cfg.start_hour).clamp(arrival, horizon);
        let power_kw = if rng.gen_bool(cfg.fast_share) { cfg.fast_charger_kw } else { cfg.slow_charger_kw };
        let usable = (cfg.target_soc - cfg.reserve_soc) * cfg.battery_kwh;
        let reachable = 0.9 * power_kw * (departure - arrival);
        let cap = usable.min(reachable).max(0.0);
        let required_kwh = truncated_normal(&mut rng, cfg.trip_kwh_mean, cfg.trip_kwh_std, 0.0, cap.max(0.0));
        vehicles.push(Vehicle { arrival, departure, power_kw, required_kwh });
    }
    let mut envelope = aggregate_envelope(&vehicles, cfg.hours);
    if !cfg.v2g {
        for h in &mut envelope.hours {
            h.p_minus = 0.0;
        }
    }
    Ok(Fleet { vehicles, envelope })
}

/// Sums per-vehicle limits over hour boundaries.
pub fn aggregate_envelope(vehicles: &[Vehicle], hours: usize) -> FleetEnvelope {
    let hours = (0..hours)
        .map(|t| {
            let (a, b) = (t as f64, t as f64 + 1.0);
            let mut h = CapacityHour { p_plus: 0.0, p_minus: 0.0, e_minus: 0.0, e_plus: 0.0 };
            for v in vehicles {
                let f = v.overlap(a, b);
                h.p_plus += v.power_kw * f;
                h.p_minus -= v.power_kw * f;
                h.e_minus += v.e_minus(b);
                h.e_plus += v.e_plus(b);
            }
            h
        })
        .collect();
    FleetEnvelope { hours }
}

/// Draws a capacity scenario (or realization) around `base`. Power limits
/// scale by `1 + sd * z`, energy bounds move by `sd * z` corridor widths,
/// with `z` standard normal truncated to `[-4, 4]`. Power limits are then
/// raised where needed to keep the corridor traversable.
pub fn perturb(base: &FleetEnvelope, noise_std: f64, seed: u64) -> FleetEnvelope {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(base.hours.len());
    let mut prev = (0.0, 0.0);
    for h in &base.hours {
        let zp = truncated_normal(&mut rng, 0.0, 1.0, -4.0, 4.0);
        let zl = truncated_normal(&mut rng, 0.0, 1.0, -4.0, 4.0);
        let zu = truncated_normal(&mut rng, 0.0, 1.0, -4.0, 4.0);
        let w = h.e_plus - h.e_minus;
        let mut e_minus = h.e_minus + noise_std * zl * w;
        let mut e_plus = h.e_plus + noise_std * zu * w;
        if e_minus > e_plus {
            let mid = 0.5 * (e_minus + e_plus);
            e_minus = mid;
            e_plus = mid;
        }
        let mut p_plus = h.p_plus * (1.0 + noise_std * zp);
        p_plus = p_plus.max(e_minus - prev.0).max(prev.1 - e_plus).max(0.0);
        let p_minus = if h.p_minus < 0.0 { -p_plus } else { 0.0 };
        out.push(CapacityHour { p_plus, p_minus, e_minus, e_plus });
        prev = (e_minus, e_plus);
    }
    FleetEnvelope { hours: out }
}

/// Independent draws of the fleet: each scenario resamples every vehicle
/// and then applies forecast noise. Scenario `w` uses seeds derived from
/// `seed + w`.
pub fn generate_scenarios(cfg: &FleetConfig, n_scenarios: usize, seed: u64) -> Result<Vec<FleetEnvelope>> {
    if n_scenarios == 0 {
        return Err(Error::InvalidArgument("need at least one scenario".into()));
    }
    (0..n_scenarios as u64).map(|w| realize_fleet(cfg, seed.wrapping_add(w))).collect()
}

/// One draw of the fleet, used as ground truth by the simulator.
pub fn realize_fleet(cfg: &FleetConfig, seed: u64) -> Result<FleetEnvelope> {
    let fleet = sample_fleet(cfg, seed)?;
    Ok(perturb(&fleet.envelope, cfg.noise_std, seed ^ NOISE_SALT))
}

const NOISE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Hour-wise average of several envelopes.
pub fn mean_envelope(envelopes: &[FleetEnvelope]) -> Result<FleetEnvelope> {
    let first = envelopes.first().ok_or_else(|| Error::InvalidArgument("no envelopes to average".into()))?;
    let n = envelopes.len() as f64;
    let mut hours = vec![CapacityHour { p_plus: 0.0, p_minus: 0.0, e_minus: 0.0, e_plus: 0.0 }; first.hours.len()];
    for env in envelopes {
        if env.hours.len() != hours.len() {
            return Err(Error::InvalidArgument("envelopes cover different horizons".into()));
        }
        for (acc, h) in hours.iter_mut().zip(&env.hours) {
            acc.p_plus += h.p_plus / n;
            acc.p_minus += h.p_minus / n;
            acc.e_minus += h.e_minus / n;
            acc.e_plus += h.e_plus / n;
        }
    }
    Ok(FleetEnvelope { hours })
}

/// Forecast moments: the base envelope as mean, `(sd * p)^2` and
/// `(sd * width)^2` as variances.
pub fn forecast(base: &FleetEnvelope, noise_std: f64) -> Vec<CapacityForecast> {
    base.hours
        .iter()
        .map(|h| {
            let w = h.e_plus - h.e_minus;
            CapacityForecast {
                mean_p_plus: h.p_plus,
                var_p_plus: (noise_std * h.p_plus).powi(2),
                mean_p_minus: h.p_minus,
                var_p_minus: (noise_std * h.p_minus).powi(2),
                mean_e_minus: h.e_minus,
                var_e_minus: (noise_std * w).powi(2),
                mean_e_plus: h.e_plus,
                var_e_plus: (noise_std * w).powi(2),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalGenConfig {
    /// Standard deviation of the hour-level offset.
    pub bias_std: f64,
    /// Step-to-step autocorrelation of the within-hour process.
    pub ar_coef: f64,
    /// Stationary standard deviation of the within-hour process.
    pub ar_std: f64,
    /// Probability that an hour is dominated by a sustained offset drawn
    /// uniformly from `0.6..0.95` in magnitude.
    pub burst_prob: f64,
}

impl Default for SignalGenConfig {
    fn default() -> Self {
        SignalGenConfig { bias_std: 0.15, ar_coef: 0.995, ar_std: 0.4, burst_prob: 0.0 }
    }
}

/// Independent signal hours: an hourly offset plus an AR(1) path, clipped
/// to `[-1, 1]`.
pub fn synthetic_signals(
    cfg: &SignalGenConfig,
    n_hours: usize,
    samples_per_hour: usize,
    first_hour_id: u32,
    seed: u64,
) -> Vec<HourSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innov = cfg.ar_std * (1.0 - cfg.ar_coef * cfg.ar_coef).max(0.0).sqrt();
    (0..n_hours)
        .map(|k| {
            let zb: f64 = StandardNormal.sample(&mut rng);
            let mut bias = cfg.bias_std * zb;
            if cfg.burst_prob > 0.0 && rng.gen_bool(cfg.burst_prob) {
                bias = rng.gen_range(0.6..0.95) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
            let z0: f64 = StandardNormal.sample(&mut rng);
            let mut x = cfg.ar_std * z0;
            let samples = (0..samples_per_hour)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x = cfg.ar_coef * x + innov * z;
                    (bias + x).clamp(-1.0, 1.0)
                })
                .collect();
            HourSignal::new(first_hour_id + k as u32, samples)
        })
        .collect()
}

/// Price forecasts for one horizon: an evening-peaked day-ahead energy
/// price, a real-time premium and regulation prices of about $20/MW-h.
pub fn synthetic_prices(hours: usize, start_hour: f64, seed: u64) -> Vec<HourPrices> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..hours)
        .map(|t| {
            let clock = (start_hour + t as f64) % 24.0;
            let peak = (-((clock - 18.0) / 3.0).powi(2)).exp();
            let c_e_da = (0.03 + 0.02 * peak) * (1.0 + 0.05 * rng.gen_range(-1.0..1.0));
            HourPrices {
                c_e_da,
                c_e_rt: c_e_da * (1.15 + 0.1 * rng.gen_range(-1.0..1.0)),
                c_rc: 0.018 + 0.006 * rng.gen::<f64>(),
                c_rp: 1e-4,
            }
        })
        .collect()
}
