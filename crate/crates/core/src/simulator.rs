//! Step-level real-time operation and settlement.

use serde::{Deserialize, Serialize};

use crate::dayahead::HourPrices;

/// Resource-side limits during one hour. Energy bounds are cumulative
/// since the start of the horizon and move linearly from the `*_start`
/// values to the end-of-hour values across the hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourEnvelope {
    pub p_plus: f64,
    pub p_minus: f64,
    pub e_minus_start: f64,
    pub e_plus_start: f64,
    pub e_minus: f64,
    pub e_plus: f64,
}

impl HourEnvelope {
    /// Envelope whose energy bounds do not move within the hour.
    pub fn constant(p_plus: f64, p_minus: f64, e_minus: f64, e_plus: f64) -> Self {
        HourEnvelope { p_plus, p_minus, e_minus_start: e_minus, e_plus_start: e_plus, e_minus, e_plus }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispatchParams {
    pub eta_c: f64,
    pub eta_d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchOutcome {
    /// Signal actually delivered, `(P - y) / R`; zeros when `R = 0`.
    pub realized: Vec<f64>,
    /// Grid power of each step, kW.
    pub grid_power: Vec<f64>,
    /// Resource energy after each step, kWh.
    pub energy: Vec<f64>,
    pub energy_end: f64,
    /// Grid-side energy drawn over the hour, kWh.
    pub grid_energy: f64,
    /// Resource-side energy discharged over the hour, kWh.
    pub discharged_energy: f64,
    /// Steps where the target power had to be clipped.
    pub clamped_steps: usize,
    /// Steps where no power satisfied both the power and energy limits.
    pub infeasible_steps: usize,
}

fn to_grid(r: f64, p: DispatchParams) -> f64 {
    if r >= 0.0 {
        r / p.eta_c
    } else {
        r * p.eta_d
    }
}

/// Follows `samples` around grid schedule `p` with capacity `r`, clipping
/// the grid power to what the envelope allows at each step.
pub fn dispatch(
    samples: &[f64],
    p: f64,
    r: f64,
    env: &HourEnvelope,
    e_start: f64,
    params: DispatchParams,
) -> DispatchOutcome {
    let n = samples.len();
    let dd = 1.0 / n as f64;
    let mut e = e_start;
    let mut realized = Vec::with_capacity(n);
    let mut grid_power = Vec::with_capacity(n);
    let mut energy = Vec::with_capacity(n);
    let mut grid = 0.0;
    let mut discharged = 0.0;
    let mut clamped = 0;
    let mut infeasible = 0;
    for (k, &s) in samples.iter().enumerate() {
        let frac = (k + 1) as f64 / n as f64;
        let lo_e = env.e_minus_start + (env.e_minus - env.e_minus_start) * frac;
        let hi_e = env.e_plus_start + (env.e_plus - env.e_plus_start) * frac;
        let need_lo = (lo_e - e) / dd;
        let need_hi = (hi_e - e) / dd;
        let r_lo = env.p_minus.max(need_lo);
        let r_hi = env.p_plus.min(need_hi);
        let target = p - s * r;
        let y = if r_lo > r_hi {
            infeasible += 1;
            clamped += 1;
            let res = if need_lo > env.p_plus {
                env.p_plus
            } else if need_hi < env.p_minus {
                env.p_minus
            } else {
                0.0f64.clamp(env.p_minus.min(env.p_plus), env.p_plus.max(env.p_minus))
            };
            to_grid(res, params)
        } else {
            let (y_lo, y_hi) = (to_grid(r_lo, params), to_grid(r_hi, params));
            let y = target.clamp(y_lo, y_hi);
            if (y - target).abs() > 1e-9 * target.abs().max(1.0) {
                clamped += 1;
            }
            y
        };
        let res = if y >= 0.0 { params.eta_c * y } else { y / params.eta_d };
        e += res * dd;
        grid += y * dd;
        discharged += (-res).max(0.0) * dd;
        realized.push(if r > 0.0 { (p - y) / r } else { 0.0 });
        grid_power.push(y);
        energy.push(e);
    }
    DispatchOutcome {
        realized,
        grid_power,
        energy,
        energy_end: e,
        grid_energy: grid,
        discharged_energy: discharged,
        clamped_steps: clamped,
        infeasible_steps: infeasible,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub clamped: f64,
}

/// Precision score `1 - mean|s - s_r| / mean|s|`; an all-zero instruction
/// scores 1.
pub fn performance_score(instructed: &[f64], realized: &[f64]) -> Score {
    let n = instructed.len().max(1) as f64;
    let mean_abs = instructed.iter().map(|s| s.abs()).sum::<f64>() / n;
    if mean_abs == 0.0 {
        return Score { raw: 1.0, clamped: 1.0 };
    }
    let err = instructed.iter().zip(realized).map(|(s, r)| (s - r).abs()).sum::<f64>() / n;
    let raw = 1.0 - err / mean_abs;
    Score { raw, clamped: raw.clamp(0.0, 1.0) }
}

/// Money flows of one operated hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourSettlement {
    /// `(c_rc + c_rp * mileage) * R`.
    pub regulation_revenue: f64,
    /// Real-time price on the baseline energy deviation from the day-ahead schedule.
    pub deviation_cost: f64,
    /// Degradation price on the discharged resource energy.
    pub degradation_cost: f64,
    /// `score * regulation_revenue - deviation_cost - degradation_cost`.
    pub actual_revenue: f64,
}

/// Settles one hour. `baseline_energy` is the grid energy drawn plus the
/// energy of the instructed regulation (`R * mean(s)`), i.e. the part of the
/// consumption not explained by the instruction; it equals `P` when the
/// signal is followed exactly.
#[allow(clippy::too_many_arguments)]
pub fn settle(
    score: f64,
    r: f64,
    mileage: f64,
    prices: &HourPrices,
    baseline_energy: f64,
    p_da: f64,
    discharged_energy: f64,
    c_d: f64,
) -> HourSettlement {
    let regulation_revenue = (prices.c_rc + prices.c_rp * mileage) * r;
    let deviation_cost = prices.c_e_rt * (baseline_energy - p_da).abs();
    let degradation_cost = c_d * discharged_energy;
    HourSettlement {
        regulation_revenue,
        deviation_cost,
        degradation_cost,
        actual_revenue: score * regulation_revenue - deviation_cost - degradation_cost,
    }
}
