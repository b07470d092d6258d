//! Signal statistics, the chi-square ambiguity set and the moment data of
//! the hour-ahead second-order cones.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::signals::HourSignal;
use crate::simulator::{dispatch, DispatchParams, HourEnvelope};

/// Smallest admissible adjusted risk level.
pub const EPS_FLOOR: f64 = 1e-6;

/// Chi-square divergence `sum (p - q)^2 / q` between two distributions.
pub fn chi_square_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "distributions differ in length ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    for (name, d) in [("p", p), ("q", q)] {
        let total: f64 = d.iter().sum();
        if (total - 1.0).abs() > 1e-9 || d.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("{name} is not a distribution (sums to {total})")));
        }
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if qi == 0.0 {
            if pi != 0.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        acc += (pi - qi) * (pi - qi) / qi;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustedEpsilon {
    pub value: f64,
    /// Set when the raw value fell outside `(EPS_FLOOR, eps]` and was clamped.
    pub saturated: bool,
}

/// Risk level to use against the nominal distribution so that the chance
/// constraint holds for every distribution within chi-square radius `rho`.
pub fn adjusted_epsilon(eps: f64, rho: f64) -> Result<AdjustedEpsilon> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, 1)")));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!("rho = {rho} must be finite and nonnegative")));
    }
    if rho == 0.0 {
        return Ok(AdjustedEpsilon { value: eps, saturated: false });
    }
    let root = (rho * rho + 4.0 * rho * (eps - eps * eps)).sqrt();
    let raw = eps - (root - (1.0 - 2.0 * eps) * rho) / (2.0 * rho + 2.0);
    if raw.is_nan() || raw <= EPS_FLOOR {
        Ok(AdjustedEpsilon { value: EPS_FLOOR, saturated: true })
    } else if raw > eps {
        Ok(AdjustedEpsilon { value: eps, saturated: true })
    } else {
        Ok(AdjustedEpsilon { value: raw, saturated: false })
    }
}

/// Standard normal CDF.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF: Acklam's rational approximation refined by
/// one Halley step.
pub fn gaussian_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = gaussian_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Multiplier of the power cones, `sqrt((1 - eps) / eps)`.
pub fn kappa12(eps: f64) -> f64 {
    ((1.0 - eps) / eps).sqrt()
}

/// Multiplier of the energy cones, the `(1 - eps')` normal quantile.
pub fn kappa34(eps_adj: f64) -> f64 {
    gaussian_quantile(1.0 - eps_adj)
}

/// Fitted moments of the instantaneous and hour-average signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalStatistics {
    pub mean_s1: f64,
    pub var_s1: f64,
    pub mean_sh: f64,
    pub var_sh: f64,
    pub rho: f64,
    pub mean_mileage: f64,
    pub min_sh: f64,
    pub max_sh: f64,
    pub n_hours: usize,
    pub bins: usize,
}

pub const DEFAULT_BINS: usize = 50;

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Fits the signal statistics from historical hours. `rho` is the
/// chi-square divergence between the pooled sample histogram over `bins`
/// equiprobable bins of the fitted Gaussian and the uniform bin mass.
pub fn fit_signal_stats(hours: &[HourSignal], bins: usize) -> Result<SignalStatistics> {
    if hours.len() < 2 {
        return Err(Error::InsufficientData(format!("{} hour(s) of history, need at least 2", hours.len())));
    }
    if bins < 5 {
        return Err(Error::InvalidArgument(format!("{bins} bins, need at least 5")));
    }
    let pooled: Vec<f64> = hours.iter().flat_map(|h| h.samples.iter().copied()).collect();
    if pooled.len() < 2 {
        return Err(Error::InsufficientData("fewer than 2 samples".into()));
    }
    let (mean_s1, var_s1) = mean_var(&pooled);
    let hourly: Vec<f64> = hours
        .iter()
        .map(|h| h.samples.iter().sum::<f64>() / h.samples.len().max(1) as f64)
        .collect();
    let (mean_sh, var_sh) = mean_var(&hourly);
    if !(var_s1 > 0.0) || !(var_sh > 0.0) {
        return Err(Error::Degenerate(format!("zero variance (var_s1 = {var_s1}, var_sh = {var_sh})")));
    }
    let sd = var_s1.sqrt();
    let edges: Vec<f64> = (1..bins).map(|k| mean_s1 + sd * gaussian_quantile(k as f64 / bins as f64)).collect();
    let mut counts = vec![0usize; bins];
    for &s in &pooled {
        counts[edges.partition_point(|&e| e <= s)] += 1;
    }
    let total = pooled.len() as f64;
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let q = 1.0 / bins as f64;
    let rho = p.iter().map(|pi| (pi - q) * (pi - q) / q).sum();
    let mileages: Vec<f64> = hours.iter().map(|h| crate::signals::mileage(&h.samples)).collect();
    Ok(SignalStatistics {
        mean_s1,
        var_s1,
        mean_sh,
        var_sh,
        rho,
        mean_mileage: mileages.iter().sum::<f64>() / mileages.len() as f64,
        min_sh: hourly.iter().copied().fold(f64::INFINITY, f64::min),
        max_sh: hourly.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        n_hours: hours.len(),
        bins,
    })
}

/// Forecast mean and variance of the resource-side capacities of one hour.
/// Energy bounds refer to the end of the hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityForecast {
    pub mean_p_plus: f64,
    pub var_p_plus: f64,
    pub mean_p_minus: f64,
    pub var_p_minus: f64,
    pub mean_e_minus: f64,
    pub var_e_minus: f64,
    pub mean_e_plus: f64,
    pub var_e_plus: f64,
}

/// Mean vectors and diagonal covariances of the four cone constraints over
/// `X = [R, P, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentData {
    pub d: [[f64; 3]; 4],
    pub gamma: [[f64; 3]; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    pub eta_c: f64,
    pub eta_d: f64,
}

/// Builds the cone moment data. With `squared_scaling` the signal variances
/// are scaled by the squared coefficients instead of the coefficients.
pub fn assemble_moments(
    stats: &SignalStatistics,
    fc: &CapacityForecast,
    e0: (f64, f64),
    eff: Efficiency,
    p_da: f64,
    squared_scaling: bool,
) -> MomentData {
    let (ec, ed) = (eff.eta_c, eff.eta_d);
    let k3 = (1.0 + ec * ed) / (2.0 * ed);
    let c3 = (1.0 - ec * ed) / (2.0 * ed);
    let p_coef3 = if p_da >= 0.0 { -ec } else { -1.0 / ed };
    let scale = |c: f64| if squared_scaling { c * c } else { c };
    MomentData {
        d: [
            [-ec * stats.mean_s1, ec, -fc.mean_p_plus],
            [stats.mean_s1 / ed, -1.0 / ed, fc.mean_p_minus],
            [k3 * stats.mean_sh + c3, p_coef3, -e0.0 + fc.mean_e_minus],
            [-ec * stats.mean_sh, ec, e0.0 - fc.mean_e_plus],
        ],
        gamma: [
            [scale(ec) * stats.var_s1, 0.0, fc.var_p_plus],
            [scale(1.0 / ed) * stats.var_s1, 0.0, fc.var_p_minus],
            [scale(k3) * stats.var_sh, 0.0, e0.1 + fc.var_e_minus],
            [scale(ec) * stats.var_sh, 0.0, e0.1 + fc.var_e_plus],
        ],
    }
}

/// Mean and variance of the energy at the start of the next hour, by
/// replaying the current hour's offer `(R, P)` against historical signal
/// hours.
pub fn estimate_e0(
    offer: (f64, f64),
    envelope: &HourEnvelope,
    e_start: f64,
    history: &[HourSignal],
    params: DispatchParams,
) -> Result<(f64, f64)> {
    if history.is_empty() {
        return Err(Error::InsufficientData("no historical trajectories".into()));
    }
    let ends: Vec<f64> = history
        .iter()
        .map(|h| dispatch(&h.samples, offer.1, offer.0, envelope, e_start, params).energy_end)
        .collect();
    if ends.len() == 1 {
        return Ok((ends[0], 0.0));
    }
    Ok(mean_var(&ends))
}
