//! Day-ahead joint energy and regulation offer as a two-stage stochastic
//! MILP over scenarios of aggregated signals and resource capacities.
//!
//! Powers inside the model are divided by the largest scenario power
//! capacity so that the simplex tolerances act on O(1) quantities; all
//! reported values are in kW and kWh.

use regcap_solver::{
    solve_milp, Direction, LinearProgram, MilpOptions, MilpStatus, MixedIntegerProgram, RowSense,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prices of one hour. Energy prices in $/kWh, capacity price in $/kW per
/// hour, performance price in $/kW per unit mileage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourPrices {
    pub c_e_da: f64,
    pub c_e_rt: f64,
    pub c_rc: f64,
    pub c_rp: f64,
}

/// One hour of one scenario: aggregated signal and resource capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioHour {
    pub s_up: f64,
    pub s_dn: f64,
    pub dt_up: f64,
    pub dt_dn: f64,
    pub mileage: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub e_minus: f64,
    pub e_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub probability: f64,
    pub hours: Vec<ScenarioHour>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayAheadParams {
    pub eta_c: f64,
    pub eta_d: f64,
    /// Degradation price on discharged resource energy, $/kWh.
    pub c_d: f64,
    /// Penalty per kW of day-ahead capacity, only to break ties.
    pub tie_break: f64,
    pub milp: MilpOptions,
}

impl Default for DayAheadParams {
    fn default() -> Self {
        DayAheadParams {
            eta_c: 0.92,
            eta_d: 0.92,
            c_d: 4.1 / 24.0,
            tie_break: 1e-9,
            milp: MilpOptions::default(),
        }
    }
}

/// Column indices of the day-ahead model.
#[derive(Debug, Clone)]
pub struct DayAheadLayout {
    pub hours: usize,
    pub scenarios: usize,
    /// Power divisor applied to every power and energy quantity.
    pub scale: f64,
    pub p: Vec<usize>,
    pub r_da: Vec<usize>,
    /// `[scenario][hour]` -> first of R, Pc_up, Pc_dn, Pd_up, Pd_dn, D_up, D_dn.
    pub block: Vec<Vec<usize>>,
}

pub const R: usize = 0;
pub const PC_UP: usize = 1;
pub const PC_DN: usize = 2;
pub const PD_UP: usize = 3;
pub const PD_DN: usize = 4;
pub const D_UP: usize = 5;
pub const D_DN: usize = 6;

fn validate(scenarios: &[Scenario], prices: &[HourPrices]) -> Result<()> {
    if scenarios.is_empty() {
        return Err(Error::InvalidArgument("no scenarios".into()));
    }
    let total: f64 = scenarios.iter().map(|s| s.probability).sum();
    if (total - 1.0).abs() > 1e-9 || scenarios.iter().any(|s| !(s.probability >= 0.0)) {
        return Err(Error::InvalidArgument(format!("scenario probabilities sum to {total}")));
    }
    for (w, sc) in scenarios.iter().enumerate() {
        if sc.hours.len() != prices.len() {
            return Err(Error::InvalidArgument(format!(
                "scenario {w} has {} hours, prices cover {}",
                sc.hours.len(),
                prices.len()
            )));
        }
        for (t, h) in sc.hours.iter().enumerate() {
            let at = format!("scenario {w}, hour {t}");
            if h.e_minus > h.e_plus {
                return Err(Error::InvalidArgument(format!("{at}: e_minus {} > e_plus {}", h.e_minus, h.e_plus)));
            }
            if h.p_plus < 0.0 || h.p_minus > 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{at}: power limits [{}, {}] must straddle zero",
                    h.p_minus, h.p_plus
                )));
            }
            if !(0.0..=1.0).contains(&h.s_up) || !(-1.0..=0.0).contains(&h.s_dn) {
                return Err(Error::InvalidArgument(format!("{at}: signal means out of range")));
            }
            if !(0.0..=1.0).contains(&h.dt_up) || (h.dt_up + h.dt_dn - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("{at}: durations must be fractions summing to 1")));
            }
            let vals = [h.mileage, h.p_plus, h.p_minus, h.e_minus, h.e_plus];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{at}: non-finite capacity")));
            }
        }
    }
    Ok(())
}

/// Builds the day-ahead MILP (maximization, $).
pub fn build_dayahead(
    scenarios: &[Scenario],
    prices: &[HourPrices],
    params: &DayAheadParams,
) -> Result<(MixedIntegerProgram, DayAheadLayout)> {
    validate(scenarios, prices)?;
    let (ec, ed) = (params.eta_c, params.eta_d);
    if !(ec > 0.0 && ec <= 1.0 && ed > 0.0 && ed <= 1.0) {
        return Err(Error::InvalidArgument("efficiencies must lie in (0, 1]".into()));
    }
    let t_n = prices.len();
    let w_n = scenarios.len();
    let scale = scenarios
        .iter()
        .flat_map(|s| s.hours.iter().map(|h| h.p_plus.max(-h.p_minus)))
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut lp = LinearProgram::new(Direction::Maximize);
    let mut p = Vec::with_capacity(t_n);
    let mut r_da = Vec::with_capacity(t_n);
    for (t, pr) in prices.iter().enumerate() {
        p.push(lp.add_col(format!("P_{t}"), -pr.c_e_da * scale, f64::NEG_INFINITY, f64::INFINITY));
        r_da.push(lp.add_col(format!("Rda_{t}"), -params.tie_break * scale, 0.0, f64::INFINITY));
    }
    let mut block = vec![vec![0usize; t_n]; w_n];
    let mut binaries = Vec::new();
    for (w, sc) in scenarios.iter().enumerate() {
        let pi = sc.probability;
        for (t, h) in sc.hours.iter().enumerate() {
            let pp = h.p_plus / scale;
            let pm = h.p_minus / scale;
            let rev = pi * (prices[t].c_rc + prices[t].c_rp * h.mileage) * scale;
            let first = lp.add_col(format!("R_{w}_{t}"), rev, 0.0, pp - pm);
            lp.add_col(format!("Pcu_{w}_{t}"), 0.0, 0.0, pp);
            lp.add_col(format!("Pcd_{w}_{t}"), 0.0, 0.0, pp);
            lp.add_col(format!("Pdu_{w}_{t}"), pi * params.c_d * h.dt_up * scale, pm, 0.0);
            lp.add_col(format!("Pdd_{w}_{t}"), pi * params.c_d * h.dt_dn * scale, pm, 0.0);
            binaries.push(lp.add_col(format!("Du_{w}_{t}"), 0.0, 0.0, 1.0));
            binaries.push(lp.add_col(format!("Dd_{w}_{t}"), 0.0, 0.0, 1.0));
            block[w][t] = first;
        }
    }
    for (w, sc) in scenarios.iter().enumerate() {
        let mut cumulative: Vec<(usize, f64)> = Vec::new();
        for (t, h) in sc.hours.iter().enumerate() {
            let b = block[w][t];
            let pp = h.p_plus / scale;
            let pm = h.p_minus / scale;
            for (s, pc, pd, d, tag) in [(h.s_up, PC_UP, PD_UP, D_UP, "u"), (h.s_dn, PC_DN, PD_DN, D_DN, "d")] {
                lp.add_row(
                    format!("bal{tag}_{w}_{t}"),
                    &[(p[t], 1.0), (b + R, -s), (b + pc, -1.0 / ec), (b + pd, -ed)],
                    RowSense::Eq,
                    0.0,
                );
                lp.add_row(format!("chg{tag}_{w}_{t}"), &[(b + pc, 1.0), (b + d, pp)], RowSense::Le, pp);
                lp.add_row(format!("dis{tag}_{w}_{t}"), &[(b + pd, 1.0), (b + d, -pm)], RowSense::Ge, 0.0);
            }
            cumulative.extend([
                (b + PC_UP, h.dt_up),
                (b + PD_UP, h.dt_up),
                (b + PC_DN, h.dt_dn),
                (b + PD_DN, h.dt_dn),
            ]);
            lp.add_row(
                format!("energy_{w}_{t}"),
                &cumulative,
                RowSense::Range(h.e_minus / scale),
                h.e_plus / scale,
            );
            lp.add_row(format!("cap_{w}_{t}"), &[(r_da[t], 1.0), (b + R, -1.0)], RowSense::Ge, 0.0);
        }
    }
    let layout = DayAheadLayout { hours: t_n, scenarios: w_n, scale, p, r_da, block };
    Ok((MixedIntegerProgram { lp, binaries }, layout))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayAheadSolution {
    /// Grid-side energy schedule, kW per hour.
    pub p_da: Vec<f64>,
    /// Day-ahead capacity offer, the largest scenario capacity of each hour.
    pub r_da: Vec<f64>,
    /// `[scenario][hour]` capacity.
    pub r_scenario: Vec<Vec<f64>>,
    /// `[scenario][hour]` resource energy at the end of the hour.
    pub energy: Vec<Vec<f64>>,
    pub objective: f64,
    pub regulation_revenue: f64,
    pub energy_cost: f64,
    pub degradation_cost: f64,
    pub mip_gap: f64,
    pub nodes: usize,
}

/// Solves the day-ahead problem.
pub fn solve_dayahead(
    scenarios: &[Scenario],
    prices: &[HourPrices],
    params: &DayAheadParams,
) -> Result<DayAheadSolution> {
    let (mip, lay) = build_dayahead(scenarios, prices, params)?;
    let res = solve_milp(&mip, &params.milp)?;
    let x = match (res.status, res.x.as_ref()) {
        (MilpStatus::Infeasible, _) => return Err(Error::Infeasible("day-ahead model has no feasible schedule".into())),
        (MilpStatus::Unbounded, _) => return Err(Error::Infeasible("day-ahead model is unbounded".into())),
        (_, Some(x)) => x,
        (_, None) => return Err(Error::Infeasible("node limit reached without an incumbent".into())),
    };
    let s = lay.scale;
    let p_da: Vec<f64> = lay.p.iter().map(|&j| x[j] * s).collect();
    let mut r_scenario = vec![vec![0.0; lay.hours]; lay.scenarios];
    let mut energy = vec![vec![0.0; lay.hours]; lay.scenarios];
    let mut regulation_revenue = 0.0;
    let mut degradation_cost = 0.0;
    for (w, sc) in scenarios.iter().enumerate() {
        let mut e = 0.0;
        for (t, h) in sc.hours.iter().enumerate() {
            let b = lay.block[w][t];
            let r = x[b + R] * s;
            r_scenario[w][t] = r;
            e += (h.dt_up * (x[b + PC_UP] + x[b + PD_UP]) + h.dt_dn * (x[b + PC_DN] + x[b + PD_DN])) * s;
            energy[w][t] = e;
            regulation_revenue += sc.probability * (prices[t].c_rc + prices[t].c_rp * h.mileage) * r;
            let discharged = -(h.dt_up * x[b + PD_UP] + h.dt_dn * x[b + PD_DN]) * s;
            degradation_cost += sc.probability * params.c_d * discharged;
        }
    }
    let r_da: Vec<f64> = (0..lay.hours)
        .map(|t| r_scenario.iter().map(|row| row[t]).fold(0.0, f64::max))
        .collect();
    let energy_cost: f64 = p_da.iter().zip(prices).map(|(p, pr)| p * pr.c_e_da).sum();
    Ok(DayAheadSolution {
        objective: regulation_revenue - energy_cost - degradation_cost,
        p_da,
        r_da,
        r_scenario,
        energy,
        regulation_revenue,
        energy_cost,
        degradation_cost,
        mip_gap: res.gap(),
        nodes: res.nodes,
    })
}
