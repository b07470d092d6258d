//! Hour-ahead capacity offer under distributionally robust chance
//! constraints, solved as an SOCP by Kelley cutting planes over an LP
//! master problem.
//!
//! The four constraints read `kappa_j * sqrt(X' G_j X) + d_j' X <= 0` with
//! `X = [R, P, 1]`. Each cone is positively homogeneous in `X`, so its
//! linearization at any point is a valid cut through the origin.

use regcap_solver::{Direction, LinearProgram, LpOutcome, LpSession, RowSense};
use serde::{Deserialize, Serialize};

use crate::dayahead::{HourPrices, ScenarioHour};
use crate::error::{Error, Result};
use crate::uncertainty::{
    adjusted_epsilon, assemble_moments, kappa12, kappa34, CapacityForecast, Efficiency, MomentData,
    SignalStatistics,
};

/// Cone tolerance, relative to the model's power scale.
pub const CONE_TOLERANCE: f64 = 1e-6;
pub const MAX_CUT_ROUNDS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Proposed,
    Robust,
    Determ,
    IgnoreEffi,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Proposed, Strategy::Robust, Strategy::Determ, Strategy::IgnoreEffi];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::Proposed => "proposed",
            Strategy::Robust => "robust",
            Strategy::Determ => "determ",
            Strategy::IgnoreEffi => "ignoreeffi",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|k| k.tag().eq_ignore_ascii_case(s))
    }
}

/// A later hour of the same day, used only to value the energy left at
/// the end of the offered hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FutureHour {
    pub prices: HourPrices,
    pub p_da: f64,
    pub r_da: f64,
    /// One entry per scenario, aligned with `HourAheadProblem::probabilities`.
    pub scenarios: Vec<ScenarioHour>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourAheadProblem {
    pub hour: usize,
    pub p_da: f64,
    pub r_da: f64,
    pub prices: HourPrices,
    pub stats: SignalStatistics,
    pub forecast: CapacityForecast,
    /// Mean and variance of the energy at the start of the hour.
    pub e0: (f64, f64),
    pub probabilities: Vec<f64>,
    /// Scenarios of the offered hour, used for the degradation estimate.
    pub scenarios: Vec<ScenarioHour>,
    /// Remaining hours; empty disables the look-ahead block.
    pub future: Vec<FutureHour>,
    pub eps: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub c_d: f64,
    pub squared_scaling: bool,
    /// Price of violating a look-ahead energy bound, $/kWh.
    pub future_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourAheadOffer {
    pub hour: usize,
    pub strategy: Strategy,
    pub r: f64,
    pub p: f64,
    pub objective: f64,
    pub regulation_revenue: f64,
    pub deviation_cost: f64,
    pub degradation_cost: f64,
    pub future_value: f64,
    /// `-g_j` of each cone at the offer; nonnegative when satisfied.
    pub cone_slack: [f64; 4],
    pub eps: f64,
    pub eps_adj: f64,
    pub rho: f64,
    pub saturated: bool,
    pub cuts: usize,
    pub converged: bool,
    pub note: Option<String>,
}

impl HourAheadOffer {
    /// Hour-t expected revenue: regulation minus deviation and degradation.
    pub fn expected_revenue(&self) -> f64 {
        self.regulation_revenue - self.deviation_cost - self.degradation_cost
    }
}

/// Cone data in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cones {
    pub kappa: [f64; 4],
    pub moments: MomentData,
}

impl Cones {
    /// `g_j(R, P)`; a point is feasible when every entry is `<= 0`.
    pub fn eval(&self, r: f64, p: f64) -> [f64; 4] {
        let x = [r, p, 1.0];
        let mut g = [0.0; 4];
        for (j, gj) in g.iter_mut().enumerate() {
            let d = &self.moments.d[j];
            let gm = &self.moments.gamma[j];
            let q: f64 = (0..3).map(|i| gm[i] * x[i] * x[i]).sum();
            *gj = self.kappa[j] * q.max(0.0).sqrt() + (0..3).map(|i| d[i] * x[i]).sum::<f64>();
        }
        g
    }

    /// Gradient of cone `j` at `(r, p, 1)`.
    pub fn gradient(&self, j: usize, r: f64, p: f64) -> [f64; 3] {
        let x = [r, p, 1.0];
        let d = &self.moments.d[j];
        let gm = &self.moments.gamma[j];
        let q: f64 = (0..3).map(|i| gm[i] * x[i] * x[i]).sum();
        let mut g = *d;
        if q > 0.0 && self.kappa[j] != 0.0 {
            let nrm = q.sqrt();
            for i in 0..3 {
                g[i] += self.kappa[j] * gm[i] * x[i] / nrm;
            }
        }
        g
    }
}

struct RiskInfo {
    eps_adj: f64,
    saturated: bool,
}

fn efficiency(problem: &HourAheadProblem, strategy: Strategy) -> Efficiency {
    if strategy == Strategy::IgnoreEffi {
        Efficiency { eta_c: 1.0, eta_d: 1.0 }
    } else {
        Efficiency { eta_c: problem.eta_c, eta_d: problem.eta_d }
    }
}

/// Cone data of a strategy.
pub fn strategy_cones(problem: &HourAheadProblem, strategy: Strategy) -> Result<Cones> {
    Ok(cones_and_risk(problem, strategy)?.0)
}

fn cones_and_risk(problem: &HourAheadProblem, strategy: Strategy) -> Result<(Cones, RiskInfo)> {
    let adj = adjusted_epsilon(problem.eps, problem.stats.rho)?;
    let risk = RiskInfo { eps_adj: adj.value, saturated: adj.saturated };
    let eff = efficiency(problem, strategy);
    let mut moments =
        assemble_moments(&problem.stats, &problem.forecast, problem.e0, eff, problem.p_da, problem.squared_scaling);
    let kappa = match strategy {
        Strategy::Proposed | Strategy::IgnoreEffi => {
            let k12 = kappa12(problem.eps);
            let k34 = kappa34(adj.value);
            [k12, k12, k34, k34]
        }
        Strategy::Determ => {
            moments.gamma = [[0.0; 3]; 4];
            [0.0; 4]
        }
        Strategy::Robust => {
            moments = robust_moments(problem);
            [0.0; 4]
        }
    };
    Ok((Cones { kappa, moments }, risk))
}

/// Worst-case linear constraints: instantaneous signal at +/-1, hourly mean
/// at its empirical extreme, capacities and start energy three standard
/// deviations against the offer.
fn robust_moments(problem: &HourAheadProblem) -> MomentData {
    let (ec, ed) = (problem.eta_c, problem.eta_d);
    let fc = &problem.forecast;
    let st = &problem.stats;
    let sd = |v: f64| 3.0 * v.max(0.0).sqrt();
    let p_plus = fc.mean_p_plus - sd(fc.var_p_plus);
    let p_minus = fc.mean_p_minus + sd(fc.var_p_minus);
    let e_minus = fc.mean_e_minus + sd(fc.var_e_minus);
    let e_plus = fc.mean_e_plus - sd(fc.var_e_plus);
    let e0_lo = problem.e0.0 - sd(problem.e0.1);
    let e0_hi = problem.e0.0 + sd(problem.e0.1);
    let k3 = (1.0 + ec * ed) / (2.0 * ed);
    let c3 = (1.0 - ec * ed) / (2.0 * ed);
    let p_coef3 = if problem.p_da >= 0.0 { -ec } else { -1.0 / ed };
    MomentData {
        d: [
            [ec, ec, -p_plus],
            [1.0 / ed, -1.0 / ed, p_minus],
            [k3 * st.max_sh + c3, p_coef3, -e0_lo + e_minus],
            [-ec * st.min_sh, ec, e0_hi - e_plus],
        ],
        gamma: [[0.0; 3]; 4],
    }
}

struct Master {
    lp: LinearProgram,
    scale: f64,
    r: usize,
    p: usize,
    /// Hour-t scenario discharge columns: (probability, dt_up, Pd_up, dt_dn, Pd_dn).
    discharge: Vec<(f64, f64, usize, f64, usize)>,
}

fn build_master(problem: &HourAheadProblem, eff: Efficiency) -> Result<Master> {
    let (ec, ed) = (eff.eta_c, eff.eta_d);
    let fc = &problem.forecast;
    let mut scale = fc.mean_p_plus.max(-fc.mean_p_minus).max(problem.r_da).max(problem.p_da.abs());
    for h in problem.scenarios.iter().chain(problem.future.iter().flat_map(|f| f.scenarios.iter())) {
        scale = scale.max(h.p_plus).max(-h.p_minus);
    }
    let s = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let nw = problem.probabilities.len();
    if problem.scenarios.len() != nw || problem.future.iter().any(|f| f.scenarios.len() != nw) {
        return Err(Error::InvalidArgument("scenario count differs from probability count".into()));
    }
    let pr = &problem.prices;
    let mut lp = LinearProgram::new(Direction::Maximize);
    let mbar = problem.stats.mean_mileage;
    let r = lp.add_col("R", (pr.c_rc + pr.c_rp * mbar) * s, 0.0, problem.r_da.max(0.0) / s);
    let (plo, phi) = if problem.p_da >= 0.0 { (0.0, f64::INFINITY) } else { (f64::NEG_INFINITY, 0.0) };
    let p = lp.add_col("P", 0.0, plo, phi);
    let dp = lp.add_col("dP", -pr.c_e_rt * s, 0.0, f64::INFINITY);
    lp.add_row("dev_lo", &[(dp, 1.0), (p, -1.0)], RowSense::Ge, -problem.p_da / s);
    lp.add_row("dev_hi", &[(dp, 1.0), (p, 1.0)], RowSense::Ge, problem.p_da / s);
    let mut discharge = Vec::with_capacity(nw);
    // Energy moved in the offered hour per scenario, as column terms.
    let mut hour_energy: Vec<Vec<(usize, f64)>> = Vec::with_capacity(nw);
    for (w, h) in problem.scenarios.iter().enumerate() {
        let pi = problem.probabilities[w];
        let cols = scenario_block(&mut lp, &format!("{}_{w}", problem.hour), h, pi, problem.c_d, s, ec, ed, p, r);
        discharge.push((pi, h.dt_up, cols[2], h.dt_dn, cols[3]));
        hour_energy.push(vec![
            (cols[0], h.dt_up),
            (cols[2], h.dt_up),
            (cols[1], h.dt_dn),
            (cols[3], h.dt_dn),
        ]);
    }
    if !problem.future.is_empty() {
        let e0 = problem.e0.0 / s;
        let pen = problem.future_penalty * s;
        let mut cumulative = hour_energy;
        for (k, fh) in problem.future.iter().enumerate() {
            let tau = problem.hour + 1 + k;
            // Later schedule changes are bought back at the real-time price.
            let p_tau = lp.add_col(format!("P_{tau}"), 0.0, f64::NEG_INFINITY, f64::INFINITY);
            let dp_tau = lp.add_col(format!("dP_{tau}"), -fh.prices.c_e_rt * s, 0.0, f64::INFINITY);
            lp.add_row(format!("dev_lo_{tau}"), &[(dp_tau, 1.0), (p_tau, -1.0)], RowSense::Ge, -fh.p_da / s);
            lp.add_row(format!("dev_hi_{tau}"), &[(dp_tau, 1.0), (p_tau, 1.0)], RowSense::Ge, fh.p_da / s);
            for (w, h) in fh.scenarios.iter().enumerate() {
                let pi = problem.probabilities[w];
                let rev = pi * (fh.prices.c_rc + fh.prices.c_rp * h.mileage) * s;
                let cap = ((h.p_plus - h.p_minus).max(0.0)).min(fh.r_da.max(0.0)) / s;
                let r_w = lp.add_col(format!("R_{tau}_{w}"), rev, 0.0, cap);
                let cols = scenario_block(&mut lp, &format!("{tau}_{w}"), h, pi, problem.c_d, s, ec, ed, p_tau, r_w);
                cumulative[w].extend([
                    (cols[0], h.dt_up),
                    (cols[2], h.dt_up),
                    (cols[1], h.dt_dn),
                    (cols[3], h.dt_dn),
                ]);
                let lo = lp.add_col(format!("slo_{tau}_{w}"), -pi * pen, 0.0, f64::INFINITY);
                let hi = lp.add_col(format!("shi_{tau}_{w}"), -pi * pen, 0.0, f64::INFINITY);
                let mut row = cumulative[w].clone();
                row.push((lo, 1.0));
                row.push((hi, -1.0));
                lp.add_row(
                    format!("energy_{tau}_{w}"),
                    &row,
                    RowSense::Range(h.e_minus / s - e0),
                    h.e_plus / s - e0,
                );
            }
        }
    }
    Ok(Master { lp, scale: s, r, p, discharge })
}

/// Adds balance and relaxed mode rows of one scenario hour; returns the
/// columns `[Pc_up, Pc_dn, Pd_up, Pd_dn]`.
#[allow(clippy::too_many_arguments)]
fn scenario_block(
    lp: &mut LinearProgram,
    tag: &str,
    h: &ScenarioHour,
    pi: f64,
    c_d: f64,
    s: f64,
    ec: f64,
    ed: f64,
    p: usize,
    r: usize,
) -> [usize; 4] {
    let pp = h.p_plus.max(0.0) / s;
    let pm = h.p_minus.min(0.0) / s;
    let pcu = lp.add_col(format!("Pcu_{tag}"), 0.0, 0.0, pp);
    let pcd = lp.add_col(format!("Pcd_{tag}"), 0.0, 0.0, pp);
    let pdu = lp.add_col(format!("Pdu_{tag}"), pi * c_d * h.dt_up * s, pm, 0.0);
    let pdd = lp.add_col(format!("Pdd_{tag}"), pi * c_d * h.dt_dn * s, pm, 0.0);
    for (sig, pc, pd, k) in [(h.s_up, pcu, pdu, "u"), (h.s_dn, pcd, pdd, "d")] {
        lp.add_row(
            format!("bal{k}_{tag}"),
            &[(p, 1.0), (r, -sig), (pc, -1.0 / ec), (pd, -ed)],
            RowSense::Eq,
            0.0,
        );
        if pp > 0.0 && pm < 0.0 {
            // Binary mode selection relaxed to its convex hull.
            lp.add_row(format!("mode{k}_{tag}"), &[(pc, 1.0 / pp), (pd, 1.0 / pm)], RowSense::Le, 1.0);
        }
    }
    [pcu, pcd, pdu, pdd]
}

/// Solves the hour-ahead problem for `strategy`.
pub fn solve_hourahead(problem: &HourAheadProblem, strategy: Strategy) -> Result<HourAheadOffer> {
    if !(problem.r_da >= 0.0) {
        return Err(Error::InvalidArgument(format!("r_da = {} must be nonnegative", problem.r_da)));
    }
    let total: f64 = problem.probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("scenario probabilities sum to {total}")));
    }
    let (cones, risk) = cones_and_risk(problem, strategy)?;
    let eff = efficiency(problem, strategy);
    let master = build_master(problem, eff)?;
    let s = master.scale;
    let mut session = LpSession::new(master.lp.clone())?;
    // Linear parts first: the norm term is nonnegative.
    for j in 0..4 {
        add_cut(&mut session, &master, cones.moments.d[j]);
    }
    let mut cuts = 4;
    let mut converged = false;
    let mut note = None;
    let mut last = None;
    for round in 0..=MAX_CUT_ROUNDS {
        let sol = match session.solve()? {
            LpOutcome::Optimal(sol) => sol,
            LpOutcome::Infeasible { .. } => {
                if strategy == Strategy::Robust {
                    return Ok(zero_offer(problem, strategy, &cones, &risk, "robust model infeasible"));
                }
                return Err(Error::Infeasible(format!("hour {} offer has no feasible point", problem.hour)));
            }
            LpOutcome::Unbounded { .. } => {
                return Err(Error::Infeasible(format!("hour {} master problem is unbounded", problem.hour)))
            }
        };
        let (r, p) = (sol.x[master.r] * s, sol.x[master.p] * s);
        let g = cones.eval(r, p);
        let worst = g.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) / s;
        last = Some(sol);
        if worst <= CONE_TOLERANCE {
            converged = true;
            break;
        }
        if round == MAX_CUT_ROUNDS {
            break;
        }
        for (j, &gj) in g.iter().enumerate() {
            if gj / s > CONE_TOLERANCE {
                add_cut(&mut session, &master, cones.gradient(j, r, p));
                cuts += 1;
            }
        }
    }
    let sol = last.expect("at least one master solve");
    // Round-off can leave the master solution a hair outside its box.
    let mut r = (sol.x[master.r] * s).clamp(0.0, problem.r_da);
    let p = if problem.p_da >= 0.0 { (sol.x[master.p] * s).max(0.0) } else { (sol.x[master.p] * s).min(0.0) };
    if !converged {
        // Pull the capacity back along the segment to R = 0.
        let ok = |rr: f64| cones.eval(rr, p).iter().all(|&g| g / s <= CONE_TOLERANCE);
        if ok(0.0) {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if ok(mid * r) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            r *= lo;
        } else {
            r = 0.0;
        }
        note = Some(format!("cut limit reached; capacity reduced to {r:.6}"));
    }
    let pr = &problem.prices;
    let regulation_revenue = (pr.c_rc + pr.c_rp * problem.stats.mean_mileage) * r;
    let deviation_cost = pr.c_e_rt * (p - problem.p_da).abs();
    let degradation_cost: f64 = master
        .discharge
        .iter()
        .map(|&(pi, du, pdu, dd, pdd)| -pi * problem.c_d * (du * sol.x[pdu] + dd * sol.x[pdd]) * s)
        .sum();
    let hour_value = regulation_revenue - deviation_cost - degradation_cost;
    let g = cones.eval(r, p);
    Ok(HourAheadOffer {
        hour: problem.hour,
        strategy,
        r,
        p,
        objective: sol.objective,
        regulation_revenue,
        deviation_cost,
        degradation_cost,
        future_value: sol.objective - hour_value,
        cone_slack: g.map(|v| -v),
        eps: problem.eps,
        eps_adj: risk.eps_adj,
        rho: problem.stats.rho,
        saturated: risk.saturated,
        cuts,
        converged,
        note,
    })
}

fn add_cut(session: &mut LpSession, master: &Master, grad: [f64; 3]) {
    session.add_cut(&[(master.r, grad[0]), (master.p, grad[1])], RowSense::Le, -grad[2] / master.scale);
}

fn zero_offer(problem: &HourAheadProblem, strategy: Strategy, cones: &Cones, risk: &RiskInfo, why: &str) -> HourAheadOffer {
    let p = problem.p_da;
    HourAheadOffer {
        hour: problem.hour,
        strategy,
        r: 0.0,
        p,
        objective: 0.0,
        regulation_revenue: 0.0,
        deviation_cost: 0.0,
        degradation_cost: 0.0,
        future_value: 0.0,
        cone_slack: cones.eval(0.0, p).map(|v| -v),
        eps: problem.eps,
        eps_adj: risk.eps_adj,
        rho: problem.stats.rho,
        saturated: risk.saturated,
        cuts: 0,
        converged: false,
        note: Some(why.to_string()),
    }
}

/// Worst-case benchmark.
pub fn robust_offer(problem: &HourAheadProblem) -> Result<HourAheadOffer> {
    solve_hourahead(problem, Strategy::Robust)
}

/// Mean-value benchmark.
pub fn deterministic_offer(problem: &HourAheadProblem) -> Result<HourAheadOffer> {
    solve_hourahead(problem, Strategy::Determ)
}

/// Proposed method with unit efficiencies at the offering stage.
pub fn ignore_efficiency_offer(problem: &HourAheadProblem) -> Result<HourAheadOffer> {
    solve_hourahead(problem, Strategy::IgnoreEffi)
}
