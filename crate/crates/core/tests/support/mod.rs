//! Instance generators and brute-force oracles shared by the integration
//! tests and the acceptance suite.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regcap::dayahead::{DayAheadParams, HourPrices, Scenario, ScenarioHour};
use regcap::hourahead::HourAheadProblem;
use regcap::uncertainty::{CapacityForecast, SignalStatistics};
use regcap_solver::{Direction, LinearProgram, LpOutcome, LpSession, RowSense};

pub fn random_prices(rng: &mut ChaCha8Rng, hours: usize) -> Vec<HourPrices> {
    (0..hours)
        .map(|_| {
            let c_e_da = rng.gen_range(0.02..0.06);
            HourPrices {
                c_e_da,
                c_e_rt: c_e_da * rng.gen_range(1.0..1.4),
                c_rc: rng.gen_range(0.005..0.04),
                c_rp: rng.gen_range(0.0..3e-4),
            }
        })
        .collect()
}

/// Scenario with a traversable energy corridor.
pub fn random_scenario(rng: &mut ChaCha8Rng, hours: usize, probability: f64) -> Scenario {
    let mut lo = 0.0;
    let mut hi = 0.0;
    let hours = (0..hours)
        .map(|_| {
            let p_plus: f64 = rng.gen_range(5.0..20.0);
            let p_minus = if rng.gen_bool(0.8) { -p_plus * rng.gen_range(0.3..1.0) } else { 0.0 };
            lo += rng.gen_range(0.0..0.5) * p_plus;
            hi = f64::max(hi + rng.gen_range(0.2..0.9) * p_plus, lo + rng.gen_range(0.5..4.0));
            let dt_up = rng.gen_range(0.3..0.7);
            ScenarioHour {
                s_up: rng.gen_range(0.05..0.9),
                s_dn: -rng.gen_range(0.05..0.9),
                dt_up,
                dt_dn: 1.0 - dt_up,
                mileage: rng.gen_range(0.0..200.0),
                p_plus,
                p_minus,
                e_minus: lo,
                e_plus: hi,
            }
        })
        .collect();
    Scenario { probability, hours }
}

pub fn random_dayahead(seed: u64, hours: usize, scenarios: usize) -> (Vec<Scenario>, Vec<HourPrices>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prices = random_prices(&mut rng, hours);
    let raw: Vec<f64> = (0..scenarios).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let sc = raw.iter().map(|w| random_scenario(&mut rng, hours, w / total)).collect();
    (sc, prices)
}

/// Day-ahead optimum by enumerating every charge/discharge mode pattern.
/// Each pattern is an LP written without binaries: in charge mode the
/// discharge power is pinned to zero and vice versa. Patterns are visited
/// in Gray-code order so each step flips one mode and the LP is re-solved
/// from the previous basis.
pub fn enumerate_dayahead(scenarios: &[Scenario], prices: &[HourPrices], params: &DayAheadParams) -> Option<f64> {
    let (ec, ed) = (params.eta_c, params.eta_d);
    let nt = prices.len();
    let mut lp = LinearProgram::new(Direction::Maximize);
    let p: Vec<usize> = (0..nt).map(|t| lp.add_col(format!("p{t}"), -prices[t].c_e_da, f64::NEG_INFINITY, f64::INFINITY)).collect();
    let rda: Vec<usize> = (0..nt).map(|t| lp.add_col(format!("rda{t}"), -params.tie_break, 0.0, f64::INFINITY)).collect();
    // (charge column, discharge column, charge upper bound, discharge lower bound)
    let mut modes: Vec<(usize, usize, f64, f64)> = Vec::new();
    for (w, sc) in scenarios.iter().enumerate() {
        let mut cum: Vec<(usize, f64)> = Vec::new();
        for (t, h) in sc.hours.iter().enumerate() {
            let rev = sc.probability * (prices[t].c_rc + prices[t].c_rp * h.mileage);
            let r = lp.add_col(format!("r{w}_{t}"), rev, 0.0, h.p_plus - h.p_minus);
            lp.add_row(format!("cap{w}_{t}"), &[(rda[t], 1.0), (r, -1.0)], RowSense::Ge, 0.0);
            for (s, dt) in [(h.s_up, h.dt_up), (h.s_dn, h.dt_dn)] {
                let c = lp.add_col("c", 0.0, 0.0, h.p_plus);
                let d = lp.add_col("d", sc.probability * params.c_d * dt, h.p_minus, 0.0);
                // Grid power P - s R splits into charge / eta_c + discharge * eta_d.
                lp.add_row("bal", &[(p[t], 1.0), (r, -s), (c, -1.0 / ec), (d, -ed)], RowSense::Eq, 0.0);
                cum.push((c, dt));
                cum.push((d, dt));
                modes.push((c, d, h.p_plus, h.p_minus));
            }
            lp.add_row(format!("e{w}_{t}"), &cum, RowSense::Range(h.e_minus), h.e_plus);
        }
    }
    let n = modes.len();
    assert!(n <= 20, "enumeration over {n} modes is too large");
    let set = |session: &mut LpSession, k: usize, discharge: bool| {
        let (c, d, cu, dl) = modes[k];
        if discharge {
            session.set_col_bounds(c, 0.0, 0.0);
            session.set_col_bounds(d, dl, 0.0);
        } else {
            session.set_col_bounds(c, 0.0, cu);
            session.set_col_bounds(d, 0.0, 0.0);
        }
    };
    let mut session = LpSession::new(lp).expect("valid oracle model");
    for k in 0..n {
        set(&mut session, k, false);
    }
    let mut best: Option<f64> = None;
    let mut gray = 0u32;
    for i in 0u32..(1 << n) {
        if i > 0 {
            let k = i.trailing_zeros() as usize;
            gray ^= 1 << k;
            set(&mut session, k, gray & (1 << k) != 0);
        }
        if let LpOutcome::Optimal(sol) = session.solve().expect("oracle LP solve") {
            best = Some(best.map_or(sol.objective, |b: f64| b.max(sol.objective)));
        }
    }
    best
}

pub fn random_stats(rng: &mut ChaCha8Rng) -> SignalStatistics {
    let mean_sh = rng.gen_range(-0.1..0.1);
    SignalStatistics {
        mean_s1: rng.gen_range(-0.1..0.1),
        var_s1: rng.gen_range(0.02..0.3),
        mean_sh,
        var_sh: rng.gen_range(0.001..0.03),
        rho: rng.gen_range(0.0..0.05),
        mean_mileage: rng.gen_range(10.0..150.0),
        min_sh: mean_sh - rng.gen_range(0.1..0.4),
        max_sh: mean_sh + rng.gen_range(0.1..0.4),
        n_hours: 200,
        bins: 50,
    }
}

/// Hour-ahead instance without a future block.
pub fn random_hourahead(seed: u64, eps: f64) -> HourAheadProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prices = random_prices(&mut rng, 1)[0];
    let nw = rng.gen_range(1..4);
    let raw: Vec<f64> = (0..nw).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let probabilities: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let scenarios: Vec<ScenarioHour> =
        probabilities.iter().map(|&pi| random_scenario(&mut rng, 1, pi).hours[0]).collect();
    let pp: f64 = rng.gen_range(200.0..2000.0);
    let e_lo = rng.gen_range(0.0..0.3) * pp;
    let width = rng.gen_range(0.1..1.0) * pp;
    let e0_mean = rng.gen_range(-0.2..0.2) * pp;
    let sd = rng.gen_range(0.01..0.08);
    let forecast = CapacityForecast {
        mean_p_plus: pp,
        var_p_plus: (sd * pp).powi(2),
        mean_p_minus: -pp,
        var_p_minus: (sd * pp).powi(2),
        mean_e_minus: e_lo + e0_mean,
        var_e_minus: (sd * width).powi(2),
        mean_e_plus: e_lo + width + e0_mean,
        var_e_plus: (sd * width).powi(2),
    };
    let p_da = if rng.gen_bool(0.8) { rng.gen_range(0.0..0.5) * pp } else { -rng.gen_range(0.0..0.3) * pp };
    let scale = pp / 20.0;
    let scenarios = scenarios
        .into_iter()
        .map(|h| ScenarioHour {
            p_plus: h.p_plus * scale,
            p_minus: h.p_minus * scale,
            e_minus: h.e_minus * scale,
            e_plus: h.e_plus * scale,
            ..h
        })
        .collect();
    HourAheadProblem {
        hour: 0,
        p_da,
        r_da: rng.gen_range(0.2..1.5) * pp,
        prices,
        stats: random_stats(&mut rng),
        forecast,
        e0: (e0_mean, (sd * pp * rng.gen_range(0.0..0.5)).powi(2)),
        probabilities,
        scenarios,
        future: Vec::new(),
        eps,
        eta_c: 0.92,
        eta_d: 0.92,
        c_d: 4.1 / 24.0,
        squared_scaling: false,
        future_penalty: 1.0,
    }
}

/// Hour value of `(R, P)` written out directly: capacity revenue, real-time
/// deviation and the cheapest degradation over the relaxed scenario modes.
/// `None` when some scenario cannot absorb the grid power.
pub fn hour_value(pb: &HourAheadProblem, eta: (f64, f64), r: f64, p: f64) -> Option<f64> {
    let (ec, ed) = eta;
    let pr = &pb.prices;
    let mut value = (pr.c_rc + pr.c_rp * pb.stats.mean_mileage) * r - pr.c_e_rt * (p - pb.p_da).abs();
    for (h, &pi) in pb.scenarios.iter().zip(&pb.probabilities) {
        let pp = h.p_plus.max(0.0);
        let pm = h.p_minus.min(0.0);
        for (s, dt) in [(h.s_up, h.dt_up), (h.s_dn, h.dt_dn)] {
            let y = p - s * r;
            if y > pp / ec + 1e-9 * pp.max(1.0) || y < pm * ed - 1e-9 * pm.abs().max(1.0) {
                return None;
            }
            // Charging costs nothing; discharging y < 0 draws y / eta_d.
            value -= pi * pb.c_d * dt * (-y).max(0.0) / ed;
        }
    }
    Some(value)
}

/// `kappa * sqrt(sum gamma_i x_i^2) + sum d_i x_i` for every cone.
pub fn cone_values(kappa: [f64; 4], d: [[f64; 3]; 4], gamma: [[f64; 3]; 4], r: f64, p: f64) -> [f64; 4] {
    let x = [r, p, 1.0];
    let mut g = [0.0; 4];
    for j in 0..4 {
        let q: f64 = (0..3).map(|i| gamma[j][i] * x[i] * x[i]).sum();
        g[j] = kappa[j] * q.sqrt() + (0..3).map(|i| d[j][i] * x[i]).sum::<f64>();
    }
    g
}

/// Best point of `f` over a uniform grid of `n` capacities in `r` and, for
/// each capacity, the powers returned by `p_cands`.
pub fn grid_max<F, C>(f: &F, p_cands: &C, r: (f64, f64), n: usize) -> Option<(f64, f64, f64)>
where
    F: Fn(f64, f64) -> Option<f64>,
    C: Fn(f64) -> Vec<f64>,
{
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..n {
        let rr = r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64;
        for pp in p_cands(rr) {
            if let Some(v) = f(rr, pp) {
                if best.is_none_or(|b| v > b.0) {
                    best = Some((v, rr, pp));
                }
            }
        }
    }
    best
}

/// Grid search followed by two zoomed passes in `R` around the incumbent.
pub fn grid_search<F, C>(f: &F, p_cands: &C, r: (f64, f64), n: usize) -> Option<(f64, f64, f64)>
where
    F: Fn(f64, f64) -> Option<f64>,
    C: Fn(f64) -> Vec<f64>,
{
    let mut best = grid_max(f, p_cands, r, n)?;
    let mut w = (r.1 - r.0) / (n - 1) as f64;
    for _ in 0..2 {
        let rr = ((best.1 - 2.0 * w).max(r.0), (best.1 + 2.0 * w).min(r.1));
        if let Some(b) = grid_max(f, p_cands, rr, 201) {
            if b.0 > best.0 {
                best = b;
            }
        }
        w = (rr.1 - rr.0) / 200.0;
    }
    Some(best)
}

/// Hour-ahead oracle with the future block off: maximizes `hour_value` over
/// the cone-feasible part of `[0, R_da] x` (half line of P_da's sign).
///
/// Power candidates at a fixed capacity are `n` uniform points plus every
/// breakpoint of the problem along that line: where a cone turns tight
/// (no cone has a P variance term, so each is linear in P there), P_da, and
/// the scenario kinks and limits of `P - s R`.
pub fn hour_oracle(
    pb: &HourAheadProblem,
    eta: (f64, f64),
    kappa: [f64; 4],
    d: [[f64; 3]; 4],
    gamma: [[f64; 3]; 4],
    tol: f64,
    n: usize,
) -> Option<(f64, f64, f64)> {
    assert!(gamma.iter().all(|g| g[1] == 0.0), "cone with a power variance term");
    let (ec, ed) = eta;
    let pmax = 2.0 * pb.forecast.mean_p_plus.max(-pb.forecast.mean_p_minus).max(pb.p_da.abs());
    let prange = if pb.p_da >= 0.0 { (0.0, pmax) } else { (-pmax, 0.0) };
    let f = |r: f64, p: f64| {
        let g = cone_values(kappa, d, gamma, r, p);
        if g.iter().any(|&v| v > tol) {
            return None;
        }
        hour_value(pb, eta, r, p)
    };
    let cands = |r: f64| {
        let mut ps: Vec<f64> = (0..n).map(|k| prange.0 + (prange.1 - prange.0) * k as f64 / (n - 1) as f64).collect();
        for j in 0..4 {
            if d[j][1] != 0.0 {
                let rest = kappa[j] * (gamma[j][0] * r * r + gamma[j][2]).sqrt() + d[j][0] * r + d[j][2];
                ps.push((tol - rest) / d[j][1]);
            }
        }
        ps.push(pb.p_da);
        for h in &pb.scenarios {
            for s in [h.s_up, h.s_dn] {
                ps.push(s * r);
                ps.push(s * r + h.p_plus.max(0.0) / ec);
                ps.push(s * r + h.p_minus.min(0.0) * ed);
            }
        }
        ps.retain(|p| (prange.0..=prange.1).contains(p));
        ps
    };
    grid_search(&f, &cands, (0.0, pb.r_da), n)
}
