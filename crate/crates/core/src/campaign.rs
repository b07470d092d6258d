//! Multi-day offering and operation campaign comparing strategies.
//!
//! Each day is an independent horizon starting at `fleet.start_hour` with
//! an empty fleet (cumulative energy 0). One day-ahead solve per day is
//! shared by every strategy; each strategy then re-offers hour by hour and
//! is operated against the same realized fleet and signals.
//!
//! Seeds: every random stream is `derive_seed(seed, [stream, day, k])`, so
//! results do not depend on which strategies run or in what order.

use regcap_solver::MilpOptions;
use serde::{Deserialize, Serialize};

use crate::dayahead::{solve_dayahead, DayAheadParams, DayAheadSolution, HourPrices, Scenario, ScenarioHour};
use crate::error::{Error, Result};
use crate::fleetgen::{
    forecast, generate_scenarios, realize_fleet, CapacityHour, synthetic_prices, synthetic_signals, FleetConfig,
    FleetEnvelope, SignalGenConfig,
};
use crate::hourahead::{solve_hourahead, FutureHour, HourAheadProblem, Strategy};
use crate::signals::{aggregate, HourSignal, DEFAULT_SAMPLES_PER_HOUR};
use crate::signals::mileage;
use crate::simulator::{dispatch, performance_score, settle, DispatchOutcome, DispatchParams, HourEnvelope, Score};
use crate::uncertainty::{estimate_e0, fit_signal_stats, CapacityForecast, SignalStatistics, DEFAULT_BINS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub fleet: FleetConfig,
    pub signals: SignalGenConfig,
    pub samples_per_hour: usize,
    /// Archived signal hours used for statistics, scenarios and replay.
    pub history_hours: usize,
    pub scenarios: usize,
    pub eps: f64,
    pub bins: usize,
    pub c_d: f64,
    pub squared_scaling: bool,
    /// Values end-of-hour energy with the remaining day-ahead hours.
    pub lookahead: bool,
    pub future_penalty: f64,
    /// Archived hours replayed to estimate the start energy of each hour.
    pub e0_trajectories: usize,
    pub relative_gap: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            fleet: FleetConfig::default(),
            signals: SignalGenConfig::default(),
            samples_per_hour: DEFAULT_SAMPLES_PER_HOUR,
            history_hours: 200,
            scenarios: 3,
            eps: 0.2,
            bins: DEFAULT_BINS,
            c_d: 4.1 / 24.0,
            squared_scaling: false,
            lookahead: true,
            future_penalty: 1.0,
            e0_trajectories: 30,
            relative_gap: 1e-6,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 0.5) {
            return Err(Error::InvalidArgument(format!("eps = {} must lie in (0, 0.5]", self.eps)));
        }
        if self.samples_per_hour < 2 || self.history_hours < 2 || self.scenarios == 0 || self.e0_trajectories == 0 {
            return Err(Error::InvalidArgument(
                "samples_per_hour and history_hours must be >= 2, scenarios and e0_trajectories >= 1".into(),
            ));
        }
        if !(self.c_d >= 0.0 && self.future_penalty >= 0.0) {
            return Err(Error::InvalidArgument("c_d and future_penalty must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn dispatch_params(&self) -> DispatchParams {
        DispatchParams { eta_c: self.fleet.eta, eta_d: self.fleet.eta }
    }
}

const STREAM_HISTORY: u64 = 1;
const STREAM_PRICES: u64 = 2;
const STREAM_SCEN_FLEET: u64 = 3;
const STREAM_SCEN_SIGNAL: u64 = 4;
const STREAM_REAL_FLEET: u64 = 5;
const STREAM_REAL_SIGNAL: u64 = 6;
const STREAM_REPLAY: u64 = 7;

/// SplitMix64 over the seed and a list of tags.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ mix(t)))
}

/// Everything shared by all strategies on one day.
#[derive(Debug, Clone)]
pub struct DayInputs {
    pub prices: Vec<HourPrices>,
    pub scenarios: Vec<Scenario>,
    pub forecast_envelope: FleetEnvelope,
    pub realized_envelope: FleetEnvelope,
    pub realized_signals: Vec<HourSignal>,
    pub dayahead: DayAheadSolution,
}

/// Signal archive and its statistics, fixed for a whole campaign.
#[derive(Debug, Clone)]
pub struct History {
    pub hours: Vec<HourSignal>,
    pub stats: SignalStatistics,
}

pub fn build_history(cfg: &CampaignConfig, seed: u64) -> Result<History> {
    let hours = synthetic_signals(
        &cfg.signals,
        cfg.history_hours,
        cfg.samples_per_hour,
        0,
        derive_seed(seed, &[STREAM_HISTORY]),
    );
    let stats = fit_signal_stats(&hours, cfg.bins)?;
    Ok(History { hours, stats })
}

fn pick(seed: u64, n: usize) -> usize {
    (seed % n as u64) as usize
}

/// Synthetic prices of a campaign day.
pub fn day_prices(cfg: &CampaignConfig, seed: u64, day: usize) -> Vec<HourPrices> {
    synthetic_prices(cfg.fleet.hours, cfg.fleet.start_hour, derive_seed(seed, &[STREAM_PRICES, day as u64]))
}

/// Day-ahead scenarios: fleet draws paired with archived signal hours.
pub fn day_scenarios(cfg: &CampaignConfig, history: &History, seed: u64, day: usize) -> Result<Vec<Scenario>> {
    let d = day as u64;
    let envs = generate_scenarios(&cfg.fleet, cfg.scenarios, derive_seed(seed, &[STREAM_SCEN_FLEET, d]))?;
    let aggregates = history.hours.iter().map(aggregate).collect::<Result<Vec<_>>>()?;
    let prob = 1.0 / cfg.scenarios as f64;
    Ok(envs
        .iter()
        .enumerate()
        .map(|(w, env)| Scenario {
            probability: prob,
            hours: env
                .hours
                .iter()
                .enumerate()
                .map(|(t, c)| {
                    let k = pick(derive_seed(seed, &[STREAM_SCEN_SIGNAL, d, w as u64, t as u64]), aggregates.len());
                    let a = &aggregates[k];
                    ScenarioHour {
                        s_up: a.s_up,
                        s_dn: a.s_dn,
                        dt_up: a.dt_up,
                        dt_dn: a.dt_dn,
                        mileage: a.mileage,
                        p_plus: c.p_plus,
                        p_minus: c.p_minus,
                        e_minus: c.e_minus,
                        e_plus: c.e_plus,
                    }
                })
                .collect(),
        })
        .collect())
}

/// Probability-weighted mean capacity envelope of the scenarios.
pub fn scenario_envelope(scenarios: &[Scenario]) -> Result<FleetEnvelope> {
    let n_t = scenarios.first().map_or(0, |s| s.hours.len());
    if scenarios.is_empty() || scenarios.iter().any(|s| s.hours.len() != n_t) {
        return Err(Error::InvalidArgument("scenarios must be nonempty and cover the same hours".into()));
    }
    let mut hours = vec![CapacityHour { p_plus: 0.0, p_minus: 0.0, e_minus: 0.0, e_plus: 0.0 }; n_t];
    for sc in scenarios {
        for (acc, h) in hours.iter_mut().zip(&sc.hours) {
            acc.p_plus += sc.probability * h.p_plus;
            acc.p_minus += sc.probability * h.p_minus;
            acc.e_minus += sc.probability * h.e_minus;
            acc.e_plus += sc.probability * h.e_plus;
        }
    }
    Ok(FleetEnvelope { hours })
}

/// Realized fleet of a campaign day.
pub fn day_realized_fleet(cfg: &CampaignConfig, seed: u64, day: usize) -> Result<FleetEnvelope> {
    realize_fleet(&cfg.fleet, derive_seed(seed, &[STREAM_REAL_FLEET, day as u64]))
}

/// Realized signals of a campaign day, hour ids continuing across days.
pub fn day_signals(cfg: &CampaignConfig, seed: u64, day: usize) -> Vec<HourSignal> {
    let hours = cfg.fleet.hours;
    synthetic_signals(
        &cfg.signals,
        hours,
        cfg.samples_per_hour,
        (day * hours) as u32,
        derive_seed(seed, &[STREAM_REAL_SIGNAL, day as u64]),
    )
}

pub fn dayahead_params(cfg: &CampaignConfig) -> DayAheadParams {
    DayAheadParams {
        eta_c: cfg.fleet.eta,
        eta_d: cfg.fleet.eta,
        c_d: cfg.c_d,
        milp: MilpOptions { relative_gap: cfg.relative_gap, ..MilpOptions::default() },
        ..DayAheadParams::default()
    }
}

/// Builds the day's shared inputs and solves the day-ahead problem.
pub fn prepare_day(cfg: &CampaignConfig, history: &History, seed: u64, day: usize) -> Result<DayInputs> {
    let prices = day_prices(cfg, seed, day);
    let scenarios = day_scenarios(cfg, history, seed, day)?;
    let forecast_envelope = scenario_envelope(&scenarios)?;
    let realized_envelope = day_realized_fleet(cfg, seed, day)?;
    let realized_signals = day_signals(cfg, seed, day);
    let dayahead = solve_dayahead(&scenarios, &prices, &dayahead_params(cfg))?;
    Ok(DayInputs { prices, scenarios, forecast_envelope, realized_envelope, realized_signals, dayahead })
}

/// One operated hour of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourRecord {
    pub strategy: Strategy,
    pub eps: f64,
    pub day: usize,
    pub hour: usize,
    pub r: f64,
    pub p: f64,
    pub p_da: f64,
    pub r_da: f64,
    pub score_raw: f64,
    pub score: f64,
    pub clamped_steps: usize,
    pub infeasible_steps: usize,
    pub expected_revenue: f64,
    pub regulation_revenue: f64,
    pub deviation_cost: f64,
    pub degradation_cost: f64,
    pub actual_revenue: f64,
    pub energy_end: f64,
    /// The optimizer failed and the hour was offered at `R = 0, P = P_da`.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub strategy: Strategy,
    pub day: usize,
    pub offer_mwh: f64,
    /// Mean clamped score over hours with `R > 0`; 1 when none.
    pub score: f64,
    pub revenue_usd: f64,
    pub expected_usd: f64,
    pub regulated_hours: usize,
    pub violated_hours: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub days: usize,
    pub offer_mwh_per_day: f64,
    /// Mean clamped score over all hours with `R > 0`.
    pub score: f64,
    pub revenue_usd_per_day: f64,
    pub expected_usd_per_day: f64,
    /// Share of regulated hours with at least one clamped step.
    pub violation_rate: f64,
    pub fallback_hours: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub hours: Vec<HourRecord>,
    pub days: Vec<DayRecord>,
    pub summary: Vec<StrategySummary>,
}

/// Hour-ahead problem of hour `t` built from day-ahead inputs.
#[allow(clippy::too_many_arguments)]
pub fn hour_problem(
    cfg: &CampaignConfig,
    stats: &SignalStatistics,
    scenarios: &[Scenario],
    prices: &[HourPrices],
    da: &DayAheadSolution,
    forecast: &[CapacityForecast],
    t: usize,
    e0: (f64, f64),
) -> Result<HourAheadProblem> {
    let n_hours = prices.len();
    if t >= n_hours || da.p_da.len() != n_hours || forecast.len() != n_hours {
        return Err(Error::InvalidArgument(format!(
            "hour {t} outside a horizon of {n_hours} hours, or inputs of different lengths"
        )));
    }
    if scenarios.iter().any(|s| s.hours.len() != n_hours) {
        return Err(Error::InvalidArgument("scenarios and prices cover different horizons".into()));
    }
    let hour_of = |k: usize| scenarios.iter().map(|s| s.hours[k]).collect::<Vec<_>>();
    let future = if cfg.lookahead {
        (t + 1..n_hours)
            .map(|k| FutureHour { prices: prices[k], p_da: da.p_da[k], r_da: da.r_da[k], scenarios: hour_of(k) })
            .collect()
    } else {
        Vec::new()
    };
    Ok(HourAheadProblem {
        hour: t,
        p_da: da.p_da[t],
        r_da: da.r_da[t],
        prices: prices[t],
        stats: *stats,
        forecast: forecast[t],
        e0,
        probabilities: scenarios.iter().map(|s| s.probability).collect(),
        scenarios: hour_of(t),
        future,
        eps: cfg.eps,
        eta_c: cfg.fleet.eta,
        eta_d: cfg.fleet.eta,
        c_d: cfg.c_d,
        squared_scaling: cfg.squared_scaling,
        future_penalty: cfg.future_penalty,
    })
}

/// An hour's offer as operated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatedOffer {
    pub strategy: Strategy,
    pub day: usize,
    pub hour: usize,
    pub r: f64,
    pub p: f64,
    pub p_da: f64,
    pub r_da: f64,
    pub expected_revenue: f64,
    pub fallback: bool,
}

/// Dispatches one offer against a realized hour and settles it.
pub fn operate_hour(
    cfg: &CampaignConfig,
    offer: &OperatedOffer,
    prices: &HourPrices,
    signal: &HourSignal,
    envelope: &HourEnvelope,
    e_start: f64,
) -> (HourRecord, DispatchOutcome) {
    let (r, p) = (offer.r, offer.p);
    let out = dispatch(&signal.samples, p, r, envelope, e_start, cfg.dispatch_params());
    let score = if r > 0.0 { performance_score(&signal.samples, &out.realized) } else { Score { raw: 1.0, clamped: 1.0 } };
    let instructed = r * signal.samples.iter().sum::<f64>() / signal.samples.len().max(1) as f64;
    let st = settle(
        score.clamped,
        r,
        mileage(&signal.samples),
        prices,
        out.grid_energy + instructed,
        offer.p_da,
        out.discharged_energy,
        cfg.c_d,
    );
    let record = HourRecord {
        strategy: offer.strategy,
        eps: cfg.eps,
        day: offer.day,
        hour: offer.hour,
        r,
        p,
        p_da: offer.p_da,
        r_da: offer.r_da,
        score_raw: score.raw,
        score: score.clamped,
        clamped_steps: out.clamped_steps,
        infeasible_steps: out.infeasible_steps,
        expected_revenue: offer.expected_revenue,
        regulation_revenue: st.regulation_revenue,
        deviation_cost: st.deviation_cost,
        degradation_cost: st.degradation_cost,
        actual_revenue: st.actual_revenue,
        energy_end: out.energy_end,
        fallback: offer.fallback,
    };
    (record, out)
}

/// Operates one day with one strategy.
pub fn run_day(
    cfg: &CampaignConfig,
    history: &History,
    inputs: &DayInputs,
    strategy: Strategy,
    seed: u64,
    day: usize,
) -> Result<Vec<HourRecord>> {
    let n_hours = inputs.prices.len();
    let fc = forecast(&inputs.forecast_envelope, cfg.fleet.noise_std);
    let params = cfg.dispatch_params();
    let da = &inputs.dayahead;
    let replay: Vec<HourSignal> = (0..cfg.e0_trajectories)
        .map(|k| {
            let i = pick(derive_seed(seed, &[STREAM_REPLAY, day as u64, k as u64]), history.hours.len());
            history.hours[i].clone()
        })
        .collect();
    let mut records = Vec::with_capacity(n_hours);
    let mut e_real = 0.0;
    let mut prev: Option<(f64, f64, f64)> = None;
    for t in 0..n_hours {
        let e0 = match prev {
            None => (0.0, 0.0),
            Some((p, r, e_start)) => {
                estimate_e0((r, p), &inputs.forecast_envelope.hour_envelope(t - 1), e_start, &replay, params)?
            }
        };
        let problem = hour_problem(cfg, &history.stats, &inputs.scenarios, &inputs.prices, da, &fc, t, e0)?;
        let (r, p, expected_revenue, fallback) = match solve_hourahead(&problem, strategy) {
            Ok(o) => (o.r, o.p, o.expected_revenue(), false),
            Err(Error::Infeasible(_)) | Err(Error::Solver(_)) => {
                (0.0, fallback_schedule(&problem, inputs.forecast_envelope.hours[t], params), 0.0, true)
            }
            Err(e) => return Err(e),
        };
        let offer = OperatedOffer {
            strategy,
            day,
            hour: t,
            r,
            p,
            p_da: da.p_da[t],
            r_da: da.r_da[t],
            expected_revenue,
            fallback,
        };
        let env = inputs.realized_envelope.hour_envelope(t);
        let (record, _) = operate_hour(cfg, &offer, &inputs.prices[t], &inputs.realized_signals[t], &env, e_real);
        records.push(record);
        prev = Some((p, r, e_real));
        e_real = records[t].energy_end;
    }
    Ok(records)
}

/// Schedule of an hour without regulation: the day-ahead energy moved into
/// the forecast energy corridor and the power limits.
pub fn fallback_schedule(problem: &HourAheadProblem, cap: CapacityHour, params: DispatchParams) -> f64 {
    let p_da = problem.p_da;
    let planned = if p_da >= 0.0 { p_da * params.eta_c } else { p_da / params.eta_d };
    let (lo, hi) = (cap.e_minus - problem.e0.0, cap.e_plus - problem.e0.0);
    let target = if lo <= hi { planned.clamp(lo, hi) } else { 0.5 * (lo + hi) };
    let res = target.clamp(cap.p_minus.min(0.0), cap.p_plus.max(0.0));
    if res >= 0.0 {
        res / params.eta_c
    } else {
        res * params.eta_d
    }
}

pub fn day_record(strategy: Strategy, day: usize, hours: &[HourRecord]) -> DayRecord {
    let regulated: Vec<&HourRecord> = hours.iter().filter(|h| h.r > 0.0).collect();
    let score = if regulated.is_empty() {
        1.0
    } else {
        regulated.iter().map(|h| h.score).sum::<f64>() / regulated.len() as f64
    };
    DayRecord {
        strategy,
        day,
        offer_mwh: hours.iter().map(|h| h.r).sum::<f64>() / 1000.0,
        score,
        revenue_usd: hours.iter().map(|h| h.actual_revenue).sum(),
        expected_usd: hours.iter().map(|h| h.expected_revenue).sum(),
        regulated_hours: regulated.len(),
        violated_hours: regulated.iter().filter(|h| h.clamped_steps > 0).count(),
    }
}

pub fn summarize(strategy: Strategy, days: &[DayRecord], hours: &[HourRecord]) -> StrategySummary {
    let nd = days.len().max(1) as f64;
    let regulated: Vec<&HourRecord> = hours.iter().filter(|h| h.r > 0.0).collect();
    let nr = regulated.len();
    StrategySummary {
        strategy,
        days: days.len(),
        offer_mwh_per_day: days.iter().map(|d| d.offer_mwh).sum::<f64>() / nd,
        score: if nr == 0 { 1.0 } else { regulated.iter().map(|h| h.score).sum::<f64>() / nr as f64 },
        revenue_usd_per_day: days.iter().map(|d| d.revenue_usd).sum::<f64>() / nd,
        expected_usd_per_day: days.iter().map(|d| d.expected_usd).sum::<f64>() / nd,
        violation_rate: if nr == 0 {
            0.0
        } else {
            regulated.iter().filter(|h| h.clamped_steps > 0).count() as f64 / nr as f64
        },
        fallback_hours: hours.iter().filter(|h| h.fallback).count(),
    }
}

/// Runs `days` days for each strategy. Strategies appear in the output in
/// the order given.
pub fn run_campaign(cfg: &CampaignConfig, strategies: &[Strategy], days: usize, seed: u64) -> Result<CampaignResult> {
    cfg.validate()?;
    if days == 0 || strategies.is_empty() {
        return Ok(CampaignResult::default());
    }
    let history = build_history(cfg, seed)?;
    let mut per_strategy: Vec<(Vec<HourRecord>, Vec<DayRecord>)> = vec![(Vec::new(), Vec::new()); strategies.len()];
    for day in 0..days {
        let inputs = prepare_day(cfg, &history, seed, day)?;
        for (k, &strategy) in strategies.iter().enumerate() {
            let hours = run_day(cfg, &history, &inputs, strategy, seed, day)?;
            per_strategy[k].1.push(day_record(strategy, day, &hours));
            per_strategy[k].0.extend(hours);
        }
    }
    let mut result = CampaignResult::default();
    for (k, &strategy) in strategies.iter().enumerate() {
        let (hours, day_rows) = &per_strategy[k];
        result.summary.push(summarize(strategy, day_rows, hours));
    }
    for (hours, day_rows) in per_strategy {
        result.hours.extend(hours);
        result.days.extend(day_rows);
    }
    Ok(result)
}

/// Runs the campaign once per risk level with a shared seed.
pub fn run_sweep(
    cfg: &CampaignConfig,
    strategies: &[Strategy],
    eps_grid: &[f64],
    days: usize,
    seed: u64,
) -> Result<Vec<CampaignResult>> {
    eps_grid
        .iter()
        .map(|&eps| run_campaign(&CampaignConfig { eps, ..cfg.clone() }, strategies, days, seed))
        .collect()
}

/// One point of the plot-ready trade-off series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub strategy: Strategy,
    pub eps: f64,
    pub one_minus_eps: f64,
    /// Mean clamped score over regulated hours.
    pub score: f64,
    /// Share of regulated hours with any clamped step.
    pub violation_rate: f64,
    pub offer_mwh_per_day: f64,
    pub expected_usd_per_day: f64,
    pub actual_usd_per_day: f64,
}

/// Groups ledger hours by strategy and risk level, in order of first
/// appearance, and averages them into trade-off points.
pub fn report(hours: &[HourRecord]) -> Vec<ReportRow> {
    let mut keys: Vec<(Strategy, f64)> = Vec::new();
    for h in hours {
        if !keys.iter().any(|&(s, e)| s == h.strategy && e == h.eps) {
            keys.push((h.strategy, h.eps));
        }
    }
    keys.into_iter()
        .map(|(strategy, eps)| {
            let group: Vec<&HourRecord> = hours.iter().filter(|h| h.strategy == strategy && h.eps == eps).collect();
            let mut days: Vec<usize> = group.iter().map(|h| h.day).collect();
            days.sort_unstable();
            days.dedup();
            let nd = days.len().max(1) as f64;
            let regulated: Vec<&&HourRecord> = group.iter().filter(|h| h.r > 0.0).collect();
            let nr = regulated.len();
            ReportRow {
                strategy,
                eps,
                one_minus_eps: 1.0 - eps,
                score: if nr == 0 { 1.0 } else { regulated.iter().map(|h| h.score).sum::<f64>() / nr as f64 },
                violation_rate: if nr == 0 {
                    0.0
                } else {
                    regulated.iter().filter(|h| h.clamped_steps > 0).count() as f64 / nr as f64
                },
                offer_mwh_per_day: group.iter().map(|h| h.r).sum::<f64>() / 1000.0 / nd,
                expected_usd_per_day: group.iter().map(|h| h.expected_revenue).sum::<f64>() / nd,
                actual_usd_per_day: group.iter().map(|h| h.actual_revenue).sum::<f64>() / nd,
            }
        })
        .collect()
}
