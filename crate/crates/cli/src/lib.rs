//! Subcommands of the `regcap` binary. Each `cmd_*` function takes the
//! merged configuration and returns the text it would write, so the
//! commands can be tested without spawning processes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use regcap::campaign::{
    build_history, day_prices, day_realized_fleet, day_scenarios, day_signals, dayahead_params, hour_problem,
    operate_hour, report, run_sweep, scenario_envelope, CampaignConfig, History, OperatedOffer,
};
use regcap::dayahead::{solve_dayahead, DayAheadSolution, HourPrices, Scenario};
use regcap::fleetgen::forecast;
use regcap::hourahead::{solve_hourahead, HourAheadOffer, Strategy};
use regcap::io::{self, Config, CONFIG_KEYS};
use regcap::signals::{aggregate, DEFAULT_SAMPLES_PER_HOUR};
use regcap::uncertainty::{fit_signal_stats, DEFAULT_BINS};
use regcap::{Error, Result};

fn config_help() -> String {
    let mut s = String::from("Configuration keys (config file `key = value`, or --set key=value):\n");
    for (k, v) in CONFIG_KEYS {
        s.push_str(&format!("  {k:<26} {v}\n"));
    }
    s.push_str("\nExit codes: 0 success, 2 missing file, 3 invalid input, 4 solver failure.");
    s
}

#[derive(Debug, Parser)]
#[command(name = "regcap", version, about = "Regulation capacity offers for aggregated flexible loads", after_help = config_help())]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hourly aggregates of a signals CSV
    Aggregate(Common),
    /// Signal statistics including the divergence estimate
    Stats(Common),
    /// Day-ahead schedule and capacity offer
    OfferDa(Common),
    /// Hour-ahead offer for one hour of a day-ahead solution
    OfferHa(Common),
    /// Replay offers against realized signals and fleet
    Simulate(Common),
    /// Strategy comparison over a synthetic campaign
    Benchmark(Common),
    /// Trade-off series from a ledger CSV
    Report(Common),
}

/// Options shared by all subcommands. Flags override configuration keys of
/// the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Flat `key = value` configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Set a configuration key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Write the main output here instead of stdout
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Directory for multi-file outputs
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub signals: Option<PathBuf>,
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Day-ahead solution JSON
    #[arg(long)]
    pub da: Option<PathBuf>,
    /// Hour-ahead offer JSON (one offer or an array)
    #[arg(long)]
    pub offers: Option<PathBuf>,
    /// Ledger CSV
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub hour: Option<usize>,
    #[arg(long)]
    pub samples_per_hour: Option<usize>,
}

impl Common {
    /// Configuration file, then `--set` pairs, then explicit flags.
    pub fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("--set expects KEY=VALUE, found {kv:?}")))?;
            cfg.set(k.trim(), v.trim());
        }
        let paths = [
            ("signals", &self.signals),
            ("prices", &self.prices),
            ("scenarios", &self.scenarios),
            ("stats", &self.stats),
            ("da", &self.da),
            ("offers", &self.offers),
            ("ledger", &self.ledger),
            ("out", &self.out),
        ];
        for (k, v) in paths {
            if let Some(p) = v {
                cfg.set(k, &p.to_string_lossy());
            }
        }
        let values = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("days", self.days.map(|v| v.to_string())),
            ("eps", self.eps.map(|v| v.to_string())),
            ("bins", self.bins.map(|v| v.to_string())),
            ("strategy", self.strategy.clone()),
            ("hour", self.hour.map(|v| v.to_string())),
            ("samples_per_hour", self.samples_per_hour.map(|v| v.to_string())),
        ];
        for (k, v) in values {
            if let Some(v) = v {
                cfg.set(k, &v);
            }
        }
        Ok(cfg)
    }
}

/// Exit code of an error: 2 missing file, 4 solver failure, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::MissingFile(_) => 2,
        Error::Solver(_) | Error::Infeasible(_) => 4,
        _ => 3,
    }
}

/// Machine-readable error record for stderr.
pub fn error_record(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "message": e.to_string(), "exit_code": exit_code(e) }).to_string()
}

fn path(cfg: &Config, key: &str) -> Option<PathBuf> {
    cfg.get(key).map(PathBuf::from)
}

fn required_path(cfg: &Config, key: &str) -> Result<PathBuf> {
    path(cfg, key).ok_or_else(|| Error::InvalidArgument(format!("missing required key `{key}`")))
}

fn samples_per_hour(cfg: &Config) -> Result<usize> {
    Ok(cfg.get_usize("samples_per_hour")?.unwrap_or(DEFAULT_SAMPLES_PER_HOUR))
}

fn seed(cfg: &Config) -> Result<u64> {
    Ok(cfg.get_u64("seed")?.unwrap_or(0))
}

fn day(cfg: &Config) -> Result<usize> {
    Ok(cfg.get_usize("day")?.unwrap_or(0))
}

fn single_strategy(cfg: &Config) -> Result<Strategy> {
    match cfg.get("strategy") {
        None => Ok(Strategy::Proposed),
        Some(s) => Strategy::parse(s).ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}"))),
    }
}

fn text<F: FnOnce(&mut Vec<u8>) -> Result<()>>(f: F) -> Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("writers emit UTF-8"))
}

/// Signal archive: the `signals` file when given, synthetic otherwise;
/// statistics from the `stats` file when given.
fn history(cfg: &Config, ccfg: &CampaignConfig) -> Result<History> {
    let mut h = match path(cfg, "signals") {
        Some(p) => {
            let hours = io::read_signals(&p, ccfg.samples_per_hour)?;
            let stats = fit_signal_stats(&hours, ccfg.bins)?;
            History { hours, stats }
        }
        None => build_history(ccfg, seed(cfg)?)?,
    };
    if let Some(p) = path(cfg, "stats") {
        h.stats = io::read_stats(&p)?;
    }
    Ok(h)
}

fn day_inputs(cfg: &Config, ccfg: &CampaignConfig, history: &History) -> Result<(Vec<Scenario>, Vec<HourPrices>)> {
    let (seed, day) = (seed(cfg)?, day(cfg)?);
    let scenarios = match path(cfg, "scenarios") {
        Some(p) => io::read_scenarios(&p)?,
        None => day_scenarios(ccfg, history, seed, day)?,
    };
    let prices = match path(cfg, "prices") {
        Some(p) => io::read_prices(&p)?,
        None => day_prices(ccfg, seed, day),
    };
    Ok((scenarios, prices))
}

pub fn cmd_aggregate(cfg: &Config) -> Result<String> {
    let hours = io::read_signals(&required_path(cfg, "signals")?, samples_per_hour(cfg)?)?;
    let rows = hours.iter().map(aggregate).collect::<Result<Vec<_>>>()?;
    text(|w| io::write_aggregates(w, &rows))
}

pub fn cmd_stats(cfg: &Config) -> Result<String> {
    let hours = io::read_signals(&required_path(cfg, "signals")?, samples_per_hour(cfg)?)?;
    let stats = fit_signal_stats(&hours, cfg.get_usize("bins")?.unwrap_or(DEFAULT_BINS))?;
    text(|w| io::write_stats(w, &stats))
}

pub fn cmd_offer_da(cfg: &Config) -> Result<String> {
    let ccfg = io::campaign_config(cfg)?;
    let history = history(cfg, &ccfg)?;
    let (scenarios, prices) = day_inputs(cfg, &ccfg, &history)?;
    let da = solve_dayahead(&scenarios, &prices, &dayahead_params(&ccfg))?;
    io::to_json_pretty(&da)
}

/// Start-energy moments of hour `t`: configured, or the spread of the
/// day-ahead scenario energies at the end of hour `t - 1`.
fn start_energy(cfg: &Config, da: &DayAheadSolution, scenarios: &[Scenario], t: usize) -> Result<(f64, f64)> {
    if let Some(m) = cfg.get_f64("e0_mean")? {
        return Ok((m, cfg.get_f64("e0_var")?.unwrap_or(0.0)));
    }
    if t == 0 {
        return Ok((0.0, 0.0));
    }
    let mean: f64 = scenarios.iter().zip(&da.energy).map(|(s, e)| s.probability * e[t - 1]).sum();
    let var: f64 = scenarios.iter().zip(&da.energy).map(|(s, e)| s.probability * (e[t - 1] - mean).powi(2)).sum();
    Ok((mean, cfg.get_f64("e0_var")?.unwrap_or(var)))
}

pub fn cmd_offer_ha(cfg: &Config) -> Result<String> {
    let ccfg = io::campaign_config(cfg)?;
    let da: DayAheadSolution = io::read_json(&required_path(cfg, "da")?)?;
    let t = cfg.get_usize("hour")?.ok_or_else(|| Error::InvalidArgument("missing required key `hour`".into()))?;
    let history = history(cfg, &ccfg)?;
    let (scenarios, prices) = day_inputs(cfg, &ccfg, &history)?;
    let fc = forecast(&scenario_envelope(&scenarios)?, ccfg.fleet.noise_std);
    let e0 = start_energy(cfg, &da, &scenarios, t)?;
    let problem = hour_problem(&ccfg, &history.stats, &scenarios, &prices, &da, &fc, t, e0)?;
    let offer = solve_hourahead(&problem, single_strategy(cfg)?)?;
    io::to_json_pretty(&offer)
}

fn read_offers(p: &Path) -> Result<Vec<HourAheadOffer>> {
    let v: serde_json::Value = io::read_json(p)?;
    let mut offers: Vec<HourAheadOffer> = if v.is_array() {
        serde_json::from_value(v)?
    } else {
        vec![serde_json::from_value(v)?]
    };
    offers.sort_by_key(|o| o.hour);
    Ok(offers)
}

pub const DISPATCH_HEADER: &str = "hour,step,instructed,achieved,grid_kw,energy_kwh";

/// Returns the ledger CSV and the step-level dispatch CSV. Offers are
/// operated in hour order, chaining the energy from `e_start` (default 0).
pub fn cmd_simulate(cfg: &Config) -> Result<(String, String)> {
    let ccfg = io::campaign_config(cfg)?;
    let offers = read_offers(&required_path(cfg, "offers")?)?;
    let da: DayAheadSolution = io::read_json(&required_path(cfg, "da")?)?;
    let (seed, day) = (seed(cfg)?, day(cfg)?);
    let signals = match path(cfg, "signals") {
        Some(p) => io::read_signals(&p, ccfg.samples_per_hour)?,
        None => day_signals(&ccfg, seed, day),
    };
    let prices = match path(cfg, "prices") {
        Some(p) => io::read_prices(&p)?,
        None => day_prices(&ccfg, seed, day),
    };
    let fleet = day_realized_fleet(&ccfg, seed, day)?;
    let mut e = cfg.get_f64("e_start")?.unwrap_or(0.0);
    let mut records = Vec::with_capacity(offers.len());
    let mut steps = String::from(DISPATCH_HEADER);
    steps.push('\n');
    for o in &offers {
        let t = o.hour;
        if t >= signals.len() || t >= prices.len() || t >= da.p_da.len() || t >= fleet.hours.len() {
            return Err(Error::InvalidArgument(format!("offer for hour {t} lies outside the simulated horizon")));
        }
        let operated = OperatedOffer {
            strategy: o.strategy,
            day,
            hour: t,
            r: o.r,
            p: o.p,
            p_da: da.p_da[t],
            r_da: da.r_da[t],
            expected_revenue: o.expected_revenue(),
            fallback: false,
        };
        let (rec, out) = operate_hour(&ccfg, &operated, &prices[t], &signals[t], &fleet.hour_envelope(t), e);
        for (k, s) in signals[t].samples.iter().enumerate() {
            let achieved = if o.r > 0.0 { out.realized[k] } else { 0.0 };
            steps.push_str(&format!(
                "{t},{},{},{},{},{}\n",
                k + 1,
                io::fmt_num(*s),
                io::fmt_num(achieved),
                io::fmt_num(out.grid_power[k]),
                io::fmt_num(out.energy[k])
            ));
        }
        e = rec.energy_end;
        records.push(rec);
    }
    Ok((text(|w| io::write_ledger(w, &records))?, steps))
}

pub const TABLE_HEADER: &str =
    "strategy,eps,offer_mwh_per_day,score,revenue_usd_per_day,expected_usd_per_day,violation_rate,fallback_hours";

/// Outputs of a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutput {
    /// Strategy comparison, one row per strategy and risk level.
    pub table: String,
    /// `strategy,day,offer_mwh,score,revenue_usd`.
    pub campaign: String,
    pub summary: String,
    pub ledger: String,
}

fn eps_grid(cfg: &Config, default: f64) -> Result<Vec<f64>> {
    match cfg.get("eps_grid") {
        None => Ok(vec![default]),
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|e| *e > 0.0 && *e <= 0.5)
                    .ok_or_else(|| Error::InvalidArgument(format!("eps_grid entry {s:?} must lie in (0, 0.5]")))
            })
            .collect(),
    }
}

pub fn cmd_benchmark(cfg: &Config) -> Result<BenchmarkOutput> {
    let ccfg = io::campaign_config(cfg)?;
    let strategies = io::strategies(cfg)?;
    let days = cfg.get_usize("days")?.unwrap_or(1);
    let seed = seed(cfg)?;
    let grid = eps_grid(cfg, ccfg.eps)?;
    let results = run_sweep(&ccfg, &strategies, &grid, days, seed)?;
    let mut table = String::from(TABLE_HEADER);
    table.push('\n');
    let mut day_rows = Vec::new();
    let mut hours = Vec::new();
    let mut summaries = Vec::new();
    for (eps, res) in grid.iter().zip(&results) {
        for s in &res.summary {
            table.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.strategy.tag(),
                io::fmt_num(*eps),
                io::fmt_num(s.offer_mwh_per_day),
                io::fmt_num(s.score),
                io::fmt_usd(s.revenue_usd_per_day),
                io::fmt_usd(s.expected_usd_per_day),
                io::fmt_num(s.violation_rate),
                s.fallback_hours
            ));
        }
        day_rows.extend(res.days.iter().cloned());
        hours.extend(res.hours.iter().cloned());
        summaries.push(io::CampaignSummary { seed, days, eps: *eps, strategies: res.summary.clone() });
    }
    Ok(BenchmarkOutput {
        table,
        campaign: text(|w| io::write_campaign_csv(w, &day_rows))?,
        summary: io::to_json_pretty(&summaries)?,
        ledger: text(|w| io::write_ledger(w, &hours))?,
    })
}

pub fn cmd_report(cfg: &Config) -> Result<String> {
    let p = required_path(cfg, "ledger")?;
    let hours = io::parse_ledger(std::io::BufReader::new(io::open(&p)?))?;
    text(|w| io::write_report(w, &report(&hours)))
}

fn emit(output: Option<&Path>, content: &str) -> Result<()> {
    match output {
        Some(p) => Ok(fs::write(p, content)?),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn write_out(dir: &Path, files: &[(&str, &str)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, content) in files {
        fs::write(dir.join(name), content)?;
    }
    Ok(())
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let (common, cmd) = match &cli.command {
        Command::Aggregate(c) => (c, "aggregate"),
        Command::Stats(c) => (c, "stats"),
        Command::OfferDa(c) => (c, "offer-da"),
        Command::OfferHa(c) => (c, "offer-ha"),
        Command::Simulate(c) => (c, "simulate"),
        Command::Benchmark(c) => (c, "benchmark"),
        Command::Report(c) => (c, "report"),
    };
    let cfg = common.config()?;
    let output = common.output.as_deref();
    let out_dir = path(&cfg, "out");
    match cmd {
        "aggregate" => emit(output, &cmd_aggregate(&cfg)?),
        "stats" => emit(output, &cmd_stats(&cfg)?),
        "offer-da" => emit(output, &cmd_offer_da(&cfg)?),
        "offer-ha" => emit(output, &cmd_offer_ha(&cfg)?),
        "simulate" => {
            let (ledger, steps) = cmd_simulate(&cfg)?;
            if let Some(dir) = &out_dir {
                write_out(dir, &[("ledger.csv", &ledger), ("dispatch.csv", &steps)])?;
            }
            emit(output, &ledger)
        }
        "benchmark" => {
            let b = cmd_benchmark(&cfg)?;
            if let Some(dir) = &out_dir {
                write_out(
                    dir,
                    &[
                        ("table.csv", &b.table),
                        ("campaign.csv", &b.campaign),
                        ("summary.json", &b.summary),
                        ("ledger.csv", &b.ledger),
                    ],
                )?;
            }
            emit(output, &b.table)
        }
        _ => emit(output, &cmd_report(&cfg)?),
    }
}
