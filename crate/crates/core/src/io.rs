//! File formats and the flat `key = value` configuration.
//!
//! Numbers are written with 9 significant digits and currency with 2
//! decimals. Every writer has a matching reader.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::campaign::{CampaignConfig, DayRecord, HourRecord, ReportRow, StrategySummary};
use crate::dayahead::{HourPrices, Scenario, ScenarioHour};
use crate::error::{Error, Result};
use crate::hourahead::Strategy;
use crate::signals::{HourAggregate, HourSignal};
use crate::uncertainty::SignalStatistics;

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Shortest decimal form of `x` rounded to 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x, 9);
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

pub fn fmt_usd(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn parse_f64(field: &str, line: usize, name: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::MalformedRow { line, msg: format!("{name} = {field:?} is not a finite number") })
}

fn parse_int<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<T> {
    field
        .trim()
        .parse::<T>()
        .map_err(|_| Error::MalformedRow { line, msg: format!("{name} = {field:?} is not an integer") })
}

fn reader_of<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(source)
}

/// Reads data rows, checking the header. Yields `(line, record)`.
fn csv_rows<R: Read>(source: R, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = reader_of(source);
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::MalformedRow { line, msg: e.to_string() })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if !seen_header {
            let got: Vec<&str> = rec.iter().collect();
            if got != header {
                return Err(Error::MalformedRow { line, msg: format!("expected header {:?}, found {got:?}", header.join(",")) });
            }
            seen_header = true;
            continue;
        }
        if rec.len() != header.len() {
            return Err(Error::MalformedRow { line, msg: format!("expected {} fields, found {}", header.len(), rec.len()) });
        }
        out.push((line, rec));
    }
    if !seen_header {
        return Err(Error::MalformedRow { line: 1, msg: "missing header".into() });
    }
    Ok(out)
}

pub const SIGNALS_HEADER: [&str; 3] = ["hour_id", "step", "signal"];

/// Parses the signals CSV. Each hour's rows must be contiguous with steps
/// `1..=samples_per_hour` in order.
pub fn parse_signals<R: Read>(source: R, samples_per_hour: usize) -> Result<Vec<HourSignal>> {
    let mut hours: Vec<HourSignal> = Vec::new();
    let mut current: Option<HourSignal> = None;
    let finish = |h: HourSignal, hours: &mut Vec<HourSignal>| -> Result<()> {
        if h.samples.len() != samples_per_hour {
            return Err(Error::IncompleteHour { hour_id: h.hour_id, expected: samples_per_hour, found: h.samples.len() });
        }
        hours.push(h);
        Ok(())
    };
    for (line, rec) in csv_rows(source, &SIGNALS_HEADER)? {
        let hour_id: u32 = parse_int(&rec[0], line, "hour_id")?;
        let step: usize = parse_int(&rec[1], line, "step")?;
        let value = parse_f64(&rec[2], line, "signal")?;
        if current.as_ref().map_or(true, |h| h.hour_id != hour_id) {
            if let Some(h) = current.take() {
                finish(h, &mut hours)?;
            }
            if hours.iter().any(|h| h.hour_id == hour_id) {
                return Err(Error::MalformedRow { line, msg: format!("rows of hour {hour_id} are not contiguous") });
            }
            current = Some(HourSignal::new(hour_id, Vec::with_capacity(samples_per_hour)));
        }
        let h = current.as_mut().expect("current hour");
        if step != h.samples.len() + 1 {
            return Err(Error::MalformedRow {
                line,
                msg: format!("hour {hour_id}: expected step {}, found {step}", h.samples.len() + 1),
            });
        }
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::SampleOutOfRange { hour_id, step, value });
        }
        h.samples.push(value);
    }
    if let Some(h) = current.take() {
        finish(h, &mut hours)?;
    }
    Ok(hours)
}

pub fn read_signals(path: &Path, samples_per_hour: usize) -> Result<Vec<HourSignal>> {
    parse_signals(BufReader::new(open(path)?), samples_per_hour)
}

pub fn write_signals<W: Write>(mut out: W, hours: &[HourSignal]) -> Result<()> {
    writeln!(out, "{}", SIGNALS_HEADER.join(","))?;
    for h in hours {
        for (k, s) in h.samples.iter().enumerate() {
            writeln!(out, "{},{},{}", h.hour_id, k + 1, fmt_num(*s))?;
        }
    }
    Ok(())
}

pub const AGGREGATES_HEADER: [&str; 7] = ["hour_id", "s_up", "s_dn", "dt_up_min", "dt_dn_min", "mileage", "s_mean"];

pub fn write_aggregates<W: Write>(mut out: W, rows: &[HourAggregate]) -> Result<()> {
    writeln!(out, "{}", AGGREGATES_HEADER.join(","))?;
    for a in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            a.hour_id,
            fmt_num(a.s_up),
            fmt_num(a.s_dn),
            fmt_num(a.dt_up * 60.0),
            fmt_num(a.dt_dn * 60.0),
            fmt_num(a.mileage),
            fmt_num(a.s_mean)
        )?;
    }
    Ok(())
}

/// One row of the aggregates CSV, durations in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub hour_id: u32,
    pub s_up: f64,
    pub s_dn: f64,
    pub dt_up_min: f64,
    pub dt_dn_min: f64,
    pub mileage: f64,
    pub s_mean: f64,
}

pub fn parse_aggregates<R: Read>(source: R) -> Result<Vec<AggregateRow>> {
    csv_rows(source, &AGGREGATES_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(AggregateRow {
                hour_id: parse_int(&r[0], line, "hour_id")?,
                s_up: parse_f64(&r[1], line, "s_up")?,
                s_dn: parse_f64(&r[2], line, "s_dn")?,
                dt_up_min: parse_f64(&r[3], line, "dt_up_min")?,
                dt_dn_min: parse_f64(&r[4], line, "dt_dn_min")?,
                mileage: parse_f64(&r[5], line, "mileage")?,
                s_mean: parse_f64(&r[6], line, "s_mean")?,
            })
        })
        .collect()
}

pub const PRICES_HEADER: [&str; 5] = ["hour", "c_e_da", "c_e_rt", "c_rc", "c_rp"];

/// Parses the prices CSV; hours must run `0, 1, 2, ...`.
pub fn parse_prices<R: Read>(source: R) -> Result<Vec<HourPrices>> {
    let rows = csv_rows(source, &PRICES_HEADER)?;
    let mut out = Vec::with_capacity(rows.len());
    for (k, (line, r)) in rows.into_iter().enumerate() {
        let hour: usize = parse_int(&r[0], line, "hour")?;
        if hour != k {
            return Err(Error::MalformedRow { line, msg: format!("expected hour {k}, found {hour}") });
        }
        let p = HourPrices {
            c_e_da: parse_f64(&r[1], line, "c_e_da")?,
            c_e_rt: parse_f64(&r[2], line, "c_e_rt")?,
            c_rc: parse_f64(&r[3], line, "c_rc")?,
            c_rp: parse_f64(&r[4], line, "c_rp")?,
        };
        if p.c_e_rt < 0.0 || p.c_rc < 0.0 || p.c_rp < 0.0 {
            return Err(Error::MalformedRow { line, msg: "real-time and regulation prices must be nonnegative".into() });
        }
        out.push(p);
    }
    Ok(out)
}

pub fn read_prices(path: &Path) -> Result<Vec<HourPrices>> {
    parse_prices(BufReader::new(open(path)?))
}

pub fn write_prices<W: Write>(mut out: W, prices: &[HourPrices]) -> Result<()> {
    writeln!(out, "{}", PRICES_HEADER.join(","))?;
    for (t, p) in prices.iter().enumerate() {
        writeln!(out, "{t},{},{},{},{}", fmt_num(p.c_e_da), fmt_num(p.c_e_rt), fmt_num(p.c_rc), fmt_num(p.c_rp))?;
    }
    Ok(())
}

/// Serializes with every number rounded to 9 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    Ok(serde_json::to_string(&v)?)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

fn round_json(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(0.0), 9);
            if let Some(m) = serde_json::Number::from_f64(x) {
                *n = m;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s)?;
    from_json(&s)
}

/// Writes one JSON record per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, records: &[T]) -> Result<()> {
    for r in records {
        writeln!(out, "{}", to_json(r)?)?;
    }
    Ok(())
}

pub fn parse_jsonl<R: Read, T: DeserializeOwned>(source: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::MalformedRow { line: i + 1, msg: e.to_string() })?,
        );
    }
    Ok(out)
}

pub fn write_stats<W: Write>(out: W, stats: &SignalStatistics) -> Result<()> {
    write_jsonl(out, std::slice::from_ref(stats))
}

pub fn read_stats(path: &Path) -> Result<SignalStatistics> {
    parse_jsonl::<_, SignalStatistics>(BufReader::new(open(path)?))?
        .into_iter()
        .next()
        .ok_or_else(|| Error::InsufficientData(format!("{} holds no statistics record", path.display())))
}

/// One line of the scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario: usize,
    pub hour: usize,
    pub probability: f64,
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

pub fn scenario_records(scenarios: &[Scenario]) -> Vec<ScenarioRecord> {
    scenarios
        .iter()
        .enumerate()
        .flat_map(|(w, sc)| {
            sc.hours.iter().enumerate().map(move |(t, h)| ScenarioRecord {
                scenario: w,
                hour: t,
                probability: sc.probability,
                s_up: h.s_up,
                s_dn: h.s_dn,
                dt_up: h.dt_up,
                dt_dn: h.dt_dn,
                mileage: h.mileage,
                p_plus: h.p_plus,
                p_minus: h.p_minus,
                e_minus: h.e_minus,
                e_plus: h.e_plus,
            })
        })
        .collect()
}

/// Groups records into scenarios. Scenarios and hours must be numbered
/// from 0 without gaps, and all records of a scenario must agree on its
/// probability.
pub fn scenarios_from_records(records: &[ScenarioRecord]) -> Result<Vec<Scenario>> {
    let n_w = records.iter().map(|r| r.scenario + 1).max().unwrap_or(0);
    let n_t = records.iter().map(|r| r.hour + 1).max().unwrap_or(0);
    if n_w == 0 {
        return Err(Error::InsufficientData("scenario file is empty".into()));
    }
    let mut grid: Vec<Vec<Option<ScenarioHour>>> = vec![vec![None; n_t]; n_w];
    let mut prob = vec![None; n_w];
    for r in records {
        let cell = &mut grid[r.scenario][r.hour];
        if cell.is_some() {
            return Err(Error::InvalidArgument(format!("duplicate record for scenario {}, hour {}", r.scenario, r.hour)));
        }
        *cell = Some(ScenarioHour {
            s_up: r.s_up,
            s_dn: r.s_dn,
            dt_up: r.dt_up,
            dt_dn: r.dt_dn,
            mileage: r.mileage,
            p_plus: r.p_plus,
            p_minus: r.p_minus,
            e_minus: r.e_minus,
            e_plus: r.e_plus,
        });
        match prob[r.scenario] {
            None => prob[r.scenario] = Some(r.probability),
            Some(p) if p != r.probability => {
                return Err(Error::InvalidArgument(format!("scenario {} has conflicting probabilities", r.scenario)))
            }
            _ => {}
        }
    }
    grid.into_iter()
        .zip(prob)
        .enumerate()
        .map(|(w, (hours, p))| {
            let hours = hours
                .into_iter()
                .enumerate()
                .map(|(t, h)| h.ok_or_else(|| Error::InvalidArgument(format!("scenario {w} misses hour {t}"))))
                .collect::<Result<Vec<_>>>()?;
            let probability = p.ok_or_else(|| Error::InvalidArgument(format!("scenario {w} has no records")))?;
            Ok(Scenario { probability, hours })
        })
        .collect()
}

pub fn read_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    scenarios_from_records(&parse_jsonl::<_, ScenarioRecord>(BufReader::new(open(path)?))?)
}

pub fn write_scenarios<W: Write>(out: W, scenarios: &[Scenario]) -> Result<()> {
    write_jsonl(out, &scenario_records(scenarios))
}

pub const REPORT_HEADER: [&str; 8] = [
    "strategy",
    "eps",
    "one_minus_eps",
    "score",
    "violation_rate",
    "offer_mwh_per_day",
    "expected_usd_per_day",
    "actual_usd_per_day",
];

pub fn write_report<W: Write>(mut out: W, rows: &[ReportRow]) -> Result<()> {
    writeln!(out, "{}", REPORT_HEADER.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.strategy.tag(),
            fmt_num(r.eps),
            fmt_num(r.one_minus_eps),
            fmt_num(r.score),
            fmt_num(r.violation_rate),
            fmt_num(r.offer_mwh_per_day),
            fmt_usd(r.expected_usd_per_day),
            fmt_usd(r.actual_usd_per_day)
        )?;
    }
    Ok(())
}

pub fn parse_report<R: Read>(source: R) -> Result<Vec<ReportRow>> {
    csv_rows(source, &REPORT_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let f = |i: usize| parse_f64(&r[i], line, REPORT_HEADER[i]);
            Ok(ReportRow {
                strategy: parse_strategy(&r[0], line)?,
                eps: f(1)?,
                one_minus_eps: f(2)?,
                score: f(3)?,
                violation_rate: f(4)?,
                offer_mwh_per_day: f(5)?,
                expected_usd_per_day: f(6)?,
                actual_usd_per_day: f(7)?,
            })
        })
        .collect()
}

pub const CAMPAIGN_HEADER: [&str; 5] = ["strategy", "day", "offer_mwh", "score", "revenue_usd"];

pub fn write_campaign_csv<W: Write>(mut out: W, days: &[DayRecord]) -> Result<()> {
    writeln!(out, "{}", CAMPAIGN_HEADER.join(","))?;
    for d in days {
        writeln!(
            out,
            "{},{},{},{},{}",
            d.strategy.tag(),
            d.day,
            fmt_num(d.offer_mwh),
            fmt_num(d.score),
            fmt_usd(d.revenue_usd)
        )?;
    }
    Ok(())
}

/// One row of the campaign CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub strategy: Strategy,
    pub day: usize,
    pub offer_mwh: f64,
    pub score: f64,
    pub revenue_usd: f64,
}

fn parse_strategy(field: &str, line: usize) -> Result<Strategy> {
    Strategy::parse(field).ok_or_else(|| Error::MalformedRow { line, msg: format!("unknown strategy {field:?}") })
}

pub fn parse_campaign_csv<R: Read>(source: R) -> Result<Vec<CampaignRow>> {
    csv_rows(source, &CAMPAIGN_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(CampaignRow {
                strategy: parse_strategy(&r[0], line)?,
                day: parse_int(&r[1], line, "day")?,
                offer_mwh: parse_f64(&r[2], line, "offer_mwh")?,
                score: parse_f64(&r[3], line, "score")?,
                revenue_usd: parse_f64(&r[4], line, "revenue_usd")?,
            })
        })
        .collect()
}

/// JSON summary of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub seed: u64,
    pub days: usize,
    pub eps: f64,
    pub strategies: Vec<StrategySummary>,
}

pub const LEDGER_HEADER: [&str; 19] = [
    "strategy",
    "eps",
    "day",
    "hour",
    "r_kw",
    "p_kw",
    "p_da_kw",
    "r_da_kw",
    "score_raw",
    "score",
    "clamped_steps",
    "infeasible_steps",
    "expected_usd",
    "regulation_usd",
    "deviation_usd",
    "degradation_usd",
    "actual_usd",
    "energy_end_kwh",
    "fallback",
];

/// Per-hour ledger: powers and energies with 9 significant digits,
/// money with 2 decimals.
pub fn write_ledger<W: Write>(mut out: W, hours: &[HourRecord]) -> Result<()> {
    writeln!(out, "{}", LEDGER_HEADER.join(","))?;
    for h in hours {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            h.strategy.tag(),
            fmt_num(h.eps),
            h.day,
            h.hour,
            fmt_num(h.r),
            fmt_num(h.p),
            fmt_num(h.p_da),
            fmt_num(h.r_da),
            fmt_num(h.score_raw),
            fmt_num(h.score),
            h.clamped_steps,
            h.infeasible_steps,
            fmt_usd(h.expected_revenue),
            fmt_usd(h.regulation_revenue),
            fmt_usd(h.deviation_cost),
            fmt_usd(h.degradation_cost),
            fmt_usd(h.actual_revenue),
            fmt_num(h.energy_end),
            h.fallback
        )?;
    }
    Ok(())
}

pub fn parse_ledger<R: Read>(source: R) -> Result<Vec<HourRecord>> {
    csv_rows(source, &LEDGER_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let f = |i: usize| parse_f64(&r[i], line, LEDGER_HEADER[i]);
            Ok(HourRecord {
                strategy: parse_strategy(&r[0], line)?,
                eps: f(1)?,
                day: parse_int(&r[2], line, "day")?,
                hour: parse_int(&r[3], line, "hour")?,
                r: f(4)?,
                p: f(5)?,
                p_da: f(6)?,
                r_da: f(7)?,
                score_raw: f(8)?,
                score: f(9)?,
                clamped_steps: parse_int(&r[10], line, "clamped_steps")?,
                infeasible_steps: parse_int(&r[11], line, "infeasible_steps")?,
                expected_revenue: f(12)?,
                regulation_revenue: f(13)?,
                deviation_cost: f(14)?,
                degradation_cost: f(15)?,
                actual_revenue: f(16)?,
                energy_end: f(17)?,
                fallback: r[18]
                    .parse()
                    .map_err(|_| Error::MalformedRow { line, msg: format!("fallback = {:?}", &r[18]) })?,
            })
        })
        .collect()
}

/// Flat configuration: one `key = value` per line, `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::MalformedRow { line: i + 1, msg: format!("expected key = value, found {line:?}") })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::MalformedRow { line: i + 1, msg: "empty key".into() });
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let mut s = String::new();
        open(path)?.read_to_string(&mut s)?;
        Config::parse(&s)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.typed(key, |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.typed(key, |v| v.parse().ok())
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.typed(key, |v| v.parse().ok())
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        self.typed(key, |v| match v {
            "true" | "1" | "yes" => Some(true),
            "false" | "0" | "no" => Some(false),
            _ => None,
        })
    }

    fn typed<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse(v)
                .map(Some)
                .ok_or_else(|| Error::InvalidArgument(format!("config key {key}: cannot parse {v:?}"))),
        }
    }
}

/// Documented configuration keys with their meaning.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("signals", "signals CSV (hour_id,step,signal)"),
    ("prices", "prices CSV (hour,c_e_da,c_e_rt,c_rc,c_rp)"),
    ("scenarios", "scenario JSONL file; generated from the fleet model when absent"),
    ("stats", "statistics JSONL file; fitted from `signals` when absent"),
    ("out", "output directory"),
    ("seed", "64-bit seed for every random stream"),
    ("days", "campaign length in days"),
    ("eps", "risk level in (0, 0.5]"),
    ("bins", "equiprobable bins for the divergence estimate"),
    ("strategy", "proposed | robust | determ | ignoreeffi | all"),
    ("hour", "hour index for offer-ha"),
    ("horizon", "hours per day"),
    ("start_hour", "clock hour of the first horizon hour"),
    ("samples_per_hour", "signal samples per hour"),
    ("n_scenarios", "day-ahead scenarios"),
    ("history_hours", "archived signal hours generated for campaigns"),
    ("e0_trajectories", "archived hours replayed to estimate start energy"),
    ("e0_mean", "start energy mean for offer-ha, kWh"),
    ("e0_var", "start energy variance for offer-ha, kWh^2"),
    ("c_d", "degradation price, $/kWh discharged"),
    ("eta", "charging and discharging efficiency"),
    ("n_vehicles", "fleet size"),
    ("battery_kwh", "battery capacity per vehicle"),
    ("fast_share", "share of vehicles on the fast charger"),
    ("noise_std", "relative standard deviation of capacity forecasts"),
    ("v2g", "allow discharging to the grid"),
    ("burst_prob", "share of synthetic hours with a sustained offset"),
    ("moments.squared_scaling", "scale signal variances by squared coefficients"),
    ("lookahead", "value end-of-hour energy over the remaining hours"),
    ("future_penalty", "price of violating a look-ahead energy bound, $/kWh"),
    ("relative_gap", "day-ahead MILP relative gap"),
    ("eps_grid", "comma-separated risk levels for benchmark sweeps"),
];

/// Applies configuration keys over the defaults.
pub fn campaign_config(cfg: &Config) -> Result<CampaignConfig> {
    let mut c = CampaignConfig::default();
    macro_rules! set {
        ($get:ident, $key:expr, $field:expr) => {
            if let Some(v) = cfg.$get($key)? {
                $field = v;
            }
        };
    }
    set!(get_f64, "eps", c.eps);
    set!(get_usize, "bins", c.bins);
    set!(get_usize, "horizon", c.fleet.hours);
    set!(get_f64, "start_hour", c.fleet.start_hour);
    set!(get_usize, "samples_per_hour", c.samples_per_hour);
    set!(get_usize, "n_scenarios", c.scenarios);
    set!(get_usize, "history_hours", c.history_hours);
    set!(get_usize, "e0_trajectories", c.e0_trajectories);
    set!(get_f64, "c_d", c.c_d);
    set!(get_f64, "eta", c.fleet.eta);
    set!(get_usize, "n_vehicles", c.fleet.n_vehicles);
    set!(get_f64, "battery_kwh", c.fleet.battery_kwh);
    set!(get_f64, "fast_share", c.fleet.fast_share);
    set!(get_f64, "noise_std", c.fleet.noise_std);
    set!(get_bool, "v2g", c.fleet.v2g);
    set!(get_f64, "burst_prob", c.signals.burst_prob);
    set!(get_bool, "moments.squared_scaling", c.squared_scaling);
    set!(get_bool, "lookahead", c.lookahead);
    set!(get_f64, "future_penalty", c.future_penalty);
    set!(get_f64, "relative_gap", c.relative_gap);
    c.validate()?;
    Ok(c)
}

/// Parses `strategy`: one tag, a comma-separated list, or `all`.
pub fn strategies(cfg: &Config) -> Result<Vec<Strategy>> {
    match cfg.get("strategy") {
        None | Some("all") => Ok(Strategy::ALL.to_vec()),
        Some(list) => list
            .split(',')
            .map(|s| {
                Strategy::parse(s.trim()).ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}")))
            })
            .collect(),
    }
}
