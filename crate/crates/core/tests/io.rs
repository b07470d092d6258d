use proptest::prelude::*;
use regcap::campaign::{DayRecord, HourRecord, ReportRow};
use regcap::dayahead::{HourPrices, Scenario, ScenarioHour};
use regcap::hourahead::Strategy;
use regcap::io::*;
use regcap::signals::{aggregate, HourSignal};
use regcap::uncertainty::SignalStatistics;

fn close9(a: f64, b: f64) -> bool {
    (a - b).abs() <= 5e-9 * b.abs()
}

fn money(a: f64, b: f64) -> bool {
    (a - b).abs() <= 0.005 + 1e-9
}

fn strategy() -> impl proptest::strategy::Strategy<Value = regcap::hourahead::Strategy> {
    prop::sample::select(regcap::hourahead::Strategy::ALL.to_vec())
}

fn num() -> impl proptest::strategy::Strategy<Value = f64> {
    prop_oneof![Just(0.0), -1e6..1e6f64, -1.0..1.0f64]
}

#[test]
fn number_formatting() {
    assert_eq!(fmt_num(0.0), "0");
    assert_eq!(fmt_num(-0.0), "0");
    assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
    assert_eq!(fmt_num(123456789012.0), "123456789000");
    assert_eq!(fmt_usd(-0.001), "0.00");
    assert_eq!(fmt_usd(8740.456), "8740.46");
    assert_eq!(round_sig(2.0 / 3.0, 3), 0.667);
}

#[test]
fn aggregates_file_example() {
    let hours = vec![HourSignal::new(4, vec![1.0, -1.0, 0.5, 0.0])];
    let rows: Vec<_> = hours.iter().map(|h| aggregate(h).unwrap()).collect();
    let mut buf = Vec::new();
    write_aggregates(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text, "hour_id,s_up,s_dn,dt_up_min,dt_dn_min,mileage,s_mean\n4,0.5,-1,45,15,4,0.125\n");
    let back = parse_aggregates(&buf[..]).unwrap();
    assert_eq!(back[0].hour_id, 4);
    assert_eq!(back[0].dt_up_min, 45.0);
}

#[test]
fn prices_reject_gaps_and_negative_regulation_prices() {
    let bad_order = "hour,c_e_da,c_e_rt,c_rc,c_rp\n0,0.03,0.04,0.01,0\n2,0.03,0.04,0.01,0\n";
    assert!(parse_prices(bad_order.as_bytes()).is_err());
    let negative = "hour,c_e_da,c_e_rt,c_rc,c_rp\n0,0.03,0.04,-0.01,0\n";
    assert_eq!(parse_prices(negative.as_bytes()).unwrap_err().kind(), "malformed_row");
    let wrong_header = "t,c_e_da,c_e_rt,c_rc,c_rp\n0,0.03,0.04,0.01,0\n";
    assert!(parse_prices(wrong_header.as_bytes()).is_err());
    // Negative day-ahead energy prices occur in practice.
    let ok = "hour,c_e_da,c_e_rt,c_rc,c_rp\n0,-0.01,0.04,0.01,0\n";
    assert_eq!(parse_prices(ok.as_bytes()).unwrap()[0].c_e_da, -0.01);
}

#[test]
fn missing_file_is_reported() {
    let err = read_prices(std::path::Path::new("/nonexistent/prices.csv")).unwrap_err();
    assert_eq!(err.kind(), "missing_file");
}

#[test]
fn stats_file_round_trip() {
    let stats = SignalStatistics {
        mean_s1: 0.01,
        var_s1: 0.2,
        mean_sh: -0.02,
        var_sh: 0.015,
        rho: 0.003,
        mean_mileage: 42.5,
        min_sh: -0.4,
        max_sh: 0.35,
        n_hours: 300,
        bins: 50,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stats.jsonl");
    write_stats(std::fs::File::create(&path).unwrap(), &stats).unwrap();
    assert_eq!(read_stats(&path).unwrap(), stats);
}

#[test]
fn scenario_records_are_validated() {
    let h = ScenarioHour {
        s_up: 0.4,
        s_dn: -0.3,
        dt_up: 0.5,
        dt_dn: 0.5,
        mileage: 20.0,
        p_plus: 10.0,
        p_minus: -10.0,
        e_minus: 0.0,
        e_plus: 5.0,
    };
    let sc = vec![Scenario { probability: 0.25, hours: vec![h; 2] }, Scenario { probability: 0.75, hours: vec![h; 2] }];
    let mut recs = scenario_records(&sc);
    assert_eq!(scenarios_from_records(&recs).unwrap(), sc);
    recs[1].probability = 0.3;
    assert!(scenarios_from_records(&recs).is_err());
    let missing: Vec<_> = scenario_records(&sc).into_iter().filter(|r| !(r.scenario == 1 && r.hour == 0)).collect();
    assert!(scenarios_from_records(&missing).is_err());
    let mut dup = scenario_records(&sc);
    dup.push(dup[0]);
    assert!(scenarios_from_records(&dup).is_err());
    assert!(scenarios_from_records(&[]).is_err());
}

#[test]
fn config_parsing() {
    let cfg = Config::parse("# comment\nseed = 7\n  eps=0.2 # trailing\n\nstrategy = proposed, determ\nv2g = no\n").unwrap();
    assert_eq!(cfg.get_u64("seed").unwrap(), Some(7));
    assert_eq!(cfg.get_f64("eps").unwrap(), Some(0.2));
    assert_eq!(cfg.get_bool("v2g").unwrap(), Some(false));
    assert_eq!(cfg.get_f64("missing").unwrap(), None);
    assert_eq!(strategies(&cfg).unwrap(), vec![Strategy::Proposed, Strategy::Determ]);
    assert!(Config::parse("seed 7\n").is_err());
    assert!(Config::parse("= 7\n").is_err());
    let mut bad = Config::default();
    bad.set("eps", "abc");
    assert_eq!(bad.get_f64("eps").unwrap_err().kind(), "invalid_argument");
    bad.set("eps", "0.7");
    assert!(campaign_config(&bad).is_err());
    bad.set("strategy", "greedy");
    assert!(strategies(&bad).is_err());
    assert_eq!(strategies(&Config::default()).unwrap(), Strategy::ALL.to_vec());
}

#[test]
fn config_keys_reach_the_campaign() {
    let mut cfg = Config::default();
    cfg.set("eps", "0.3");
    cfg.set("n_vehicles", "321");
    cfg.set("moments.squared_scaling", "true");
    cfg.set("lookahead", "false");
    let c = campaign_config(&cfg).unwrap();
    assert_eq!(c.eps, 0.3);
    assert_eq!(c.fleet.n_vehicles, 321);
    assert!(c.squared_scaling);
    assert!(!c.lookahead);
}

#[test]
fn json_numbers_are_rounded() {
    let v = vec![1.0 / 3.0, -0.0, 2.0];
    assert_eq!(to_json(&v).unwrap(), "[0.333333333,0.0,2.0]");
}

prop_compose! {
    fn hour_record()(
        s in strategy(), eps in 0.01..0.5f64, day in 0usize..400, hour in 0usize..24,
        a in num(), b in num(), c in num(), d in num(), e in 0.0..1.0f64, f in 0.0..1.0f64,
        g in 0usize..1800, h in 0usize..1800, m in num(), n in num(), o in num(), p in num(), q in num(),
        r in num(), fb in any::<bool>(),
    ) -> HourRecord {
        HourRecord {
            strategy: s, eps, day, hour, r: a, p: b, p_da: c, r_da: d, score_raw: e, score: f,
            clamped_steps: g, infeasible_steps: h, expected_revenue: m, regulation_revenue: n,
            deviation_cost: o, degradation_cost: p, actual_revenue: q, energy_end: r, fallback: fb,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prices_round_trip(rows in prop::collection::vec((num(), 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64), 1..30)) {
        let prices: Vec<HourPrices> = rows.iter().map(|&(a, b, c, d)| HourPrices { c_e_da: a, c_e_rt: b, c_rc: c, c_rp: d }).collect();
        let mut buf = Vec::new();
        write_prices(&mut buf, &prices).unwrap();
        let back = parse_prices(&buf[..]).unwrap();
        prop_assert_eq!(back.len(), prices.len());
        for (x, y) in back.iter().zip(&prices) {
            prop_assert!(close9(x.c_e_da, y.c_e_da) && close9(x.c_e_rt, y.c_e_rt));
            prop_assert!(close9(x.c_rc, y.c_rc) && close9(x.c_rp, y.c_rp));
        }
    }

    #[test]
    fn scenarios_round_trip(n_w in 1usize..4, n_t in 1usize..6, v in num()) {
        let h = ScenarioHour { s_up: 0.3, s_dn: -0.2, dt_up: 0.6, dt_dn: 0.4, mileage: v.abs(), p_plus: 5.0, p_minus: -5.0, e_minus: 0.0, e_plus: v.abs() };
        let sc: Vec<Scenario> = (0..n_w).map(|_| Scenario { probability: 1.0 / n_w as f64, hours: vec![h; n_t] }).collect();
        let mut buf = Vec::new();
        write_scenarios(&mut buf, &sc).unwrap();
        let back = scenarios_from_records(&parse_jsonl::<_, ScenarioRecord>(&buf[..]).unwrap()).unwrap();
        prop_assert_eq!(back.len(), n_w);
        for (x, y) in back.iter().zip(&sc) {
            prop_assert!(close9(x.probability, y.probability));
            for (a, b) in x.hours.iter().zip(&y.hours) {
                prop_assert!(close9(a.e_plus, b.e_plus) && close9(a.mileage, b.mileage));
                prop_assert_eq!(a.s_up, b.s_up);
            }
        }
    }

    #[test]
    fn ledger_round_trip(rows in prop::collection::vec(hour_record(), 0..20)) {
        let mut buf = Vec::new();
        write_ledger(&mut buf, &rows).unwrap();
        let back = parse_ledger(&buf[..]).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (x, y) in back.iter().zip(&rows) {
            prop_assert_eq!((x.strategy, x.day, x.hour, x.clamped_steps, x.infeasible_steps, x.fallback),
                            (y.strategy, y.day, y.hour, y.clamped_steps, y.infeasible_steps, y.fallback));
            for (a, b) in [(x.eps, y.eps), (x.r, y.r), (x.p, y.p), (x.p_da, y.p_da), (x.r_da, y.r_da),
                           (x.score_raw, y.score_raw), (x.score, y.score), (x.energy_end, y.energy_end)] {
                prop_assert!(close9(a, b), "{} vs {}", a, b);
            }
            for (a, b) in [(x.expected_revenue, y.expected_revenue), (x.regulation_revenue, y.regulation_revenue),
                           (x.deviation_cost, y.deviation_cost), (x.degradation_cost, y.degradation_cost),
                           (x.actual_revenue, y.actual_revenue)] {
                prop_assert!(money(a, b), "{} vs {}", a, b);
            }
        }
        // A second pass is byte-identical.
        let mut again = Vec::new();
        write_ledger(&mut again, &back).unwrap();
        prop_assert_eq!(again, buf);
    }

    #[test]
    fn report_and_campaign_round_trip(s in strategy(), eps in 0.01..0.5f64, v in prop::collection::vec(num(), 6)) {
        let row = ReportRow {
            strategy: s, eps, one_minus_eps: 1.0 - eps, score: v[0].abs().min(1.0), violation_rate: 0.5,
            offer_mwh_per_day: v[1].abs(), expected_usd_per_day: v[2], actual_usd_per_day: v[3],
        };
        let mut buf = Vec::new();
        write_report(&mut buf, std::slice::from_ref(&row)).unwrap();
        let back = &parse_report(&buf[..]).unwrap()[0];
        prop_assert_eq!(back.strategy, s);
        prop_assert!(close9(back.score, row.score) && close9(back.offer_mwh_per_day, row.offer_mwh_per_day));
        prop_assert!(money(back.expected_usd_per_day, row.expected_usd_per_day));
        prop_assert!(money(back.actual_usd_per_day, row.actual_usd_per_day));

        let day = DayRecord { strategy: s, day: 3, offer_mwh: v[4].abs(), score: 0.9, revenue_usd: v[5], expected_usd: 0.0, regulated_hours: 20, violated_hours: 2 };
        let mut buf = Vec::new();
        write_campaign_csv(&mut buf, std::slice::from_ref(&day)).unwrap();
        let back = &parse_campaign_csv(&buf[..]).unwrap()[0];
        prop_assert_eq!((back.strategy, back.day), (s, 3));
        prop_assert!(close9(back.offer_mwh, day.offer_mwh) && money(back.revenue_usd, day.revenue_usd));
    }
}
