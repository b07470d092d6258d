use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regcap::signals::{rearrange, HourSignal};
use regcap::simulator::{DispatchParams, HourEnvelope};
use regcap::uncertainty::*;
use regcap::Error;
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest violation probability reachable within chi-square radius `rho`
/// of a two-outcome distribution with violation probability `x`.
fn worst_case_violation(x: f64, rho: f64) -> f64 {
    x + (rho * x * (1.0 - x)).sqrt()
}

/// Nominal level whose worst case equals `eps`, by bisection.
fn adjusted_by_bisection(eps: f64, rho: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, eps);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if worst_case_violation(mid, rho) > eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Normal CDF by composite Simpson integration of the density from 0.
fn cdf_by_integration(x: f64) -> f64 {
    let n = 20_000;
    let h = x / n as f64;
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = f(0.0) + f(x);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    0.5 + acc * h / 3.0
}

#[test]
fn closed_form_values() {
    assert_eq!(adjusted_epsilon(0.2, 0.0).unwrap().value, 0.2);
    assert_eq!(adjusted_epsilon(0.5, 0.0).unwrap().value, 0.5);
    assert_eq!(kappa12(0.2), 2.0);
    assert!((gaussian_quantile(0.975) - 1.959964).abs() < 1e-6);
    assert_eq!(gaussian_quantile(0.5), 0.0);
}

#[test]
fn adjusted_epsilon_matches_worst_case_oracle() {
    let a = adjusted_epsilon(0.2, 0.1).unwrap();
    assert!(!a.saturated);
    // 0.2 - (sqrt(0.074) - 0.06) / 2.2
    assert!((a.value - 0.103623).abs() < 1e-6, "{}", a.value);
    for &(eps, rho) in &[(0.2, 0.1), (0.05, 0.01), (0.5, 2.0), (0.3, 0.7), (0.1, 0.002)] {
        let ours = adjusted_epsilon(eps, rho).unwrap().value;
        assert!((ours - adjusted_by_bisection(eps, rho)).abs() < 1e-12, "eps {eps} rho {rho}");
    }
}

#[test]
fn adjusted_epsilon_rejects_bad_input() {
    assert!(adjusted_epsilon(0.0, 0.1).is_err());
    assert!(adjusted_epsilon(0.2, -1.0).is_err());
    assert!(adjusted_epsilon(0.2, f64::NAN).is_err());
}

#[test]
fn quantile_matches_integrated_density() {
    let x = gaussian_quantile(0.975);
    assert!((cdf_by_integration(x) - 0.975).abs() < 1e-10);
    let (mut lo, mut hi) = (0.0, 5.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cdf_by_integration(mid) < 0.975 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((x - lo).abs() < 1e-9);
}

#[test]
fn divergence_examples() {
    assert_eq!(chi_square_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
    assert!((chi_square_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let raw_p: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
    let raw_q: Vec<f64> = (0..10).map(|_| rng.gen_range(0.05..1.0)).collect();
    let p: Vec<f64> = raw_p.iter().map(|v| v / raw_p.iter().sum::<f64>()).collect();
    let q: Vec<f64> = raw_q.iter().map(|v| v / raw_q.iter().sum::<f64>()).collect();
    let phi_form: f64 = p.iter().zip(&q).map(|(pi, qi)| qi * (pi / qi - 1.0).powi(2)).sum();
    assert!((chi_square_divergence(&p, &q).unwrap() - phi_form).abs() < 1e-12);
}

#[test]
fn all_zero_history_is_degenerate() {
    let hours = vec![HourSignal::new(0, vec![0.0; 30]), HourSignal::new(1, vec![0.0; 30])];
    assert!(matches!(fit_signal_stats(&hours, 10), Err(Error::Degenerate(_))));
    assert!(matches!(fit_signal_stats(&hours[..1], 10), Err(Error::InsufficientData(_))));
    assert!(matches!(fit_signal_stats(&hours, 4), Err(Error::InvalidArgument(_))));
}

#[test]
fn samples_on_bin_masses_give_zero_radius() {
    let bins = 10;
    let sd = 0.3;
    // Two copies of each bin's median point: equal mass in every bin.
    let pts: Vec<f64> = (0..bins).map(|k| sd * gaussian_quantile((k as f64 + 0.5) / bins as f64)).collect();
    let first: Vec<f64> = pts.iter().copied().chain(pts[..3].iter().copied()).collect();
    let second: Vec<f64> = pts.iter().copied().chain(pts[3..].iter().copied()).collect();
    let stats = fit_signal_stats(&[HourSignal::new(0, first), HourSignal::new(1, second)], bins).unwrap();
    assert_eq!(stats.rho, 0.0);
}

/// Histogram divergence recomputed with statrs quantiles.
fn rho_oracle(pooled: &[f64], bins: usize) -> f64 {
    let n = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / n;
    let var = pooled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let normal = Normal::new(mean, var.sqrt()).unwrap();
    let mut counts = vec![0.0; bins];
    for &x in pooled {
        let u = normal.cdf(x);
        let k = ((u * bins as f64).floor() as usize).min(bins - 1);
        counts[k] += 1.0;
    }
    let q = 1.0 / bins as f64;
    counts.iter().map(|c| (c / n - q).powi(2) / q).sum()
}

#[test]
fn radius_matches_histogram_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    // Two-component mixture, clipped to the signal range.
    let hours: Vec<HourSignal> = (0..12)
        .map(|h| {
            let s = (0..300)
                .map(|_| {
                    let c = if rng.gen_bool(0.3) { 0.5 } else { -0.2 };
                    (c + rng.gen_range(-0.25..0.25f64)).clamp(-1.0, 1.0)
                })
                .collect();
            HourSignal::new(h, s)
        })
        .collect();
    let pooled: Vec<f64> = hours.iter().flat_map(|h| h.samples.iter().copied()).collect();
    for bins in [5, 20, 50] {
        let stats = fit_signal_stats(&hours, bins).unwrap();
        let oracle = rho_oracle(&pooled, bins);
        assert!((stats.rho - oracle).abs() < 1e-9, "bins {bins}: {} vs {oracle}", stats.rho);
        assert!(stats.rho > 0.01);
    }
}

#[test]
fn fitted_moments_match_direct_formulas() {
    let hours = vec![
        HourSignal::new(0, vec![0.5, -0.5, 1.0, 0.0]),
        HourSignal::new(1, vec![-1.0, -0.5, 0.25, 0.75]),
        HourSignal::new(2, vec![0.0, 0.0, 0.5, 0.5]),
    ];
    let s = fit_signal_stats(&hours, 5).unwrap();
    // Pooled: mean 1.5/12 = 0.125.
    assert!((s.mean_s1 - 0.125).abs() < 1e-15);
    let pooled = [0.5, -0.5, 1.0, 0.0, -1.0, -0.5, 0.25, 0.75, 0.0, 0.0, 0.5, 0.5];
    let v: f64 = pooled.iter().map(|x| (x - 0.125f64).powi(2)).sum::<f64>() / 11.0;
    assert!((s.var_s1 - v).abs() < 1e-15);
    // Hourly means 0.25, -0.125, 0.25.
    assert!((s.mean_sh - 0.125).abs() < 1e-15);
    let vh = (2.0 * 0.125f64.powi(2) + 0.25f64.powi(2)) / 2.0;
    assert!((s.var_sh - vh).abs() < 1e-15);
    assert_eq!((s.min_sh, s.max_sh), (-0.125, 0.25));
    assert!((s.mean_mileage - (3.5 + 1.75 + 0.5) / 3.0).abs() < 1e-15);
    assert_eq!(s.n_hours, 3);
}

fn forecast() -> CapacityForecast {
    CapacityForecast {
        mean_p_plus: 5.0,
        var_p_plus: 0.25,
        mean_p_minus: -4.0,
        var_p_minus: 0.16,
        mean_e_minus: 2.0,
        var_e_minus: 0.09,
        mean_e_plus: 9.0,
        var_e_plus: 0.36,
    }
}

fn stats() -> SignalStatistics {
    SignalStatistics {
        mean_s1: 0.05,
        var_s1: 0.2,
        mean_sh: 0.03,
        var_sh: 0.01,
        rho: 0.02,
        mean_mileage: 40.0,
        min_sh: -0.3,
        max_sh: 0.35,
        n_hours: 100,
        bins: 50,
    }
}

#[test]
fn moments_example_substitution() {
    let st = SignalStatistics { mean_s1: 0.0, ..stats() };
    let m = assemble_moments(&st, &forecast(), (0.0, 0.0), Efficiency { eta_c: 1.0, eta_d: 1.0 }, 1.0, false);
    assert_eq!(m.d[0], [0.0, 1.0, -5.0]);
    let zero = CapacityForecast {
        var_p_plus: 0.0,
        var_p_minus: 0.0,
        var_e_minus: 0.0,
        var_e_plus: 0.0,
        ..forecast()
    };
    let st = SignalStatistics { var_s1: 0.0, var_sh: 0.0, ..stats() };
    let m = assemble_moments(&st, &zero, (3.0, 0.0), Efficiency { eta_c: 0.9, eta_d: 0.8 }, 1.0, false);
    assert_eq!(m.gamma, [[0.0; 3]; 4]);
}

#[test]
fn moments_match_second_transcription() {
    let (a, b) = (0.9, 0.85);
    let st = stats();
    let fc = forecast();
    let e0 = (4.0, 0.5);
    for p_da in [3.0, -3.0] {
        let m = assemble_moments(&st, &fc, e0, Efficiency { eta_c: a, eta_d: b }, p_da, false);
        // Written out term by term, independently of the library layout.
        let mid = (1.0 + a * b) / (2.0 * b);
        let off = (1.0 - a * b) / (2.0 * b);
        let d3p = if p_da >= 0.0 { -a } else { -1.0 / b };
        let want_d = [
            [-a * 0.05, a, -5.0],
            [0.05 / b, -1.0 / b, -4.0],
            [mid * 0.03 + off, d3p, -4.0 + 2.0],
            [-a * 0.03, a, 4.0 - 9.0],
        ];
        let want_g = [
            [a * 0.2, 0.0, 0.25],
            [0.2 / b, 0.0, 0.16],
            [mid * 0.01, 0.0, 0.5 + 0.09],
            [a * 0.01, 0.0, 0.5 + 0.36],
        ];
        for j in 0..4 {
            for i in 0..3 {
                assert!((m.d[j][i] - want_d[j][i]).abs() < 1e-15, "d[{j}][{i}]");
                assert!((m.gamma[j][i] - want_g[j][i]).abs() < 1e-15, "gamma[{j}][{i}]");
            }
        }
        let sq = assemble_moments(&st, &fc, e0, Efficiency { eta_c: a, eta_d: b }, p_da, true);
        assert!((sq.gamma[0][0] - a * a * 0.2).abs() < 1e-15);
        assert!((sq.gamma[2][0] - mid * mid * 0.01).abs() < 1e-15);
    }
}

#[test]
fn branch_flip_changes_one_entry() {
    let eff = Efficiency { eta_c: 0.9, eta_d: 0.8 };
    let pos = assemble_moments(&stats(), &forecast(), (1.0, 0.1), eff, 2.0, false);
    let neg = assemble_moments(&stats(), &forecast(), (1.0, 0.1), eff, -2.0, false);
    assert_eq!(pos.gamma, neg.gamma);
    for j in 0..4 {
        for i in 0..3 {
            if (j, i) != (2, 1) {
                assert_eq!(pos.d[j][i], neg.d[j][i]);
            }
        }
    }
    assert_eq!((pos.d[2][1], neg.d[2][1]), (-0.9, -1.0 / 0.8));
}

#[test]
fn e0_without_regulation_is_deterministic() {
    let env = HourEnvelope::constant(100.0, -100.0, -1e6, 1e6);
    let params = DispatchParams { eta_c: 0.9, eta_d: 0.8 };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let hist: Vec<HourSignal> =
        (0..5).map(|h| HourSignal::new(h, (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
    let (m, v) = estimate_e0((0.0, 10.0), &env, 7.0, &hist, params).unwrap();
    assert!((m - (7.0 + 0.9 * 10.0)).abs() < 1e-9);
    assert!(v.abs() < 1e-18);
    assert!(estimate_e0((0.0, 10.0), &env, 7.0, &[], params).is_err());
}

#[test]
fn e0_of_rearranged_pair_has_no_spread() {
    let env = HourEnvelope::constant(100.0, -100.0, -1e6, 1e6);
    let params = DispatchParams { eta_c: 0.9, eta_d: 0.8 };
    let s: Vec<f64> = (0..40).map(|k| ((k * 7919) % 23) as f64 / 11.0 - 1.0).collect();
    let hist = vec![HourSignal::new(0, s.clone()), HourSignal::new(1, rearrange(&s))];
    let (_, v) = estimate_e0((20.0, 5.0), &env, 0.0, &hist, params).unwrap();
    assert!(v < 1e-20);
}

#[test]
fn e0_matches_direct_recomputation() {
    let env = HourEnvelope { p_plus: 8.0, p_minus: -8.0, e_minus_start: 0.0, e_plus_start: 3.0, e_minus: 1.0, e_plus: 6.0 };
    let params = DispatchParams { eta_c: 0.9, eta_d: 0.8 };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let hist: Vec<HourSignal> =
        (0..7).map(|h| HourSignal::new(h, (0..90).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
    let ends: Vec<f64> = hist
        .iter()
        .map(|h| regcap::simulator::dispatch(&h.samples, 3.0, 6.0, &env, 1.0, params).energy_end)
        .collect();
    let mean = ends.iter().sum::<f64>() / 7.0;
    let var = ends.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / 6.0;
    let (m, v) = estimate_e0((6.0, 3.0), &env, 1.0, &hist, params).unwrap();
    assert!((m - mean).abs() < 1e-12 && (v - var).abs() < 1e-12);
}

proptest! {
    #[test]
    fn adjusted_epsilon_is_bounded_and_monotone(eps in 0.001..=0.5f64, r1 in 0.0..10.0f64, r2 in 0.0..10.0f64) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let a = adjusted_epsilon(eps, lo).unwrap().value;
        let b = adjusted_epsilon(eps, hi).unwrap().value;
        prop_assert!(a > 0.0 && a <= eps);
        prop_assert!(b > 0.0 && b <= eps);
        prop_assert!(b <= a + 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf(p in 1e-6..(1.0 - 1e-6)) {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x = gaussian_quantile(p);
        prop_assert!((normal.cdf(x) - p).abs() <= 1e-8);
        prop_assert!((gaussian_quantile(1.0 - p) + x).abs() <= 1e-8 * x.abs().max(1.0));
    }

    #[test]
    fn divergence_is_zero_only_on_equality(raw in prop::collection::vec(0.01..1.0f64, 2..12), k in 0usize..12) {
        let q: Vec<f64> = raw.iter().map(|v| v / raw.iter().sum::<f64>()).collect();
        prop_assert!(chi_square_divergence(&q, &q).unwrap().abs() <= 1e-12);
        let k = k % q.len();
        let mut p = q.clone();
        let shift = 0.5 * p[k];
        p[k] -= shift;
        p[(k + 1) % q.len()] += shift;
        prop_assert!(chi_square_divergence(&p, &q).unwrap() > 1e-12);
    }

    #[test]
    fn covariances_are_nonnegative(
        var_s1 in 0.0..1.0f64, var_sh in 0.0..1.0f64, v0 in 0.0..5.0f64,
        ec in 0.5..=1.0f64, ed in 0.5..=1.0f64, p_da in -10.0..10.0f64, sq in any::<bool>(),
    ) {
        let st = SignalStatistics { var_s1, var_sh, ..stats() };
        let m = assemble_moments(&st, &forecast(), (1.0, v0), Efficiency { eta_c: ec, eta_d: ed }, p_da, sq);
        for row in m.gamma {
            prop_assert!(row.iter().all(|&g| g >= 0.0 && g.is_finite()));
        }
    }
}
