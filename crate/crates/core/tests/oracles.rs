//! Checks against independent oracles: direct standard deviations,
//! quadrature and Monte Carlo statistics.

use chrono::{Datelike, NaiveDate};
use liquidyn_core::indicators::{
    derive_parameters, estimate_shock_intensity, market_inertia, simple_returns, velocity_delta,
    DatedSeries, IndicatorBundle,
};
use liquidyn_core::model::{required_epsilon, ParamId, ParameterSet};
use liquidyn_core::scenario::{classify_effect, monte_carlo_balance, Side, Target};
use liquidyn_core::stochastic::{NormalStream, ShockConfig};
use liquidyn_core::HarmonicModel;
use statrs::distribution::{ContinuousCDF, Normal};

fn business_days(from_year: i32, to_year: i32) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(from_year, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(to_year, 12, 31).unwrap();
    let mut out = Vec::new();
    while d <= end {
        if d.weekday().num_days_from_monday() < 5 {
            out.push(d);
        }
        d = d.succ_opt().unwrap();
    }
    out
}

fn noise_prices(dates: &[NaiveDate], sd: f64, seed: u64) -> DatedSeries {
    let mut z = NormalStream::new(seed);
    let mut p = 100.0;
    let mut values = vec![p];
    for _ in 1..dates.len() {
        p *= 1.0 + sd * z.next_normal();
        values.push(p);
    }
    DatedSeries::new(dates.to_vec(), values).unwrap()
}

fn oracle_mean_yearly_std(s: &DatedSeries) -> f64 {
    let mut stds = Vec::new();
    for year in s.dates()[1].year()..=s.dates().last().unwrap().year() {
        let r: Vec<f64> = (1..s.len())
            .filter(|&i| s.dates()[i].year() == year)
            .map(|i| s.values()[i] / s.values()[i - 1] - 1.0)
            .collect();
        if r.len() >= 30 {
            let m = r.iter().sum::<f64>() / r.len() as f64;
            stds.push((r.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / r.len() as f64).sqrt());
        }
    }
    stds.iter().sum::<f64>() / stds.len() as f64
}

#[test]
fn white_noise_inertia_against_direct_stddevs() {
    // 100 years puts the ratio's standard error near 0.6%, so ±0.05 is >4 SE
    let dates = business_days(1925, 2024);
    let equity = noise_prices(&dates, 0.02, 1);
    let bonds = noise_prices(&dates, 0.01, 2);
    let est = market_inertia(&equity, &bonds).unwrap();
    let oracle = oracle_mean_yearly_std(&equity) / oracle_mean_yearly_std(&bonds);
    assert!((est.relative_volatility - oracle).abs() < 1e-12);
    assert!((est.relative_volatility - 2.0).abs() < 5e-2, "{}", est.relative_volatility);
    assert!((est.rho - 0.5).abs() < 5e-2);
    assert!((est.rho * est.relative_volatility - 1.0).abs() < 1e-12);

    let swapped = market_inertia(&bonds, &equity).unwrap();
    assert!((swapped.relative_volatility * est.relative_volatility - 1.0).abs() < 1e-9);
}

/// E[max − min] of n iid standard normals by trapezoidal quadrature of
/// ∫ 1 − Φ(x)^n − (1 − Φ(x))^n dx.
fn expected_normal_range(n: i32) -> f64 {
    let phi = Normal::new(0.0, 1.0).unwrap();
    let (a, b, steps) = (-12.0, 12.0, 200_000);
    let h = (b - a) / steps as f64;
    let f = |x: f64| {
        let c = phi.cdf(x);
        1.0 - c.powi(n) - (1.0 - c).powi(n)
    };
    let mut sum = 0.5 * (f(a) + f(b));
    for i in 1..steps {
        sum += f(a + i as f64 * h);
    }
    sum * h
}

#[test]
fn shock_estimator_matches_quadrature_expectation() {
    let n = 60;
    let analytic = 252f64.sqrt() * expected_normal_range(n);
    let mut z = NormalStream::new(77);
    let m = 20_000;
    let estimates: Vec<f64> = (0..m)
        .map(|_| {
            let r: Vec<f64> = (0..n).map(|_| z.next_normal()).collect();
            estimate_shock_intensity(&r).unwrap().value
        })
        .collect();
    let mean = estimates.iter().sum::<f64>() / m as f64;
    let sd = (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
    let se = sd / (m as f64).sqrt();
    assert!((mean - analytic).abs() < 3.0 * se, "mean {mean}, analytic {analytic}, se {se}");
}

#[test]
fn derive_parameters_is_componentwise() {
    let dates = business_days(2021, 2024);
    for seed in 0..5u64 {
        let mut z = NormalStream::new(seed);
        let years: Vec<NaiveDate> = (2019..=2024).map(|y| NaiveDate::from_ymd_opt(y, 12, 31).unwrap()).collect();
        let velocity = DatedSeries::new(years, (0..6).map(|_| 3.0 + 0.3 * z.next_normal()).collect()).unwrap();
        let bundle = IndicatorBundle {
            equity_index_prices: noise_prices(&dates, 0.01 + 0.01 * z.uniform(), seed + 100),
            sovereign_bond_prices: noise_prices(&dates, 0.005 + 0.01 * z.uniform(), seed + 200),
            velocity_series: velocity.clone(),
            inflation_rate: 0.05 * z.uniform(),
            gini: z.uniform(),
            credit_to_gdp: z.uniform(),
            lcr: 2.0 * z.uniform(),
            cds_spread: 0.05 * z.uniform(),
            beta: 2.0 * z.uniform(),
            risk_premium: 0.1 * z.uniform(),
            shock_intensity: if seed % 2 == 0 { Some(1.0 + z.uniform()) } else { None },
        };
        let p = derive_parameters(&bundle, 0.07577, 0.4547).unwrap();
        let inertia = market_inertia(&bundle.equity_index_prices, &bundle.sovereign_bond_prices).unwrap();
        let v = velocity.values();
        let shock = bundle.shock_intensity.unwrap_or_else(|| {
            estimate_shock_intensity(&simple_returns(bundle.equity_index_prices.values()))
                .unwrap()
                .value
        });
        let expected = ParameterSet {
            rho: inertia.rho,
            dv_dt: velocity_delta(v[5], v[4]),
            internal_tension: bundle.gini,
            velocity: v[5],
            pressure: bundle.inflation_rate,
            stickiness: bundle.credit_to_gdp,
            diffusion: bundle.lcr,
            shock,
            risk_premium: bundle.risk_premium,
            cds: bundle.cds_spread,
            beta: bundle.beta,
            cyclical_force: 0.07577,
            epsilon: 0.4547,
        };
        for id in ParamId::ALL {
            assert!((p.get(id) - expected.get(id)).abs() <= 1e-12, "{id}");
        }
    }
}

#[test]
fn classification_matches_finite_differences() {
    use liquidyn_core::model::{eval_lhs, eval_rhs_partial};
    let base = ParameterSet::reference_baseline();
    for id in ParamId::ALL {
        let bumped = base.with(id, base.get(id) + 0.01);
        let dl = eval_lhs(&bumped).unwrap() - eval_lhs(&base).unwrap();
        let dr = eval_rhs_partial(&bumped).unwrap() - eval_rhs_partial(&base).unwrap();
        let observed = match (dl != 0.0, dr != 0.0) {
            (true, false) => Side::Lhs,
            (false, true) => Side::Rhs,
            (false, false) => Side::None,
            (true, true) => Side::Both,
        };
        let declared = classify_effect(Target::Param(id));
        if id == ParamId::Epsilon {
            // ε enters the full right-hand side only
            assert_eq!(observed, Side::None);
            assert_eq!(declared, Side::Rhs);
        } else {
            assert_eq!(observed, declared, "{id}");
        }
    }
}

#[test]
fn monte_carlo_mean_matches_zero_shock_value() {
    let base = ParameterSet::reference_baseline();
    let model = HarmonicModel::default();
    let cfg = ShockConfig { sigma: 1.3475, n_steps: 10, dt: 1.0 };
    let n = 10_000;
    let mc = monte_carlo_balance(&base, &model, &cfg, 0.0, n, 2024, None).unwrap();
    let zero = required_epsilon(&ParameterSet {
        shock: 0.0,
        cyclical_force: 0.0,
        ..base
    })
    .unwrap();
    let se = cfg.sigma * (10.0f64).sqrt() / (n as f64).sqrt();
    assert!((mc.terminal_epsilon.mean - zero).abs() < 4.0 * se);
    // terminal ε is zero + σ·W_T, so its spread is σ·√T
    assert!((mc.terminal_epsilon.std_dev - cfg.sigma * 10f64.sqrt()).abs() < 0.1);
    assert!(mc.terminal_epsilon.p05 < mc.terminal_epsilon.mean);
    assert!(mc.terminal_epsilon.p95 > mc.terminal_epsilon.mean);

    let serial = monte_carlo_balance(&base, &model, &cfg, 0.0, 500, 9, Some(1)).unwrap();
    let parallel = monte_carlo_balance(&base, &model, &cfg, 0.0, 500, 9, Some(6)).unwrap();
    assert_eq!(serial, parallel);
}
