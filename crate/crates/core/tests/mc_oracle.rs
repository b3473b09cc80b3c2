use lvsmile_core::black_scholes::{bs_price, bs_vega, BsPoint};
use lvsmile_core::eta::ExpEta;
use lvsmile_core::mc::{
    eps_sensitivity, eps_sensitivity_with, simulate_call, simulate_calls, McConfig,
};
use lvsmile_core::pricer::price;
use lvsmile_core::transforms::{ContourSpec, Payoff};
use lvsmile_core::ModelParams;

#[test]
fn gbm_limit_with_a_million_paths() {
    let p = ModelParams::new(0.25, 0.0, -0.75, 0.0).unwrap();
    // log-Euler is exact for constant volatility, one step suffices
    let cfg = McConfig {
        n_paths: 1_000_000,
        dt: 1.0,
        seed: 99,
        antithetic: false,
    };
    let est = simulate_call(&p, 1.0, 0.0, &cfg).unwrap();
    let bs = bs_price(&BsPoint::new(0.25, 1.0, 0.0, 0.0).unwrap());
    assert!(
        (est.price - bs).abs() < 3.0 * est.std_error,
        "{est:?} vs {bs}"
    );
}

#[test]
fn sensitivity_at_zero_eps_matches_spectral_first_term() {
    let p = ModelParams::new(0.25, 0.0, -0.75, 0.0).unwrap();
    let cfg = McConfig {
        n_paths: 100_000,
        dt: 0.01,
        seed: 5,
        antithetic: true,
    };
    let mc = eps_sensitivity(&p, 1.0, 0.0, &cfg, 1e-3).unwrap();
    let u1 = price(
        &p.with_eps(1.0).unwrap(),
        &Payoff::call(0.0).unwrap(),
        1.0,
        1,
        &ContourSpec::call(),
    )
    .unwrap()
    .terms[1];
    assert!(
        (mc.price - u1).abs() < 3.0 * mc.std_error + 2e-3 * u1.abs(),
        "{mc:?} vs {u1}"
    );
}

#[test]
fn constant_bump_control_is_vega_over_two_a() {
    // eta = 1 turns eps into a shift of the variance: dC/deps = vega / (2 a)
    let a = 0.25;
    let cfg = McConfig {
        n_paths: 100_000,
        dt: 0.25,
        seed: 8,
        antithetic: true,
    };
    let mc =
        eps_sensitivity_with(a, 0.0, &ExpEta { beta: 0.0 }, 0.0, 1.0, 0.1, &cfg, 1e-4).unwrap();
    let want = bs_vega(&BsPoint::new(a, 1.0, 0.0, 0.1).unwrap()) / (2.0 * a);
    assert!(
        (mc.price - want).abs() < 3.0 * mc.std_error + 1e-3 * want,
        "{mc:?} vs {want}"
    );
}

#[test]
fn weak_error_is_first_order_in_dt() {
    let p = ModelParams::new(0.3, 0.1, -1.0, 0.0).unwrap();
    let run = |dt: f64| {
        let cfg = McConfig {
            n_paths: 2_000_000,
            dt,
            seed: 11,
            antithetic: true,
        };
        simulate_call(&p, 1.0, -0.2, &cfg).unwrap().price
    };
    let v: Vec<f64> = [1.0, 0.5, 0.25].iter().map(|&dt| run(dt)).collect();
    let ratio = (v[0] - v[1]) / (v[1] - v[2]);
    assert!(
        (1.0..=3.0).contains(&ratio),
        "successive differences ratio {ratio}"
    );
}

#[test]
fn base_prices_sit_inside_the_mc_band() {
    let p = ModelParams::from_sqrt_eps(0.25, 0.15, -0.75, 0.0).unwrap();
    let ks = [-0.5, 0.0, 0.5];
    let cfg = McConfig {
        n_paths: 50_000,
        dt: 0.01,
        seed: 21,
        antithetic: true,
    };
    let mc = simulate_calls(&p, 1.0, &ks, &cfg).unwrap();
    for (k, m) in ks.iter().zip(&mc) {
        let s = price(
            &p,
            &Payoff::call(*k).unwrap(),
            1.0,
            10,
            &ContourSpec::call(),
        )
        .unwrap()
        .total;
        assert!(
            (s - m.price).abs() < 4.0 * m.std_error,
            "k={k}: {s} vs {m:?}"
        );
    }
}
