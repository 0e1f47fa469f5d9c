use qwalk::lattice::LatticeParams;
use qwalk::momentum::ring_solution;
use qwalk::ode::{solve, IntegratorConfig};
use qwalk::rate::{
    coherence_diagnostic, hopping_rates, integrate_rate, integrate_rate_selfconsistent, HoppingRates, RateState,
    RateSystem,
};

fn symmetric() -> HoppingRates {
    HoppingRates::from_rates(0.125, 0.125, 2.0).unwrap()
}

#[test]
fn populations_stay_nonnegative_and_balanced() {
    for rates in [symmetric(), hopping_rates(0.25, 0.5, 2.0, 0.6).unwrap(), hopping_rates(0.5, 0.1, 2.0, 0.0).unwrap()] {
        let tr = integrate_rate(&RateState::localized(23, 0), rates, &IntegratorConfig::default()).unwrap();
        let mut worst: f64 = 0.0;
        for (norm, ledger) in tr.series.norm.iter().zip(&tr.series.decayed_snapshot) {
            worst = worst.max((norm + ledger.iter().sum::<f64>() - 1.0).abs());
        }
        assert!(worst < 1e-9, "balance {worst:e}");
        assert!(tr.final_state.iter().all(|x| *x >= -1e-12));
    }
}

#[test]
fn integration_matches_the_momentum_solution() {
    let rates = symmetric();
    let cfg = IntegratorConfig { t_final: 20.0, n_samples: 201, stop_survival: None, ..IntegratorConfig::default() };
    let sys = RateSystem::new(rates, 23).unwrap();
    let mut worst: f64 = 0.0;
    solve(
        &sys,
        &RateState::localized(23, 0).to_vec(),
        &cfg,
        |t, y| {
            let exact = ring_solution(&rates, 23, t).unwrap().to_vec();
            worst = worst.max(y.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        },
        |_| false,
    )
    .unwrap();
    assert!(worst < 1e-8, "max deviation {worst:e}");
}

#[test]
fn everything_decays_and_the_displacement_is_the_rate_ratio() {
    for rates in [symmetric(), hopping_rates(0.25, 0.5, 2.0, 0.6).unwrap()] {
        let cfg = IntegratorConfig { stop_survival: None, ..IntegratorConfig::default() };
        let tr = integrate_rate(&RateState::localized(23, 0), rates, &cfg).unwrap();
        let decayed: f64 = tr.series.decayed_snapshot.last().unwrap().iter().sum();
        assert!((decayed - 1.0).abs() < 1e-6);
        assert!((tr.dm_final - rates.rate_vp / rates.rate0).abs() < 1e-4, "{}", tr.dm_final);
    }
}

#[test]
fn selfconsistent_closure_at_zero_interaction_is_the_plain_rate_equation() {
    let cfg = IntegratorConfig::default();
    let a = integrate_rate_selfconsistent(&RateState::localized(23, 0), 0.25, 0.5, 2.0, 0.0, &cfg).unwrap();
    let b = integrate_rate(&RateState::localized(23, 0), hopping_rates(0.25, 0.5, 2.0, 0.0).unwrap(), &cfg).unwrap();
    let dev = a.final_state.iter().zip(&b.final_state).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-12);
    assert_eq!(a.series.times, b.series.times);
}

#[test]
fn selfconsistent_displacement_ignores_the_interaction() {
    let cfg = IntegratorConfig::default();
    let dms: Vec<f64> = [0.0, 0.5, 1.0, 4.0, 10.0]
        .iter()
        .map(|&g| integrate_rate_selfconsistent(&RateState::localized(23, 0), 0.25, 0.5, 2.0, g, &cfg).unwrap().dm_final)
        .collect();
    for dm in &dms {
        assert!((dm - 0.8).abs() < 1e-4, "{dms:?}");
    }
}

#[test]
fn interaction_slows_the_initial_decay() {
    let cfg = IntegratorConfig { t_final: 10.0, n_samples: 11, stop_survival: None, ..IntegratorConfig::default() };
    let weak = integrate_rate_selfconsistent(&RateState::localized(23, 0), 0.25, 0.5, 2.0, 0.0, &cfg).unwrap();
    let strong = integrate_rate_selfconsistent(&RateState::localized(23, 0), 0.25, 0.5, 2.0, 4.0, &cfg).unwrap();
    assert!(strong.series.rho00[10] > 0.85 && weak.series.rho00[10] < 0.3);
}

#[test]
fn quasi_static_estimate_tracks_the_full_coherence() {
    let params = LatticeParams { v: 0.25, v_prime: 0.5, delta_offset: 0.6, ..LatticeParams::default() };
    let cfg = IntegratorConfig { t_final: 100.0, n_samples: 1001, stop_survival: None, ..IntegratorConfig::default() };
    let report = coherence_diagnostic(&params, 5.0, &cfg).unwrap();
    assert!(report.samples > 900);
    assert!(report.relative < 0.3, "{report:?}");
    let linear_only = LatticeParams { g: 1.0, ..params };
    assert!(coherence_diagnostic(&linear_only, 5.0, &cfg).is_err());
}
