use qwalk::lattice::{GpeSystem, LatticeParams};
use qwalk::ode::{integrate, IntegratorConfig, Method, Trajectory};
use qwalk::rate::{hopping_rates, RateSystem};
use qwalk::Error;

fn linear() -> GpeSystem {
    GpeSystem::new(LatticeParams { v: 0.25, v_prime: 0.5, ..LatticeParams::default() }).unwrap()
}

fn run(sys: &GpeSystem, cfg: &IntegratorConfig) -> Trajectory {
    integrate(sys, &sys.initial_state(), cfg).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn fixed_step_error_shrinks_at_the_method_order() {
    let sys = linear();
    let base = IntegratorConfig { t_final: 8.0, n_samples: 2, stop_survival: None, ..IntegratorConfig::default() };
    let reference = run(&sys, &base.with_tolerance(1e-14));
    // a loose tolerance accepts every step, so max_step fixes the step size
    for (method, steps) in [(Method::Dopri5, [0.5, 0.25, 0.125]), (Method::Dop853, [1.0, 0.5, 0.25])] {
        let errors: Vec<f64> = steps
            .iter()
            .map(|&h| {
                let cfg = IntegratorConfig { method, max_step: h, ..base }.with_tolerance(1.0);
                let t = run(&sys, &cfg);
                assert_eq!(t.rejected, 0);
                max_diff(&t.final_state, &reference.final_state)
            })
            .collect();
        for w in errors.windows(2) {
            let observed = (w[0] / w[1]).log2();
            assert!(
                observed > method.order() - 1.0 && observed < method.order() + 2.0,
                "{method:?}: observed order {observed:.2} from {errors:?}"
            );
        }
    }
}

#[test]
fn tighter_tolerance_tracks_the_reference() {
    let sys = linear();
    let base = IntegratorConfig { t_final: 40.0, n_samples: 2, max_step: 1e3, stop_survival: None, ..IntegratorConfig::default() };
    let reference = run(&sys, &IntegratorConfig { method: Method::Dop853, ..base }.with_tolerance(1e-13));
    for method in [Method::Dopri5, Method::Dop853] {
        let tols = [1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10];
        let errors: Vec<f64> = tols
            .iter()
            .map(|&tol| max_diff(&run(&sys, &IntegratorConfig { method, ..base }.with_tolerance(tol)).final_state, &reference.final_state))
            .collect();
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{method:?}: {errors:?}");
        let slope = (errors[0] / errors[5]).log10() / 5.0;
        assert!((0.6..1.4).contains(&slope), "{method:?}: slope {slope:.2}");
        assert!(errors.iter().zip(&tols).all(|(e, tol)| e < &(10.0 * tol)));
    }
}

#[test]
fn early_stop_changes_the_displacement_little() {
    for g in [0.0, 0.5, 4.0] {
        let sys = GpeSystem::new(LatticeParams { v: 0.25, v_prime: 0.5, g, ..LatticeParams::default() }).unwrap();
        let stopped = run(&sys, &IntegratorConfig::default());
        let full = run(&sys, &IntegratorConfig { stop_survival: None, ..IntegratorConfig::default() });
        assert!(stopped.stopped_early && !full.stopped_early);
        assert!(stopped.survival < 1e-6);
        assert!(stopped.stop_time < full.stop_time);
        assert!((stopped.dm_final - full.dm_final).abs() < 1e-4, "g={g}");
        let bound = 0.5 * sys.params.n_cells as f64 * stopped.survival;
        assert!((stopped.dm_final - full.dm_final).abs() <= bound + 1e-8);
    }
}

#[test]
fn identical_configs_give_identical_series() {
    let sys = GpeSystem::new(LatticeParams { g: 1.0, ..LatticeParams::default() }).unwrap();
    let cfg = IntegratorConfig::default();
    let a = run(&sys, &cfg);
    let b = run(&sys, &cfg);
    assert_eq!(a.series, b.series);
    assert_eq!(a.final_state, b.final_state);
    let c = std::thread::spawn(move || run(&sys, &cfg)).join().unwrap();
    assert_eq!(a.series, c.series);
}

#[test]
fn sample_grid_is_uniform_and_complete() {
    let sys = linear();
    let cfg = IntegratorConfig { stop_survival: None, t_final: 50.0, n_samples: 101, ..IntegratorConfig::default() };
    let t = run(&sys, &cfg);
    assert_eq!(t.series.times, cfg.sample_times());
    assert_eq!(t.series.times.len(), 101);
    assert_eq!(*t.series.times.last().unwrap(), 50.0);
}

#[test]
fn rate_systems_share_the_integrator_contract() {
    let rates = hopping_rates(0.25, 0.5, 2.0, 0.0).unwrap();
    let sys = RateSystem::new(rates, 23).unwrap();
    let y0 = qwalk::RateState::localized(23, 0).to_vec();
    let t = integrate(&sys, &y0, &IntegratorConfig::default()).unwrap();
    assert_eq!(t.series.dm_t[0], 0.0);
    assert!(t.stopped_early);
    assert!(matches!(integrate(&sys, &y0[1..], &IntegratorConfig::default()), Err(Error::ShapeMismatch { .. })));
}

#[test]
fn invalid_configs_are_rejected() {
    let sys = linear();
    let y0 = sys.initial_state();
    for cfg in [
        IntegratorConfig { rel_tol: 0.0, ..IntegratorConfig::default() },
        IntegratorConfig { abs_tol: -1.0, ..IntegratorConfig::default() },
        IntegratorConfig { t_final: 0.0, ..IntegratorConfig::default() },
        IntegratorConfig { n_samples: 1, ..IntegratorConfig::default() },
        IntegratorConfig { max_step: 0.0, ..IntegratorConfig::default() },
    ] {
        assert!(matches!(integrate(&sys, &y0, &cfg), Err(Error::InvalidParameter { .. })), "{cfg:?}");
    }
    let cfg = IntegratorConfig::default().with_tolerance(1e-300);
    assert!(matches!(integrate(&sys, &y0, &cfg), Err(Error::StepUnderflow { .. })));
}
