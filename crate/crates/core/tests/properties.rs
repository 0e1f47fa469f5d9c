use num_complex::Complex64;
use proptest::prelude::*;

use qwalk::experiments::{coupling_ratio, couplings_for_ratio};
use qwalk::lattice::{chain_index, chain_rhs, gpe_rhs, map_index, ChainState, LatticeParams, WalkState};
use qwalk::momentum::{brillouin_grid, inverse_transform, q_integral, MomentumSolution};
use qwalk::ode::signed_cell;
use qwalk::rate::{hopping_rates, incoherent_displacement, rate_rhs, HoppingRates, RateState};

fn amp() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn walk(n: usize) -> impl Strategy<Value = WalkState> {
    (prop::collection::vec(amp(), n), prop::collection::vec(amp(), n)).prop_map(move |(a, b)| WalkState {
        a,
        b,
        decayed: vec![0.0; n],
        t: 0.0,
    })
}

fn params(n: usize) -> impl Strategy<Value = LatticeParams> {
    (0.0..2.0f64, 0.0..2.0f64, 0.0..4.0f64, -5.0..5.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(
        move |(v, v_prime, gamma, g, eps_a, eps_b, delta_offset)| LatticeParams {
            v,
            v_prime,
            gamma,
            g,
            eps_a,
            eps_b,
            delta_offset,
            n_cells: n,
        },
    )
}

fn case() -> impl Strategy<Value = (WalkState, LatticeParams)> {
    (2usize..12).prop_flat_map(|n| (walk(n), params(n)))
}

fn rates() -> impl Strategy<Value = HoppingRates> {
    (0.0..1.0f64, 0.0..1.0f64, 0.01..4.0f64).prop_map(|(a, b, g)| HoppingRates::from_rates(a, b, g).unwrap())
}

fn rate_state() -> impl Strategy<Value = RateState> {
    (2usize..16).prop_flat_map(|n| {
        (prop::collection::vec(0.0..1.0f64, n), prop::collection::vec(0.0..1.0f64, n)).prop_map(move |(p, q)| RateState {
            p_plus: p,
            p_minus: q,
            decayed: vec![0.0; n],
        })
    })
}

proptest! {
    #[test]
    fn chain_index_inverts_map_index(n in 1usize..40, seed in 0usize..1000) {
        let alpha = seed % (2 * n);
        let (cell, sub) = map_index(alpha, n).unwrap();
        prop_assert!(cell < n);
        prop_assert_eq!(chain_index(cell, sub, n).unwrap(), alpha);
        prop_assert!(map_index(2 * n, n).is_err());
    }

    #[test]
    fn chain_and_sublattice_derivatives_agree((state, p) in case()) {
        let walk = gpe_rhs(&state, &p).unwrap();
        let chain = chain_rhs(&ChainState::from_walk(&state), &p).unwrap();
        let mapped = ChainState::from_walk(&WalkState { a: walk.a, b: walk.b, decayed: walk.decayed, t: 0.0 });
        for (x, y) in mapped.c.iter().zip(&chain.c) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn lost_norm_reappears_in_the_ledger((state, p) in case()) {
        let d = gpe_rhs(&state, &p).unwrap();
        let dnorm: f64 = state.a.iter().zip(&d.a).chain(state.b.iter().zip(&d.b)).map(|(z, dz)| 2.0 * (z.conj() * dz).re).sum();
        let dledger: f64 = d.decayed.iter().sum();
        prop_assert!((dnorm + dledger).abs() < 1e-12 * (1.0 + dledger.abs()));
        prop_assert!(d.decayed.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn rate_equations_conserve_probability(state in rate_state(), r in rates()) {
        let d = rate_rhs(&state, &r).unwrap();
        let total = d.p_plus.iter().chain(&d.p_minus).chain(&d.decayed).sum::<f64>();
        prop_assert!(total.abs() < 1e-12);
    }

    #[test]
    fn incoherent_displacements_of_swapped_couplings_sum_to_one(v in 0.01..3.0f64, vp in 0.01..3.0f64) {
        let sum = incoherent_displacement(v, vp).unwrap() + incoherent_displacement(vp, v).unwrap();
        prop_assert_eq!(sum, 1.0);
    }

    #[test]
    fn rate_ratio_does_not_depend_on_the_detuning(v in 0.01..2.0f64, vp in 0.01..2.0f64, gamma in 0.1..4.0f64, delta in -3.0..3.0f64) {
        let shifted = hopping_rates(v, vp, gamma, delta).unwrap();
        let resonant = hopping_rates(v, vp, gamma, 0.0).unwrap();
        prop_assert!((shifted.rate_vp / shifted.rate0 - resonant.rate_vp / resonant.rate0).abs() < 1e-13);
        prop_assert!((shifted.rate_vp / shifted.rate0 - incoherent_displacement(v, vp).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn momentum_eigenvalues_satisfy_vieta(r in rates(), k in -std::f64::consts::PI..std::f64::consts::PI) {
        let s = MomentumSolution::new(k, &r).unwrap();
        let scale = 1.0 + r.rate0p * r.rate0p;
        prop_assert!((s.lambda_plus + s.lambda_minus + r.rate0 + r.rate0p).abs() < 1e-12 * scale);
        let product = r.rate0 * r.rate0p - s.gamma_k.norm_sqr();
        prop_assert!((s.lambda_plus * s.lambda_minus - product).abs() < 1e-12 * scale);
    }

    #[test]
    fn inverse_transform_of_decay_integrals_sums_to_the_zero_mode(r in rates(), n in 1usize..30) {
        let samples: Vec<Complex64> = brillouin_grid(n).into_iter().map(|k| q_integral(k, &r).unwrap()).collect();
        let p = inverse_transform(&samples).unwrap();
        let q0 = q_integral(0.0, &r).unwrap().re;
        prop_assert!((p.iter().sum::<f64>() - q0).abs() < 1e-10 * q0);
    }

    #[test]
    fn signed_cells_are_centred_and_congruent(n in 1usize..60, cell in 0usize..60, origin in 0usize..60) {
        let (cell, origin) = (cell % n, origin % n);
        let d = signed_cell(cell, origin, n);
        prop_assert!(-(n as i64) < 2 * d && 2 * d <= n as i64);
        prop_assert_eq!((d - cell as i64 + origin as i64).rem_euclid(n as i64), 0);
    }

    #[test]
    fn ratio_couplings_round_trip(ratio in 0.0..=1.0f64) {
        let (v, vp) = couplings_for_ratio(ratio).unwrap();
        prop_assert!(v.max(vp) == 0.5);
        prop_assert!((coupling_ratio(v, vp) - ratio).abs() < 1e-14);
    }
}
