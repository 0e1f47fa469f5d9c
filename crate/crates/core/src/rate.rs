//! Incoherent hopping: golden-rule rates, the classical rate equation on the
//! ring, its self-consistent nonlinear closure and the quasi-static
//! estimate of the nearest-neighbour coherence.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{DensityMatrix, DensitySystem, LatticeParams};
use crate::ode::{self, IntegratorConfig, Observed, OdeSystem, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoppingRates {
    /// Rate across the `v` bond.
    pub rate_v: f64,
    /// Rate across the `v'` bond.
    pub rate_vp: f64,
    /// Total hopping rate out of a site, `rate_v + rate_vp`.
    pub rate0: f64,
    /// Total loss rate out of a decaying site, `rate0 + gamma`.
    pub rate0p: f64,
    pub gamma: f64,
}

impl HoppingRates {
    pub fn from_rates(rate_v: f64, rate_vp: f64, gamma: f64) -> Result<Self> {
        for (name, x) in [("rate_v", rate_v), ("rate_vp", rate_vp), ("gamma", gamma)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(invalid(name, "must be a finite value >= 0"));
            }
        }
        let rate0 = rate_v + rate_vp;
        Ok(Self { rate_v, rate_vp, rate0, rate0p: rate0 + gamma, gamma })
    }
}

/// `Γ = v² γ / (4Δ² + γ²)` and likewise for `v'`.
pub fn hopping_rates(v: f64, v_prime: f64, gamma: f64, delta: f64) -> Result<HoppingRates> {
    if !(gamma > 0.0) {
        return Err(invalid("gamma", "hopping rates need gamma > 0"));
    }
    if !delta.is_finite() {
        return Err(invalid("delta", "must be finite"));
    }
    HoppingRates::from_rates(v * v * lorentz(gamma, delta), v_prime * v_prime * lorentz(gamma, delta), gamma)
}

fn lorentz(gamma: f64, delta: f64) -> f64 {
    gamma / (4.0 * delta * delta + gamma * gamma)
}

/// `v'² / (v² + v'²)`, the displacement of a classical hopper.
pub fn incoherent_displacement(v: f64, v_prime: f64) -> Result<f64> {
    let (a, b) = (v * v, v_prime * v_prime);
    if !(a + b > 0.0) {
        return Err(Error::Domain("incoherent displacement needs v² + v'² > 0".into()));
    }
    let s = a + b;
    // the larger share as a complement keeps the swapped pair summing to exactly 1
    Ok(if b <= a { b / s } else { 1.0 - a / s })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateState {
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub decayed: Vec<f64>,
}

impl RateState {
    pub fn zeros(n_cells: usize) -> Self {
        Self {
            p_plus: vec![0.0; n_cells],
            p_minus: vec![0.0; n_cells],
            decayed: vec![0.0; n_cells],
        }
    }

    pub fn localized(n_cells: usize, origin: usize) -> Self {
        let mut s = Self::zeros(n_cells);
        s.p_plus[origin % n_cells] = 1.0;
        s
    }

    pub fn n_cells(&self) -> usize {
        self.p_plus.len()
    }

    /// Layout `[p_plus | p_minus | decayed]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut y = self.p_plus.clone();
        y.extend_from_slice(&self.p_minus);
        y.extend_from_slice(&self.decayed);
        y
    }

    pub fn from_slice(y: &[f64], n_cells: usize) -> Result<Self> {
        if y.len() != 3 * n_cells {
            return Err(Error::ShapeMismatch { expected: 3 * n_cells, got: y.len() });
        }
        Ok(Self {
            p_plus: y[..n_cells].to_vec(),
            p_minus: y[n_cells..2 * n_cells].to_vec(),
            decayed: y[2 * n_cells..].to_vec(),
        })
    }

    pub fn total(&self) -> f64 {
        self.p_plus.iter().chain(&self.p_minus).chain(&self.decayed).sum()
    }
}

fn rate_rhs_flat(rates: &HoppingRates, n: usize, y: &[f64], dy: &mut [f64]) {
    let (plus, rest) = y.split_at(n);
    let minus = &rest[..n];
    for m in 0..n {
        let next = (m + 1) % n;
        let prev = (m + n - 1) % n;
        dy[m] = -rates.rate0 * plus[m] + rates.rate_v * minus[m] + rates.rate_vp * minus[next];
        dy[n + m] = -rates.rate0p * minus[m] + rates.rate_vp * plus[prev] + rates.rate_v * plus[m];
        dy[2 * n + m] = rates.gamma * minus[m];
    }
}

pub fn rate_rhs(state: &RateState, rates: &HoppingRates) -> Result<RateState> {
    let n = state.n_cells();
    if state.p_minus.len() != n || state.decayed.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: state.p_minus.len().min(state.decayed.len()) });
    }
    let y = state.to_vec();
    let mut dy = vec![0.0; y.len()];
    rate_rhs_flat(rates, n, &y, &mut dy);
    RateState::from_slice(&dy, n)
}

/// Rate equation with constant rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSystem {
    pub rates: HoppingRates,
    pub n_cells: usize,
    pub origin: usize,
}

impl RateSystem {
    pub fn new(rates: HoppingRates, n_cells: usize) -> Result<Self> {
        if n_cells < 3 {
            return Err(invalid("n_cells", "must be >= 3"));
        }
        Ok(Self { rates, n_cells, origin: 0 })
    }
}

impl OdeSystem for RateSystem {
    fn dim(&self) -> usize {
        3 * self.n_cells
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        rate_rhs_flat(&self.rates, self.n_cells, y, dy);
    }
}

impl Observed for RateSystem {
    fn n_cells(&self) -> usize {
        self.n_cells
    }
    fn origin(&self) -> usize {
        self.origin
    }
    fn survival(&self, y: &[f64]) -> f64 {
        y[..2 * self.n_cells].iter().sum()
    }
    fn central_population(&self, y: &[f64]) -> f64 {
        y[self.origin]
    }
    fn decayed<'a>(&self, y: &'a [f64]) -> &'a [f64] {
        &y[2 * self.n_cells..]
    }
}

/// Rate equation whose rates follow the instantaneous offset
/// `Δ(t) = offset + g · p_origin^(+)(t)`. Rates are re-evaluated at every
/// stage. `offset` is zero unless set with [`Self::with_offset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfConsistentRateSystem {
    pub v: f64,
    pub v_prime: f64,
    pub gamma: f64,
    pub g: f64,
    pub offset: f64,
    pub n_cells: usize,
    pub origin: usize,
}

impl SelfConsistentRateSystem {
    pub fn new(v: f64, v_prime: f64, gamma: f64, g: f64, n_cells: usize) -> Result<Self> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(invalid("g", "self-consistent closure needs a finite g >= 0"));
        }
        if n_cells < 3 {
            return Err(invalid("n_cells", "must be >= 3"));
        }
        hopping_rates(v, v_prime, gamma, 0.0)?;
        Ok(Self { v, v_prime, gamma, g, offset: 0.0, n_cells, origin: 0 })
    }

    /// Static energy offset of the initial site added to the mean-field shift.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn rates_at(&self, central: f64) -> HoppingRates {
        let l = lorentz(self.gamma, self.offset + self.g * central);
        let (rate_v, rate_vp) = (self.v * self.v * l, self.v_prime * self.v_prime * l);
        HoppingRates {
            rate_v,
            rate_vp,
            rate0: rate_v + rate_vp,
            rate0p: rate_v + rate_vp + self.gamma,
            gamma: self.gamma,
        }
    }
}

impl OdeSystem for SelfConsistentRateSystem {
    fn dim(&self) -> usize {
        3 * self.n_cells
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let rates = self.rates_at(y[self.origin]);
        rate_rhs_flat(&rates, self.n_cells, y, dy);
    }
}

impl Observed for SelfConsistentRateSystem {
    fn n_cells(&self) -> usize {
        self.n_cells
    }
    fn origin(&self) -> usize {
        self.origin
    }
    fn survival(&self, y: &[f64]) -> f64 {
        y[..2 * self.n_cells].iter().sum()
    }
    fn central_population(&self, y: &[f64]) -> f64 {
        y[self.origin]
    }
    fn decayed<'a>(&self, y: &'a [f64]) -> &'a [f64] {
        &y[2 * self.n_cells..]
    }
}

pub fn integrate_rate(initial: &RateState, rates: HoppingRates, config: &IntegratorConfig) -> Result<Trajectory> {
    let sys = RateSystem::new(rates, initial.n_cells())?;
    ode::integrate(&sys, &initial.to_vec(), config)
}

pub fn integrate_rate_selfconsistent(
    initial: &RateState,
    v: f64,
    v_prime: f64,
    gamma: f64,
    g: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    let sys = SelfConsistentRateSystem::new(v, v_prime, gamma, g, initial.n_cells())?;
    ode::integrate(&sys, &initial.to_vec(), config)
}

/// Adiabatic estimate of `ρ_01` for quasi-static populations:
/// `J (ρ_11 - ρ_00) / (Δ + iγ/2)` with `J = coupling / 2`.
pub fn quasi_static_coherence(rho00: f64, rho11: f64, coupling: f64, gamma: f64, delta: f64) -> Result<Complex64> {
    if delta == 0.0 && gamma == 0.0 {
        return Err(Error::Domain("quasi-static coherence is singular for delta = gamma = 0".into()));
    }
    let j = 0.5 * coupling;
    Ok(j * (rho11 - rho00) / Complex64::new(delta, 0.5 * gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    /// Time average of `|ρ01_full - ρ01_estimate|`.
    pub mean_abs_error: f64,
    /// Time average of `|ρ01_full|`.
    pub mean_abs_full: f64,
    pub relative: f64,
    pub samples: usize,
}

/// Compare `ρ_01` from the full density-matrix evolution with the
/// quasi-static estimate fed by the full `ρ_00`, `ρ_11`, over samples with
/// `t >= t_transient`.
pub fn coherence_diagnostic(params: &LatticeParams, t_transient: f64, config: &IntegratorConfig) -> Result<CoherenceReport> {
    let sys = DensitySystem::new(*params)?;
    let dim = params.n_sites();
    let mut err_sum = 0.0;
    let mut full_sum = 0.0;
    let mut samples = 0;
    let mut failure = None;
    ode::solve(
        &sys,
        &sys.initial_state(),
        config,
        |t, y| {
            if t < t_transient || failure.is_some() {
                return;
            }
            let rho = DensityMatrix::from_slice(y, dim).expect("state sized by system");
            let full = rho.get(0, 1);
            match quasi_static_coherence(
                rho.get(0, 0).re,
                rho.get(1, 1).re,
                params.v_prime,
                params.gamma,
                params.delta_offset,
            ) {
                Ok(est) => {
                    err_sum += (full - est).norm();
                    full_sum += full.norm();
                    samples += 1;
                }
                Err(e) => failure = Some(e),
            }
        },
        |_| false,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    if samples == 0 {
        return Err(invalid("t_transient", "no samples after the transient"));
    }
    Ok(CoherenceReport {
        mean_abs_error: err_sum / samples as f64,
        mean_abs_full: full_sum / samples as f64,
        relative: err_sum / full_sum,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rates_examples() {
        let r = hopping_rates(0.5, 0.5, 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(r.rate_v, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rate_vp, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rate0, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rate0p, 2.25, epsilon = 1e-15);

        assert_eq!(hopping_rates(0.0, 0.5, 2.0, 0.0).unwrap().rate_v, 0.0);

        // 0.0625 * 2 / 5.44 and 0.25 * 2 / 5.44
        let r = hopping_rates(0.25, 0.5, 2.0, 0.6).unwrap();
        assert_abs_diff_eq!(r.rate_v, 0.125 / 5.44, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rate_vp, 0.5 / 5.44, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rate_v, 0.0229779, epsilon = 1e-7);
        assert_abs_diff_eq!(r.rate_vp, 0.0919118, epsilon = 1e-7);
    }

    #[test]
    fn rates_need_positive_gamma() {
        assert!(hopping_rates(0.5, 0.5, 0.0, 0.0).is_err());
        assert!(hopping_rates(0.5, 0.5, -1.0, 0.3).is_err());
    }

    #[test]
    fn incoherent_examples() {
        assert_eq!(incoherent_displacement(0.3, 0.3).unwrap(), 0.5);
        assert_eq!(incoherent_displacement(0.0, 0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(incoherent_displacement(0.25, 0.5).unwrap(), 0.8, epsilon = 1e-15);
        assert!(incoherent_displacement(0.0, 0.0).is_err());
    }

    #[test]
    fn rate_rhs_examples() {
        let r = hopping_rates(0.25, 0.5, 2.0, 0.0).unwrap();
        let d = rate_rhs(&RateState::localized(5, 0), &r).unwrap();
        assert_eq!(d.p_plus[0], -r.rate0);
        assert_eq!(d.p_minus[0], r.rate_v);
        assert_eq!(d.p_minus[1], r.rate_vp);
        assert_eq!(d.p_minus.iter().sum::<f64>(), r.rate0);
        assert!(d.decayed.iter().all(|&x| x == 0.0));

        let z = rate_rhs(&RateState::zeros(5), &r).unwrap();
        assert_eq!(z, RateState::zeros(5));
    }

    #[test]
    fn rate_rhs_uniform_state() {
        let r = hopping_rates(0.25, 0.5, 2.0, 0.1).unwrap();
        let s = RateState {
            p_plus: vec![0.3; 6],
            p_minus: vec![0.1; 6],
            decayed: vec![0.0; 6],
        };
        let d = rate_rhs(&s, &r).unwrap();
        for m in 0..6 {
            assert_abs_diff_eq!(d.p_plus[m], -r.rate0 * 0.3 + r.rate0 * 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn quasi_static_examples() {
        assert_eq!(quasi_static_coherence(0.4, 0.4, 0.5, 2.0, 0.6).unwrap(), Complex64::default());
        let z = quasi_static_coherence(1.0, 0.0, 0.5, 2.0, 0.6).unwrap();
        let expected = Complex64::new(-0.25, 0.0) / Complex64::new(0.6, 1.0);
        assert_abs_diff_eq!(z.re, expected.re, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, expected.im, epsilon = 1e-15);
        assert_abs_diff_eq!(z.re, -0.1103, epsilon = 1e-4);
        assert_abs_diff_eq!(z.im, 0.1838, epsilon = 1e-4);
        assert!(quasi_static_coherence(1.0, 0.0, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn selfconsistent_rejects_negative_g() {
        assert!(SelfConsistentRateSystem::new(0.25, 0.5, 2.0, -1.0, 23).is_err());
        assert!(SelfConsistentRateSystem::new(0.25, 0.5, 0.0, 1.0, 23).is_err());
    }
}
