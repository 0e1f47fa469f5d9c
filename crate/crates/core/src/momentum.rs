//! Exact solution of the constant-rate equation in quasimomentum space.
//!
//! The rate matrix is circulant in the cell index, so each Fourier mode
//! `q_k = Σ_m e^{-ikm} p_m` evolves under its own 2×2 system
//!
//! ```text
//! d/dt q⁺ = -Γ0  q⁺ + Γ_k  q⁻
//! d/dt q⁻ = -Γ0' q⁻ + Γ_k* q⁺,      Γ_k = Γ + Γ' e^{ik}
//! ```
//!
//! with `q⁺(0) = 1`, `q⁻(0) = 0`. On a ring of `n` cells the modes
//! `k_j = 2πj/n` give the exact finite-lattice solution.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::rate::{HoppingRates, RateState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumSolution {
    pub k: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub gamma_k: Complex64,
}

impl MomentumSolution {
    pub fn new(k: f64, rates: &HoppingRates) -> Result<Self> {
        if !(rates.gamma > 0.0) {
            return Err(invalid("gamma", "momentum solution needs gamma > 0"));
        }
        let gamma_k = rates.rate_v + rates.rate_vp * Complex64::from_polar(1.0, k);
        let mean = -0.5 * (rates.rate0 + rates.rate0p);
        let root = (0.25 * rates.gamma * rates.gamma + gamma_k.norm_sqr()).sqrt();
        Ok(Self { k, lambda_plus: mean + root, lambda_minus: mean - root, gamma_k })
    }

    /// `(q⁺_k(t), q⁻_k(t))`.
    pub fn populations(&self, t: f64, rates: &HoppingRates) -> (Complex64, Complex64) {
        let (lp, lm) = (self.lambda_plus, self.lambda_minus);
        let (ep, em) = ((lp * t).exp(), (lm * t).exp());
        let split = lp - lm;
        let plus = ((lp + rates.rate0p) * ep - (lm + rates.rate0p) * em) / split;
        let minus = self.gamma_k.conj() * (ep - em) / split;
        (Complex64::new(plus, 0.0), minus)
    }

    /// `∫_0^t q⁻_k(s) ds`.
    pub fn integrated_minus(&self, t: f64) -> Complex64 {
        let (lp, lm) = (self.lambda_plus, self.lambda_minus);
        let part = |l: f64| (l * t).exp_m1() / l;
        self.gamma_k.conj() * (part(lp) - part(lm)) / (lp - lm)
    }
}

pub fn momentum_populations(k: f64, t: f64, rates: &HoppingRates) -> Result<(Complex64, Complex64)> {
    if !(t >= 0.0) {
        return Err(invalid("t", "must be >= 0"));
    }
    Ok(MomentumSolution::new(k, rates)?.populations(t, rates))
}

/// `Q_k = ∫_0^∞ q⁻_k dt = Γ_k* / (Γ0 Γ0' - |Γ_k|²)`.
pub fn q_integral(k: f64, rates: &HoppingRates) -> Result<Complex64> {
    let gamma_k = rates.rate_v + rates.rate_vp * Complex64::from_polar(1.0, k);
    let denom = rates.rate0 * rates.rate0p - gamma_k.norm_sqr();
    if !(denom > 0.0) {
        return Err(Error::Domain(format!("Q_k denominator {denom:e} is not positive")));
    }
    Ok(gamma_k.conj() / denom)
}

/// Closed-form displacement `Γ' / (Γ + Γ')`.
pub fn analytic_displacement(rates: &HoppingRates) -> Result<f64> {
    if !(rates.rate0 > 0.0) {
        return Err(Error::Domain("displacement needs rate_v + rate_vp > 0".into()));
    }
    Ok(rates.rate_vp / rates.rate0)
}

/// Displacement from `iγ ∂_k Q_k` at `k = 0`, by central difference.
pub fn displacement_by_derivative(rates: &HoppingRates, step: f64) -> Result<f64> {
    if !(rates.rate0 > 0.0) {
        return Err(Error::Domain("displacement needs rate_v + rate_vp > 0".into()));
    }
    let dq = (q_integral(step, rates)? - q_integral(-step, rates)?) / (2.0 * step);
    Ok((Complex64::i() * rates.gamma * dq).re)
}

/// Quasimomenta `2πj/n`, `j = 0..n`, folded into `[-π, π)`.
pub fn brillouin_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let k = 2.0 * PI * j as f64 / n as f64;
            if k >= PI {
                k - 2.0 * PI
            } else {
                k
            }
        })
        .collect()
}

/// Discrete inverse transform `p_m = (1/n) Σ_j e^{i k_j m} q_j` of samples
/// taken on [`brillouin_grid`]. The samples must satisfy `q_{-k} = q_k*` so
/// that the populations are real.
pub fn inverse_transform(samples: &[Complex64]) -> Result<Vec<f64>> {
    let n = samples.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = samples.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = (0..n)
        .map(|j| (samples[j] - samples[(n - j) % n].conj()).norm())
        .fold(0.0, f64::max);
    if asym > 1e-12 * scale {
        return Err(Error::NonHermitianSamples(asym));
    }
    let grid = brillouin_grid(n);
    Ok((0..n)
        .map(|m| {
            let sum: Complex64 = grid
                .iter()
                .zip(samples)
                .map(|(k, q)| Complex64::from_polar(1.0, k * m as f64) * q)
                .sum();
            sum.re / n as f64
        })
        .collect())
}

/// Exact rate-equation state on a ring of `n_cells` at time `t`, starting
/// from `p⁺_m = δ_{m0}`.
pub fn ring_solution(rates: &HoppingRates, n_cells: usize, t: f64) -> Result<RateState> {
    if n_cells == 0 {
        return Err(invalid("n_cells", "must be > 0"));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", "must be >= 0"));
    }
    let mut plus = Vec::with_capacity(n_cells);
    let mut minus = Vec::with_capacity(n_cells);
    let mut decayed = Vec::with_capacity(n_cells);
    for k in brillouin_grid(n_cells) {
        let sol = MomentumSolution::new(k, rates)?;
        let (qp, qm) = sol.populations(t, rates);
        plus.push(qp);
        minus.push(qm);
        decayed.push(rates.gamma * sol.integrated_minus(t));
    }
    Ok(RateState {
        p_plus: inverse_transform(&plus)?,
        p_minus: inverse_transform(&minus)?,
        decayed: inverse_transform(&decayed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn symmetric() -> HoppingRates {
        HoppingRates::from_rates(0.125, 0.125, 2.0).unwrap()
    }

    #[test]
    fn eigenvalues_at_zero_momentum() {
        let s = MomentumSolution::new(0.0, &symmetric()).unwrap();
        // -1.25 ± sqrt(1.0625)
        assert_abs_diff_eq!(s.lambda_plus, -1.25 + 1.0625f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.lambda_plus, -0.2192236, epsilon = 1e-7);
        assert_abs_diff_eq!(s.lambda_minus, -2.2807764, epsilon = 1e-7);
    }

    #[test]
    fn populations_at_start_and_end() {
        let r = symmetric();
        let (p, m) = momentum_populations(0.7, 0.0, &r).unwrap();
        assert_abs_diff_eq!(p.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.norm(), 0.0, epsilon = 1e-15);
        let (p, m) = momentum_populations(0.7, 1e3, &r).unwrap();
        assert!(p.norm() < 1e-60 && m.norm() < 1e-60);
        assert!(momentum_populations(0.0, -1.0, &r).is_err());
    }

    #[test]
    fn zero_gamma_is_rejected() {
        let r = HoppingRates::from_rates(0.1, 0.1, 0.0).unwrap();
        assert!(MomentumSolution::new(0.0, &r).is_err());
    }

    #[test]
    fn q_integral_examples() {
        let r = symmetric();
        assert_abs_diff_eq!((q_integral(0.0, &r).unwrap() * r.gamma).re, 1.0, epsilon = 1e-14);

        let only_v = HoppingRates::from_rates(0.2, 0.0, 2.0).unwrap();
        let q0 = q_integral(0.0, &only_v).unwrap();
        let q1 = q_integral(1.3, &only_v).unwrap();
        assert_abs_diff_eq!((q0 - q1).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q0.re, 0.2 / (0.2 * 2.2 - 0.04), epsilon = 1e-15);
        assert_abs_diff_eq!(displacement_by_derivative(&only_v, 1e-5).unwrap(), 0.0, epsilon = 1e-12);

        let degenerate = HoppingRates::from_rates(0.2, 0.1, 0.0).unwrap();
        assert!(q_integral(0.0, &degenerate).is_err());
    }

    #[test]
    fn displacement_examples() {
        assert_eq!(analytic_displacement(&symmetric()).unwrap(), 0.5);
        let r = HoppingRates::from_rates(0.125 / 5.44, 0.5 / 5.44, 2.0).unwrap();
        assert_abs_diff_eq!(analytic_displacement(&r).unwrap(), 0.8, epsilon = 1e-15);
        let fd = displacement_by_derivative(&r, 1e-5).unwrap();
        assert!((fd - 0.8).abs() < 1e-6, "{fd}");
        let none = HoppingRates::from_rates(0.0, 0.0, 2.0).unwrap();
        assert!(analytic_displacement(&none).is_err());
    }

    #[test]
    fn grid_is_folded() {
        let g = brillouin_grid(4);
        assert_eq!(g, vec![0.0, PI / 2.0, -PI, -PI / 2.0]);
        assert!(brillouin_grid(23).iter().all(|&k| (-PI..PI).contains(&k)));
    }

    #[test]
    fn inverse_of_constant_is_delta() {
        let p = inverse_transform(&[Complex64::new(1.0, 0.0); 7]).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert!(p[1..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn asymmetric_samples_are_reported() {
        let mut q = vec![Complex64::new(1.0, 0.0); 5];
        q[1] = Complex64::new(1.0, 0.5);
        assert!(matches!(inverse_transform(&q), Err(Error::NonHermitianSamples(_))));
    }

    #[test]
    fn ring_solution_starts_localized() {
        let s = ring_solution(&symmetric(), 23, 0.0).unwrap();
        assert_abs_diff_eq!(s.p_plus[0], 1.0, epsilon = 1e-14);
        assert!(s.p_plus[1..].iter().all(|x| x.abs() < 1e-14));
        assert!(s.p_minus.iter().chain(&s.decayed).all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn zero_mode_is_total_population() {
        let r = symmetric();
        let s = ring_solution(&r, 23, 3.0).unwrap();
        let (q0, _) = momentum_populations(0.0, 3.0, &r).unwrap();
        assert_abs_diff_eq!(s.p_plus.iter().sum::<f64>(), q0.re, epsilon = 1e-13);
    }
}
