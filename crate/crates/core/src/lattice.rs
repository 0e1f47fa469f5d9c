//! Bipartite lossy ring: parameters, state types and right-hand sides.
//!
//! Each unit cell `m` holds a non-decaying site `a_m` and a decaying site
//! `b_m`. Inside a cell `a_m` and `b_m` are coupled by `v`; across cells
//! `a_m` couples to `b_{m+1}` by `v'`. Units have `ħ = 1`.
//!
//! Three equivalent descriptions are provided:
//!
//! * the two-sublattice mean-field equations ([`gpe_rhs`]),
//! * a single-index chain `c_α` ([`chain_rhs`]), with `α = 2m` for `a_m`
//!   and `α = 2m - 1` (mod `2n`) for `b_m`,
//! * the density matrix `ρ_αβ = c*_α c_β` of the linear chain ([`rho_rhs`]).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ode::{Observed, OdeSystem};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    /// Intra-cell coupling `a_m <-> b_m`.
    pub v: f64,
    /// Inter-cell coupling `a_m <-> b_{m+1}`.
    pub v_prime: f64,
    /// Loss rate on the `b` sublattice.
    pub gamma: f64,
    /// Mean-field interaction strength.
    pub g: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    /// Extra on-site energy of `a_0` only.
    pub delta_offset: f64,
    pub n_cells: usize,
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self {
            v: 0.25,
            v_prime: 0.5,
            gamma: 2.0,
            g: 0.0,
            eps_a: 0.0,
            eps_b: 0.0,
            delta_offset: 0.0,
            n_cells: 23,
        }
    }
}

impl LatticeParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("v", self.v),
            ("v_prime", self.v_prime),
            ("gamma", self.gamma),
            ("g", self.g),
            ("eps_a", self.eps_a),
            ("eps_b", self.eps_b),
            ("delta_offset", self.delta_offset),
        ];
        for (name, x) in finite {
            if !x.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.v < 0.0 {
            return Err(invalid("v", "must be >= 0"));
        }
        if self.v_prime < 0.0 {
            return Err(invalid("v_prime", "must be >= 0"));
        }
        if self.gamma < 0.0 {
            return Err(invalid("gamma", "must be >= 0"));
        }
        if self.n_cells < 3 {
            return Err(invalid("n_cells", "must be >= 3"));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        2 * self.n_cells
    }

    /// On-site energy of chain site `alpha`; the imaginary part is the loss.
    pub fn site_energy(&self, alpha: usize) -> Complex64 {
        if alpha.is_multiple_of(2) {
            let offset = if alpha == 0 { self.delta_offset } else { 0.0 };
            Complex64::new(self.eps_a + offset, 0.0)
        } else {
            Complex64::new(self.eps_b, -0.5 * self.gamma)
        }
    }

    /// Coupling of chain site `alpha` to its left neighbour `alpha - 1`.
    pub fn hop_left(&self, alpha: usize) -> f64 {
        if alpha.is_multiple_of(2) {
            0.5 * self.v
        } else {
            0.5 * self.v_prime
        }
    }

    /// Coupling of chain site `alpha` to its right neighbour `alpha + 1`.
    pub fn hop_right(&self, alpha: usize) -> f64 {
        if alpha.is_multiple_of(2) {
            0.5 * self.v_prime
        } else {
            0.5 * self.v
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// Chain index to `(cell, sublattice)`.
pub fn map_index(alpha: usize, n_cells: usize) -> Result<(usize, Sublattice)> {
    let len = 2 * n_cells;
    if alpha >= len {
        return Err(Error::IndexOutOfRange { index: alpha, len });
    }
    if alpha.is_multiple_of(2) {
        Ok((alpha / 2, Sublattice::A))
    } else {
        Ok((alpha.div_ceil(2) % n_cells, Sublattice::B))
    }
}

/// Inverse of [`map_index`].
pub fn chain_index(cell: usize, sublattice: Sublattice, n_cells: usize) -> Result<usize> {
    if cell >= n_cells {
        return Err(Error::IndexOutOfRange { index: cell, len: n_cells });
    }
    Ok(match sublattice {
        Sublattice::A => 2 * cell,
        Sublattice::B => (2 * cell + 2 * n_cells - 1) % (2 * n_cells),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// Probability decayed from `b_m` so far.
    pub decayed: Vec<f64>,
    pub t: f64,
}

/// Time derivative of a [`WalkState`].
#[derive(Debug, Clone, PartialEq)]
pub struct WalkDerivative {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub decayed: Vec<f64>,
}

impl WalkState {
    pub fn zeros(n_cells: usize) -> Self {
        Self {
            a: vec![Complex64::default(); n_cells],
            b: vec![Complex64::default(); n_cells],
            decayed: vec![0.0; n_cells],
            t: 0.0,
        }
    }

    /// Particle on `a_origin`, everything else empty.
    pub fn localized(n_cells: usize, origin: usize) -> Self {
        let mut s = Self::zeros(n_cells);
        s.a[origin % n_cells] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn n_cells(&self) -> usize {
        self.a.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.a.len();
        if self.b.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: self.b.len() });
        }
        if self.decayed.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: self.decayed.len() });
        }
        Ok(())
    }

    /// Flat layout used by the integrator: `a` and `b` as interleaved
    /// `(re, im)` pairs, followed by the decayed ledger.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(5 * self.a.len());
        for z in self.a.iter().chain(&self.b) {
            y.push(z.re);
            y.push(z.im);
        }
        y.extend_from_slice(&self.decayed);
        y
    }

    pub fn from_slice(y: &[f64], n_cells: usize, t: f64) -> Result<Self> {
        if y.len() != 5 * n_cells {
            return Err(Error::ShapeMismatch { expected: 5 * n_cells, got: y.len() });
        }
        let z = |k: usize| Complex64::new(y[2 * k], y[2 * k + 1]);
        Ok(Self {
            a: (0..n_cells).map(z).collect(),
            b: (n_cells..2 * n_cells).map(z).collect(),
            decayed: y[4 * n_cells..].to_vec(),
            t,
        })
    }
}

pub fn total_norm(state: &WalkState) -> f64 {
    state.a.iter().chain(&state.b).map(|z| z.norm_sqr()).sum()
}

#[inline]
fn cplx(y: &[f64], k: usize) -> Complex64 {
    Complex64::new(y[2 * k], y[2 * k + 1])
}

#[inline]
fn store(dy: &mut [f64], k: usize, z: Complex64) {
    dy[2 * k] = z.re;
    dy[2 * k + 1] = z.im;
}

/// Mean-field right-hand side on the flat layout of [`WalkState::to_vec`].
pub(crate) fn gpe_rhs_flat(p: &LatticeParams, y: &[f64], dy: &mut [f64]) {
    let n = p.n_cells;
    let half_v = 0.5 * p.v;
    let half_vp = 0.5 * p.v_prime;
    for m in 0..n {
        let a = cplx(y, m);
        let b = cplx(y, n + m);
        let b_next = cplx(y, n + (m + 1) % n);
        let a_prev = cplx(y, (m + n - 1) % n);

        let mut e_a = p.eps_a + p.g * a.norm_sqr();
        if m == 0 {
            e_a += p.delta_offset;
        }
        let h_a = e_a * a - half_v * b - half_vp * b_next;
        let e_b = Complex64::new(p.eps_b + p.g * b.norm_sqr(), -0.5 * p.gamma);
        let h_b = e_b * b - half_v * a - half_vp * a_prev;

        store(dy, m, -I * h_a);
        store(dy, n + m, -I * h_b);
        dy[4 * n + m] = p.gamma * b.norm_sqr();
    }
}

pub fn gpe_rhs(state: &WalkState, params: &LatticeParams) -> Result<WalkDerivative> {
    state.check()?;
    if state.n_cells() != params.n_cells {
        return Err(Error::ShapeMismatch { expected: params.n_cells, got: state.n_cells() });
    }
    let n = params.n_cells;
    let y = state.to_vec();
    let mut dy = vec![0.0; y.len()];
    gpe_rhs_flat(params, &y, &mut dy);
    let d = WalkState::from_slice(&dy, n, state.t)?;
    Ok(WalkDerivative { a: d.a, b: d.b, decayed: d.decayed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub c: Vec<Complex64>,
}

impl ChainState {
    pub fn from_walk(state: &WalkState) -> Self {
        let n = state.n_cells();
        let mut c = vec![Complex64::default(); 2 * n];
        for m in 0..n {
            c[2 * m] = state.a[m];
            c[(2 * m + 2 * n - 1) % (2 * n)] = state.b[m];
        }
        Self { c }
    }

    /// Amplitudes only; the decayed ledger of the result is zero.
    pub fn to_walk(&self) -> WalkState {
        let n = self.c.len() / 2;
        let mut s = WalkState::zeros(n);
        for (alpha, z) in self.c.iter().enumerate() {
            match map_index(alpha, n).expect("alpha in range") {
                (m, Sublattice::A) => s.a[m] = *z,
                (m, Sublattice::B) => s.b[m] = *z,
            }
        }
        s
    }
}

/// Chain right-hand side on interleaved `c` followed by the decayed ledger.
///
/// The on-site energy includes the mean-field term `g |c_α|²`, so the
/// chain agrees with [`gpe_rhs`] for every `g`.
pub(crate) fn chain_rhs_flat(p: &LatticeParams, y: &[f64], dy: &mut [f64]) {
    let len = p.n_sites();
    let n = p.n_cells;
    for alpha in 0..len {
        let c = cplx(y, alpha);
        let right = cplx(y, (alpha + 1) % len);
        let left = cplx(y, (alpha + len - 1) % len);
        let e = p.site_energy(alpha) + p.g * c.norm_sqr();
        let h = e * c - p.hop_right(alpha) * right - p.hop_left(alpha) * left;
        store(dy, alpha, -I * h);
    }
    for m in 0..n {
        let beta = (2 * m + len - 1) % len;
        dy[2 * len + m] = p.gamma * cplx(y, beta).norm_sqr();
    }
}

pub fn chain_rhs(state: &ChainState, params: &LatticeParams) -> Result<ChainState> {
    let len = params.n_sites();
    if state.c.len() != len {
        return Err(Error::ShapeMismatch { expected: len, got: state.c.len() });
    }
    let mut y: Vec<f64> = state.c.iter().flat_map(|z| [z.re, z.im]).collect();
    y.extend(std::iter::repeat_n(0.0, params.n_cells));
    let mut dy = vec![0.0; y.len()];
    chain_rhs_flat(params, &y, &mut dy);
    Ok(ChainState { c: (0..len).map(|k| cplx(&dy, k)).collect() })
}

/// Dense `2n × 2n` density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dim: usize,
    pub rho: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, rho: vec![Complex64::default(); dim * dim] }
    }

    /// `ρ_αβ = c*_α c_β`.
    pub fn from_pure(state: &ChainState) -> Self {
        let dim = state.c.len();
        let mut rho = Vec::with_capacity(dim * dim);
        for ca in &state.c {
            for cb in &state.c {
                rho.push(ca.conj() * cb);
            }
        }
        Self { dim, rho }
    }

    pub fn get(&self, alpha: usize, beta: usize) -> Complex64 {
        self.rho[alpha * self.dim + beta]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.get(k, k).re).sum()
    }

    /// `max |ρ - ρ†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.dim {
            for b in a..self.dim {
                worst = worst.max((self.get(a, b) - self.get(b, a).conj()).norm());
            }
        }
        worst
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.rho.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn from_slice(y: &[f64], dim: usize) -> Result<Self> {
        if y.len() != 2 * dim * dim {
            return Err(Error::ShapeMismatch { expected: 2 * dim * dim, got: y.len() });
        }
        Ok(Self { dim, rho: (0..dim * dim).map(|k| cplx(y, k)).collect() })
    }
}

pub(crate) fn rho_rhs_flat(p: &LatticeParams, y: &[f64], dy: &mut [f64]) {
    let len = p.n_sites();
    let at = |a: usize, b: usize| cplx(y, a * len + b);
    for a in 0..len {
        let ea = p.site_energy(a).conj();
        let (ja, jpa) = (p.hop_left(a), p.hop_right(a));
        let a_up = (a + 1) % len;
        let a_dn = (a + len - 1) % len;
        for b in 0..len {
            let b_up = (b + 1) % len;
            let b_dn = (b + len - 1) % len;
            let rhs = (p.site_energy(b) - ea) * at(a, b)
                + jpa * at(a_up, b)
                + ja * at(a_dn, b)
                - p.hop_right(b) * at(a, b_up)
                - p.hop_left(b) * at(a, b_dn);
            store(dy, a * len + b, -I * rhs);
        }
    }
}

/// Density-matrix evolution of the linear chain. Rejects `g != 0`.
pub fn rho_rhs(rho: &DensityMatrix, params: &LatticeParams) -> Result<DensityMatrix> {
    if params.g != 0.0 {
        return Err(invalid("g", "density-matrix evolution is defined for the linear system only"));
    }
    let len = params.n_sites();
    if rho.dim != len {
        return Err(Error::ShapeMismatch { expected: len, got: rho.dim });
    }
    let y = rho.to_vec();
    let mut dy = vec![0.0; y.len()];
    rho_rhs_flat(params, &y, &mut dy);
    DensityMatrix::from_slice(&dy, len)
}

/// Mean-field dynamics in the two-sublattice layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpeSystem {
    pub params: LatticeParams,
    pub origin: usize,
}

impl GpeSystem {
    pub fn new(params: LatticeParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, origin: 0 })
    }

    pub fn with_origin(mut self, origin: usize) -> Self {
        self.origin = origin % self.params.n_cells;
        self
    }

    pub fn initial_state(&self) -> Vec<f64> {
        WalkState::localized(self.params.n_cells, self.origin).to_vec()
    }
}

impl OdeSystem for GpeSystem {
    fn dim(&self) -> usize {
        5 * self.params.n_cells
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        gpe_rhs_flat(&self.params, y, dy);
    }
}

impl Observed for GpeSystem {
    fn n_cells(&self) -> usize {
        self.params.n_cells
    }
    fn origin(&self) -> usize {
        self.origin
    }
    fn survival(&self, y: &[f64]) -> f64 {
        y[..4 * self.params.n_cells].iter().map(|x| x * x).sum()
    }
    fn central_population(&self, y: &[f64]) -> f64 {
        cplx(y, self.origin).norm_sqr()
    }
    fn decayed<'a>(&self, y: &'a [f64]) -> &'a [f64] {
        &y[4 * self.params.n_cells..]
    }
}

/// Same dynamics in the single-index chain layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSystem {
    pub params: LatticeParams,
    pub origin: usize,
}

impl ChainSystem {
    pub fn new(params: LatticeParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, origin: 0 })
    }

    pub fn with_origin(mut self, origin: usize) -> Self {
        self.origin = origin % self.params.n_cells;
        self
    }

    pub fn initial_state(&self) -> Vec<f64> {
        let walk = WalkState::localized(self.params.n_cells, self.origin);
        self.pack(&ChainState::from_walk(&walk), &walk.decayed)
    }

    pub fn pack(&self, state: &ChainState, decayed: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = state.c.iter().flat_map(|z| [z.re, z.im]).collect();
        y.extend_from_slice(decayed);
        y
    }

    pub fn unpack(&self, y: &[f64]) -> ChainState {
        ChainState { c: (0..self.params.n_sites()).map(|k| cplx(y, k)).collect() }
    }
}

impl OdeSystem for ChainSystem {
    fn dim(&self) -> usize {
        5 * self.params.n_cells
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        chain_rhs_flat(&self.params, y, dy);
    }
}

impl Observed for ChainSystem {
    fn n_cells(&self) -> usize {
        self.params.n_cells
    }
    fn origin(&self) -> usize {
        self.origin
    }
    fn survival(&self, y: &[f64]) -> f64 {
        y[..4 * self.params.n_cells].iter().map(|x| x * x).sum()
    }
    fn central_population(&self, y: &[f64]) -> f64 {
        cplx(y, 2 * self.origin).norm_sqr()
    }
    fn decayed<'a>(&self, y: &'a [f64]) -> &'a [f64] {
        &y[4 * self.params.n_cells..]
    }
}

/// Density-matrix dynamics of the linear chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySystem {
    pub params: LatticeParams,
}

impl DensitySystem {
    pub fn new(params: LatticeParams) -> Result<Self> {
        params.validate()?;
        if params.g != 0.0 {
            return Err(invalid("g", "density-matrix evolution is defined for the linear system only"));
        }
        Ok(Self { params })
    }

    /// `ρ_αβ(0) = δ_αβ δ_α0`.
    pub fn initial_state(&self) -> Vec<f64> {
        let len = self.params.n_sites();
        let mut rho = DensityMatrix::zeros(len);
        rho.rho[0] = Complex64::new(1.0, 0.0);
        rho.to_vec()
    }
}

impl OdeSystem for DensitySystem {
    fn dim(&self) -> usize {
        let len = self.params.n_sites();
        2 * len * len
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        rho_rhs_flat(&self.params, y, dy);
    }
}
