//! Adaptive explicit Runge-Kutta integration with observable sampling.
//!
//! Two embedded pairs are available, Dormand-Prince 5(4) and 8(5,3), both
//! driven by the same PI step-size controller. Every sample time on the uniform output grid is hit exactly
//! by shortening the step that would overshoot it, so the sampled values
//! carry the same local error control as every other step end.
//!
//! Systems are expressed over flat `f64` slices. Complex amplitudes are
//! stored as interleaved `(re, im)` pairs by the lattice module.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tableau;

/// Right-hand side of an autonomous-or-not first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// A system whose state carries the quantities needed for the displacement
/// observable: remaining norm, central-site occupation and the per-cell
/// ledger of decayed probability.
pub trait Observed: OdeSystem {
    fn n_cells(&self) -> usize;
    /// Cell the particle starts in; displacement labels are measured from here.
    fn origin(&self) -> usize;
    fn survival(&self, y: &[f64]) -> f64;
    fn central_population(&self, y: &[f64]) -> f64;
    fn decayed<'a>(&self, y: &'a [f64]) -> &'a [f64];
}

/// Embedded Runge-Kutta pair used by [`solve`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Dormand-Prince 5(4).
    Dopri5,
    /// Dormand-Prince 8(5,3).
    #[default]
    Dop853,
}

impl Method {
    pub fn order(self) -> f64 {
        match self {
            Method::Dopri5 => 5.0,
            Method::Dop853 => 8.0,
        }
    }

    fn evaluations(self) -> usize {
        match self {
            Method::Dopri5 => tableau::dopri5::STAGES,
            Method::Dop853 => tableau::dop853::STAGES + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_final: f64,
    pub max_step: f64,
    pub n_samples: usize,
    /// Stop as soon as the remaining norm drops below this value.
    pub stop_survival: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::default(),
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            t_final: 400.0,
            max_step: 1.0,
            n_samples: 2001,
            stop_survival: Some(1e-6),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", "must be > 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(invalid("abs_tol", "must be > 0"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(invalid("t_final", "must be a finite value > 0"));
        }
        if !(self.max_step > 0.0) {
            return Err(invalid("max_step", "must be > 0"));
        }
        if self.n_samples < 2 {
            return Err(invalid("n_samples", "must be >= 2"));
        }
        if let Some(s) = self.stop_survival {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(invalid("stop_survival", "must be a finite value >= 0"));
            }
        }
        Ok(())
    }

    /// Same settings with both tolerances replaced.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol;
        self
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let last = (self.n_samples - 1) as f64;
        (0..self.n_samples)
            .map(|i| self.t_final * i as f64 / last)
            .collect()
    }
}

/// Time series of the observables emitted by every experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub norm: Vec<f64>,
    pub rho00: Vec<f64>,
    pub dm_t: Vec<f64>,
    pub decayed_snapshot: Vec<Vec<f64>>,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push<S: Observed + ?Sized>(&mut self, sys: &S, t: f64, y: &[f64]) {
        let decayed = sys.decayed(y);
        self.times.push(t);
        self.norm.push(sys.survival(y));
        self.rho00.push(sys.central_population(y));
        self.dm_t.push(displacement_series(decayed, sys.origin()));
        self.decayed_snapshot.push(decayed.to_vec());
    }
}

/// Result of a raw integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub y: Vec<f64>,
    pub t: f64,
    pub stopped_early: bool,
    pub accepted: usize,
    pub rejected: usize,
}

/// Result of an observed integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub series: ObservableSeries,
    pub final_state: Vec<f64>,
    pub stop_time: f64,
    pub survival: f64,
    /// Displacement evaluated on the final state.
    pub dm_final: f64,
    pub stopped_early: bool,
    pub accepted: usize,
    pub rejected: usize,
}

/// Signed displacement label of `cell` relative to `origin` on a ring of
/// `n` cells, unwrapped into `(-n/2, n/2]`.
pub fn signed_cell(cell: usize, origin: usize, n: usize) -> i64 {
    let n = n as i64;
    let mut d = (cell as i64 - origin as i64).rem_euclid(n);
    if 2 * d > n {
        d -= n;
    }
    d
}

/// Truncated displacement `Σ_m m P_m(t)` from a snapshot of the decayed ledger.
pub fn displacement_series(decayed: &[f64], origin: usize) -> f64 {
    let n = decayed.len();
    decayed
        .iter()
        .enumerate()
        .map(|(m, p)| signed_cell(m, origin, n) as f64 * p)
        .sum()
}

// PI controller constants.
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn rms_norm(v: &[f64], y: &[f64], cfg: &IntegratorConfig) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(vi, yi)| {
            let sc = cfg.abs_tol + cfg.rel_tol * yi.abs();
            (vi / sc).powi(2)
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    order: f64,
    cfg: &IntegratorConfig,
) -> f64 {
    let d0 = rms_norm(y, y, cfg);
    let d1 = rms_norm(f0, y, cfg);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(yi, fi)| yi + h0 * fi).collect();
    let mut f1 = vec![0.0; y.len()];
    sys.rhs(t + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_norm(&diff, y, cfg) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(1.0 / order)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

struct Workspace {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Workspace {
    fn new(method: Method, n: usize) -> Self {
        Self {
            k: vec![vec![0.0; n]; method.evaluations()],
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }
}

/// Stage loop shared by both pairs: fills `k[1..stages]` and writes
/// `y + h Σ b_j k_j` into `y_new`, where `b` is the last row of `a` for FSAL
/// tableaux or `weights` otherwise.
fn stages<S: OdeSystem + ?Sized, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64],
    h: f64,
    a: &[[f64; N]; N],
    c: &[f64; N],
    ws: &mut Workspace,
) {
    for s in 1..N {
        ws.tmp.copy_from_slice(y);
        for (j, &aij) in a[s][..s].iter().enumerate() {
            if aij != 0.0 {
                let hk = h * aij;
                for (x, kj) in ws.tmp.iter_mut().zip(&ws.k[j]) {
                    *x += hk * kj;
                }
            }
        }
        sys.rhs(t + c[s] * h, &ws.tmp, &mut ws.k[s]);
    }
}

/// One Dormand-Prince 5(4) step. On return `k[6]` holds `f(t + h, y_new)`.
fn step_dopri5<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], h: f64, ws: &mut Workspace, cfg: &IntegratorConfig) -> f64 {
    use tableau::dopri5::{A, C, E, STAGES};
    // the last stage evaluates at y_new itself
    stages(sys, t, y, h, &A, &C, ws);
    ws.y_new.copy_from_slice(&ws.tmp);
    let mut worst: f64 = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let err: f64 = h * (0..STAGES).map(|j| E[j] * ws.k[j][i]).sum::<f64>();
        let sc = cfg.abs_tol + cfg.rel_tol * yi.abs().max(ws.y_new[i].abs());
        worst = worst.max((err / sc).abs());
    }
    worst
}

/// One Dormand-Prince 8(5,3) step. On return `k[12]` holds `f(t + h, y_new)`.
fn step_dop853<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], h: f64, ws: &mut Workspace, cfg: &IntegratorConfig) -> f64 {
    use tableau::dop853::{A, B, C, E3, E5, STAGES};
    stages(sys, t, y, h, &A, &C, ws);
    for (i, yi) in y.iter().enumerate() {
        ws.y_new[i] = yi + h * (0..STAGES).map(|j| B[j] * ws.k[j][i]).sum::<f64>();
    }
    sys.rhs(t + h, &ws.y_new, &mut ws.k[STAGES]);
    let (mut e5, mut e3) = (0.0, 0.0);
    for (i, yi) in y.iter().enumerate() {
        let sc = cfg.abs_tol + cfg.rel_tol * yi.abs().max(ws.y_new[i].abs());
        let d5: f64 = (0..=STAGES).map(|j| E5[j] * ws.k[j][i]).sum();
        let d3: f64 = (0..=STAGES).map(|j| E3[j] * ws.k[j][i]).sum();
        e5 = f64::max(e5, (d5 / sc).powi(2));
        e3 = f64::max(e3, (d3 / sc).powi(2));
    }
    if e5 == 0.0 && e3 == 0.0 {
        return 0.0;
    }
    h.abs() * e5 / (e5 + 0.01 * e3).sqrt()
}

/// Integrate `sys` from `y0` at `t = 0` to `cfg.t_final`.
///
/// `on_sample` is called at every point of the uniform sample grid
/// (including `t = 0`). After every accepted step `stop` is consulted and
/// the run ends early when it returns `true`.
pub fn solve<S, F, P>(sys: &S, y0: &[f64], cfg: &IntegratorConfig, mut on_sample: F, stop: P) -> Result<Outcome>
where
    S: OdeSystem + ?Sized,
    F: FnMut(f64, &[f64]),
    P: Fn(&[f64]) -> bool,
{
    cfg.validate()?;
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: y0.len() });
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: 0.0 });
    }

    let samples = cfg.sample_times();
    let mut t = 0.0;
    let mut y = y0.to_vec();
    on_sample(t, &y);
    let mut next = 1;
    let mut accepted = 0;
    let mut rejected = 0;

    if stop(&y) {
        return Ok(Outcome { y, t, stopped_early: true, accepted, rejected });
    }

    let method = cfg.method;
    let last = method.evaluations() - 1;
    let expo1 = 1.0 / method.order() - 0.75 * BETA;
    let mut ws = Workspace::new(method, n);
    sys.rhs(t, &y, &mut ws.k[0]);
    let mut h = initial_step(sys, t, &y, &ws.k[0], method.order(), cfg);
    let mut fac_old = 1e-4_f64;
    let mut last_rejected = false;

    loop {
        let target = samples[next];
        let remaining = target - t;
        let mut step = h.min(cfg.max_step);
        // land exactly on the next sample time
        let lands = step >= remaining * (1.0 - 1e-12);
        if lands {
            step = remaining;
        }
        if step < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h: step });
        }

        let err_norm = match method {
            Method::Dopri5 => step_dopri5(sys, t, &y, step, &mut ws, cfg),
            Method::Dop853 => step_dop853(sys, t, &y, step, &mut ws, cfg),
        };
        if !err_norm.is_finite() {
            h = step * FAC_MIN;
            rejected += 1;
            last_rejected = true;
            continue;
        }

        let fac11 = err_norm.powf(expo1);
        if err_norm <= 1.0 {
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_next = step / fac;
            if last_rejected {
                h_next = h_next.min(step);
            }
            fac_old = err_norm.max(1e-4);
            last_rejected = false;
            accepted += 1;

            std::mem::swap(&mut y, &mut ws.y_new);
            ws.k.swap(0, last);
            t = if lands { target } else { t + step };
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t });
            }
            // a step clipped to hit a sample should not shrink the natural size
            h = if lands { h_next.max(h) } else { h_next };
            if lands {
                on_sample(t, &y);
                next += 1;
                if next == samples.len() {
                    return Ok(Outcome { y, t, stopped_early: false, accepted, rejected });
                }
            }
            if stop(&y) {
                return Ok(Outcome { y, t, stopped_early: true, accepted, rejected });
            }
        } else {
            h = step / (1.0 / FAC_MIN).min(fac11 / SAFETY);
            rejected += 1;
            last_rejected = true;
        }
    }
}

/// Integrate an observed system, recording the observable series on the
/// sample grid and stopping once the survival drops below
/// `cfg.stop_survival`.
pub fn integrate<S: Observed + ?Sized>(sys: &S, y0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    let mut series = ObservableSeries::default();
    let threshold = cfg.stop_survival;
    let out = solve(
        sys,
        y0,
        cfg,
        |t, y| series.push(sys, t, y),
        |y| threshold.is_some_and(|s| sys.survival(y) < s),
    )?;
    let survival = sys.survival(&out.y);
    let dm_final = displacement_series(sys.decayed(&out.y), sys.origin());
    Ok(Trajectory {
        series,
        stop_time: out.t,
        survival,
        dm_final,
        stopped_early: out.stopped_early,
        accepted: out.accepted,
        rejected: out.rejected,
        final_state: out.y,
    })
}
