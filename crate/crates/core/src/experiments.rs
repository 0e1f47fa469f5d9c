//! Scenario presets and parameter sweeps.
//!
//! Coupling ratios `r = v / (v + v')` are realized with the larger coupling
//! pinned at 0.5: `v' = 0.5` and `v = 0.5 r / (1 - r)` below one half,
//! `v = 0.5` and `v' = 0.5 (1 - r) / r` above.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{ChainSystem, GpeSystem, LatticeParams};
use crate::momentum::analytic_displacement;
use crate::ode::{self, IntegratorConfig, ObservableSeries, Trajectory};
use crate::rate::{hopping_rates, incoherent_displacement, RateSystem, SelfConsistentRateSystem};

/// Larger of the two couplings in every sweep point.
pub const PINNED_COUPLING: f64 = 0.5;

pub const FIG2_G_VALUES: [f64; 5] = [0.0, 0.2, 0.5, 1.0, 4.0];
pub const FIG3_DELTA_VALUES: [f64; 4] = [0.0, 0.05, 0.1, 0.6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    FullGpe,
    FullLinearChain,
    Rate,
    RateSelfconsistent,
    Analytic,
    IncoherentFormula,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::FullGpe,
        Model::FullLinearChain,
        Model::Rate,
        Model::RateSelfconsistent,
        Model::Analytic,
        Model::IncoherentFormula,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::FullGpe => "full_gpe",
            Model::FullLinearChain => "full_linear_chain",
            Model::Rate => "rate",
            Model::RateSelfconsistent => "rate_selfconsistent",
            Model::Analytic => "analytic",
            Model::IncoherentFormula => "incoherent_formula",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Closed-form models carry no time integration.
    pub fn is_closed_form(self) -> bool {
        matches!(self, Model::Analytic | Model::IncoherentFormula)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    V,
    VPrime,
    G,
    DeltaOffset,
}

impl Axis {
    fn apply(self, p: &mut LatticeParams, value: f64) {
        match self {
            Axis::V => p.v = value,
            Axis::VPrime => p.v_prime = value,
            Axis::G => p.g = value,
            Axis::DeltaOffset => p.delta_offset = value,
        }
    }
}

/// `(v, v')` for a target ratio `v / (v + v')`.
pub fn couplings_for_ratio(ratio: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(invalid("ratio", "must lie in [0, 1]"));
    }
    Ok(match ratio.partial_cmp(&0.5) {
        Some(Ordering::Less) => (PINNED_COUPLING * ratio / (1.0 - ratio), PINNED_COUPLING),
        Some(Ordering::Greater) => (PINNED_COUPLING, PINNED_COUPLING * (1.0 - ratio) / ratio),
        _ => (PINNED_COUPLING, PINNED_COUPLING),
    })
}

pub fn coupling_ratio(v: f64, v_prime: f64) -> f64 {
    v / (v + v_prime)
}

/// 21 evenly spaced ratios in `[0.05, 0.95]`.
pub fn default_ratio_grid() -> Vec<f64> {
    (0..21).map(|i| (5.0 + 4.5 * i as f64) / 100.0).collect()
}

/// The symmetric point `v = v'`, where finite-size and finite-time effects
/// are largest. Sweeps include it; no accuracy bound applies there.
pub fn is_near_degenerate(ratio: f64) -> bool {
    (ratio - 0.5).abs() < 1e-9
}

/// Baseline parameters of every preset: 23 cells, `γ = 2`, no on-site energies.
pub fn base_params() -> LatticeParams {
    LatticeParams::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: LatticeParams,
    pub axis: Axis,
    pub values: Vec<f64>,
    /// When absent, the base couplings are used as the single sweep point.
    pub ratio_grid: Option<Vec<f64>>,
    pub models: Vec<Model>,
    pub integrator: IntegratorConfig,
    /// Keep the full observable series of every integrated point.
    pub keep_series: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub model: Model,
    /// `None` for the reference curve, which does not depend on it.
    pub g: Option<f64>,
    pub delta: Option<f64>,
    pub dm_final: Option<f64>,
    pub stop_time: Option<f64>,
    pub survival: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub id: String,
    pub series: ObservableSeries,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub series: Vec<SeriesRecord>,
}

impl SweepResult {
    pub fn find(&self, model: Model, ratio: f64, g: Option<f64>, delta: Option<f64>) -> Option<&SweepRow> {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        let opt_close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (_, None) => true,
            (Some(a), Some(b)) => close(a, b),
            (None, Some(_)) => false,
        };
        self.rows
            .iter()
            .find(|r| r.model == model && close(r.ratio, ratio) && opt_close(r.g, g) && opt_close(r.delta, delta))
    }

    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().filter(|r| !r.model.is_closed_form()).all(SweepRow::failed)
    }
}

struct Job {
    index: usize,
    ratio: f64,
    params: LatticeParams,
    model: Model,
}

struct JobOutput {
    index: usize,
    row: SweepRow,
    series: Option<SeriesRecord>,
}

fn series_id(model: Model, params: &LatticeParams, ratio: f64) -> String {
    format!("{}_g{}_d{}_r{:.4}", model.name(), params.g, params.delta_offset, ratio)
}

/// Integrate one model at one parameter point.
pub fn run_model(model: Model, params: &LatticeParams, config: &IntegratorConfig) -> Result<Trajectory> {
    match model {
        Model::FullGpe => {
            let sys = GpeSystem::new(*params)?;
            ode::integrate(&sys, &sys.initial_state(), config)
        }
        Model::FullLinearChain => {
            let sys = ChainSystem::new(*params)?;
            ode::integrate(&sys, &sys.initial_state(), config)
        }
        Model::Rate => {
            params.validate()?;
            let rates = hopping_rates(params.v, params.v_prime, params.gamma, params.delta_offset)?;
            let sys = RateSystem::new(rates, params.n_cells)?;
            ode::integrate(&sys, &crate::rate::RateState::localized(params.n_cells, 0).to_vec(), config)
        }
        Model::RateSelfconsistent => {
            params.validate()?;
            let sys = SelfConsistentRateSystem::new(params.v, params.v_prime, params.gamma, params.g, params.n_cells)?
                .with_offset(params.delta_offset);
            ode::integrate(&sys, &crate::rate::RateState::localized(params.n_cells, 0).to_vec(), config)
        }
        Model::Analytic | Model::IncoherentFormula => Err(invalid("model", "closed-form models are not integrated")),
    }
}

fn closed_form(model: Model, params: &LatticeParams) -> Result<f64> {
    match model {
        Model::Analytic => {
            let rates = hopping_rates(params.v, params.v_prime, params.gamma, params.delta_offset)?;
            analytic_displacement(&rates)
        }
        Model::IncoherentFormula => incoherent_displacement(params.v, params.v_prime),
        _ => unreachable!("integrated model"),
    }
}

fn run_job(job: &Job, config: &IntegratorConfig, keep_series: bool) -> JobOutput {
    let p = &job.params;
    let (g, delta) = if job.model == Model::IncoherentFormula {
        (None, None)
    } else {
        (Some(p.g), Some(p.delta_offset))
    };
    let mut row = SweepRow {
        ratio: job.ratio,
        model: job.model,
        g,
        delta,
        dm_final: None,
        stop_time: None,
        survival: None,
        error: None,
    };
    let mut series = None;
    if job.model.is_closed_form() {
        match closed_form(job.model, p) {
            Ok(dm) => row.dm_final = Some(dm),
            Err(e) => row.error = Some(e.to_string()),
        }
    } else {
        match run_model(job.model, p, config) {
            Ok(tr) => {
                row.dm_final = Some(tr.dm_final);
                row.stop_time = Some(tr.stop_time);
                row.survival = Some(tr.survival);
                if keep_series {
                    series = Some(SeriesRecord { id: series_id(job.model, p, job.ratio), series: tr.series });
                }
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    JobOutput { index: job.index, row, series }
}

/// Run every `(value, ratio, model)` point of `spec`. Integrator failures
/// are recorded per row; the sweep itself only fails on invalid input.
/// Points run on the current rayon pool; the row order is deterministic.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.integrator.validate()?;
    if spec.models.is_empty() {
        return Err(invalid("models", "at least one model is required"));
    }
    let ratios: Vec<Option<f64>> = match &spec.ratio_grid {
        Some(grid) if grid.is_empty() => return Err(invalid("ratio_grid", "must not be empty")),
        Some(grid) => grid.iter().copied().map(Some).collect(),
        None => vec![None],
    };

    let mut jobs = Vec::new();
    for &ratio in &ratios {
        let mut point = spec.base;
        if let Some(r) = ratio {
            let (v, vp) = couplings_for_ratio(r)?;
            point.v = v;
            point.v_prime = vp;
        }
        let r = ratio.unwrap_or_else(|| coupling_ratio(point.v, point.v_prime));
        // reference curve: one row per ratio
        if spec.models.contains(&Model::IncoherentFormula) {
            jobs.push(Job { index: jobs.len(), ratio: r, params: point, model: Model::IncoherentFormula });
        }
        for &value in &spec.values {
            let mut params = point;
            spec.axis.apply(&mut params, value);
            params.validate()?;
            for &model in spec.models.iter().filter(|m| **m != Model::IncoherentFormula) {
                jobs.push(Job { index: jobs.len(), ratio: r, params, model });
            }
        }
    }

    let mut outputs: Vec<JobOutput> = jobs
        .par_iter()
        .map(|job| run_job(job, &spec.integrator, spec.keep_series))
        .collect();
    outputs.sort_by_key(|o| o.index);

    let mut result = SweepResult::default();
    for o in outputs {
        result.rows.push(o.row);
        if let Some(s) = o.series {
            result.series.push(s);
        }
    }
    Ok(result)
}

/// Displacement versus coupling ratio for several interaction strengths.
pub fn run_fig2_sweep(g_values: &[f64], ratio_grid: &[f64], config: &IntegratorConfig) -> Result<SweepResult> {
    run_sweep(&SweepSpec {
        base: base_params(),
        axis: Axis::G,
        values: g_values.to_vec(),
        ratio_grid: Some(ratio_grid.to_vec()),
        models: vec![Model::FullGpe, Model::IncoherentFormula],
        integrator: *config,
        keep_series: false,
    })
}

/// Displacement versus coupling ratio for several initial-site offsets, `g = 0`.
pub fn run_fig3_sweep(delta_values: &[f64], ratio_grid: &[f64], config: &IntegratorConfig) -> Result<SweepResult> {
    run_sweep(&SweepSpec {
        base: base_params(),
        axis: Axis::DeltaOffset,
        values: delta_values.to_vec(),
        ratio_grid: Some(ratio_grid.to_vec()),
        models: vec![Model::FullGpe, Model::IncoherentFormula],
        integrator: *config,
        keep_series: false,
    })
}

/// Linear chain with offset 0.6 on the initial site.
pub fn fig4_preset() -> LatticeParams {
    LatticeParams { v: 0.25, v_prime: 0.5, delta_offset: 0.6, ..base_params() }
}

/// Nonlinear presets: strong (`g = 4`) and intermediate (`g = 0.5`) interaction.
pub fn fig5_presets() -> [LatticeParams; 2] {
    [
        LatticeParams { v: 0.25, v_prime: 0.5, g: 4.0, ..base_params() },
        LatticeParams { v: 0.25, v_prime: 0.5, g: 0.5, ..base_params() },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsComparison {
    pub params: LatticeParams,
    pub full: ObservableSeries,
    pub rate: ObservableSeries,
    pub full_dm: f64,
    pub rate_dm: f64,
    pub max_rho00_deviation: f64,
    pub max_dm_t_deviation: f64,
    pub final_dm_deviation: f64,
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Full mean-field dynamics against the rate equation with
/// `Δ(t) = delta_offset + g ρ00(t)`, both sampled on the same grid.
/// Early stopping is disabled so the grids coincide.
pub fn run_dynamics_comparison(params: &LatticeParams, config: &IntegratorConfig) -> Result<DynamicsComparison> {
    let config = IntegratorConfig { stop_survival: None, ..*config };
    let full = run_model(Model::FullGpe, params, &config)?;
    let rate = run_model(Model::RateSelfconsistent, params, &config)?;
    debug_assert_eq!(full.series.times, rate.series.times);
    Ok(DynamicsComparison {
        params: *params,
        max_rho00_deviation: max_deviation(&full.series.rho00, &rate.series.rho00),
        max_dm_t_deviation: max_deviation(&full.series.dm_t, &rate.series.dm_t),
        final_dm_deviation: (full.dm_final - rate.dm_final).abs(),
        full_dm: full.dm_final,
        rate_dm: rate.dm_final,
        full: full.series,
        rate: rate.series,
    })
}
