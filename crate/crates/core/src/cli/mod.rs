//! Configuration, scenario dispatch and artifact emission for the `qwalk`
//! binary.

pub mod config;
pub mod output;
mod plot;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{canonical_key, parse_formats, resolve, Assignments, ConfigError, Format, RunConfig, Scenario};
pub use output::DynamicsRecord;

use crate::experiments::{coupling_ratio, run_dynamics_comparison, run_sweep, Axis, Model, SweepRow, SweepSpec};
use crate::ode::{Method, ObservableSeries};
use output::io_err;
use plot::Line;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] crate::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("plot {0}")]
    Plot(String),
    #[error("all {0} points failed; see errors.csv")]
    AllFailed(usize),
}

impl CliError {
    /// 1 for configuration and I/O problems, 2 when every point failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::AllFailed(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub rows: Vec<SweepRow>,
    pub dynamics: Vec<DynamicsRecord>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }
}

struct Outcome {
    rows: Vec<SweepRow>,
    series: Vec<(String, ObservableSeries)>,
    dynamics: Vec<DynamicsRecord>,
}

fn sweep_outcome(cfg: &RunConfig, keep_series: bool) -> Result<Outcome, CliError> {
    let (axis, values, ratio_grid) = match cfg.scenario {
        Scenario::Fig2 => (Axis::G, cfg.sweep.g_values.clone(), Some(cfg.sweep.ratios.clone())),
        Scenario::Fig3 => (Axis::DeltaOffset, cfg.sweep.delta_values.clone(), Some(cfg.sweep.ratios.clone())),
        _ => (Axis::G, cfg.sweep.g_values.clone(), None),
    };
    let result = run_sweep(&SweepSpec {
        base: cfg.lattice,
        axis,
        values,
        ratio_grid,
        models: cfg.sweep.models.clone(),
        integrator: cfg.integrator,
        keep_series,
    })?;
    Ok(Outcome {
        rows: result.rows,
        series: result.series.into_iter().map(|s| (s.id, s.series)).collect(),
        dynamics: Vec::new(),
    })
}

fn dynamics_row(model: Model, p: &crate::LatticeParams, s: Option<(&ObservableSeries, f64)>, err: Option<String>) -> SweepRow {
    SweepRow {
        ratio: coupling_ratio(p.v, p.v_prime),
        model,
        g: Some(p.g),
        delta: Some(p.delta_offset),
        dm_final: s.map(|x| x.1),
        stop_time: s.and_then(|x| x.0.times.last().copied()),
        survival: s.and_then(|x| x.0.norm.last().copied()),
        error: err,
    }
}

fn dynamics_outcome(cfg: &RunConfig) -> Outcome {
    let points: Vec<(String, crate::LatticeParams)> = match cfg.scenario {
        Scenario::Fig4 => vec![(String::new(), cfg.lattice)],
        _ => cfg
            .sweep
            .g_values
            .iter()
            .map(|&g| (format!("_g{g}"), crate::LatticeParams { g, ..cfg.lattice }))
            .collect(),
    };
    let mut out = Outcome { rows: Vec::new(), series: Vec::new(), dynamics: Vec::new() };
    for (suffix, p) in points {
        match run_dynamics_comparison(&p, &cfg.integrator) {
            Ok(c) => {
                out.rows.push(dynamics_row(Model::FullGpe, &p, Some((&c.full, c.full_dm)), None));
                out.rows.push(dynamics_row(Model::RateSelfconsistent, &p, Some((&c.rate, c.rate_dm)), None));
                out.dynamics.push(DynamicsRecord {
                    g: p.g,
                    delta: p.delta_offset,
                    dm_full: c.full_dm,
                    dm_rate: c.rate_dm,
                    max_rho00_deviation: c.max_rho00_deviation,
                    max_dm_t_deviation: c.max_dm_t_deviation,
                    final_dm_deviation: c.final_dm_deviation,
                });
                out.series.push((format!("full{suffix}"), c.full));
                out.series.push((format!("rate{suffix}"), c.rate));
            }
            Err(e) => {
                for m in [Model::FullGpe, Model::RateSelfconsistent] {
                    out.rows.push(dynamics_row(m, &p, None, Some(e.to_string())));
                }
            }
        }
    }
    out
}

fn sweep_plot_lines(cfg: &RunConfig, rows: &[SweepRow]) -> Vec<Line> {
    let mut lines = Vec::new();
    let key = |r: &SweepRow| match cfg.scenario {
        Scenario::Fig3 => r.delta,
        _ => r.g,
    };
    let label = if cfg.scenario == Scenario::Fig3 { "delta" } else { "g" };
    for &model in &cfg.sweep.models {
        let mut keys: Vec<Option<f64>> = Vec::new();
        for r in rows.iter().filter(|r| r.model == model) {
            if !keys.contains(&key(r)) {
                keys.push(key(r));
            }
        }
        for k in keys {
            let points = rows
                .iter()
                .filter(|r| r.model == model && key(r) == k)
                .filter_map(|r| r.dm_final.map(|d| (r.ratio, d)))
                .collect();
            let label = match k {
                Some(k) => format!("{model} {label}={k}"),
                None => model.to_string(),
            };
            lines.push(Line { label, points });
        }
    }
    lines
}

fn series_lines(series: &[(String, ObservableSeries)], dm_only: bool) -> Vec<Line> {
    let mut lines = Vec::new();
    for (id, s) in series {
        if !dm_only {
            lines.push(Line { label: format!("{id} rho00"), points: s.times.iter().copied().zip(s.rho00.iter().copied()).collect() });
        }
        lines.push(Line { label: format!("{id} dm_t"), points: s.times.iter().copied().zip(s.dm_t.iter().copied()).collect() });
    }
    lines
}

#[derive(Serialize)]
struct JsonResult<'a> {
    rows: &'a [SweepRow],
    dynamics: &'a [DynamicsRecord],
}

/// Run the configured scenario and write every artifact into `out_dir`.
/// Returns [`CliError::AllFailed`] after writing when no point succeeded.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let formats = &cfg.output.formats;
    let want_series = formats.contains(&Format::Csv) || formats.contains(&Format::Svg);

    let outcome = match cfg.scenario {
        Scenario::Fig4 | Scenario::Fig5 => dynamics_outcome(cfg),
        _ => sweep_outcome(cfg, want_series)?,
    };

    let mut report = RunReport { rows: outcome.rows, dynamics: outcome.dynamics, files: Vec::new() };
    report.files.push(output::write_json(&out_dir.join("config.resolved.json"), cfg)?);

    if formats.contains(&Format::Csv) {
        report.files.push(output::write_sweep(&out_dir.join("sweep.csv"), &report.rows)?);
        let failed: Vec<&SweepRow> = report.rows.iter().filter(|r| r.failed()).collect();
        if !failed.is_empty() {
            report.files.push(output::write_errors(&out_dir.join("errors.csv"), &failed)?);
        }
        if !report.dynamics.is_empty() {
            report.files.push(output::write_dynamics(&out_dir.join("dynamics.csv"), &report.dynamics)?);
        }
        for (id, s) in &outcome.series {
            report.files.push(output::write_series(&out_dir.join(format!("series_{id}.csv")), s)?);
        }
    }
    if formats.contains(&Format::Json) {
        let body = JsonResult { rows: &report.rows, dynamics: &report.dynamics };
        report.files.push(output::write_json(&out_dir.join("sweep.json"), &body)?);
    }
    if formats.contains(&Format::Svg) {
        let path = out_dir.join(format!("plot_{}.svg", cfg.scenario));
        let title = format!("qwalk {}", cfg.scenario);
        match cfg.scenario {
            Scenario::Fig2 | Scenario::Fig3 => {
                plot::line_plot(&path, &title, "v/(v+v')", "displacement", &sweep_plot_lines(cfg, &report.rows))?
            }
            Scenario::Custom => plot::line_plot(&path, &title, "t", "displacement", &series_lines(&outcome.series, true))?,
            _ => plot::line_plot(&path, &title, "t", "rho00, displacement", &series_lines(&outcome.series, false))?,
        }
        report.files.push(path);
    }

    let failed = report.failed();
    if !report.rows.is_empty() && failed == report.rows.len() {
        return Err(CliError::AllFailed(failed));
    }
    Ok(report)
}

/// Human-readable summary of the effective parameters.
pub fn describe(cfg: &RunConfig) -> String {
    let l = &cfg.lattice;
    let i = &cfg.integrator;
    let mut s = String::new();
    let _ = writeln!(s, "scenario        {}", cfg.scenario);
    let _ = writeln!(s, "n_cells         {}", l.n_cells);
    let _ = writeln!(s, "v               {}", l.v);
    let _ = writeln!(s, "v_prime         {}", l.v_prime);
    let _ = writeln!(s, "gamma           {}", l.gamma);
    let _ = writeln!(s, "g               {}", l.g);
    let _ = writeln!(s, "eps_a           {}", l.eps_a);
    let _ = writeln!(s, "eps_b           {}", l.eps_b);
    let _ = writeln!(s, "delta_offset    {}", l.delta_offset);
    let method = match i.method {
        Method::Dopri5 => "dopri5",
        Method::Dop853 => "dop853",
    };
    let _ = writeln!(s, "method          {method}");
    let _ = writeln!(s, "rel_tol         {:e}", i.rel_tol);
    let _ = writeln!(s, "abs_tol         {:e}", i.abs_tol);
    let _ = writeln!(s, "t_final         {}", i.t_final);
    let _ = writeln!(s, "max_step        {}", i.max_step);
    let _ = writeln!(s, "n_samples       {}", i.n_samples);
    let stop = i.stop_survival.map_or("none".to_string(), |x| format!("{x:e}"));
    let _ = writeln!(s, "stop_survival   {stop}");
    let _ = writeln!(s, "g_values        {:?}", cfg.sweep.g_values);
    let _ = writeln!(s, "delta_values    {:?}", cfg.sweep.delta_values);
    let _ = writeln!(s, "ratios          {} points", cfg.sweep.ratios.len());
    let models: Vec<&str> = cfg.sweep.models.iter().map(|m| m.name()).collect();
    let _ = writeln!(s, "models          {}", models.join(","));
    let formats: Vec<String> = cfg.output.formats.iter().map(|f| format!("{f:?}").to_lowercase()).collect();
    let _ = writeln!(s, "formats         {}", formats.join(","));
    s
}
