//! The subcommands. Each one takes validated configs and an output
//! directory, writes its artifacts and returns a summary.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use steadyfront::eulerian_bridge::{roundtrip_residual, slope_law_residual, to_eulerian};
use steadyfront::front_tracking::{ErrorLedger, EventKind, FrontTracker, PiecewiseSolution, TrackingParams};
use steadyfront::functionals::{
    calibrate, glimm_functional, l1_distance, phi_decay_audit, viscosity_check, AuditRow, Calibration,
    FunctionalSnapshot, ViscosityReport, WeightConstants,
};

use crate::config::{RunConfig, WeightsConfig};
use crate::error::{CliError, CliResult};
use crate::generators::{curves, initial_data};
use crate::output::{write_events, write_eulerian, write_functionals, write_json, write_solution, CsvOut, num, SWEEP_COLUMNS};

/// Tracker and weights for a config; `calibration` is set when the weights
/// were auto-calibrated.
pub struct Setup {
    pub tracker: FrontTracker,
    pub calibration: Option<Calibration>,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> CliResult<Self> {
        Self::with_params(cfg, cfg.tracking_params())
    }

    pub fn with_params(cfg: &RunConfig, params: TrackingParams) -> CliResult<Self> {
        let curves = curves(cfg);
        let reference = cfg.reference_state();
        let (weights, calibration) = match cfg.weights {
            WeightsConfig::Explicit(w) => (w, None),
            WeightsConfig::Auto(_) => {
                let c = calibrate(&curves, &reference, params.eps0)?;
                (c.weights, Some(c))
            }
        };
        let tracker = FrontTracker::new(curves, reference, weights, params)?;
        Ok(Self { tracker, calibration })
    }

    pub fn weights(&self) -> &WeightConstants {
        &self.tracker.weights
    }

    pub fn initial(&self, cfg: &RunConfig) -> CliResult<PiecewiseSolution> {
        Ok(self.tracker.sample_initial_data(&initial_data(cfg)?)?)
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// `0`, the configured stations and `ξ_end`, sorted and deduplicated.
fn station_grid(cfg: &RunConfig) -> Vec<f64> {
    let mut xs = vec![0.0];
    xs.extend(&cfg.stations);
    xs.push(cfg.xi_end);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub events: usize,
    pub interactions: usize,
    pub reflections: usize,
    pub removals: usize,
    pub fronts_final: usize,
    pub max_generation: u32,
    pub ledger: ErrorLedger,
    pub functionals: Vec<FunctionalSnapshot>,
}

#[derive(Serialize)]
struct Metadata<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    params: TrackingParams,
    weights: WeightConstants,
    calibration: Option<Calibration>,
    summary: &'a T,
}

fn metadata<'a, T: Serialize>(command: &'a str, cfg: &'a RunConfig, setup: &Setup, summary: &'a T) -> Metadata<'a, T> {
    Metadata {
        command,
        config: cfg,
        params: setup.tracker.params,
        weights: setup.tracker.weights,
        calibration: setup.calibration,
        summary,
    }
}

/// Runs the config to `ξ_end`, writing `solution_KKK.csv` at every station,
/// `events.jsonl`, `functionals.csv` and `run.json`.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> CliResult<RunSummary> {
    create_dir(out)?;
    let setup = Setup::new(cfg)?;
    let gas = cfg.gas;
    let mut sol = setup.initial(cfg)?;
    let mut events = Vec::new();
    let mut functionals = Vec::new();
    for (k, xi) in station_grid(cfg).into_iter().enumerate() {
        let log = setup.tracker.run(&mut sol, xi)?;
        events.extend(log.events);
        write_solution(&out.join(format!("solution_{k:03}.csv")), &gas, &sol)?;
        functionals.push(glimm_functional(&sol, setup.weights()));
    }
    write_events(&out.join("events.jsonl"), &events)?;
    write_functionals(&out.join("functionals.csv"), &functionals)?;
    let count = |k: EventKind| events.iter().filter(|e| e.kind == k).count();
    let summary = RunSummary {
        events: events.len(),
        interactions: count(EventKind::InteriorInteraction),
        reflections: count(EventKind::BoundaryReflection),
        removals: count(EventKind::FrontRemoval),
        fronts_final: sol.fronts.len(),
        max_generation: sol.fronts.iter().map(|f| f.generation).max().unwrap_or(0),
        ledger: sol.ledger,
        functionals,
    };
    write_json(&out.join("run.json"), &metadata("run", cfg, &setup, &summary))?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<AuditRow>,
    /// `max L1(ξ)/L1(0)` over the grid, `0` when the data agree.
    pub c_observed: f64,
    pub c1_observed: f64,
    pub c2_observed: f64,
    pub c1_bound_squared: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub phi_decays: bool,
    pub l1_within_bound: bool,
}

/// Runs both configs on the grid `{0} ∪ stations` of `cu` and writes
/// `stability.csv` (functionals of `U` with `Φ` and `L1` of the pair) and
/// `verdict.json`.
pub fn cmd_stability(cu: &RunConfig, cv: &RunConfig, out: &Path, c2_threshold: f64) -> CliResult<StabilityReport> {
    if cu.gas != cv.gas || cu.reference != cv.reference || cu.weights != cv.weights || cu.tolerances != cv.tolerances {
        return Err(CliError::Config(
            "both configs must share gas, reference, weights and tolerances".into(),
        ));
    }
    create_dir(out)?;
    let su = Setup::new(cu)?;
    let mut pv = cv.tracking_params();
    pv.eps0 = su.tracker.params.eps0;
    let w = *su.weights();
    let tv = FrontTracker::new(su.tracker.curves, su.tracker.reference, w, pv)?;
    let (u0, v0) = (su.initial(cu)?, tv.sample_initial_data(&initial_data(cv)?)?);

    let mut grid = vec![0.0];
    grid.extend(cu.stations.iter().copied().filter(|&x| x > 0.0));
    grid.dedup();
    let audit = phi_decay_audit(&su.tracker, &u0, &tv, &v0, &grid, &w)?;

    let l0 = audit.rows[0].l1;
    let c_observed = if l0 > 0.0 {
        audit.rows.iter().map(|r| r.l1 / l0).fold(0.0, f64::max)
    } else {
        0.0
    };
    let c1 = audit.c1_observed;
    let w_min = audit.rows.iter().map(|r| r.w_min).fold(f64::INFINITY, f64::min);
    let w_max = audit.rows.iter().map(|r| r.w_max).fold(f64::NEG_INFINITY, f64::max);
    let rows: Vec<FunctionalSnapshot> = audit
        .rows
        .iter()
        .map(|r| FunctionalSnapshot {
            xi: r.xi,
            v_total: r.glimm_u.v,
            q_approach: r.glimm_u.q_a,
            q_boundary: r.glimm_u.q_b,
            g: r.g_u,
            phi: Some(r.phi),
            l1: Some(r.l1),
            w_min: Some(r.w_min),
            w_max: Some(r.w_max),
        })
        .collect();
    write_functionals(&out.join("stability.csv"), &rows)?;
    let report = StabilityReport {
        phi_decays: audit.passes(c2_threshold),
        l1_within_bound: c_observed <= c1 * c1,
        c_observed,
        c1_observed: c1,
        c2_observed: audit.c2_observed,
        c1_bound_squared: c1 * c1,
        w_min,
        w_max,
        rows: audit.rows,
    };
    write_json(&out.join("verdict.json"), &metadata("stability", cu, &su, &report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub deltas: Vec<f64>,
    /// `L1` distance at `ξ_end` between the runs at `deltas[k]` and
    /// `deltas[k + 1]`.
    pub distances: Vec<f64>,
    /// Least-squares slope of `log L1` against `log δ`; `None` with fewer
    /// than two positive distances.
    pub rate: Option<f64>,
    pub monotone: bool,
}

/// Runs the config at every `δ` in parallel, each run in its own
/// `delta_KK` directory, then tabulates consecutive distances in
/// `sweep.csv` and `sweep.json`.
pub fn cmd_sweep(cfg: &RunConfig, deltas: &[f64], out: &Path) -> CliResult<SweepReport> {
    if deltas.is_empty() || deltas.windows(2).any(|w| !(w[1] < w[0])) || !deltas.iter().all(|&d| d > 0.0 && d < 1.0) {
        return Err(CliError::Config("field `deltas`: need a strictly decreasing list in (0, 1)".into()));
    }
    create_dir(out)?;
    let base = Setup::new(cfg)?;
    let runs: Vec<PiecewiseSolution> = deltas
        .par_iter()
        .enumerate()
        .map(|(k, &delta)| {
            let mut c = cfg.clone();
            c.delta = delta;
            let tracker = FrontTracker {
                params: TrackingParams { delta, ..base.tracker.params },
                ..base.tracker
            };
            let mut sol = tracker.sample_initial_data(&initial_data(&c)?)?;
            tracker.run(&mut sol, cfg.xi_end)?;
            let dir = out.join(format!("delta_{k:02}"));
            create_dir(&dir)?;
            write_solution(&dir.join("solution_final.csv"), &cfg.gas, &sol)?;
            Ok(sol)
        })
        .collect::<CliResult<_>>()?;
    let distances = runs
        .windows(2)
        .map(|w| l1_distance(&w[0], &w[1]))
        .collect::<steadyfront::Result<Vec<_>>>()?;

    let mut table = CsvOut::create(&out.join("sweep.csv"), SWEEP_COLUMNS)?;
    for (k, d) in distances.iter().enumerate() {
        table.row([num(deltas[k]), num(deltas[k + 1]), num(*d)])?;
    }
    table.finish()?;
    let report = SweepReport {
        rate: fit_rate(&deltas[..distances.len()], &distances),
        monotone: distances.windows(2).all(|w| w[1] <= w[0]),
        deltas: deltas.to_vec(),
        distances,
    };
    write_json(&out.join("sweep.json"), &metadata("sweep", cfg, &base, &report))?;
    Ok(report)
}

/// Slope of the least-squares line through `(log δ, log d)` over positive
/// distances.
pub fn fit_rate(deltas: &[f64], distances: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .zip(distances)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&x, &d)| (x.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Window of a viscosity spot check; `tau` defaults to `ξ_end` and `step`
/// to `δ`.
#[derive(Debug, Clone, Copy)]
pub struct ViscosityWindow {
    pub tau: Option<f64>,
    pub zeta: f64,
    pub radius: f64,
    pub step: Option<f64>,
}

pub fn cmd_viscosity_check(cfg: &RunConfig, window: ViscosityWindow, out: &Path) -> CliResult<ViscosityReport> {
    create_dir(out)?;
    let setup = Setup::new(cfg)?;
    let mut sol = setup.initial(cfg)?;
    setup.tracker.run(&mut sol, window.tau.unwrap_or(cfg.xi_end))?;
    let report = viscosity_check(
        &setup.tracker,
        &sol,
        window.zeta,
        window.radius,
        window.step.unwrap_or(cfg.delta),
    )?;
    write_json(&out.join("viscosity.json"), &metadata("viscosity-check", cfg, &setup, &report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct EulerianSummary {
    pub slices: usize,
    pub kinks: usize,
    pub roundtrip_residual: f64,
    pub slope_law_residual: f64,
    pub y_top: f64,
}

/// Converts a run to Eulerian coordinates, writing `free_boundary.csv`,
/// `regions.csv` and `eulerian.json`. Regions extend to `y_top`, by default
/// one unit above the highest streamline carrying a front.
pub fn cmd_to_eulerian(
    cfg: &RunConfig,
    rho_minus: Option<f64>,
    y_top: Option<f64>,
    out: &Path,
) -> CliResult<EulerianSummary> {
    create_dir(out)?;
    let setup = Setup::new(cfg)?;
    let mut sol = setup.initial(cfg)?;
    let (_, history) = setup.tracker.run_with_history(&mut sol, cfg.xi_end)?;
    let mut field = to_eulerian(&cfg.gas, &history, cfg.xi_end)?;
    if let Some(r) = rho_minus {
        if !(r > 0.0) {
            return Err(CliError::Config(format!("field `rho_minus`: {r} must be positive")));
        }
        field = field.with_static_gas(r);
    }
    let y_top = match y_top {
        Some(y) => y,
        None => {
            let eta_top = history
                .iter()
                .flat_map(|s| s.fronts.iter().map(|f| f.origin_eta))
                .fold(0.0, f64::max);
            let (x0, x1) = field.x_range();
            let mut y: f64 = 0.0;
            for x in [x0, 0.5 * (x0 + x1), x1] {
                y = y.max(field.streamline(x, eta_top + 1.0)?);
            }
            y
        }
    };
    write_eulerian(out, &field, y_top)?;
    let summary = EulerianSummary {
        slices: field.slices.len(),
        kinks: field.boundary.kinks(),
        roundtrip_residual: roundtrip_residual(&field, &history, cfg.xi_end)?,
        slope_law_residual: slope_law_residual(&field),
        y_top,
    };
    write_json(&out.join("eulerian.json"), &metadata("to-eulerian", cfg, &setup, &summary))?;
    Ok(summary)
}

/// Output directory: the override if given, else the config's own,
/// resolved against the config file's directory.
pub fn output_dir(cfg: &RunConfig, over: Option<&Path>) -> PathBuf {
    match over {
        Some(p) => p.to_path_buf(),
        None => cfg.resolve(&cfg.output_dir),
    }
}
