//! Initial data from a [`RunConfig`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steadyfront::front_tracking::InitialData;
use steadyfront::{FlowState, GasConstants, WaveCurves, WaveFamily};

use crate::config::{InitialDataConfig, RunConfig};
use crate::error::{CliError, CliResult};

pub fn initial_data(cfg: &RunConfig) -> CliResult<InitialData> {
    let gas = cfg.gas;
    let r = cfg.reference_state();
    let data = match &cfg.initial_data {
        InitialDataConfig::Constant { state } => InitialData::constant(state.map_or(r, |s| s.to_state(&gas))),
        InitialDataConfig::SingleJump { eta, above, below } => InitialData::piecewise(
            vec![*eta],
            vec![below.map_or(r, |s| s.to_state(&gas)), above.to_state(&gas)],
        )
        .map_err(data_error)?,
        InitialDataConfig::SingleWave { eta, family, strength } => {
            let curves = WaveCurves::new(gas, cfg.tolerances);
            let fam = WaveFamily::from_index(*family as usize)
                .ok_or_else(|| CliError::Config(format!("field `initial_data.family`: {family}")))?;
            let above = curves.forward_curve(fam, *strength, &r)?;
            InitialData::piecewise(vec![*eta], vec![r, above]).map_err(data_error)?
        }
        InitialDataConfig::MultiBump {
            bumps,
            total_variation,
            min_length,
            max_length,
        } => multi_bump(&gas, &r, cfg.seed, *bumps, *total_variation, (*min_length, *max_length))?,
        InitialDataConfig::File { path } => read_breakpoints(&gas, &cfg.resolve(path))?,
    };
    Ok(data)
}

/// `n` random states around `reference` on consecutive intervals of random
/// length, followed by `reference`, rescaled so that the total variation of
/// `(u, v, p)` equals `tv`. Density perturbations are rescaled alike.
pub fn multi_bump(
    gas: &GasConstants,
    reference: &FlowState,
    seed: u64,
    n: usize,
    tv: f64,
    lengths: (f64, f64),
) -> CliResult<InitialData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = gas
        .density(reference)
        .map_err(|e| CliError::Config(format!("reference state: {e}")))?;
    let mut raw: Vec<[f64; 4]> = Vec::with_capacity(n + 1);
    let mut breakpoints = Vec::with_capacity(n);
    let mut eta = 0.0;
    for _ in 0..n {
        raw.push([
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ]);
        eta += rng.gen_range(lengths.0..lengths.1);
        breakpoints.push(eta);
    }
    raw.push([0.0; 4]);
    let raw_tv: f64 = raw
        .windows(2)
        .map(|w| (0..3).map(|k| (w[1][k] - w[0][k]).abs()).sum::<f64>())
        .sum();
    let k = if raw_tv > 0.0 { tv / raw_tv } else { 0.0 };
    let states = raw
        .iter()
        .map(|d| {
            gas.state_from_primitive(
                reference.u + k * d[0],
                reference.v + k * d[1],
                reference.p + k * d[2],
                rho + k * d[3],
            )
        })
        .collect();
    InitialData::piecewise(breakpoints, states).map_err(data_error)
}

fn data_error(e: steadyfront::Error) -> CliError {
    CliError::Config(format!("field `initial_data`: {e}"))
}

fn read_breakpoints(gas: &GasConstants, path: &std::path::Path) -> CliResult<InitialData> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Row {
        eta_top: f64,
        u: f64,
        v: f64,
        p: f64,
        rho: f64,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut breakpoints = Vec::new();
    let mut states = Vec::new();
    for (k, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| CliError::Config(format!("{} row {}: {e}", path.display(), k + 2)))?;
        states.push(gas.state_from_primitive(row.u, row.v, row.p, row.rho));
        if row.eta_top.is_finite() {
            breakpoints.push(row.eta_top);
        } else {
            break;
        }
    }
    if states.len() != breakpoints.len() + 1 {
        return Err(CliError::Config(format!(
            "{}: the last row must have eta_top = inf",
            path.display()
        )));
    }
    InitialData::piecewise(breakpoints, states).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Wave curves for a config.
pub fn curves(cfg: &RunConfig) -> WaveCurves {
    WaveCurves::new(cfg.gas, cfg.tolerances)
}

/// The standard benchmark: six bumps, `TV₀ = 0.04`, around the default
/// reference state.
pub fn standard_benchmark(seed: u64) -> CliResult<InitialData> {
    let gas = GasConstants::default();
    multi_bump(&gas, &gas.reference_state(2.0, 1.0), seed, 6, 0.04, (0.1, 0.5))
}
