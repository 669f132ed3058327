//! Run configuration, read from a versioned JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steadyfront::front_tracking::TrackingParams;
use steadyfront::functionals::WeightConstants;
use steadyfront::{FlowState, GasConstants, Tolerances};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveState {
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub rho: f64,
}

impl PrimitiveState {
    pub fn to_state(&self, gas: &GasConstants) -> FlowState {
        gas.state_from_primitive(self.u, self.v, self.p, self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub u_bar: f64,
    pub rho_plus: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { u_bar: 2.0, rho_plus: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataConfig {
    /// Uniform data, the reference state when `state` is omitted.
    Constant { state: Option<PrimitiveState> },
    /// Reference state below `eta`, `above` on top.
    SingleJump {
        eta: f64,
        above: PrimitiveState,
        below: Option<PrimitiveState>,
    },
    /// Reference state below `eta` and the elementary wave of the given
    /// family and strength above it.
    SingleWave { eta: f64, family: u8, strength: f64 },
    /// Seeded random bumps around the reference state, rescaled to the given
    /// total variation, returning to the reference state on top.
    MultiBump {
        bumps: usize,
        total_variation: f64,
        #[serde(default = "default_min_len")]
        min_length: f64,
        #[serde(default = "default_max_len")]
        max_length: f64,
    },
    /// CSV with columns `eta_top,u,v,p,rho`; the last row, the tail state,
    /// has `eta_top = inf`.
    File { path: PathBuf },
}

fn default_min_len() -> f64 {
    0.1
}

fn default_max_len() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsConfig {
    Auto(AutoTag),
    Explicit(WeightConstants),
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig::Auto(AutoTag::Auto)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingOverrides {
    pub eps0: Option<f64>,
    pub c_tv: Option<f64>,
    pub max_events: Option<usize>,
    pub generation_limit: Option<u32>,
    pub weak_cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub gas: GasConstants,
    #[serde(default)]
    pub reference: ReferenceConfig,
    pub initial_data: InitialDataConfig,
    pub delta: f64,
    pub xi_end: f64,
    /// `ξ` values at which snapshots and functionals are written.
    #[serde(default)]
    pub stations: Vec<f64>,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub tracking: TrackingOverrides,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Directory of the config file; relative data paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("field `{field}`: {msg}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("{} is not supported (expected {SCHEMA_VERSION})", self.schema_version),
            );
        }
        if let Err(e) = self.gas.validate() {
            return bad("gas", e.to_string());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", format!("{} must lie in (0, 1)", self.delta));
        }
        if !(self.xi_end >= 0.0) || !self.xi_end.is_finite() {
            return bad("xi_end", format!("{} must be finite and non-negative", self.xi_end));
        }
        if let Some(s) = self.stations.iter().find(|&&s| !(s >= 0.0 && s <= self.xi_end)) {
            return bad("stations", format!("{s} outside [0, xi_end]"));
        }
        if self.stations.windows(2).any(|w| w[1] < w[0]) {
            return bad("stations", "must be non-decreasing".into());
        }
        if !(self.reference.u_bar > 0.0 && self.reference.rho_plus > 0.0) {
            return bad("reference", "u_bar and rho_plus must be positive".into());
        }
        if let Err(e) = self.gas.check_admissible(&self.reference_state()) {
            return bad("reference", e.to_string());
        }
        if let Err(e) = self.tracking_params().validate() {
            return bad("tracking", e.to_string());
        }
        match &self.initial_data {
            InitialDataConfig::SingleWave { family, .. } if !(1..=3).contains(family) => {
                return bad("initial_data.family", format!("{family} is not 1, 2 or 3"));
            }
            InitialDataConfig::MultiBump {
                bumps,
                total_variation,
                min_length,
                max_length,
            } => {
                if *bumps == 0 {
                    return bad("initial_data.bumps", "must be positive".into());
                }
                if !(*total_variation >= 0.0) {
                    return bad("initial_data.total_variation", "must be non-negative".into());
                }
                if !(*min_length > 0.0 && max_length > min_length) {
                    return bad("initial_data.min_length", "need 0 < min_length < max_length".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn reference_state(&self) -> FlowState {
        self.gas.reference_state(self.reference.u_bar, self.reference.rho_plus)
    }

    pub fn tracking_params(&self) -> TrackingParams {
        let d = TrackingParams::with_delta(self.delta);
        let o = &self.tracking;
        TrackingParams {
            eps0: o.eps0.unwrap_or(d.eps0),
            c_tv: o.c_tv.unwrap_or(d.c_tv),
            max_events: o.max_events.unwrap_or(d.max_events),
            generation_limit: o.generation_limit.or(d.generation_limit),
            weak_cutoff: o.weak_cutoff.or(d.weak_cutoff),
            ..d
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
