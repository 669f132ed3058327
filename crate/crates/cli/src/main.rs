use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use steadyfront_cli::commands::{
    cmd_run, cmd_stability, cmd_sweep, cmd_to_eulerian, cmd_viscosity_check, output_dir, ViscosityWindow,
};
use steadyfront_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "steadyfront", version, about = "Front tracking for transonic contact discontinuities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    xi_end: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

impl Common {
    fn load(&self, path: &std::path::Path) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::load(path)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(x) = self.xi_end {
            cfg.xi_end = x;
            cfg.stations.retain(|&s| s <= x);
        }
        if let Some(d) = self.delta {
            cfg.delta = d;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Track one config to `xi_end`.
    Run(Common),
    /// Compare two runs through the Lyapunov functional and their L1 distance.
    Stability {
        #[command(flatten)]
        common: Common,
        /// Config of the second solution.
        #[arg(long)]
        config_v: PathBuf,
        /// Threshold on the observed decay constant.
        #[arg(long, default_value_t = 100.0)]
        c2: f64,
    },
    /// Distances at `xi_end` between runs at decreasing deltas.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [4e-3, 2e-3, 1e-3, 5e-4])]
        deltas: Vec<f64>,
    },
    /// Local comparison with the Riemann and frozen linear parametrices.
    ViscosityCheck {
        #[command(flatten)]
        common: Common,
        /// Evaluation station; defaults to `xi_end`.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        zeta: f64,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        /// Step in xi; defaults to delta.
        #[arg(long)]
        step: Option<f64>,
    },
    /// Reconstruct the free boundary and the Eulerian wave pattern.
    ToEulerian {
        #[command(flatten)]
        common: Common,
        /// Density of the static gas below the free boundary.
        #[arg(long)]
        rho_minus: Option<f64>,
        #[arg(long)]
        y_top: Option<f64>,
    },
}

fn print<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("summaries serialize"));
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(c) => {
            let cfg = c.load(&c.config)?;
            let s = cmd_run(&cfg, &output_dir(&cfg, c.out.as_deref()))?;
            println!(
                "events {} (interactions {}, reflections {}, removals {}), fronts {}, pruned {:.3e}",
                s.events,
                s.interactions,
                s.reflections,
                s.removals,
                s.fronts_final,
                s.ledger.pruning_total()
            );
        }
        Command::Stability { common, config_v, c2 } => {
            let cu = common.load(&common.config)?;
            let cv = common.load(&config_v)?;
            let r = cmd_stability(&cu, &cv, &output_dir(&cu, common.out.as_deref()), c2)?;
            println!(
                "C_obs {:.4} (bound C1^2 {:.4}), C2_obs {:.4}, W in [{:.4}, {:.4}], phi decays: {}",
                r.c_observed, r.c1_bound_squared, r.c2_observed, r.w_min, r.w_max, r.phi_decays
            );
        }
        Command::Sweep { common, deltas } => {
            let cfg = common.load(&common.config)?;
            let r = cmd_sweep(&cfg, &deltas, &output_dir(&cfg, common.out.as_deref()))?;
            print(&r);
        }
        Command::ViscosityCheck {
            common,
            tau,
            zeta,
            radius,
            step,
        } => {
            let cfg = common.load(&common.config)?;
            let w = ViscosityWindow { tau, zeta, radius, step };
            let r = cmd_viscosity_check(&cfg, w, &output_dir(&cfg, common.out.as_deref()))?;
            print(&r);
        }
        Command::ToEulerian {
            common,
            rho_minus,
            y_top,
        } => {
            let cfg = common.load(&common.config)?;
            let s = cmd_to_eulerian(&cfg, rho_minus, y_top, &output_dir(&cfg, common.out.as_deref()))?;
            print(&s);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Numerical(inner) = &e {
                eprintln!("  caused by: {inner:?}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
