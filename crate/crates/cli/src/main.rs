use std::path::PathBuf;
use std::process::ExitCode;

use capa_isac_cli::commands::{ElementAreaArg, SpdaRefArg};
use capa_isac_cli::{load_scenario, run, ArrayType, CliError, Command, RunOptions, ScenarioConfig};
use clap::Parser;

/// Continuous-aperture ISAC waveform design experiments.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ArrayType::Capa)]
    array: ArrayType,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long = "quadrature-n")]
    quadrature_n: Option<usize>,
    #[arg(long = "symbol-energy")]
    symbol_energy: Option<f64>,
    /// Discrete reference: resampled continuous design or a native discrete design.
    #[arg(long = "spda-ref", value_enum, default_value_t = SpdaRefArg::Resample)]
    spda_ref: SpdaRefArg,
    /// Effective area per discrete element.
    #[arg(long = "element-area", value_enum, default_value_t = ElementAreaArg::Isotropic)]
    element_area: ElementAreaArg,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => load_scenario(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    if let Some(n) = cli.quadrature_n {
        config.quadrature_n = n;
    }
    if let Some(e) = cli.symbol_energy {
        config.symbol_energy = e;
    }
    let options = RunOptions {
        array: cli.array,
        spda_ref: cli.spda_ref,
        element_area: cli.element_area,
        out: cli.out,
    };
    let manifest = run(cli.command, &config, &options)?;
    for f in &manifest.outputs {
        log::info!("wrote {} ({})", f.path, f.sha256);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
