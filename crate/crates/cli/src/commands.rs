//! Experiment commands. Each writes its files plus a manifest into the output directory.

use std::path::PathBuf;

use capa_isac_core::em::ApertureGeometry;
use capa_isac_core::evaluation::{
    beampattern, ismr, simulate_ber, BerSettings, CapaLink, FarField, GridSpec, SpdaLink, UserPlacement,
    FAR_FIELD_ORDER,
};
use capa_isac_core::isac::{self, IsacSolution, Scenario};
use capa_isac_core::quadrature::gauss_legendre_rule;
use capa_isac_core::reference::{design_reference, OptimizerOptions, ReferenceContext, ReferenceDesign};
use capa_isac_core::spda::{
    discrete_reference, discretize, spda_channels, spda_solve, DiscreteArray, ElementArea, SpdaReference, SpdaSolution,
};
use capa_isac_core::wavenumber::format_real;
use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{ScenarioConfig, SweepVariable, UsersConfig};
use crate::error::CliError;
use crate::manifest::{sha256_hex, timestamp, OutputSet, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Reference,
    Solve,
    Sweep,
    Beampattern,
    Ismr,
    Ber,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Reference => "reference",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Beampattern => "beampattern",
            Command::Ismr => "ismr",
            Command::Ber => "ber",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ArrayType {
    #[default]
    Capa,
    Spda,
}

impl ArrayType {
    pub fn name(self) -> &'static str {
        match self {
            ArrayType::Capa => "capa",
            ArrayType::Spda => "spda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpdaRefArg {
    #[default]
    Resample,
    Native,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ElementAreaArg {
    #[default]
    Isotropic,
    Cell,
}

/// Everything a command needs besides the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOptions {
    pub array: ArrayType,
    pub spda_ref: SpdaRefArg,
    pub element_area: ElementAreaArg,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunOptions {
    pub fn new(out: PathBuf) -> Self {
        Self {
            array: ArrayType::default(),
            spda_ref: SpdaRefArg::default(),
            element_area: ElementAreaArg::default(),
            out,
        }
    }

    fn spda_reference(&self) -> SpdaReference {
        match self.spda_ref {
            SpdaRefArg::Resample => SpdaReference::Resample,
            SpdaRefArg::Native => SpdaReference::Native,
        }
    }

    fn area_model(&self) -> ElementArea {
        match self.element_area {
            ElementAreaArg::Isotropic => ElementArea::Isotropic,
            ElementAreaArg::Cell => ElementArea::Cell,
        }
    }
}

/// SHA-256 of the resolved configuration and the options that change results.
pub fn config_hash(config: &ScenarioConfig, options: &RunOptions) -> String {
    #[derive(Serialize)]
    struct Hashed<'a> {
        config: &'a ScenarioConfig,
        options: &'a RunOptions,
    }
    let bytes = serde_json::to_vec(&Hashed { config, options }).expect("config serializes");
    sha256_hex(&bytes)
}

/// Runs `command` and writes its outputs and manifest.
pub fn run(command: Command, config: &ScenarioConfig, options: &RunOptions) -> Result<RunManifest, CliError> {
    config.validate()?;
    let started = timestamp();
    let mut out = OutputSet::new(&options.out, config_hash(config, options))?;
    match command {
        Command::Reference => cmd_reference(config, &mut out)?,
        Command::Solve => cmd_solve(config, options, &mut out)?,
        Command::Sweep => cmd_sweep(config, options, &mut out)?,
        Command::Beampattern => cmd_beampattern(config, options, &mut out)?,
        Command::Ismr => cmd_ismr(config, options, &mut out)?,
        Command::Ber => cmd_ber(config, options, &mut out)?,
    }
    out.finish(command.name(), config.seed, started)
}

fn design(config: &ScenarioConfig) -> Result<Option<ReferenceDesign>, CliError> {
    let Some(targets) = config.target_set()? else {
        return Ok(None);
    };
    let ctx = ReferenceContext::new(config.aperture()?, config.medium()?);
    Ok(Some(design_reference(
        &targets,
        config.power.pt,
        &ctx,
        &OptimizerOptions::default(),
    )?))
}

/// A solved scenario on either array type.
pub enum Solved {
    Capa(Box<IsacSolution>),
    Spda {
        solution: Box<SpdaSolution>,
        array: DiscreteArray,
    },
}

impl Solved {
    pub fn terms(&self) -> (f64, f64, f64) {
        match self {
            Solved::Capa(s) => (s.f_c, s.f_s, s.objective),
            Solved::Spda { solution: s, .. } => (s.f_c, s.f_s, s.objective),
        }
    }

    /// Far-field evaluator of the solved radiator.
    pub fn far_field(&self, scenario: &Scenario) -> Result<FarField, CliError> {
        Ok(match self {
            Solved::Capa(s) => FarField::continuous(
                &s.waveform,
                &scenario.aperture,
                &gauss_legendre_rule(FAR_FIELD_ORDER)?,
                &scenario.users,
                &scenario.medium,
            )?,
            Solved::Spda { solution, .. } => FarField::discrete(&solution.waveform, &scenario.medium),
        })
    }
}

fn discrete_setup(
    scenario: &Scenario,
    reference: Option<&ReferenceDesign>,
    options: &RunOptions,
) -> Result<(DiscreteArray, Option<DVector<Complex64>>), CliError> {
    let array = discretize(&scenario.aperture, &scenario.medium, options.area_model())?;
    let x_d = match (reference, &scenario.targets) {
        (Some(r), Some(targets)) => Some(discrete_reference(
            &array,
            options.spda_reference(),
            &r.coefficients,
            &scenario.aperture,
            targets,
            &scenario.medium,
            scenario.power,
        )?),
        _ => None,
    };
    Ok((array, x_d))
}

/// Solves `scenario` on `array` with an already designed reference.
pub fn solve_scenario(
    scenario: &Scenario,
    reference: Option<&ReferenceDesign>,
    array: ArrayType,
    options: &RunOptions,
) -> Result<Solved, CliError> {
    match array {
        ArrayType::Capa => Ok(Solved::Capa(Box::new(isac::solve(
            scenario,
            reference.map(|r| &r.coefficients),
        )?))),
        ArrayType::Spda => {
            let (array, x_d) = discrete_setup(scenario, reference, options)?;
            let h = spda_channels(&array, &scenario.users, &scenario.medium)?;
            let solution = spda_solve(
                &array,
                &h,
                x_d.as_ref(),
                &scenario.symbols(),
                scenario.rho,
                scenario.power,
            )?;
            Ok(Solved::Spda {
                solution: Box::new(solution),
                array,
            })
        }
    }
}

#[derive(Serialize)]
struct TargetGain {
    azimuth_deg: f64,
    elevation_deg: f64,
    gain: f64,
}

#[derive(Serialize)]
struct ReferenceSummary {
    config_hash: String,
    power: f64,
    mode_count: usize,
    min_gain: f64,
    targets: Vec<TargetGain>,
    iterations: usize,
    converged: bool,
    final_temperature: f64,
    start_index: usize,
}

fn cmd_reference(config: &ScenarioConfig, out: &mut OutputSet) -> Result<(), CliError> {
    let targets = config
        .target_set()?
        .ok_or_else(|| CliError::Config("the reference command needs targets".into()))?;
    let design = design(config)?.expect("targets are present");
    let mut csv = format!("# config_hash={}\n", out.config_hash()).into_bytes();
    design.coefficients.write_csv(&mut csv).expect("writing to memory");
    out.write("reference_coefficients.csv", &csv)?;
    let summary = ReferenceSummary {
        config_hash: out.config_hash().to_string(),
        power: design.coefficients.power(),
        mode_count: design.coefficients.order().mode_count(),
        min_gain: design.min_gain,
        targets: targets
            .directions()
            .iter()
            .zip(&design.gains)
            .map(|(d, &gain)| TargetGain {
                azimuth_deg: d.azimuth_deg(),
                elevation_deg: d.elevation_deg(),
                gain,
            })
            .collect(),
        iterations: design.trace.iterations,
        converged: design.trace.converged,
        final_temperature: design.trace.final_temperature,
        start_index: design.trace.start_index,
    };
    out.write_json("reference_summary.json", &summary)
}

#[derive(Serialize)]
struct SolutionSummary {
    config_hash: String,
    array_type: &'static str,
    rho: f64,
    power: f64,
    mu_star: f64,
    z: Vec<[f64; 2]>,
    f_c: f64,
    f_s: f64,
    objective: f64,
    bisection_iters: usize,
    boundary: bool,
}

fn cmd_solve(config: &ScenarioConfig, options: &RunOptions, out: &mut OutputSet) -> Result<(), CliError> {
    let scenario = config.scenario()?;
    let reference = design(config)?;
    let solved = solve_scenario(&scenario, reference.as_ref(), options.array, options)?;
    let pairs = |v: &DVector<Complex64>| v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>();
    let (f_c, f_s, objective) = solved.terms();
    let (mu, z, iterations, boundary) = match &solved {
        Solved::Capa(s) => (s.mu, pairs(&s.z), s.iterations, s.boundary),
        Solved::Spda { solution: s, .. } => (s.mu, pairs(&s.z), s.iterations, s.boundary),
    };
    let summary = SolutionSummary {
        config_hash: out.config_hash().to_string(),
        array_type: options.array.name(),
        rho: scenario.rho,
        power: scenario.power,
        mu_star: mu,
        z,
        f_c,
        f_s,
        objective,
        bisection_iters: iterations,
        boundary,
    };
    out.write_json("solution.json", &summary)?;

    match &solved {
        Solved::Capa(s) => {
            if let Some((w, _)) = s.waveform.fourier() {
                let mut csv = format!("# config_hash={}\n", out.config_hash()).into_bytes();
                w.write_csv(&mut csv).expect("writing to memory");
                out.write("waveform_fourier.csv", &csv)?;
            }
            let rows: Vec<String> = s
                .waveform
                .channel()
                .iter()
                .map(|t| {
                    let p = scenario.users[t.user].position();
                    format!(
                        "{},{},{},{},{},{}",
                        t.user,
                        format_real(p.x),
                        format_real(p.y),
                        format_real(p.z),
                        format_real(t.coefficient.re),
                        format_real(t.coefficient.im)
                    )
                })
                .collect();
            out.write_csv("waveform_channel.csv", "user,x_m,y_m,z_m,re,im", &rows)?;
        }
        Solved::Spda { solution, array } => {
            let rows: Vec<String> = array
                .positions()
                .iter()
                .zip(solution.waveform.x.iter())
                .map(|(p, x)| {
                    format!(
                        "{},{},{},{}",
                        format_real(p.x),
                        format_real(p.y),
                        format_real(x.re),
                        format_real(x.im)
                    )
                })
                .collect();
            out.write_csv("waveform_elements.csv", "x_m,y_m,re,im", &rows)?;
        }
    }
    Ok(())
}

/// Configuration with one sweep variable set to `value`.
pub fn sweep_point(config: &ScenarioConfig, variable: SweepVariable, value: f64) -> Result<ScenarioConfig, CliError> {
    let mut c = config.clone();
    match variable {
        SweepVariable::Rho => c.rho = value,
        SweepVariable::FrequencyHz => c.frequency_hz = value,
        SweepVariable::ApertureAreaM2 => {
            let a = ApertureGeometry::square_with_area(value).map_err(|e| CliError::Config(e.to_string()))?;
            c.aperture.lx_m = a.lx();
            c.aperture.ly_m = a.ly();
        }
    }
    c.validate()?;
    Ok(c)
}

fn cmd_sweep(config: &ScenarioConfig, options: &RunOptions, out: &mut OutputSet) -> Result<(), CliError> {
    let variable = config.sweep.variable;
    // the reference only depends on geometry and frequency, so a ρ sweep designs it once
    let shared = if variable == SweepVariable::Rho {
        Some(design(config)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &value in &config.sweep.values {
        let point = sweep_point(config, variable, value)?;
        let reference = match &shared {
            Some(r) => r.clone(),
            None => design(&point)?,
        };
        let scenario = point.scenario()?;
        for array in [ArrayType::Capa, ArrayType::Spda] {
            let (f_c, f_s, objective) = solve_scenario(&scenario, reference.as_ref(), array, options)?.terms();
            log::info!("{}={value} {}: objective {objective:e}", variable.name(), array.name());
            rows.push(format!(
                "{},{},{},{},{},{}",
                variable.name(),
                format_real(value),
                array.name(),
                format_real(f_c),
                format_real(f_s),
                format_real(objective)
            ));
        }
    }
    out.write_csv("sweep.csv", "sweep_var,value,array_type,f_c,f_s,objective", &rows)
}

fn cmd_beampattern(config: &ScenarioConfig, options: &RunOptions, out: &mut OutputSet) -> Result<(), CliError> {
    let scenario = config.scenario()?;
    let reference = design(config)?;
    let far = solve_scenario(&scenario, reference.as_ref(), options.array, options)?.far_field(&scenario)?;
    let spec = GridSpec {
        step_deg: config.grid_step_deg,
        ..GridSpec::default()
    };
    let grid = beampattern(&far, &spec)?;
    let rows: Vec<String> = grid
        .cells()
        .map(|(t, p, g)| format!("{},{},{}", format_real(t), format_real(p), format_real(g)))
        .collect();
    out.write_csv("beampattern.csv", "theta_deg,phi_deg,gain", &rows)?;
    let markers: Vec<String> = scenario
        .targets
        .iter()
        .flat_map(|t| t.directions().iter())
        .map(|d| format!("{},{}", format_real(d.azimuth_deg()), format_real(d.elevation_deg())))
        .collect();
    out.write_csv("targets.csv", "theta_deg,phi_deg", &markers)
}

fn cmd_ismr(config: &ScenarioConfig, options: &RunOptions, out: &mut OutputSet) -> Result<(), CliError> {
    let rhos = if config.sweep.variable == SweepVariable::Rho {
        config.sweep.values.clone()
    } else {
        vec![config.rho]
    };
    let reference = design(config)?;
    let spec = GridSpec {
        step_deg: config.grid_step_deg,
        ..GridSpec::default()
    };
    let mut rows = Vec::new();
    for rho in rhos {
        let scenario = sweep_point(config, SweepVariable::Rho, rho)?.scenario()?;
        let targets = scenario
            .targets
            .clone()
            .ok_or_else(|| CliError::Config("the ismr command needs targets".into()))?;
        let far = solve_scenario(&scenario, reference.as_ref(), options.array, options)?.far_field(&scenario)?;
        let value = ismr(&beampattern(&far, &spec)?, &targets, config.ismr_halfwidth_deg)?;
        rows.push(format!(
            "{},{},{}",
            format_real(rho),
            options.array.name(),
            format_real(value)
        ));
    }
    out.write_csv("ismr.csv", "rho,array_type,ismr_db", &rows)
}

fn cmd_ber(config: &ScenarioConfig, options: &RunOptions, out: &mut OutputSet) -> Result<(), CliError> {
    let scenario = config.scenario()?;
    let reference = design(config)?;
    let placement = match &config.users {
        UsersConfig::Random(_) => UserPlacement::Disk(config.user_disk().expect("random users have a disk")),
        UsersConfig::Explicit(_) => UserPlacement::Fixed(scenario.users.clone()),
    };
    let modulation = config.modulation()?;
    let settings = BerSettings {
        modulation,
        snr_db: config.snr_db.clone(),
        trials: config.trials,
        symbols_per_trial: config.symbols_per_trial,
        master_seed: config.seed,
        symbol_energy: config.symbol_energy,
        rho: config.rho,
        power: config.power.pt,
    };
    let report = match options.array {
        ArrayType::Capa => {
            let link = CapaLink {
                scenario: scenario.clone(),
                reference: reference.map(|r| r.coefficients),
            };
            simulate_ber(&link, &placement, &settings)?
        }
        ArrayType::Spda => {
            let (array, x_d) = discrete_setup(&scenario, reference.as_ref(), options)?;
            let link = SpdaLink {
                array,
                medium: scenario.medium,
                reference: x_d,
            };
            simulate_ber(&link, &placement, &settings)?
        }
    };
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                format_real(r.snr_db),
                format_real(config.rho),
                modulation.name(),
                r.trials,
                r.bits,
                r.bit_errors,
                format_real(r.ber),
                format_real(r.ber_db)
            )
        })
        .collect();
    out.write_csv(
        "ber.csv",
        "snr_db,rho,constellation,trials,bits,bit_errors,ber,ber_db",
        &rows,
    )
}
