//! JSON scenario configuration.
//!
//! Every key is optional; an empty file yields the default scenario
//! (2.4 GHz, 0.6 m × 0.6 m aperture, `P_t = 5`, `ρ = 0.5`, `N = 20`, four
//! random users, QPSK, SNR 10 dB). Angles are in degrees.

use std::path::Path;

use capa_isac_core::em::{ApertureGeometry, Direction, Medium, User};
use capa_isac_core::evaluation::{random_users, Constellation, Modulation, UserDisk};
use capa_isac_core::isac::Scenario;
use capa_isac_core::reference::{TargetSet, DEFAULT_TARGETS_DEG};
use capa_isac_core::Complex64;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApertureConfig {
    pub lx_m: f64,
    pub ly_m: f64,
}

impl Default for ApertureConfig {
    fn default() -> Self {
        Self { lx_m: 0.6, ly_m: 0.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub pt: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self { pt: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub position_m: [f64; 3],
    #[serde(default = "default_polarization")]
    pub polarization: [f64; 3],
    /// `[re, im]`.
    #[serde(default = "default_symbol")]
    pub symbol: [f64; 2],
    #[serde(default = "default_noise_variance")]
    pub noise_variance: f64,
}

fn default_polarization() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

fn default_symbol() -> [f64; 2] {
    [1.0, 0.0]
}

fn default_noise_variance() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomUsers {
    pub count: usize,
    pub disk_center_m: [f64; 3],
    pub disk_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UsersConfig {
    Explicit(Vec<UserConfig>),
    Random(RandomUsers),
}

impl Default for UsersConfig {
    fn default() -> Self {
        UsersConfig::Random(RandomUsers {
            count: 4,
            disk_center_m: [20.0, -20.0, 30.0],
            disk_radius_m: 10.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Rho,
    FrequencyHz,
    ApertureAreaM2,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Rho => "rho",
            SweepVariable::FrequencyHz => "frequency_hz",
            SweepVariable::ApertureAreaM2 => "aperture_area_m2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Rho,
            values: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub frequency_hz: f64,
    pub aperture: ApertureConfig,
    pub power: PowerConfig,
    pub rho: f64,
    pub quadrature_n: usize,
    /// `null` or `[]` means no sensing targets.
    pub targets: Option<Vec<TargetConfig>>,
    pub users: UsersConfig,
    pub snr_db: Vec<f64>,
    pub constellation: String,
    pub trials: u64,
    pub symbols_per_trial: usize,
    pub symbol_energy: f64,
    pub seed: u64,
    pub sweep: SweepConfig,
    pub grid_step_deg: f64,
    pub ismr_halfwidth_deg: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 2.4e9,
            aperture: ApertureConfig::default(),
            power: PowerConfig::default(),
            rho: 0.5,
            quadrature_n: 20,
            targets: Some(
                DEFAULT_TARGETS_DEG
                    .iter()
                    .map(|&(azimuth_deg, elevation_deg)| TargetConfig {
                        azimuth_deg,
                        elevation_deg,
                    })
                    .collect(),
            ),
            users: UsersConfig::default(),
            snr_db: vec![10.0],
            constellation: "QPSK".into(),
            trials: 1000,
            symbols_per_trial: 1,
            symbol_energy: 1.0,
            seed: 0,
            sweep: SweepConfig::default(),
            grid_step_deg: 1.0,
            ismr_halfwidth_deg: 10.0,
        }
    }
}

/// Reads and validates a configuration file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let config = parse_scenario(&text)?;
    Ok(config)
}

/// Parses configuration text; blank input gives the defaults.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, CliError> {
    let config: ScenarioConfig = if text.trim().is_empty() {
        ScenarioConfig::default()
    } else {
        serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?
    };
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    /// Checks everything that does not need a solve.
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: String| Err(CliError::Config(m));
        if !(0.0..=1.0).contains(&self.rho) {
            return invalid(format!("rho must lie in [0,1], got {}", self.rho));
        }
        if self.rho < 1.0 && self.targets.as_ref().is_none_or(Vec::is_empty) {
            return invalid("targets are required when rho < 1".into());
        }
        if self.quadrature_n == 0 {
            return invalid("quadrature_n must be at least 1".into());
        }
        if self.trials == 0 || self.symbols_per_trial == 0 {
            return invalid("trials and symbols_per_trial must be positive".into());
        }
        if self.snr_db.is_empty() {
            return invalid("snr_db must not be empty".into());
        }
        if !(self.symbol_energy.is_finite() && self.symbol_energy > 0.0) {
            return invalid(format!("symbol_energy must be positive, got {}", self.symbol_energy));
        }
        if !(self.grid_step_deg.is_finite() && self.grid_step_deg > 0.0) {
            return invalid(format!("grid_step_deg must be positive, got {}", self.grid_step_deg));
        }
        if self.sweep.values.is_empty() {
            return invalid("sweep.values must not be empty".into());
        }
        self.modulation()?;
        if let UsersConfig::Random(r) = &self.users {
            if !(r.disk_radius_m.is_finite() && r.disk_radius_m >= 0.0) {
                return invalid(format!("disk_radius_m must be non-negative, got {}", r.disk_radius_m));
            }
        }
        // geometry, medium, targets and users are checked by building the scenario
        self.aperture()?;
        self.medium()?;
        self.scenario()?;
        Ok(())
    }

    pub fn modulation(&self) -> Result<Modulation, CliError> {
        self.constellation
            .parse()
            .map_err(|e: capa_isac_core::Error| CliError::Config(e.to_string()))
    }

    pub fn aperture(&self) -> Result<ApertureGeometry, CliError> {
        ApertureGeometry::new(self.aperture.lx_m, self.aperture.ly_m).map_err(config_error)
    }

    pub fn medium(&self) -> Result<Medium, CliError> {
        Medium::from_frequency(self.frequency_hz).map_err(config_error)
    }

    pub fn target_set(&self) -> Result<Option<TargetSet>, CliError> {
        match &self.targets {
            Some(list) if !list.is_empty() => {
                let dirs = list
                    .iter()
                    .map(|t| Direction::from_degrees(t.azimuth_deg, t.elevation_deg))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(config_error)?;
                Ok(Some(TargetSet::new(dirs).map_err(config_error)?))
            }
            _ => Ok(None),
        }
    }

    pub fn user_disk(&self) -> Option<UserDisk> {
        match &self.users {
            UsersConfig::Random(r) => Some(UserDisk {
                count: r.count,
                center: Vector3::from(r.disk_center_m),
                radius: r.disk_radius_m,
            }),
            UsersConfig::Explicit(_) => None,
        }
    }

    /// Users for single solves: explicit ones as given, random ones drawn from trial 0 of `seed`.
    pub fn build_users(&self) -> Result<Vec<User>, CliError> {
        match &self.users {
            UsersConfig::Explicit(list) => list
                .iter()
                .map(|u| {
                    User::new(Vector3::from(u.position_m), Complex64::new(u.symbol[0], u.symbol[1]))
                        .and_then(|user| user.with_polarization(Vector3::from(u.polarization)))
                        .and_then(|user| user.with_noise_variance(u.noise_variance))
                })
                .collect::<Result<_, _>>()
                .map_err(config_error),
            UsersConfig::Random(_) => {
                let disk = self.user_disk().expect("random users have a disk");
                let constellation = Constellation::new(self.modulation()?);
                random_users(&disk, &constellation, self.symbol_energy, self.seed, 0).map_err(config_error)
            }
        }
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        Scenario::new(
            self.aperture()?,
            self.medium()?,
            self.build_users()?,
            self.target_set()?,
            self.power.pt,
            self.rho,
        )
        .and_then(|s| s.with_quadrature_order(self.quadrature_n))
        .map_err(config_error)
    }
}

fn config_error(e: capa_isac_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = parse_scenario("  \n").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        let s = c.scenario().unwrap();
        assert_eq!(s.users.len(), 4);
        assert_eq!(s.targets.unwrap().len(), 3);
        assert_eq!(s.quadrature_order, 20);
        assert_eq!(parse_scenario("{}").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn rho_out_of_range() {
        let e = parse_scenario(r#"{"rho": 1.5}"#).unwrap_err();
        assert!(e.to_string().contains("rho must lie in [0,1]"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn missing_targets_need_rho_one() {
        assert!(parse_scenario(r#"{"targets": []}"#).is_err());
        assert!(parse_scenario(r#"{"targets": null}"#).is_err());
        assert!(parse_scenario(r#"{"targets": null, "rho": 1.0}"#).is_ok());
    }

    #[test]
    fn unknown_keys_and_bad_json_report_positions() {
        let e = parse_scenario("{\n  \"rhoo\": 0.5\n}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_scenario("{\"rho\": }").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
    }

    #[test]
    fn explicit_users() {
        let c = parse_scenario(
            r#"{"users": [{"position_m": [0, 0, 20], "symbol": [0, 1]},
                          {"position_m": [5, 0, 20], "polarization": [1, 0, 0]}]}"#,
        )
        .unwrap();
        let users = c.build_users().unwrap();
        assert_eq!(users.len(), 2);
        assert_eq!(users[0].symbol(), Complex64::new(0.0, 1.0));
        assert_eq!(users[1].polarization(), &Vector3::new(1.0, 0.0, 0.0));
        assert!(parse_scenario(r#"{"users": [{"position_m": [0, 0, 0]}]}"#).is_err());
    }

    #[test]
    fn unknown_constellation() {
        assert!(parse_scenario(r#"{"constellation": "8PSK"}"#).is_err());
        assert!(parse_scenario(r#"{"constellation": "16qam"}"#).is_ok());
    }
}
