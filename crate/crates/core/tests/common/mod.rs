#![allow(dead_code)]

use capa_isac_core::em::{ApertureGeometry, Direction, Medium, User};
use capa_isac_core::evaluation::{random_users, Constellation, Modulation, UserDisk};
use capa_isac_core::isac::Scenario;
use capa_isac_core::reference::{
    design_reference, OptimizerOptions, ReferenceContext, ReferenceDesign, TargetSet, DEFAULT_TARGETS_DEG,
};
use nalgebra::Vector3;

pub const POWER: f64 = 5.0;

pub fn disk() -> UserDisk {
    UserDisk {
        count: 4,
        center: Vector3::new(20.0, -20.0, 30.0),
        radius: 10.0,
    }
}

pub fn default_targets() -> TargetSet {
    TargetSet::new(
        DEFAULT_TARGETS_DEG
            .iter()
            .map(|&(t, p)| Direction::from_degrees(t, p).unwrap())
            .collect(),
    )
    .unwrap()
}

pub fn users(trial: u64) -> Vec<User> {
    random_users(&disk(), &Constellation::new(Modulation::Qpsk), 1.0, 0, trial).unwrap()
}

pub struct Setup {
    pub scenario: Scenario,
    pub reference: ReferenceDesign,
}

pub fn setup_with(freq: f64, side: f64, users: Vec<User>, rho: f64) -> Setup {
    let aperture = ApertureGeometry::new(side, side).unwrap();
    let medium = Medium::from_frequency(freq).unwrap();
    let targets = default_targets();
    let reference = design_reference(
        &targets,
        POWER,
        &ReferenceContext::new(aperture, medium),
        &OptimizerOptions::default(),
    )
    .unwrap();
    let scenario = Scenario::new(aperture, medium, users, Some(targets), POWER, rho).unwrap();
    Setup { scenario, reference }
}

pub fn setup(rho: f64, trial: u64) -> Setup {
    setup_with(2.4e9, 0.6, users(trial), rho)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
