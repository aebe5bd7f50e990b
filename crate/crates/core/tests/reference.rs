mod common;

use capa_isac_core::em::{polarization_gain, ApertureGeometry, Direction, Medium};
use capa_isac_core::reference::*;
use common::*;

fn ctx() -> ReferenceContext {
    ReferenceContext::new(
        ApertureGeometry::new(0.6, 0.6).unwrap(),
        Medium::from_frequency(2.4e9).unwrap(),
    )
}

fn dirs(list: &[(f64, f64)]) -> Vec<Direction> {
    list.iter()
        .map(|&(t, p)| Direction::from_degrees(t, p).unwrap())
        .collect()
}

fn bound(d: &Direction, c: &ReferenceContext) -> f64 {
    polarization_gain(d).powi(2) * POWER * c.steering(d).norm_squared()
}

#[test]
fn single_target_reaches_the_cauchy_schwarz_optimum() {
    let c = ctx();
    for (t, p) in [(45.0, 15.0), (-60.0, 45.0), (30.0, 60.0), (0.0, 0.0), (120.0, 30.0)] {
        let d = Direction::from_degrees(t, p).unwrap();
        let design = design_reference(
            &TargetSet::new(vec![d]).unwrap(),
            POWER,
            &c,
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert!(rel(design.min_gain, bound(&d, &c)) <= 1e-6, "({t},{p})");
        assert!(rel(design.coefficients.power(), POWER) <= 1e-10);
        assert!(rel(target_gain(&design.coefficients, &d, &c), design.min_gain) <= 1e-12);
    }
}

#[test]
fn duplicate_targets_match_the_single_target_design() {
    let c = ctx();
    let single = design_reference(
        &TargetSet::new(dirs(&[(30.0, 20.0)])).unwrap(),
        POWER,
        &c,
        &OptimizerOptions::default(),
    )
    .unwrap();
    let twice = design_reference(
        &TargetSet::new(dirs(&[(30.0, 20.0), (30.0, 20.0)])).unwrap(),
        POWER,
        &c,
        &OptimizerOptions::default(),
    )
    .unwrap();
    assert_eq!(single.coefficients, twice.coefficients);
    assert_eq!(twice.gains.len(), 1);
}

#[test]
fn three_targets_are_equalized() {
    let c = ctx();
    let targets = default_targets();
    let design = design_reference(&targets, POWER, &c, &OptimizerOptions::default()).unwrap();
    let max = design.gains.iter().copied().fold(0.0, f64::max);
    assert!((max - design.min_gain) <= 0.05 * max, "gains {:?}", design.gains);
    for (g, d) in design.gains.iter().zip(targets.directions()) {
        assert!(*g >= 0.25 * bound(d, &c));
    }
    assert!(rel(design.coefficients.power(), POWER) <= 1e-10);
    let min = design.gains.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(min, design.min_gain);
}

#[test]
fn design_improves_on_every_start() {
    let c = ctx();
    let targets = default_targets();
    let rows: Vec<_> = targets.directions().iter().map(|d| c.steering(d).transpose()).collect();
    let scales = targets
        .directions()
        .iter()
        .map(|d| polarization_gain(d).powi(2))
        .collect();
    let problem = MaxMinProblem::new(nalgebra::DMatrix::from_rows(&rows), scales, POWER).unwrap();
    let starts = problem.default_starts();
    assert_eq!(starts.len(), 4);
    let best = problem.solve(&starts, &OptimizerOptions::default());
    for w in &starts {
        let g0 = problem.gains(w).into_iter().fold(f64::INFINITY, f64::min);
        assert!(best.min_gain >= g0);
        let own = problem.solve(std::slice::from_ref(w), &OptimizerOptions::default());
        assert!(own.min_gain >= g0);
    }
}

#[test]
fn target_order_does_not_matter() {
    let c = ctx();
    let list = DEFAULT_TARGETS_DEG;
    let base = design_reference(
        &TargetSet::new(dirs(&list)).unwrap(),
        POWER,
        &c,
        &OptimizerOptions::default(),
    )
    .unwrap();
    for perm in [[1, 2, 0], [2, 1, 0], [0, 2, 1]] {
        let permuted: Vec<(f64, f64)> = perm.iter().map(|&i| list[i]).collect();
        let d = design_reference(
            &TargetSet::new(dirs(&permuted)).unwrap(),
            POWER,
            &c,
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert!(
            rel(d.min_gain, base.min_gain) <= 1e-8,
            "{perm:?}: {} vs {}",
            d.min_gain,
            base.min_gain
        );
    }
}

#[test]
fn broadside_target_concentrates_on_dc() {
    let c = ctx();
    let design = design_reference(
        &TargetSet::new(dirs(&[(0.0, 0.0)])).unwrap(),
        POWER,
        &c,
        &OptimizerOptions::default(),
    )
    .unwrap();
    let dc = design
        .coefficients
        .get(capa_isac_core::wavenumber::ModeIndex { mx: 0, my: 0 })
        .unwrap();
    assert!(dc.norm_sqr() >= 0.8 * POWER);
}
