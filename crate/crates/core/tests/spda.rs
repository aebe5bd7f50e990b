mod common;

use capa_isac_core::isac::channel_gram;
use capa_isac_core::spda::*;
use capa_isac_core::Complex64;
use common::*;
use nalgebra::DVector;

struct Discrete {
    array: DiscreteArray,
    h: nalgebra::DMatrix<Complex64>,
    x_d: DVector<Complex64>,
}

fn discrete(s: &Setup, model: ElementArea, mode: SpdaReference) -> Discrete {
    let sc = &s.scenario;
    let array = discretize(&sc.aperture, &sc.medium, model).unwrap();
    let h = spda_channels(&array, &sc.users, &sc.medium).unwrap();
    let x_d = discrete_reference(
        &array,
        mode,
        &s.reference.coefficients,
        &sc.aperture,
        sc.targets.as_ref().unwrap(),
        &sc.medium,
        POWER,
    )
    .unwrap();
    Discrete { array, h, x_d }
}

#[test]
fn cell_weighted_gram_approximates_the_continuous_one() {
    let s = setup(0.5, 0);
    let q = channel_gram(&s.scenario.channel_table().unwrap());
    let d = discrete(&s, ElementArea::Cell, SpdaReference::Resample);
    let qd = &d.h * d.h.adjoint();
    for i in 0..4 {
        for j in 0..4 {
            // off-diagonal entries nearly cancel, so errors are measured against the diagonal scale
            let e = (qd[(i, j)] - q[(i, j)]).norm() / (q[(i, i)].re * q[(j, j)].re).sqrt();
            assert!(e <= 0.1, "entry ({i},{j}) off by {e}");
        }
    }
}

#[test]
fn channel_weights_scale_with_root_area() {
    let s = setup(0.5, 0);
    let cell = discrete(&s, ElementArea::Cell, SpdaReference::Resample);
    let iso = discrete(&s, ElementArea::Isotropic, SpdaReference::Resample);
    let ratio = (cell.array.element_area() / iso.array.element_area()).sqrt();
    for (a, b) in cell.h.iter().zip(iso.h.iter()) {
        assert!((a - b * ratio).norm() <= 1e-12 * a.norm());
    }
}

#[test]
fn sensing_only_returns_the_discrete_reference() {
    let s = setup(0.0, 1);
    let d = discrete(&s, ElementArea::Isotropic, SpdaReference::Resample);
    assert!((d.x_d.norm_squared() - POWER).abs() <= 1e-12 * POWER);
    let sol = spda_solve(&d.array, &d.h, Some(&d.x_d), &s.scenario.symbols(), 0.0, POWER).unwrap();
    assert!((&sol.waveform.x - &d.x_d).norm() <= 1e-8 * d.x_d.norm());
    assert!(sol.f_s <= 1e-8 * POWER);
}

#[test]
fn single_user_matched_solution() {
    let u = users(2)[0].clone().with_symbol(Complex64::from_polar(100.0, 0.4));
    let s = setup_with(2.4e9, 0.6, vec![u], 1.0);
    let d = discrete(&s, ElementArea::Isotropic, SpdaReference::Resample);
    let c = s.scenario.symbols();
    let sol = spda_solve(&d.array, &d.h, Some(&d.x_d), &c, 1.0, POWER).unwrap();
    let h = d.h.row(0).transpose();
    let expected = h.map(|v| v.conj()) * Complex64::from_polar(POWER.sqrt() / h.norm(), 0.4);
    assert!((&sol.waveform.x - &expected).norm() <= 1e-6 * expected.norm());
    let f_c = (POWER.sqrt() * h.norm() - 100.0).powi(2);
    assert!(rel(sol.f_c, f_c) <= 1e-6);
}

#[test]
fn solutions_are_stationary_and_feasible() {
    for model in [ElementArea::Isotropic, ElementArea::Cell] {
        for mode in [SpdaReference::Resample, SpdaReference::Native] {
            let s = setup(0.5, 0);
            let d = discrete(&s, model, mode);
            assert!((d.x_d.norm_squared() - POWER).abs() <= 1e-10 * POWER);
            let c = s.scenario.symbols();
            for rho in [0.1, 0.5, 0.9] {
                let sol = spda_solve(&d.array, &d.h, Some(&d.x_d), &c, rho, POWER).unwrap();
                assert!(rel(sol.waveform.x.norm_squared(), POWER) <= 1e-8);
                let r = stationarity_residual(&sol, &d.h, &c, rho);
                assert!(r <= 1e-10, "{model:?} {mode:?} rho {rho}: residual {r:e}");
                assert!((sol.f_c - (&d.h * &sol.waveform.x - &c).norm_squared()).abs() <= 1e-12 * sol.f_c.max(1.0));
            }
        }
    }
}

#[test]
fn pareto_sweep_is_monotone() {
    let s = setup(0.5, 3);
    let d = discrete(&s, ElementArea::Isotropic, SpdaReference::Resample);
    let c = s.scenario.symbols();
    let sweep: Vec<(f64, f64)> = (0..=10)
        .map(|i| {
            let sol = spda_solve(&d.array, &d.h, Some(&d.x_d), &c, i as f64 / 10.0, POWER).unwrap();
            (sol.f_c, sol.f_s)
        })
        .collect();
    for w in sweep.windows(2) {
        assert!(w[1].0 <= w[0].0 + 1e-8, "f_c rose: {w:?}");
        assert!(w[1].1 >= w[0].1 - 1e-8, "f_s fell: {w:?}");
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let s = setup(0.5, 0);
    let d = discrete(&s, ElementArea::Isotropic, SpdaReference::Resample);
    let c = s.scenario.symbols();
    assert!(spda_solve(&d.array, &d.h, Some(&d.x_d), &c, -0.1, POWER).is_err());
    assert!(spda_solve(&d.array, &d.h, None, &c, 0.5, POWER).is_err());
    let narrow = d.h.columns(0, 10).into_owned();
    assert!(spda_solve(&d.array, &narrow, Some(&d.x_d), &c, 0.5, POWER).is_err());
}
