//! Half-wavelength discrete-array baseline.
//!
//! The discrete problem mirrors the continuous one: channels `H_k(s_n)·√ΔA`
//! stacked into a `K × N_a` matrix `H`, the stationarity condition
//! `(μI + ρHᴴH)x = ρHᴴc + (1 − ρ)x_d`, and the same multiplier bisection,
//! run through the `K × K` reduction with `Q = HHᴴ` and `u = Hx_d`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::em::{channel_sample, polarization_gain, steering, ApertureGeometry, Direction, Medium, User};
use crate::isac::{solve_reduced, CorrelationData, DEFAULT_POWER_TOL};
use crate::reference::{MaxMinProblem, OptimizerOptions, TargetSet};
use crate::wavenumber::FourierCoefficients;
use crate::{Error, Result, SurfacePoint};

/// Effective radiating area attributed to each element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElementArea {
    /// `ΔA = λ²/(4π)`, the effective area of an isotropic radiator.
    #[default]
    Isotropic,
    /// `ΔA = L_x L_y / N_a`: the aperture split evenly among elements.
    Cell,
}

/// Uniform `λ/2` grid of elements centered on the aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteArray {
    positions: Vec<SurfacePoint>,
    nx: usize,
    ny: usize,
    spacing: f64,
    element_area: f64,
    area_model: ElementArea,
}

impl DiscreteArray {
    /// Element positions, `x` outer and `y` inner.
    pub fn positions(&self) -> &[SurfacePoint] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `ΔA`.
    pub fn element_area(&self) -> f64 {
        self.element_area
    }

    pub fn area_model(&self) -> ElementArea {
        self.area_model
    }
}

/// Places `⌊L/(λ/2)⌋ + 1` elements per axis at `λ/2` spacing, centered.
pub fn discretize(aperture: &ApertureGeometry, medium: &Medium, area_model: ElementArea) -> Result<DiscreteArray> {
    let spacing = 0.5 * medium.wavelength();
    let count = |l: f64| -> Result<usize> {
        let ratio = l / spacing;
        if ratio < 1.0 - 1e-9 {
            return Err(Error::ApertureTooSmall(format!(
                "side {l} m is shorter than half a wavelength ({spacing} m)"
            )));
        }
        Ok((ratio + 1e-9).floor() as usize + 1)
    };
    let (nx, ny) = (count(aperture.lx())?, count(aperture.ly())?);
    let axis = |n: usize| -> Vec<f64> {
        let offset = 0.5 * (n - 1) as f64;
        (0..n).map(|i| (i as f64 - offset) * spacing).collect()
    };
    let (xs, ys) = (axis(nx), axis(ny));
    let positions: Vec<SurfacePoint> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| SurfacePoint::new(x, y)))
        .collect();
    let element_area = match area_model {
        ElementArea::Isotropic => medium.wavelength().powi(2) / (4.0 * PI),
        ElementArea::Cell => aperture.area() / positions.len() as f64,
    };
    Ok(DiscreteArray {
        positions,
        nx,
        ny,
        spacing,
        element_area,
        area_model,
    })
}

/// `K × N_a` matrix with entries `H_k(s_n)·√ΔA`.
pub fn spda_channels(array: &DiscreteArray, users: &[User], medium: &Medium) -> Result<DMatrix<Complex64>> {
    let w = array.element_area.sqrt();
    let mut h = DMatrix::zeros(users.len(), array.len());
    for (k, user) in users.iter().enumerate() {
        for (n, &s) in array.positions.iter().enumerate() {
            h[(k, n)] = channel_sample(user, s, medium)? * w;
        }
    }
    Ok(h)
}

/// Discrete steering vector `a(d, s_n)·√ΔA`.
pub fn steering_vector(array: &DiscreteArray, d: &Direction, medium: &Medium) -> DVector<Complex64> {
    let w = array.element_area.sqrt();
    DVector::from_iterator(array.len(), array.positions.iter().map(|&s| steering(d, s, medium) * w))
}

/// How the discrete reference `x_d` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpdaReference {
    /// Samples of the continuous reference times `√ΔA`, renormalized to `P_t`.
    #[default]
    Resample,
    /// Max-min design run directly on the discrete steering vectors.
    Native,
}

/// Builds the discrete reference weights `x_d` with `‖x_d‖² = P_t`.
pub fn discrete_reference(
    array: &DiscreteArray,
    mode: SpdaReference,
    continuous: &FourierCoefficients,
    aperture: &ApertureGeometry,
    targets: &TargetSet,
    medium: &Medium,
    power: f64,
) -> Result<DVector<Complex64>> {
    match mode {
        SpdaReference::Resample => {
            let w = array.element_area.sqrt();
            let x = DVector::from_iterator(
                array.len(),
                array.positions.iter().map(|&s| continuous.eval(s, aperture) * w),
            );
            let norm = x.norm();
            if norm == 0.0 {
                return Err(Error::EmptyWaveform("resampled reference vanishes on the element grid"));
            }
            Ok(x * Complex64::from(power.sqrt() / norm))
        }
        SpdaReference::Native => {
            let rows: Vec<_> = targets
                .directions()
                .iter()
                .map(|d| steering_vector(array, d, medium).transpose())
                .collect();
            let scales = targets
                .directions()
                .iter()
                .map(|d| polarization_gain(d).powi(2))
                .collect();
            let problem = MaxMinProblem::new(DMatrix::from_rows(&rows), scales, power)?;
            Ok(problem
                .solve(&problem.default_starts(), &OptimizerOptions::default())
                .weights)
        }
    }
}

/// Discrete weights on a given array.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWaveform {
    pub x: DVector<Complex64>,
    pub array: DiscreteArray,
}

/// Solved discrete problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdaSolution {
    pub waveform: DiscreteWaveform,
    pub reference: DVector<Complex64>,
    pub mu: f64,
    /// Received noiseless signals `Hx`.
    pub z: DVector<Complex64>,
    /// `‖Hx − c‖²`.
    pub f_c: f64,
    /// `‖x − x_d‖²`.
    pub f_s: f64,
    pub objective: f64,
    pub iterations: usize,
    pub boundary: bool,
}

/// `Q = HHᴴ`, `u = Hx_d` and the symbols, in the continuous solver's format.
pub fn spda_correlations(
    h: &DMatrix<Complex64>,
    reference: Option<&DVector<Complex64>>,
    symbols: DVector<Complex64>,
) -> Result<CorrelationData> {
    let q = h * h.adjoint();
    let (u, p_ref) = match reference {
        Some(x_d) => (h * x_d, x_d.norm_squared()),
        None => (DVector::zeros(h.nrows()), 0.0),
    };
    CorrelationData::new(q, u, symbols, p_ref)
}

/// Solves the discrete problem for channels `h` (from [`spda_channels`]).
pub fn spda_solve(
    array: &DiscreteArray,
    h: &DMatrix<Complex64>,
    reference: Option<&DVector<Complex64>>,
    symbols: &DVector<Complex64>,
    rho: f64,
    power: f64,
) -> Result<SpdaSolution> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidScenario(format!("rho must lie in [0,1], got {rho}")));
    }
    if rho < 1.0 && reference.is_none() {
        return Err(Error::InvalidScenario("a reference is required when rho < 1".into()));
    }
    if h.ncols() != array.len() {
        return Err(Error::LengthMismatch {
            expected: array.len(),
            got: h.ncols(),
        });
    }
    let data = spda_correlations(h, reference, symbols.clone())?;
    let reduced = solve_reduced(&data, rho, power, DEFAULT_POWER_TOL)?;
    let mut x = h.adjoint() * &reduced.beta;
    if let Some(x_d) = reference {
        x += x_d * Complex64::from(reduced.reference_scale);
    }
    let z = h * &x;
    let f_c = (&z - symbols).norm_squared();
    let f_s = match reference {
        Some(x_d) => (&x - x_d).norm_squared(),
        None => x.norm_squared(),
    };
    Ok(SpdaSolution {
        reference: reference.cloned().unwrap_or_else(|| DVector::zeros(array.len())),
        waveform: DiscreteWaveform {
            x,
            array: array.clone(),
        },
        mu: reduced.mu,
        z,
        f_c,
        f_s,
        objective: rho * f_c + (1.0 - rho) * f_s,
        iterations: reduced.iterations,
        boundary: reduced.boundary,
    })
}

/// `‖μx + ρHᴴ(Hx) − ρHᴴc − (1 − ρ)x_d‖ / ‖x‖`.
pub fn stationarity_residual(
    solution: &SpdaSolution,
    h: &DMatrix<Complex64>,
    symbols: &DVector<Complex64>,
    rho: f64,
) -> f64 {
    let x = &solution.waveform.x;
    let r = x * Complex64::from(solution.mu) + h.adjoint() * (h * x - symbols) * Complex64::from(rho)
        - &solution.reference * Complex64::from(1.0 - rho);
    r.norm() / x.norm()
}
