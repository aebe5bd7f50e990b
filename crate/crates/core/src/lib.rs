//! Optimal transmit waveform design for continuous-aperture-array (CAPA)
//! integrated sensing and communication transmitters.
//!
//! The crate is organised bottom-up:
//!
//! - [`quadrature`]: Gauss-Legendre rules on intervals and on the rectangular aperture.
//! - [`em`]: dyadic Green's function, user channels, far-field steering and polarization gain.
//! - [`wavenumber`]: truncated Fourier representation of aperture currents.
//! - [`reference`]: max-min multi-target reference beam design over Fourier coefficients.
//! - [`isac`]: the closed-form weighted MUI / beampattern-mismatch solver.
//! - [`spda`]: the half-wavelength discrete-array baseline.
//! - [`evaluation`]: beampatterns, ISMR, direct energy cross-checks and Monte Carlo BER.
//!
//! Angles are radians everywhere in this crate. The "elevation" `φ` of a
//! [`em::Direction`] is measured from the array broadside (the z-axis), i.e. it
//! is a polar angle: `φ = 0` points straight out of the aperture.

pub mod em;
pub mod error;
pub mod evaluation;
pub mod isac;
pub mod quadrature;
pub mod reference;
pub mod rng;
pub mod spda;
pub mod wavenumber;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Point on the aperture plane `z = 0`, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
}

impl SurfacePoint {
    pub const ORIGIN: SurfacePoint = SurfacePoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_vec3(self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.x, self.y, 0.0)
    }
}
