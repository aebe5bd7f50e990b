//! Electromagnetic primitives: the free-space dyadic Green's function, scalar
//! user channels, the far-field steering function and the polarization gain.
//!
//! The transmit current is uni-polarized along `u_y = [0, 1, 0]`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::{Error, Result, SurfacePoint};

/// Propagation speed used to convert carrier frequency to wavelength.
///
/// `3e8` makes 2.4 GHz map to exactly λ = 0.125 m.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Free-space intrinsic impedance, `120π` ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 120.0 * PI;

/// Polarization of the transmit current.
pub fn current_polarization() -> Vector3<f64> {
    Vector3::new(0.0, 1.0, 0.0)
}

/// Rectangular aperture centered at the origin in the `z = 0` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureGeometry {
    lx: f64,
    ly: f64,
}

impl ApertureGeometry {
    pub fn new(lx: f64, ly: f64) -> Result<Self> {
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidAperture(format!(
                "side lengths must be positive and finite, got {lx} x {ly}"
            )));
        }
        Ok(Self { lx, ly })
    }

    /// Square aperture of the given area.
    pub fn square_with_area(area: f64) -> Result<Self> {
        let side = area.sqrt();
        Self::new(side, side)
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Whether `p` lies on the aperture surface itself (`z = 0`, inside the footprint).
    pub fn contains_point(&self, p: &Vector3<f64>) -> bool {
        p.z.abs() < 1e-12 && p.x.abs() <= 0.5 * self.lx && p.y.abs() <= 0.5 * self.ly
    }
}

/// Propagation medium: wavelength, intrinsic impedance and carrier frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    wavelength: f64,
    impedance: f64,
    frequency: f64,
}

impl Medium {
    pub fn from_frequency(frequency_hz: f64) -> Result<Self> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "carrier frequency must be positive, got {frequency_hz}"
            )));
        }
        Ok(Self {
            wavelength: SPEED_OF_LIGHT / frequency_hz,
            impedance: FREE_SPACE_IMPEDANCE,
            frequency: frequency_hz,
        })
    }

    pub fn with_impedance(mut self, impedance: f64) -> Result<Self> {
        if !(impedance.is_finite() && impedance > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "impedance must be positive, got {impedance}"
            )));
        }
        self.impedance = impedance;
        Ok(self)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn impedance(&self) -> f64 {
        self.impedance
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Far-field path-loss coefficient `γ(r) = η² / (4 λ² r²)`.
    ///
    /// The sign is positive: it multiplies a power density.
    pub fn path_loss(&self, r: f64) -> f64 {
        let eta = self.impedance;
        eta * eta / (4.0 * self.wavelength * self.wavelength * r * r)
    }
}

/// Far-field direction.
///
/// `azimuth` (θ) is measured in the xy-plane from the x-axis. `elevation` (φ)
/// is measured from the z-axis (broadside), so it is a polar angle despite the
/// name; `φ = 0` is broadside and `φ = π/2` is endfire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    azimuth: f64,
    elevation: f64,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        const SLACK: f64 = 1e-12;
        let err = |reason| Error::InvalidDirection {
            azimuth,
            elevation,
            reason,
        };
        if !(azimuth.is_finite() && elevation.is_finite()) {
            return Err(err("angles must be finite"));
        }
        if azimuth.abs() > PI + SLACK {
            return Err(err("azimuth must lie in [-pi, pi]"));
        }
        if !(-SLACK..=0.5 * PI + SLACK).contains(&elevation) {
            return Err(err("elevation must lie in [0, pi/2]"));
        }
        Ok(Self {
            azimuth: azimuth.clamp(-PI, PI),
            elevation: elevation.clamp(0.0, 0.5 * PI),
        })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians())
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth.to_degrees()
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation.to_degrees()
    }

    /// Transverse direction cosines `(cosθ sinφ, sinθ sinφ)`.
    pub fn transverse(&self) -> (f64, f64) {
        let (st, ct) = self.azimuth.sin_cos();
        let sp = self.elevation.sin();
        (ct * sp, st * sp)
    }
}

/// Communication user with a uni-polarized receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct User {
    position: Vector3<f64>,
    polarization: Vector3<f64>,
    noise_variance: f64,
    symbol: Complex64,
}

impl User {
    /// User at `position` with the default `u_y` polarization and unit noise variance.
    pub fn new(position: Vector3<f64>, symbol: Complex64) -> Result<Self> {
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidUser("position must be finite".into()));
        }
        if !(symbol.re.is_finite() && symbol.im.is_finite()) {
            return Err(Error::InvalidUser("symbol must be finite".into()));
        }
        Ok(Self {
            position,
            polarization: current_polarization(),
            noise_variance: 1.0,
            symbol,
        })
    }

    pub fn with_polarization(mut self, polarization: Vector3<f64>) -> Result<Self> {
        let n = polarization.norm();
        if n.is_nan() || (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidUser(format!(
                "polarization must be a unit vector, got norm {n}"
            )));
        }
        self.polarization = polarization;
        Ok(self)
    }

    pub fn with_noise_variance(mut self, noise_variance: f64) -> Result<Self> {
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(Error::InvalidUser(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        self.noise_variance = noise_variance;
        Ok(self)
    }

    pub fn with_symbol(mut self, symbol: Complex64) -> Self {
        self.symbol = symbol;
        self
    }

    pub fn position(&self) -> &Vector3<f64> {
        &self.position
    }

    pub fn polarization(&self) -> &Vector3<f64> {
        &self.polarization
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn symbol(&self) -> Complex64 {
        self.symbol
    }
}

/// Unit propagation vector `k(θ, φ) = [cosθ sinφ, sinθ sinφ, cosφ]`.
pub fn propagation_vector(d: &Direction) -> Vector3<f64> {
    let (kx, ky) = d.transverse();
    Vector3::new(kx, ky, d.elevation.cos())
}

fn green_prefactor(distance: f64, medium: &Medium) -> Complex64 {
    let lambda = medium.wavelength();
    let phase = Complex64::from_polar(1.0, -2.0 * PI * distance / lambda);
    Complex64::new(0.0, -medium.impedance()) * phase / (2.0 * lambda * distance)
}

/// Free-space dyadic Green's function
/// `G(r, s) = -(jη e^{-j2π‖r-s‖/λ}) / (2λ‖r-s‖) · (I - p̂p̂ᵀ)`.
pub fn dyadic_green(r: &Vector3<f64>, s: SurfacePoint, medium: &Medium) -> Result<Matrix3<Complex64>> {
    let diff = r - s.to_vec3();
    let distance = diff.norm();
    if distance.is_nan() || distance <= 1e-12 {
        return Err(Error::SingularKernel);
    }
    let p = diff / distance;
    let projector = Matrix3::identity() - p * p.transpose();
    let pref = green_prefactor(distance, medium);
    Ok(projector.map(|v| pref * v))
}

/// Scalar channel `H_k(s) = u_kᵀ G(r_k, s) u_y` using the exact kernel.
pub fn channel_sample(user: &User, s: SurfacePoint, medium: &Medium) -> Result<Complex64> {
    let diff = user.position - s.to_vec3();
    let distance = diff.norm();
    if distance.is_nan() || distance <= 1e-12 {
        return Err(Error::SingularKernel);
    }
    let p = diff / distance;
    let uk = &user.polarization;
    // u_kᵀ (I - p̂p̂ᵀ) u_y with u_y = e_y
    let coupling = uk.y - uk.dot(&p) * p.y;
    Ok(green_prefactor(distance, medium) * coupling)
}

/// Directional beam gain coefficient `ξ(θ, φ) = ‖(I - k kᵀ) u_y‖ = sqrt(1 - (sinθ sinφ)²)`.
pub fn polarization_gain(d: &Direction) -> f64 {
    let (_, ky) = d.transverse();
    (1.0 - ky * ky).max(0.0).sqrt()
}

/// Far-field steering function `a(θ, φ, s) = e^{j(2π/λ)(cosθ sinφ s_x + sinθ sinφ s_y)}`.
pub fn steering(d: &Direction, s: SurfacePoint, medium: &Medium) -> Complex64 {
    let (kx, ky) = d.transverse();
    Complex64::from_polar(1.0, medium.wavenumber() * (kx * s.x + ky * s.y))
}
