//! Truncated Fourier (wavenumber-domain) representation of aperture currents.
//!
//! Modes `m = (m_x, m_y)` with `m_x ∈ [-M_x, M_x]`, `m_y ∈ [-M_y, M_y]` are
//! stored row-major by `m_x` then `m_y`: index `(m_x + M_x)(2M_y + 1) + (m_y + M_y)`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::em::{channel_sample, ApertureGeometry, Direction, Medium, User};
use crate::quadrature::{ApertureGrid, QuadratureRule};
use crate::{Error, Result, SurfacePoint};

/// Number of retained modes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationOrder {
    mx: usize,
    my: usize,
}

/// A mode pair `(m_x, m_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub mx: i64,
    pub my: i64,
}

impl TruncationOrder {
    pub fn new(mx: usize, my: usize) -> Result<Self> {
        if mx == 0 || my == 0 {
            return Err(Error::InvalidAperture(format!(
                "truncation order must be positive, got ({mx}, {my})"
            )));
        }
        Ok(Self { mx, my })
    }

    pub fn mx(&self) -> usize {
        self.mx
    }

    pub fn my(&self) -> usize {
        self.my
    }

    /// `M_F = (2M_x + 1)(2M_y + 1)`.
    pub fn mode_count(&self) -> usize {
        (2 * self.mx + 1) * (2 * self.my + 1)
    }

    /// All modes in storage order.
    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        let (mx, my) = (self.mx as i64, self.my as i64);
        (-mx..=mx).flat_map(move |a| (-my..=my).map(move |b| ModeIndex { mx: a, my: b }))
    }

    pub fn index_of(&self, m: ModeIndex) -> Option<usize> {
        let (mx, my) = (self.mx as i64, self.my as i64);
        if m.mx.abs() > mx || m.my.abs() > my {
            return None;
        }
        Some(((m.mx + mx) * (2 * my + 1) + (m.my + my)) as usize)
    }
}

/// `M_x = ⌈L_x/λ⌉`, `M_y = ⌈L_y/λ⌉`.
pub fn truncation_order(aperture: &ApertureGeometry, medium: &Medium) -> TruncationOrder {
    // guard against L/λ landing a hair above an integer through rounding
    let ceil = |v: f64| ((v - 1e-9).ceil() as usize).max(1);
    TruncationOrder {
        mx: ceil(aperture.lx() / medium.wavelength()),
        my: ceil(aperture.ly() / medium.wavelength()),
    }
}

/// `ψ_m(s) = e^{j2π(m_x s_x/L_x + m_y s_y/L_y)} / √A`.
pub fn fourier_basis_eval(m: ModeIndex, s: SurfacePoint, aperture: &ApertureGeometry) -> Complex64 {
    let phase = 2.0 * PI * (m.mx as f64 * s.x / aperture.lx() + m.my as f64 * s.y / aperture.ly());
    Complex64::from_polar(1.0 / aperture.area().sqrt(), phase)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Closed-form projections `ã_m(d) = ∫ a(d, s) ψ_m(s) ds` of the steering function.
///
/// The aperture is centered, so every entry is real.
pub fn steering_coefficients(
    d: &Direction,
    order: &TruncationOrder,
    aperture: &ApertureGeometry,
    medium: &Medium,
) -> DVector<Complex64> {
    let (kx, ky) = d.transverse();
    let (lx, ly) = (aperture.lx(), aperture.ly());
    let scale = 1.0 / aperture.area().sqrt();
    let fx: Vec<f64> = (-(order.mx as i64)..=order.mx as i64)
        .map(|m| {
            let u = 2.0 * PI * (kx / medium.wavelength() + m as f64 / lx);
            lx * sinc(0.5 * u * lx)
        })
        .collect();
    let fy: Vec<f64> = (-(order.my as i64)..=order.my as i64)
        .map(|m| {
            let u = 2.0 * PI * (ky / medium.wavelength() + m as f64 / ly);
            ly * sinc(0.5 * u * ly)
        })
        .collect();
    DVector::from_iterator(
        order.mode_count(),
        fx.iter()
            .flat_map(|a| fy.iter().map(move |b| Complex64::new(scale * a * b, 0.0))),
    )
}

/// Fourier coefficients `w` of a waveform, tied to a truncation order.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    order: TruncationOrder,
    values: DVector<Complex64>,
}

impl FourierCoefficients {
    pub fn new(order: TruncationOrder, values: DVector<Complex64>) -> Result<Self> {
        if values.len() != order.mode_count() {
            return Err(Error::LengthMismatch {
                expected: order.mode_count(),
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidScenario("Fourier coefficients must be finite".into()));
        }
        Ok(Self { order, values })
    }

    pub fn zeros(order: TruncationOrder) -> Self {
        Self {
            order,
            values: DVector::zeros(order.mode_count()),
        }
    }

    pub fn order(&self) -> &TruncationOrder {
        &self.order
    }

    pub fn values(&self) -> &DVector<Complex64> {
        &self.values
    }

    pub fn get(&self, m: ModeIndex) -> Option<Complex64> {
        self.order.index_of(m).map(|i| self.values[i])
    }

    /// `‖w‖²`.
    pub fn power(&self) -> f64 {
        self.values.norm_squared()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            order: self.order,
            values: self.values.map(|v| v * alpha),
        }
    }

    /// `Σ_m w_m ψ_m(s)`.
    pub fn eval(&self, s: SurfacePoint, aperture: &ApertureGeometry) -> Complex64 {
        let ex = axis_phasors(self.order.mx, s.x / aperture.lx());
        let ey = axis_phasors(self.order.my, s.y / aperture.ly());
        let ny = ey.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in ex.iter().enumerate() {
            let row = &self.values.as_slice()[i * ny..(i + 1) * ny];
            let inner: Complex64 = row.iter().zip(&ey).map(|(w, b)| w * b).sum();
            acc += a * inner;
        }
        acc / aperture.area().sqrt()
    }

    /// Writes rows `m_x,m_y,re,im` with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m_x,m_y,re,im")?;
        for (m, v) in self.order.modes().zip(self.values.iter()) {
            writeln!(out, "{},{},{},{}", m.mx, m.my, format_real(v.re), format_real(v.im))?;
        }
        Ok(())
    }

    /// Reads the format produced by [`write_csv`](Self::write_csv).
    ///
    /// Lines starting with `#` and the header are skipped. Every mode of
    /// `order` must appear exactly once.
    pub fn read_csv<R: BufRead>(order: TruncationOrder, input: R) -> Result<Self> {
        let mut values = vec![None; order.mode_count()];
        for (i, line) in input.lines().enumerate() {
            let lineno = i + 1;
            let bad = |reason: String| Error::CoefficientCsv { line: lineno, reason };
            let line = line.map_err(|e| bad(e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("m_x") {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            }
            let mx: i64 = fields[0].parse().map_err(|_| bad(format!("bad m_x {:?}", fields[0])))?;
            let my: i64 = fields[1].parse().map_err(|_| bad(format!("bad m_y {:?}", fields[1])))?;
            let re: f64 = fields[2].parse().map_err(|_| bad(format!("bad re {:?}", fields[2])))?;
            let im: f64 = fields[3].parse().map_err(|_| bad(format!("bad im {:?}", fields[3])))?;
            let idx = order
                .index_of(ModeIndex { mx, my })
                .ok_or_else(|| bad(format!("mode ({mx}, {my}) outside the truncation order")))?;
            if values[idx].replace(Complex64::new(re, im)).is_some() {
                return Err(bad(format!("mode ({mx}, {my}) listed twice")));
            }
        }
        let missing = values.iter().filter(|v| v.is_none()).count();
        if missing > 0 {
            return Err(Error::CoefficientCsv {
                line: 0,
                reason: format!("{missing} modes missing"),
            });
        }
        let values = DVector::from_iterator(values.len(), values.into_iter().flatten());
        Self::new(order, values)
    }
}

/// Formats a real with 12 significant digits, folding `-0` into `0`.
pub fn format_real(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

/// `e^{j2π m t}` for `m = -M..=M`.
fn axis_phasors(m: usize, t: f64) -> Vec<Complex64> {
    let m = m as i64;
    (-m..=m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 * t))
        .collect()
}

/// One `β_k H_k*(s)` term of a waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTerm {
    pub coefficient: Complex64,
    pub user: usize,
}

/// `j(s) = Σ_m w_m ψ_m(s) + Σ_k β_k H_k*(s)`, with the channel terms kept symbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformExpansion {
    fourier: Option<(FourierCoefficients, ApertureGeometry)>,
    channel: Vec<ChannelTerm>,
}

impl WaveformExpansion {
    pub fn new(fourier: Option<(FourierCoefficients, ApertureGeometry)>, channel: Vec<ChannelTerm>) -> Result<Self> {
        if fourier.is_none() && channel.is_empty() {
            return Err(Error::EmptyWaveform("neither a Fourier nor a channel part"));
        }
        Ok(Self { fourier, channel })
    }

    pub fn fourier(&self) -> Option<&(FourierCoefficients, ApertureGeometry)> {
        self.fourier.as_ref()
    }

    pub fn channel(&self) -> &[ChannelTerm] {
        &self.channel
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            fourier: self.fourier.as_ref().map(|(w, a)| (w.scaled(alpha), *a)),
            channel: self
                .channel
                .iter()
                .map(|t| ChannelTerm {
                    coefficient: t.coefficient * alpha,
                    user: t.user,
                })
                .collect(),
        }
    }

    fn check_users(&self, count: usize) -> Result<()> {
        match self.channel.iter().find(|t| t.user >= count) {
            Some(t) => Err(Error::InvalidUserIndex { index: t.user, count }),
            None => Ok(()),
        }
    }

    /// Evaluates the waveform at one aperture point.
    pub fn eval(&self, s: SurfacePoint, users: &[User], medium: &Medium) -> Result<Complex64> {
        self.check_users(users.len())?;
        let mut acc = match &self.fourier {
            Some((w, aperture)) => w.eval(s, aperture),
            None => Complex64::new(0.0, 0.0),
        };
        for t in &self.channel {
            acc += t.coefficient * channel_sample(&users[t.user], s, medium)?.conj();
        }
        Ok(acc)
    }

    /// Waveform samples on the nodes of `table`'s grid.
    pub fn sample(&self, table: &ChannelTable) -> Result<Vec<Complex64>> {
        self.check_users(table.user_count())?;
        let grid = table.grid();
        let mut out: Vec<Complex64> = match &self.fourier {
            Some((w, aperture)) => grid.points().map(|s| w.eval(s, aperture)).collect(),
            None => vec![Complex64::new(0.0, 0.0); grid.len()],
        };
        for t in &self.channel {
            for (o, h) in out.iter_mut().zip(table.user(t.user)) {
                *o += t.coefficient * h.conj();
            }
        }
        Ok(out)
    }
}

/// Synthesizes `j(s) = Σ_m w_m ψ_m(s)` over `aperture`.
pub fn synthesize(w: FourierCoefficients, aperture: ApertureGeometry) -> Result<WaveformExpansion> {
    if w.power() == 0.0 {
        return Err(Error::EmptyWaveform("all Fourier coefficients are zero"));
    }
    WaveformExpansion::new(Some((w, aperture)), Vec::new())
}

/// `j(s)` at `s`; the channel part refers to `users`.
pub fn waveform_eval(j: &WaveformExpansion, s: SurfacePoint, users: &[User], medium: &Medium) -> Result<Complex64> {
    j.eval(s, users, medium)
}

/// `∫|j(s)|² ds` by tensor Gauss-Legendre quadrature.
pub fn waveform_power(
    j: &WaveformExpansion,
    aperture: &ApertureGeometry,
    rule: &QuadratureRule,
    users: &[User],
    medium: &Medium,
) -> Result<f64> {
    let table = ChannelTable::new(aperture, rule, users, medium)?;
    Ok(table.grid().integrate_norm_sqr(&j.sample(&table)?))
}

/// Channel samples `H_k(s)` for every user on a quadrature grid.
#[derive(Debug, Clone)]
pub struct ChannelTable {
    grid: ApertureGrid,
    values: Vec<Vec<Complex64>>,
}

impl ChannelTable {
    pub fn new(aperture: &ApertureGeometry, rule: &QuadratureRule, users: &[User], medium: &Medium) -> Result<Self> {
        let grid = ApertureGrid::new(aperture, rule);
        let values = users
            .iter()
            .map(|u| grid.points().map(|s| channel_sample(u, s, medium)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &ApertureGrid {
        &self.grid
    }

    pub fn user_count(&self) -> usize {
        self.values.len()
    }

    /// Samples of `H_k` in grid order.
    pub fn user(&self, k: usize) -> &[Complex64] {
        &self.values[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_legendre_rule, integrate_aperture, VALIDATION_ORDER};
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn default_geometry() -> (ApertureGeometry, Medium) {
        (
            ApertureGeometry::new(0.6, 0.6).unwrap(),
            Medium::from_frequency(2.4e9).unwrap(),
        )
    }

    #[test]
    fn truncation_order_examples() {
        let (a, m) = default_geometry();
        let o = truncation_order(&a, &m);
        assert_eq!((o.mx(), o.my(), o.mode_count()), (5, 5, 121));

        let one = ApertureGeometry::new(0.125, 0.125).unwrap();
        assert_eq!(truncation_order(&one, &m).mode_count(), 9);

        let big = ApertureGeometry::new(0.8, 0.8).unwrap();
        let o = truncation_order(&big, &m);
        assert_eq!((o.mx(), o.mode_count()), (7, 225));
    }

    #[test]
    fn mode_ordering_is_row_major() {
        let o = TruncationOrder::new(2, 1).unwrap();
        let modes: Vec<_> = o.modes().collect();
        assert_eq!(modes.len(), 15);
        assert_eq!(modes[0], ModeIndex { mx: -2, my: -1 });
        assert_eq!(modes[1], ModeIndex { mx: -2, my: 0 });
        assert_eq!(modes[3], ModeIndex { mx: -1, my: -1 });
        for (i, m) in modes.iter().enumerate() {
            assert_eq!(o.index_of(*m), Some(i));
        }
        assert_eq!(o.index_of(ModeIndex { mx: 3, my: 0 }), None);
    }

    #[test]
    fn basis_examples_and_orthonormality() {
        let (a, _) = default_geometry();
        let inv = 1.0 / a.area().sqrt();
        let dc = fourier_basis_eval(ModeIndex { mx: 0, my: 0 }, SurfacePoint::new(0.1, -0.2), &a);
        assert!((dc - Complex64::new(inv, 0.0)).norm() < 1e-15);
        let origin = fourier_basis_eval(ModeIndex { mx: 3, my: -2 }, SurfacePoint::ORIGIN, &a);
        assert!((origin - Complex64::new(inv, 0.0)).norm() < 1e-15);

        let rule = gauss_legendre_rule(VALIDATION_ORDER).unwrap();
        let order = TruncationOrder::new(3, 3).unwrap();
        let modes: Vec<_> = order.modes().collect();
        for &m in &modes {
            for &n in &modes {
                let ip = integrate_aperture(
                    |s| fourier_basis_eval(m, s, &a) * fourier_basis_eval(n, s, &a).conj(),
                    &a,
                    &rule,
                );
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((ip - Complex64::new(expected, 0.0)).norm() < 1e-8, "{m:?} {n:?}: {ip}");
            }
        }
    }

    #[test]
    fn broadside_steering_hits_only_dc() {
        let (a, m) = default_geometry();
        let o = truncation_order(&a, &m);
        let at = steering_coefficients(&Direction::new(0.3, 0.0).unwrap(), &o, &a, &m);
        let dc = o.index_of(ModeIndex { mx: 0, my: 0 }).unwrap();
        for (i, v) in at.iter().enumerate() {
            let expected = if i == dc { a.area().sqrt() } else { 0.0 };
            assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-12, "mode {i}: {v}");
        }
    }

    fn steering_by_quadrature(d: &Direction, o: &TruncationOrder, a: &ApertureGeometry, m: &Medium) -> Vec<Complex64> {
        let rule = gauss_legendre_rule(VALIDATION_ORDER).unwrap();
        o.modes()
            .map(|mode| {
                integrate_aperture(
                    |s| crate::em::steering(d, s, m) * fourier_basis_eval(mode, s, a),
                    a,
                    &rule,
                )
            })
            .collect()
    }

    #[test]
    fn steering_closed_form_matches_quadrature() {
        let (a, m) = default_geometry();
        let o = truncation_order(&a, &m);
        let d = Direction::from_degrees(45.0, 15.0).unwrap();
        let closed = steering_coefficients(&d, &o, &a, &m);
        let quad = steering_by_quadrature(&d, &o, &a, &m);
        for (c, q) in closed.iter().zip(&quad) {
            assert!((c - q).norm() < 1e-6, "{c} vs {q}");
        }
    }

    #[test]
    fn default_targets_capture_most_energy() {
        let (a, m) = default_geometry();
        let o = truncation_order(&a, &m);
        for (t, p) in [(45.0, 15.0), (-60.0, 45.0), (30.0, 60.0)] {
            let at = steering_coefficients(&Direction::from_degrees(t, p).unwrap(), &o, &a, &m);
            assert!(at.norm_squared() / a.area() >= 0.8);
        }
    }

    #[test]
    fn synthesize_examples() {
        let (a, m) = default_geometry();
        let o = truncation_order(&a, &m);
        let mut w = FourierCoefficients::zeros(o);
        assert!(matches!(synthesize(w.clone(), a), Err(Error::EmptyWaveform(_))));
        w.values[o.index_of(ModeIndex { mx: 0, my: 0 }).unwrap()] = Complex64::new(1.0, 0.0);
        let j = synthesize(w, a).unwrap();
        for s in [SurfacePoint::new(0.2, 0.2), SurfacePoint::new(-0.3, 0.1)] {
            let v = waveform_eval(&j, s, &[], &m).unwrap();
            assert!((v - Complex64::new(1.0 / 0.6, 0.0)).norm() < 1e-12);
        }
        let short = DVector::zeros(5);
        assert!(matches!(
            FourierCoefficients::new(o, short),
            Err(Error::LengthMismatch { expected: 121, got: 5 })
        ));
    }

    fn test_user(x: f64, y: f64, z: f64) -> User {
        User::new(Vector3::new(x, y, z), Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn channel_part_evaluation() {
        let (_, m) = default_geometry();
        let users = vec![test_user(20.0, -20.0, 30.0), test_user(-5.0, 3.0, 15.0)];
        let j = WaveformExpansion::new(
            None,
            vec![ChannelTerm {
                coefficient: Complex64::new(1.0, 0.0),
                user: 0,
            }],
        )
        .unwrap();
        let s = SurfacePoint::new(0.13, -0.21);
        let v = j.eval(s, &users, &m).unwrap();
        assert_eq!(v, channel_sample(&users[0], s, &m).unwrap().conj());

        let bad = WaveformExpansion::new(
            None,
            vec![ChannelTerm {
                coefficient: Complex64::new(1.0, 0.0),
                user: 2,
            }],
        )
        .unwrap();
        assert!(matches!(
            bad.eval(s, &users, &m),
            Err(Error::InvalidUserIndex { index: 2, count: 2 })
        ));
        assert!(WaveformExpansion::new(None, vec![]).is_err());
    }

    #[test]
    fn composite_evaluation_is_sum_of_parts() {
        use rand::{Rng, SeedableRng};
        let (a, m) = default_geometry();
        let o = truncation_order(&a, &m);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let w = FourierCoefficients::new(
            o,
            DVector::from_fn(o.mode_count(), |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }),
        )
        .unwrap();
        let users = vec![test_user(20.0, -20.0, 30.0), test_user(-5.0, 3.0, 15.0)];
        let terms = vec![
            ChannelTerm {
                coefficient: Complex64::new(0.3, -0.7),
                user: 0,
            },
            ChannelTerm {
                coefficient: Complex64::new(-1.1, 0.2),
                user: 1,
            },
        ];
        let full = WaveformExpansion::new(Some((w.clone(), a)), terms.clone()).unwrap();
        let fourier_only = synthesize(w, a).unwrap();
        let channel_only = WaveformExpansion::new(None, terms).unwrap();
        for _ in 0..100 {
            let s = SurfacePoint::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
            let total = full.eval(s, &users, &m).unwrap();
            let parts = fourier_only.eval(s, &users, &m).unwrap() + channel_only.eval(s, &users, &m).unwrap();
            assert!((total - parts).norm() <= 1e-12 * total.norm().max(1.0));
            let scaled = full.scaled(Complex64::new(0.0, 2.0)).eval(s, &users, &m).unwrap();
            assert!((scaled - Complex64::new(0.0, 2.0) * total).norm() <= 1e-12 * scaled.norm().max(1.0));
        }
    }

    #[test]
    fn grid_sampling_matches_pointwise_evaluation() {
        let (a, m) = default_geometry();
        let o = TruncationOrder::new(2, 2).unwrap();
        let w = FourierCoefficients::new(
            o,
            DVector::from_fn(o.mode_count(), |i, _| Complex64::new(i as f64, 1.0 - i as f64)),
        )
        .unwrap();
        let users = vec![test_user(3.0, 4.0, 10.0)];
        let j = WaveformExpansion::new(
            Some((w, a)),
            vec![ChannelTerm {
                coefficient: Complex64::new(0.5, 0.5),
                user: 0,
            }],
        )
        .unwrap();
        let rule = gauss_legendre_rule(6).unwrap();
        let table = ChannelTable::new(&a, &rule, &users, &m).unwrap();
        let samples = j.sample(&table).unwrap();
        for (s, v) in table.grid().points().zip(&samples) {
            let direct = j.eval(s, &users, &m).unwrap();
            assert!((direct - v).norm() < 1e-12 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn csv_round_trip() {
        let o = TruncationOrder::new(1, 2).unwrap();
        let w = FourierCoefficients::new(
            o,
            DVector::from_fn(o.mode_count(), |i, _| {
                Complex64::new(0.1 * i as f64 - 0.3, -1e-7 * i as f64)
            }),
        )
        .unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("m_x,m_y,re,im\n-1,-2,"));
        let back = FourierCoefficients::read_csv(o, format!("# comment\n{text}").as_bytes()).unwrap();
        for (a, b) in w.values().iter().zip(back.values().iter()) {
            assert!((a - b).norm() <= 1e-11 * a.norm().max(1e-300));
        }
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            FourierCoefficients::read_csv(o, truncated.as_bytes()),
            Err(Error::CoefficientCsv { .. })
        ));
        assert!(matches!(
            FourierCoefficients::read_csv(o, "5,0,1,1\n".as_bytes()),
            Err(Error::CoefficientCsv { line: 1, .. })
        ));
    }

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(format_real(-0.0), format_real(0.0));
        assert_eq!(format_real(1.0), "1.00000000000e0");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval_holds_at_validation_order(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let (a, m) = default_geometry();
            let o = truncation_order(&a, &m);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w = FourierCoefficients::new(
                o,
                DVector::from_fn(o.mode_count(), |_, _| {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }),
            ).unwrap();
            let expected = w.power();
            let j = synthesize(w, a).unwrap();
            let rule = gauss_legendre_rule(VALIDATION_ORDER).unwrap();
            let p = waveform_power(&j, &a, &rule, &[], &m).unwrap();
            prop_assert!((p - expected).abs() <= 1e-4 * expected);
            let p2 = waveform_power(&j.scaled(Complex64::new(1.5, -2.0)), &a, &rule, &[], &m).unwrap();
            prop_assert!((p2 - 6.25 * p).abs() <= 1e-10 * p2);
        }

        #[test]
        fn steering_closed_form_random_directions(theta in -PI..PI, phi in 0.0f64..(0.5 * PI)) {
            let (a, m) = default_geometry();
            let o = truncation_order(&a, &m);
            let d = Direction::new(theta, phi).unwrap();
            let closed = steering_coefficients(&d, &o, &a, &m);
            let quad = steering_by_quadrature(&d, &o, &a, &m);
            for (c, q) in closed.iter().zip(&quad) {
                prop_assert!((c - q).norm() < 1e-6);
            }
            // Bessel inequality
            prop_assert!(closed.norm_squared() <= a.area() * (1.0 + 1e-12));
            if phi <= 60f64.to_radians() {
                prop_assert!(closed.norm_squared() / a.area() >= 0.8);
            }
        }
    }
}
