//! Sensing and communication metrics.
//!
//! Beam gains follow `A(θ, φ) = ξ²(θ, φ)|∫ a(θ, φ, s) j(s) ds|²` with the
//! path-loss factor left out. Fourier parts of a waveform use the closed-form
//! steering projections; channel parts and arbitrary currents use tensor
//! quadrature with separable phase factors; discrete arrays sum over elements.

use std::f64::consts::PI;

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::em::{polarization_gain, ApertureGeometry, Direction, Medium, User};
use crate::isac::{correlation_data, solve_reduced, CorrelationData, Scenario, DEFAULT_POWER_TOL};
use crate::quadrature::{ApertureGrid, QuadratureRule};
use crate::reference::TargetSet;
use crate::rng::{trial_rng, StreamPurpose};
use crate::spda::{spda_channels, spda_correlations, DiscreteArray, DiscreteWaveform};
use crate::wavenumber::{ChannelTable, FourierCoefficients, TruncationOrder, WaveformExpansion};
use crate::{Error, Result, SurfacePoint};

/// Quadrature nodes per axis used for far-field integrals of non-Fourier currents.
pub const FAR_FIELD_ORDER: usize = 40;

/// Sidelobe-free beampatterns report this ISMR instead of `-∞`.
pub const ISMR_FLOOR_DB: f64 = -100.0;

/// Current samples on a tensor grid with the quadrature weights folded in.
#[derive(Debug, Clone)]
struct WeightedSamples {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `w(s) j(s)`, `y` fastest.
    values: Vec<Complex64>,
}

impl WeightedSamples {
    fn new(grid: &ApertureGrid, samples: &[Complex64]) -> Self {
        let values = grid.weights().zip(samples).map(|(w, v)| v * w).collect();
        Self {
            xs: grid.x_nodes().to_vec(),
            ys: grid.y_nodes().to_vec(),
            values,
        }
    }

    /// `∫ a(d, s) j(s) ds`.
    fn project(&self, kx: f64, ky: f64) -> Complex64 {
        let ey: Vec<Complex64> = self.ys.iter().map(|y| Complex64::from_polar(1.0, ky * y)).collect();
        let ny = self.ys.len();
        self.xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let row = &self.values[i * ny..(i + 1) * ny];
                let inner: Complex64 = row.iter().zip(&ey).map(|(v, e)| v * e).sum();
                Complex64::from_polar(1.0, kx * x) * inner
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
enum Radiator {
    Continuous {
        fourier: Option<(FourierCoefficients, ApertureGeometry)>,
        sampled: Option<WeightedSamples>,
    },
    Discrete {
        positions: Vec<SurfacePoint>,
        weights: Vec<Complex64>,
    },
}

/// Precomputed far-field evaluator for one radiator.
#[derive(Debug, Clone)]
pub struct FarField {
    radiator: Radiator,
    medium: Medium,
}

impl FarField {
    /// Evaluator for a continuous waveform; its channel part is integrated on `rule`.
    pub fn continuous(
        waveform: &WaveformExpansion,
        aperture: &ApertureGeometry,
        rule: &QuadratureRule,
        users: &[User],
        medium: &Medium,
    ) -> Result<Self> {
        let sampled = if waveform.channel().is_empty() {
            None
        } else {
            let channel_only = WaveformExpansion::new(None, waveform.channel().to_vec())?;
            let table = ChannelTable::new(aperture, rule, users, medium)?;
            Some(WeightedSamples::new(table.grid(), &channel_only.sample(&table)?))
        };
        Ok(Self {
            radiator: Radiator::Continuous {
                fourier: waveform.fourier().cloned(),
                sampled,
            },
            medium: *medium,
        })
    }

    /// Evaluator for an arbitrary current `j(s)` integrated on `rule`.
    pub fn from_fn<F>(j: F, aperture: &ApertureGeometry, rule: &QuadratureRule, medium: &Medium) -> Self
    where
        F: Fn(SurfacePoint) -> Complex64,
    {
        let grid = ApertureGrid::new(aperture, rule);
        let samples: Vec<Complex64> = grid.points().map(j).collect();
        Self {
            radiator: Radiator::Continuous {
                fourier: None,
                sampled: Some(WeightedSamples::new(&grid, &samples)),
            },
            medium: *medium,
        }
    }

    /// Evaluator for discrete weights; element contributions carry `√ΔA`.
    pub fn discrete(waveform: &DiscreteWaveform, medium: &Medium) -> Self {
        let w = waveform.array.element_area().sqrt();
        Self {
            radiator: Radiator::Discrete {
                positions: waveform.array.positions().to_vec(),
                weights: waveform.x.iter().map(|x| x * w).collect(),
            },
            medium: *medium,
        }
    }

    /// `∫ a(d, s) j(s) ds` (or its discrete sum).
    pub fn field(&self, d: &Direction) -> Complex64 {
        let (tx, ty) = d.transverse();
        let k = self.medium.wavenumber();
        match &self.radiator {
            Radiator::Continuous { fourier, sampled } => {
                let mut acc = Complex64::new(0.0, 0.0);
                if let Some((w, aperture)) = fourier {
                    acc += fourier_projection(w, d, aperture, &self.medium);
                }
                if let Some(s) = sampled {
                    acc += s.project(k * tx, k * ty);
                }
                acc
            }
            Radiator::Discrete { positions, weights } => positions
                .iter()
                .zip(weights)
                .map(|(s, x)| Complex64::from_polar(1.0, k * (tx * s.x + ty * s.y)) * x)
                .sum(),
        }
    }

    /// Beam gain `ξ²(d)|∫ a(d, s) j(s) ds|²`.
    pub fn gain(&self, d: &Direction) -> f64 {
        polarization_gain(d).powi(2) * self.field(d).norm_sqr()
    }
}

/// `ãᵀ(d) w` with the separable closed form of the steering projections.
fn fourier_projection(
    w: &FourierCoefficients,
    d: &Direction,
    aperture: &ApertureGeometry,
    medium: &Medium,
) -> Complex64 {
    let order: &TruncationOrder = w.order();
    let (kx, ky) = d.transverse();
    let axis = |m: usize, k: f64, l: f64| -> Vec<f64> {
        (-(m as i64)..=m as i64)
            .map(|mi| {
                let u = 2.0 * PI * (k / medium.wavelength() + mi as f64 / l);
                let x = 0.5 * u * l;
                l * if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x }
            })
            .collect()
    };
    let fx = axis(order.mx(), kx, aperture.lx());
    let fy = axis(order.my(), ky, aperture.ly());
    let ny = fy.len();
    let values = w.values().as_slice();
    let total: Complex64 = fx
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let inner: Complex64 = values[i * ny..(i + 1) * ny].iter().zip(&fy).map(|(v, b)| v * b).sum();
            inner * a
        })
        .sum();
    total / aperture.area().sqrt()
}

/// Beam gain of a continuous waveform toward `d`.
pub fn beam_gain(
    waveform: &WaveformExpansion,
    d: &Direction,
    aperture: &ApertureGeometry,
    rule: &QuadratureRule,
    users: &[User],
    medium: &Medium,
) -> Result<f64> {
    Ok(FarField::continuous(waveform, aperture, rule, users, medium)?.gain(d))
}

/// Angular sampling of a beampattern, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub azimuth_deg: (f64, f64),
    pub elevation_deg: (f64, f64),
    pub step_deg: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            azimuth_deg: (-90.0, 90.0),
            elevation_deg: (0.0, 90.0),
            step_deg: 1.0,
        }
    }
}

fn axis_samples(range: (f64, f64), step: f64) -> Vec<f64> {
    let n = ((range.1 - range.0) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| range.0 + i as f64 * step).collect()
}

/// Beam gains on an azimuth × elevation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeampatternGrid {
    pub azimuth_deg: Vec<f64>,
    pub elevation_deg: Vec<f64>,
    /// Gains with elevation fastest: `gains[i * elevation_deg.len() + j]`.
    pub gains: Vec<f64>,
}

impl BeampatternGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gains[i * self.elevation_deg.len() + j]
    }

    /// `(θ, φ, A)` triples in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.elevation_deg.len();
        self.gains
            .iter()
            .enumerate()
            .map(move |(idx, &g)| (self.azimuth_deg[idx / n], self.elevation_deg[idx % n], g))
    }

    pub fn max_gain(&self) -> f64 {
        self.gains.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluates `far` on `spec`.
pub fn beampattern(far: &FarField, spec: &GridSpec) -> Result<BeampatternGrid> {
    if !(spec.step_deg.is_finite() && spec.step_deg > 0.0) {
        return Err(Error::InvalidSimulation(format!(
            "grid step must be positive, got {}",
            spec.step_deg
        )));
    }
    let (a0, a1) = spec.azimuth_deg;
    let (e0, e1) = spec.elevation_deg;
    if !(a0 <= a1 && e0 <= e1) {
        return Err(Error::InvalidSimulation("grid ranges must be increasing".into()));
    }
    // validate the corners once so every cell is a valid direction
    Direction::from_degrees(a0, e0)?;
    Direction::from_degrees(a1, e1)?;
    let azimuth_deg = axis_samples(spec.azimuth_deg, spec.step_deg);
    let elevation_deg = axis_samples(spec.elevation_deg, spec.step_deg);
    let gains: Vec<f64> = azimuth_deg
        .par_iter()
        .flat_map_iter(|&t| {
            elevation_deg.iter().map(move |&p| {
                let d = Direction::from_degrees(t, p).expect("grid corners validated");
                far.gain(&d)
            })
        })
        .collect();
    Ok(BeampatternGrid {
        azimuth_deg,
        elevation_deg,
        gains,
    })
}

/// Integrated sidelobe-to-mainlobe ratio in dB.
///
/// The mainlobe is the union of `±halfwidth` squares (in degrees) around the
/// targets; every other grid cell is sidelobe.
pub fn ismr(grid: &BeampatternGrid, targets: &TargetSet, halfwidth_deg: f64) -> Result<f64> {
    let centers: Vec<(f64, f64)> = targets
        .directions()
        .iter()
        .map(|d| (d.azimuth_deg(), d.elevation_deg()))
        .collect();
    let tol = 1e-9;
    let mut main = 0.0;
    let mut side = 0.0;
    let mut main_cells = 0usize;
    for (t, p, g) in grid.cells() {
        let inside = centers
            .iter()
            .any(|&(ct, cp)| (t - ct).abs() <= halfwidth_deg + tol && (p - cp).abs() <= halfwidth_deg + tol);
        if inside {
            main += g;
            main_cells += 1;
        } else {
            side += g;
        }
    }
    if main_cells == 0 {
        return Err(Error::EmptyMainlobe);
    }
    if main <= 0.0 {
        return Err(Error::DegenerateBeampattern);
    }
    if side <= 0.0 {
        return Ok(ISMR_FLOOR_DB);
    }
    Ok((10.0 * (side / main).log10()).max(ISMR_FLOOR_DB))
}

/// Gains along azimuth at fixed elevation, `(θ_deg, gain)` pairs.
pub fn azimuth_cut(
    far: &FarField,
    elevation_deg: f64,
    azimuth_deg: (f64, f64),
    step_deg: f64,
) -> Result<Vec<(f64, f64)>> {
    axis_samples(azimuth_deg, step_deg)
        .into_iter()
        .map(|t| Ok((t, far.gain(&Direction::from_degrees(t, elevation_deg)?))))
        .collect()
}

/// Indices of interior local maxima whose gain is at least `relative_floor` of the cut maximum.
///
/// A flat run of equal samples counts once, at its first index.
pub fn local_maxima(cut: &[(f64, f64)], relative_floor: f64) -> Vec<usize> {
    let peak = cut.iter().map(|c| c.1).fold(0.0, f64::max);
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < cut.len() {
        if cut[i].1 > cut[i - 1].1 {
            let mut j = i;
            while j + 1 < cut.len() && cut[j + 1].1 == cut[i].1 {
                j += 1;
            }
            if j + 1 < cut.len() && cut[j + 1].1 < cut[i].1 && cut[i].1 >= relative_floor * peak {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// `Σ_k |∫ H_k j − c_k|²` by quadrature on `table`.
pub fn mui_energy_direct(waveform: &WaveformExpansion, users: &[User], table: &ChannelTable) -> Result<f64> {
    let samples = waveform.sample(table)?;
    let grid = table.grid();
    Ok(users
        .iter()
        .enumerate()
        .map(|(k, user)| {
            let z: Complex64 = grid
                .weights()
                .zip(table.user(k))
                .zip(&samples)
                .map(|((w, h), j)| h * j * w)
                .sum();
            (z - user.symbol()).norm_sqr()
        })
        .sum())
}

/// `∫|j − j_d|²` by quadrature on `table`'s grid.
pub fn mismatch_energy_direct(
    waveform: &WaveformExpansion,
    reference: Option<&WaveformExpansion>,
    table: &ChannelTable,
) -> Result<f64> {
    let j = waveform.sample(table)?;
    let diff: Vec<Complex64> = match reference {
        Some(r) => j.iter().zip(r.sample(table)?).map(|(a, b)| a - b).collect(),
        None => j,
    };
    Ok(table.grid().integrate_norm_sqr(&diff))
}

/// Square Gray-labelled constellations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam64 => "64QAM",
        }
    }

    pub fn order(self) -> usize {
        match self {
            Modulation::Qpsk => 4,
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "QPSK" | "4QAM" => Ok(Modulation::Qpsk),
            "16QAM" => Ok(Modulation::Qam16),
            "64QAM" => Ok(Modulation::Qam64),
            _ => Err(Error::InvalidSimulation(format!("unknown constellation {s:?}"))),
        }
    }
}

/// Unit-average-energy symbol set with Gray bit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    bits: u32,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let m = (modulation.order() as f64).sqrt().round() as u32;
        let axis_bits = m.trailing_zeros();
        let norm = (2.0 * (modulation.order() as f64 - 1.0) / 3.0).sqrt();
        let level = |i: u32| (2.0 * i as f64 - (m as f64 - 1.0)) / norm;
        let gray = |i: u32| i ^ (i >> 1);
        let mut points = Vec::with_capacity(modulation.order());
        let mut labels = Vec::with_capacity(modulation.order());
        for i in 0..m {
            for q in 0..m {
                points.push(Complex64::new(level(i), level(q)));
                labels.push((gray(i) << axis_bits) | gray(q));
            }
        }
        Self {
            modulation,
            points,
            labels,
            bits: 2 * axis_bits,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits
    }

    /// Index of the point nearest to `y / scale`.
    pub fn detect(&self, y: Complex64, scale: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (y - p * scale).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Number of differing bits between the labels of two points.
    pub fn bit_errors(&self, sent: usize, detected: usize) -> u32 {
        (self.labels[sent] ^ self.labels[detected]).count_ones()
    }
}

/// Users placed uniformly on a disk parallel to the aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserDisk {
    pub count: usize,
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl UserDisk {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<Vector3<f64>> {
        (0..self.count)
            .map(|_| {
                let r = self.radius * rng.random::<f64>().sqrt();
                let a = 2.0 * PI * rng.random::<f64>();
                self.center + Vector3::new(r * a.cos(), r * a.sin(), 0.0)
            })
            .collect()
    }
}

/// Where users are in each trial.
#[derive(Debug, Clone, PartialEq)]
pub enum UserPlacement {
    /// Fresh uniform positions on a disk every trial.
    Disk(UserDisk),
    /// The same users every trial; only symbols are redrawn.
    Fixed(Vec<User>),
}

impl UserPlacement {
    pub fn users<R: Rng>(&self, rng: &mut R) -> Result<Vec<User>> {
        match self {
            UserPlacement::Disk(disk) => disk
                .sample(rng)
                .into_iter()
                .map(|p| User::new(p, Complex64::new(0.0, 0.0)))
                .collect(),
            UserPlacement::Fixed(users) => Ok(users.clone()),
        }
    }
}

/// Users on `disk` carrying uniformly drawn constellation symbols scaled to `symbol_energy`.
///
/// Positions and symbols come from the `(seed, trial)` streams used by [`simulate_ber`].
pub fn random_users(
    disk: &UserDisk,
    constellation: &Constellation,
    symbol_energy: f64,
    seed: u64,
    trial: u64,
) -> Result<Vec<User>> {
    let positions = disk.sample(&mut trial_rng(seed, trial, StreamPurpose::Positions));
    let mut rng = trial_rng(seed, trial, StreamPurpose::Symbols);
    let scale = symbol_energy.sqrt();
    positions
        .into_iter()
        .map(|p| {
            let i = rng.random_range(0..constellation.points().len());
            User::new(p, constellation.points()[i] * scale)
        })
        .collect()
}

/// Channel correlations for a set of users, for either array type.
pub trait LinkModel: Sync {
    fn correlations(&self, users: &[User]) -> Result<CorrelationData>;
}

/// Continuous-aperture link: correlations by aperture quadrature.
#[derive(Debug, Clone)]
pub struct CapaLink {
    pub scenario: Scenario,
    pub reference: Option<FourierCoefficients>,
}

impl LinkModel for CapaLink {
    fn correlations(&self, users: &[User]) -> Result<CorrelationData> {
        let mut scenario = self.scenario.clone();
        scenario.users = users.to_vec();
        let table = scenario.channel_table()?;
        correlation_data(&scenario, &table, self.reference.as_ref())
    }
}

/// Discrete-array link: correlations from the element channel matrix.
#[derive(Debug, Clone)]
pub struct SpdaLink {
    pub array: DiscreteArray,
    pub medium: Medium,
    pub reference: Option<DVector<Complex64>>,
}

impl LinkModel for SpdaLink {
    fn correlations(&self, users: &[User]) -> Result<CorrelationData> {
        let h = spda_channels(&self.array, users, &self.medium)?;
        let c = DVector::from_iterator(users.len(), users.iter().map(User::symbol));
        spda_correlations(&h, self.reference.as_ref(), c)
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BerSettings {
    pub modulation: Modulation,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub symbols_per_trial: usize,
    pub master_seed: u64,
    /// Average symbol energy `E[|c_k|²]`.
    pub symbol_energy: f64,
    pub rho: f64,
    pub power: f64,
}

/// One SNR point of a BER curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRow {
    pub snr_db: f64,
    pub trials: u64,
    pub symbols: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// `10 log10(ber)`; `-∞` when no errors occurred.
    pub ber_db: f64,
}

impl BerRow {
    /// Binomial standard error of the BER estimate.
    pub fn standard_error(&self) -> f64 {
        (self.ber * (1.0 - self.ber) / self.bits as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerReport {
    pub rows: Vec<BerRow>,
}

/// Simulates uncoded BER.
///
/// Per trial: draw users, compute correlations once, then for every symbol
/// slot draw symbols, solve, and detect `y_k = z_k + n_k` at every SNR with
/// `n_k ~ CN(0, P_t / SNR)`. Trials run in parallel on independent streams.
pub fn simulate_ber<L: LinkModel>(link: &L, placement: &UserPlacement, settings: &BerSettings) -> Result<BerReport> {
    if settings.trials == 0 {
        return Err(Error::InvalidSimulation("at least one trial is required".into()));
    }
    if settings.snr_db.is_empty() {
        return Err(Error::InvalidSimulation("SNR list is empty".into()));
    }
    if settings.symbols_per_trial == 0 {
        return Err(Error::InvalidSimulation(
            "at least one symbol per trial is required".into(),
        ));
    }
    if !(settings.symbol_energy.is_finite() && settings.symbol_energy > 0.0) {
        return Err(Error::InvalidSimulation(format!(
            "symbol energy must be positive, got {}",
            settings.symbol_energy
        )));
    }
    let constellation = Constellation::new(settings.modulation);
    let sigmas: Vec<f64> = settings
        .snr_db
        .iter()
        .map(|db| (settings.power / 10f64.powf(db / 10.0) / 2.0).sqrt())
        .collect();

    let per_trial: Vec<(u64, Vec<u64>)> = (0..settings.trials)
        .into_par_iter()
        .map(|trial| {
            run_trial(link, placement, settings, &constellation, &sigmas, trial).map_err(|e| Error::TrialFailed {
                trial,
                master_seed: settings.master_seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let symbols: u64 = per_trial.iter().map(|t| t.0).sum();
    let bits = symbols * constellation.bits_per_symbol() as u64;
    let rows = settings
        .snr_db
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let bit_errors: u64 = per_trial.iter().map(|t| t.1[i]).sum();
            let ber = bit_errors as f64 / bits as f64;
            BerRow {
                snr_db,
                trials: settings.trials,
                symbols,
                bits,
                bit_errors,
                ber,
                ber_db: 10.0 * ber.log10(),
            }
        })
        .collect();
    Ok(BerReport { rows })
}

fn run_trial<L: LinkModel>(
    link: &L,
    placement: &UserPlacement,
    settings: &BerSettings,
    constellation: &Constellation,
    sigmas: &[f64],
    trial: u64,
) -> Result<(u64, Vec<u64>)> {
    let seed = settings.master_seed;
    let users = placement.users(&mut trial_rng(seed, trial, StreamPurpose::Positions))?;
    let k = users.len();
    let base = link.correlations(&users)?;
    let mut symbol_rng = trial_rng(seed, trial, StreamPurpose::Symbols);
    let mut noise_rng = trial_rng(seed, trial, StreamPurpose::Noise);
    let scale = settings.symbol_energy.sqrt();
    let mut errors = vec![0u64; sigmas.len()];
    let mut sent = vec![0usize; k];
    for _ in 0..settings.symbols_per_trial {
        for s in sent.iter_mut() {
            *s = symbol_rng.random_range(0..constellation.points().len());
        }
        let c = DVector::from_iterator(k, sent.iter().map(|&i| constellation.points()[i] * scale));
        let data = base.with_symbols(c)?;
        let z = solve_reduced(&data, settings.rho, settings.power, DEFAULT_POWER_TOL)?.z;
        for (e, &sigma) in errors.iter_mut().zip(sigmas) {
            for (user, &tx) in sent.iter().enumerate() {
                let nr: f64 = noise_rng.sample(StandardNormal);
                let ni: f64 = noise_rng.sample(StandardNormal);
                let y = z[user] + Complex64::new(nr, ni) * sigma;
                *e += constellation.bit_errors(tx, constellation.detect(y, scale)) as u64;
            }
        }
    }
    Ok(((settings.symbols_per_trial * k) as u64, errors))
}
