//! Weighted multi-user-interference / beampattern-mismatch waveform solver.
//!
//! The optimal current has the form
//! `j(s) = Σ_k β_k H_k*(s) + f · j_d(s)` with `β = ρ(c − z)/μ` and
//! `f = (1 − ρ)/μ`, where `z = (μI + ρQ)⁻¹(ρQc + (1 − ρ)u)` and the multiplier
//! `μ > 0` is bisected until the waveform carries exactly `P_t`. Everything
//! downstream of `Q`, `u` and `c` is a `K × K` computation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::em::{ApertureGeometry, Medium, User};
use crate::quadrature::{gauss_legendre_rule, DEFAULT_ORDER};
use crate::reference::TargetSet;
use crate::wavenumber::{ChannelTable, ChannelTerm, FourierCoefficients, WaveformExpansion};
use crate::{Error, Result, SurfacePoint};

/// Relative power mismatch at which the multiplier bisection stops.
pub const DEFAULT_POWER_TOL: f64 = 1e-8;

/// Bracket expansions (doublings or halvings of `μ`) before giving up.
pub const MAX_BRACKET_EXPANSIONS: usize = 200;

const MAX_BISECTIONS: usize = 400;

/// A full ISAC problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub aperture: ApertureGeometry,
    pub medium: Medium,
    pub users: Vec<User>,
    /// Sensing targets; may be omitted only when `ρ = 1`.
    pub targets: Option<TargetSet>,
    /// Transmit power `P_t`.
    pub power: f64,
    /// Communication weight `ρ ∈ [0, 1]`.
    pub rho: f64,
    /// Gauss-Legendre nodes per axis.
    pub quadrature_order: usize,
}

impl Scenario {
    pub fn new(
        aperture: ApertureGeometry,
        medium: Medium,
        users: Vec<User>,
        targets: Option<TargetSet>,
        power: f64,
        rho: f64,
    ) -> Result<Self> {
        let s = Self {
            aperture,
            medium,
            users,
            targets,
            power,
            rho,
            quadrature_order: DEFAULT_ORDER,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_quadrature_order(mut self, order: usize) -> Result<Self> {
        self.quadrature_order = order;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidScenario(format!(
                "rho must lie in [0,1], got {}",
                self.rho
            )));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "transmit power must be positive, got {}",
                self.power
            )));
        }
        if self.rho > 0.0 && self.users.is_empty() {
            return Err(Error::InvalidScenario(
                "at least one user is required when rho > 0".into(),
            ));
        }
        if self.rho < 1.0 && self.targets.as_ref().is_none_or(TargetSet::is_empty) {
            return Err(Error::InvalidScenario(
                "at least one target is required when rho < 1".into(),
            ));
        }
        if let Some(k) = self
            .users
            .iter()
            .position(|u| self.aperture.contains_point(u.position()))
        {
            return Err(Error::InvalidUser(format!("user {k} lies on the aperture")));
        }
        if self.quadrature_order == 0 {
            return Err(Error::ZeroQuadratureOrder);
        }
        Ok(())
    }

    pub fn symbols(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.users.len(), self.users.iter().map(User::symbol))
    }

    /// Channel samples of every user on this scenario's quadrature grid.
    pub fn channel_table(&self) -> Result<ChannelTable> {
        let rule = gauss_legendre_rule(self.quadrature_order)?;
        ChannelTable::new(&self.aperture, &rule, &self.users, &self.medium)
    }
}

/// `Q`, `u`, `c` and the reference power `∫|j_d|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationData {
    pub q: DMatrix<Complex64>,
    pub u: DVector<Complex64>,
    pub c: DVector<Complex64>,
    /// `∫|j_d(s)|² ds`; zero when there is no reference.
    pub reference_power: f64,
}

impl CorrelationData {
    pub fn new(
        q: DMatrix<Complex64>,
        u: DVector<Complex64>,
        c: DVector<Complex64>,
        reference_power: f64,
    ) -> Result<Self> {
        let k = q.nrows();
        if q.ncols() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: q.ncols(),
            });
        }
        for len in [u.len(), c.len()] {
            if len != k {
                return Err(Error::LengthMismatch { expected: k, got: len });
            }
        }
        Ok(Self {
            q,
            u,
            c,
            reference_power,
        })
    }

    pub fn user_count(&self) -> usize {
        self.c.len()
    }

    /// Same channels and reference with new symbols.
    pub fn with_symbols(&self, c: DVector<Complex64>) -> Result<Self> {
        Self::new(self.q.clone(), self.u.clone(), c, self.reference_power)
    }
}

/// `Q_ik = ∫ H_i(s) H_k*(s) ds`, Hermitian-symmetrized.
pub fn channel_gram(table: &ChannelTable) -> DMatrix<Complex64> {
    let k = table.user_count();
    let grid = table.grid();
    let conj: Vec<Vec<Complex64>> = (0..k)
        .map(|j| table.user(j).iter().map(|h| h.conj()).collect())
        .collect();
    let mut q = DMatrix::from_fn(k, k, |i, j| grid.integrate_product(table.user(i), &conj[j]));
    let qh = q.adjoint();
    q = (q + qh) * Complex64::from(0.5);
    q
}

/// `u_i = ∫ H_i(s) j_d(s) ds`.
pub fn reference_coupling(table: &ChannelTable, reference: &WaveformExpansion) -> Result<DVector<Complex64>> {
    let jd = reference.sample(table)?;
    let grid = table.grid();
    Ok(DVector::from_iterator(
        table.user_count(),
        (0..table.user_count()).map(|i| {
            grid.weights()
                .zip(table.user(i))
                .zip(&jd)
                .map(|((w, h), j)| h * j * w)
                .sum()
        }),
    ))
}

/// Builds `Q`, `u`, `c` for `scenario` with the given reference coefficients.
pub fn correlation_data(
    scenario: &Scenario,
    table: &ChannelTable,
    reference: Option<&FourierCoefficients>,
) -> Result<CorrelationData> {
    let k = scenario.users.len();
    let (u, reference_power) = match reference {
        Some(w) => {
            let jd = WaveformExpansion::new(Some((w.clone(), scenario.aperture)), Vec::new())?;
            (reference_coupling(table, &jd)?, w.power())
        }
        None => (DVector::zeros(k), 0.0),
    };
    CorrelationData::new(channel_gram(table), u, scenario.symbols(), reference_power)
}

fn solve_shifted(mu: f64, data: &CorrelationData, rho: f64, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let k = data.user_count();
    let m = DMatrix::<Complex64>::identity(k, k) * Complex64::from(mu) + &data.q * Complex64::from(rho);
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.solve(rhs));
    }
    m.lu()
        .solve(rhs)
        .ok_or_else(|| Error::SingularSystem(format!("mu I + rho Q is singular at mu = {mu:e}")))
}

/// `z(μ) = (μI + ρQ)⁻¹(ρQc + (1 − ρ)u)`.
pub fn z_of_mu(mu: f64, data: &CorrelationData, rho: f64) -> Result<DVector<Complex64>> {
    let rhs = &data.q * &data.c * Complex64::from(rho) + &data.u * Complex64::from(1.0 - rho);
    solve_shifted(mu, data, rho, &rhs)
}

fn c_tilde(data: &CorrelationData, rho: f64) -> f64 {
    let qc = &data.q * &data.c;
    rho * rho * data.c.dotc(&qc).re
        + (1.0 - rho).powi(2) * data.reference_power
        + 2.0 * rho * (1.0 - rho) * data.c.dotc(&data.u).re
}

/// Waveform power at multiplier `μ` through the closed-form identity
/// `[ρ²zᴴQz − 2ρ²Re{cᴴQz} − 2ρ(1−ρ)Re{zᴴu} + c̃] / μ²`.
///
/// `c̃` uses the actual reference power, which equals `P_t` for a designed reference.
pub fn power_identity(mu: f64, z: &DVector<Complex64>, data: &CorrelationData, rho: f64) -> f64 {
    let qz = &data.q * z;
    let num = rho * rho * z.dotc(&qz).re
        - 2.0 * rho * rho * data.c.dotc(&qz).re
        - 2.0 * rho * (1.0 - rho) * z.dotc(&data.u).re
        + c_tilde(data, rho);
    num / (mu * mu)
}

/// Channel coefficients and reference scale at multiplier `μ`, in a form free
/// of the `1/μ²` cancellation of [`power_identity`].
fn coefficients_at(mu: f64, data: &CorrelationData, rho: f64) -> Result<(DVector<Complex64>, f64)> {
    // c − z = (μI + ρQ)⁻¹(μc − (1 − ρ)u)
    let rhs = &data.c * Complex64::from(rho) - &data.u * Complex64::from(rho * (1.0 - rho) / mu);
    let beta = solve_shifted(mu, data, rho, &rhs)?;
    Ok((beta, (1.0 - rho) / mu))
}

/// `∫|Σ β_k H_k* + f j_d|² = βᴴQβ + 2f Re{βᴴu} + f² P_ref`.
pub fn coefficient_power(beta: &DVector<Complex64>, scale: f64, data: &CorrelationData) -> f64 {
    beta.dotc(&(&data.q * beta)).re + 2.0 * scale * beta.dotc(&data.u).re + scale * scale * data.reference_power
}

fn power_at(mu: f64, data: &CorrelationData, rho: f64) -> Result<f64> {
    let (beta, scale) = coefficients_at(mu, data, rho)?;
    Ok(coefficient_power(&beta, scale, data))
}

/// Bisects the multiplier so the waveform power equals `power` within `tol` relative.
///
/// Returns `(μ*, bisection iterations)`.
pub fn solve_multiplier(data: &CorrelationData, rho: f64, power: f64, tol: f64) -> Result<(f64, usize)> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidScenario(format!("rho must lie in [0,1], got {rho}")));
    }
    let close = |p: f64| (p - power).abs() <= tol * power;
    let p1 = power_at(1.0, data, rho)?;
    if close(p1) {
        return Ok((1.0, 0));
    }

    let (mut lo, mut hi) = (1.0, 1.0);
    let (mut p_lo, mut p_hi) = (p1, p1);
    let mut expansions = 0;
    let bracket_failure = |expansions, lo: f64, hi: f64, p_lo: f64, p_hi: f64| Error::BracketFailure {
        expansions,
        mu_min: lo,
        mu_max: hi,
        min_power: p_lo.min(p_hi),
        max_power: p_lo.max(p_hi),
        target_power: power,
    };
    if p1 > power {
        while p_hi > power {
            if expansions == MAX_BRACKET_EXPANSIONS {
                return Err(bracket_failure(expansions, lo, hi, p1, p_hi));
            }
            lo = hi;
            p_lo = p_hi;
            hi *= 2.0;
            p_hi = power_at(hi, data, rho)?;
            expansions += 1;
            if close(p_hi) {
                return Ok((hi, 0));
            }
        }
    } else {
        while p_lo < power {
            if expansions == MAX_BRACKET_EXPANSIONS {
                return Err(bracket_failure(expansions, lo, hi, p_lo, p1));
            }
            hi = lo;
            p_hi = p_lo;
            lo *= 0.5;
            p_lo = power_at(lo, data, rho)?;
            expansions += 1;
            if close(p_lo) {
                return Ok((lo, 0));
            }
        }
    }

    let mut best = if (p_lo - power).abs() < (p_hi - power).abs() {
        lo
    } else {
        hi
    };
    let mut best_err = (p_lo - power).abs().min((p_hi - power).abs());
    for iteration in 1..=MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        let p = power_at(mid, data, rho)?;
        if (p - power).abs() < best_err {
            best = mid;
            best_err = (p - power).abs();
        }
        if close(p) {
            return Ok((mid, iteration));
        }
        if p > power {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 4.0 * f64::EPSILON {
            log::debug!(
                "multiplier bracket collapsed with relative power error {:e}",
                best_err / power
            );
            return Ok((best, iteration));
        }
    }
    Ok((best, MAX_BISECTIONS))
}

/// Solution of the `K × K` reduced problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSolution {
    /// Lagrange multiplier; zero for a boundary solution.
    pub mu: f64,
    /// `z_k = ∫ H_k(s) j(s) ds`.
    pub z: DVector<Complex64>,
    /// Channel coefficients `β_k`.
    pub beta: DVector<Complex64>,
    /// Scale `f` applied to the reference waveform.
    pub reference_scale: f64,
    pub iterations: usize,
    /// True when `ρ = 1` and the interference can be nulled with power to spare.
    pub boundary: bool,
}

/// Solves the reduced problem for any `ρ ∈ [0, 1]`.
///
/// For `ρ = 1` the multiplier equation has no positive root when zero-forcing
/// needs less than `P_t` (`cᴴQ⁺c < P_t`). The optimum is then not unique; the
/// returned solution is the `ρ → 1⁻` limit: it nulls the interference exactly
/// and spends the remaining power along the reference waveform,
/// `j = Σ H_k*(b − t a) + t j_d` with `b = Q⁺c`, `a = Q⁺u` and
/// `t = sqrt((P_t − cᴴQ⁺c) / (P_ref − uᴴQ⁺u))`.
pub fn solve_reduced(data: &CorrelationData, rho: f64, power: f64, tol: f64) -> Result<ReducedSolution> {
    if rho == 1.0 && data.reference_power > 0.0 {
        if let Some(sol) = boundary_solution(data, power, tol)? {
            return Ok(sol);
        }
    }
    let (mu, iterations) = solve_multiplier(data, rho, power, tol)?;
    let z = z_of_mu(mu, data, rho)?;
    let (beta, reference_scale) = coefficients_at(mu, data, rho)?;
    Ok(ReducedSolution {
        mu,
        z,
        beta,
        reference_scale,
        iterations,
        boundary: false,
    })
}

fn boundary_solution(data: &CorrelationData, power: f64, tol: f64) -> Result<Option<ReducedSolution>> {
    let k = data.user_count();
    let eig = data.q.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = top * 1e-12;
    // Q⁺ from the eigen-decomposition, dropping numerically null directions
    let mut pinv = DMatrix::<Complex64>::zeros(k, k);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(i);
            pinv += v * v.adjoint() * Complex64::from(1.0 / lambda);
        }
    }
    let b = &pinv * &data.c;
    let a = &pinv * &data.u;
    let zero_forcing = data.c.dotc(&b).re;
    if zero_forcing >= power * (1.0 - tol) {
        return Ok(None);
    }
    let spare = data.reference_power - data.u.dotc(&a).re;
    if spare <= tol * data.reference_power {
        return Err(Error::SingularSystem(
            "reference waveform lies in the span of the user channels".into(),
        ));
    }
    let t = ((power - zero_forcing) / spare).sqrt();
    let beta = b - a * Complex64::from(t);
    let z = &data.q * &beta + &data.u * Complex64::from(t);
    Ok(Some(ReducedSolution {
        mu: 0.0,
        z,
        beta,
        reference_scale: t,
        iterations: 0,
        boundary: true,
    }))
}

/// `j(s) = Σ_k β_k H_k*(s) + f · j_d(s)`.
pub fn assemble_waveform(
    solution: &ReducedSolution,
    reference: Option<&FourierCoefficients>,
    aperture: ApertureGeometry,
) -> Result<WaveformExpansion> {
    let fourier = match reference {
        Some(w) if solution.reference_scale != 0.0 => {
            Some((w.scaled(Complex64::from(solution.reference_scale)), aperture))
        }
        _ => None,
    };
    let channel = if solution.beta.iter().all(|b| *b == Complex64::new(0.0, 0.0)) && fourier.is_some() {
        Vec::new()
    } else {
        solution
            .beta
            .iter()
            .enumerate()
            .map(|(user, &coefficient)| ChannelTerm { coefficient, user })
            .collect()
    };
    WaveformExpansion::new(fourier, channel)
}

/// Objective terms evaluated in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// Multi-user interference energy `Σ|z_k − c_k|²`.
    pub f_c: f64,
    /// Beampattern mismatch energy `∫|j − j_d|²`.
    pub f_s: f64,
    /// `ρ f_c + (1 − ρ) f_s`.
    pub objective: f64,
    /// Objective with the waveform-independent constants removed.
    pub reduced: f64,
    /// `Re ∫ j_d*(s) j(s) ds`.
    pub reference_overlap: f64,
}

/// Evaluates `f_c`, `f_s` and the objective from the reduced solution alone.
pub fn evaluate_objective(solution: &ReducedSolution, data: &CorrelationData, rho: f64, power: f64) -> ObjectiveTerms {
    let diff = &solution.z - &data.c;
    let f_c = diff.norm_squared();
    // ∫ j_d* j = uᴴβ + f P_ref
    let overlap = data.u.dotc(&solution.beta).re + solution.reference_scale * data.reference_power;
    let f_s = power + data.reference_power - 2.0 * overlap;
    let reduced =
        rho * solution.z.norm_squared() - 2.0 * rho * solution.z.dotc(&data.c).re - 2.0 * (1.0 - rho) * overlap;
    let objective = rho * f_c + (1.0 - rho) * f_s;
    debug_assert!({
        let constant = rho * data.c.norm_squared() + (1.0 - rho) * (power + data.reference_power);
        let scale = objective.abs().max(reduced.abs()).max(constant);
        (objective - (reduced + constant)).abs() <= 1e-9 * scale.max(1e-12)
    });
    ObjectiveTerms {
        f_c,
        f_s,
        objective,
        reduced,
        reference_overlap: overlap,
    }
}

/// Complete solution of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct IsacSolution {
    pub mu: f64,
    pub z: DVector<Complex64>,
    pub waveform: WaveformExpansion,
    pub f_c: f64,
    pub f_s: f64,
    pub objective: f64,
    pub iterations: usize,
    pub boundary: bool,
    pub reduced: ReducedSolution,
    pub terms: ObjectiveTerms,
}

/// Solves `scenario` given the reference coefficients (required when `ρ < 1`).
pub fn solve(scenario: &Scenario, reference: Option<&FourierCoefficients>) -> Result<IsacSolution> {
    scenario.validate()?;
    let table = scenario.channel_table()?;
    let data = correlation_data(scenario, &table, reference)?;
    solve_with_data(scenario, &data, reference)
}

/// Like [`solve`] with precomputed correlations.
pub fn solve_with_data(
    scenario: &Scenario,
    data: &CorrelationData,
    reference: Option<&FourierCoefficients>,
) -> Result<IsacSolution> {
    if scenario.rho < 1.0 && reference.is_none() {
        return Err(Error::InvalidScenario(
            "a reference waveform is required when rho < 1".into(),
        ));
    }
    let reduced = solve_reduced(data, scenario.rho, scenario.power, DEFAULT_POWER_TOL)?;
    let waveform = assemble_waveform(&reduced, reference, scenario.aperture)?;
    let terms = evaluate_objective(&reduced, data, scenario.rho, scenario.power);
    Ok(IsacSolution {
        mu: reduced.mu,
        z: reduced.z.clone(),
        waveform,
        f_c: terms.f_c,
        f_s: terms.f_s,
        objective: terms.objective,
        iterations: reduced.iterations,
        boundary: reduced.boundary,
        reduced,
        terms,
    })
}

/// Normalized residual of the optimality condition
/// `μ j(s) + ρ Σ_k H_k*(s) z_k − ρ Σ_k c_k H_k*(s) − (1 − ρ) j_d(s)` at `points`.
///
/// `z_k = ∫ H_k j` is recomputed from the waveform on `table`'s grid, so the
/// check exercises the integral operator rather than the reduced solution.
pub fn fredholm_residual(
    waveform: &WaveformExpansion,
    mu: f64,
    scenario: &Scenario,
    reference: Option<&FourierCoefficients>,
    table: &ChannelTable,
    points: &[SurfacePoint],
) -> Result<f64> {
    let rho = scenario.rho;
    let samples = waveform.sample(table)?;
    let grid = table.grid();
    let z: Vec<Complex64> = (0..table.user_count())
        .map(|k| {
            grid.weights()
                .zip(table.user(k))
                .zip(&samples)
                .map(|((w, h), j)| h * j * w)
                .sum()
        })
        .collect();
    let jd = match reference {
        Some(w) => Some(WaveformExpansion::new(
            Some((w.clone(), scenario.aperture)),
            Vec::new(),
        )?),
        None => None,
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &s in points {
        let j = waveform.eval(s, &scenario.users, &scenario.medium)?;
        let mut r = j * mu;
        for (k, user) in scenario.users.iter().enumerate() {
            let h = crate::em::channel_sample(user, s, &scenario.medium)?.conj();
            r += h * (z[k] - user.symbol()) * rho;
        }
        if let Some(jd) = &jd {
            r -= jd.eval(s, &scenario.users, &scenario.medium)? * (1.0 - rho);
        }
        worst = worst.max(r.norm());
        scale = scale.max(j.norm());
    }
    if scale == 0.0 {
        return Ok(worst);
    }
    Ok(worst / scale)
}
