//! Multi-target reference beam design.
//!
//! The reference waveform maximizes the minimum beam gain `ξ_l² |ã_lᵀ w|²`
//! over the targets subject to `‖w‖² = P_t`. The problem is non-convex; it is
//! solved by annealed soft-min gradient ascent on the power sphere from several
//! deterministic starts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::em::{polarization_gain, ApertureGeometry, Direction, Medium};
use crate::wavenumber::{steering_coefficients, truncation_order, FourierCoefficients, TruncationOrder};
use crate::{Error, Result};

/// Angular tolerance (radians) under which two targets count as the same direction.
const DUPLICATE_TOL: f64 = 1e-9;

/// Non-empty list of distinct sensing directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    directions: Vec<Direction>,
}

impl TargetSet {
    /// Builds the set, dropping repeated directions with a warning.
    pub fn new(directions: Vec<Direction>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidTargets("at least one target is required".into()));
        }
        let mut kept: Vec<Direction> = Vec::with_capacity(directions.len());
        for d in directions {
            if kept.iter().any(|k| same_direction(k, &d)) {
                log::warn!(
                    "dropping duplicate target ({:.4} deg, {:.4} deg)",
                    d.azimuth_deg(),
                    d.elevation_deg()
                );
            } else {
                kept.push(d);
            }
        }
        Ok(Self { directions: kept })
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

fn same_direction(a: &Direction, b: &Direction) -> bool {
    let (ax, ay) = a.transverse();
    let (bx, by) = b.transverse();
    // broadside directions coincide regardless of azimuth
    (ax - bx).abs() < DUPLICATE_TOL
        && (ay - by).abs() < DUPLICATE_TOL
        && (a.elevation() - b.elevation()).abs() < DUPLICATE_TOL
}

/// Geometry, medium and truncation order shared by reference-design calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceContext {
    pub aperture: ApertureGeometry,
    pub medium: Medium,
    pub order: TruncationOrder,
}

impl ReferenceContext {
    /// Context with the truncation order derived from the geometry.
    pub fn new(aperture: ApertureGeometry, medium: Medium) -> Self {
        Self {
            aperture,
            medium,
            order: truncation_order(&aperture, &medium),
        }
    }

    pub fn steering(&self, d: &Direction) -> DVector<Complex64> {
        steering_coefficients(d, &self.order, &self.aperture, &self.medium)
    }
}

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Total gradient iterations per start.
    pub max_iterations: usize,
    /// Iteration cap within one temperature stage.
    pub stage_iterations: usize,
    /// Final temperature as a fraction of the initial one.
    pub min_temperature_ratio: f64,
    /// Relative improvement of the minimum gain that ends the final stage.
    pub tolerance: f64,
    /// Armijo sufficient-increase constant.
    pub armijo: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            stage_iterations: 400,
            min_temperature_ratio: 1e-4,
            tolerance: 1e-8,
            armijo: 1e-4,
        }
    }
}

/// Bookkeeping of the winning optimizer run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerTrace {
    pub iterations: usize,
    pub final_temperature: f64,
    /// False when the iteration budget ran out before the tolerance was met.
    pub converged: bool,
    /// Index of the winning start (0 is the matched superposition).
    pub start_index: usize,
}

/// Outcome of a max-min design.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinSolution {
    pub weights: DVector<Complex64>,
    pub min_gain: f64,
    pub gains: Vec<f64>,
    pub trace: OptimizerTrace,
}

/// `max_w min_l c_l |a_lᵀ w|²` subject to `‖w‖² = P_t`.
///
/// Row `l` of `steering` is `a_lᵀ`; `scales` holds `c_l ≥ 0`.
#[derive(Debug, Clone)]
pub struct MaxMinProblem {
    steering: DMatrix<Complex64>,
    scales: Vec<f64>,
    power: f64,
}

impl MaxMinProblem {
    pub fn new(steering: DMatrix<Complex64>, scales: Vec<f64>, power: f64) -> Result<Self> {
        if steering.nrows() == 0 {
            return Err(Error::InvalidTargets("at least one target is required".into()));
        }
        if scales.len() != steering.nrows() {
            return Err(Error::LengthMismatch {
                expected: steering.nrows(),
                got: scales.len(),
            });
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "transmit power must be positive, got {power}"
            )));
        }
        Ok(Self {
            steering,
            scales,
            power,
        })
    }

    pub fn gains(&self, w: &DVector<Complex64>) -> Vec<f64> {
        let y = &self.steering * w;
        y.iter().zip(&self.scales).map(|(v, c)| c * v.norm_sqr()).collect()
    }

    fn project(&self, w: DVector<Complex64>) -> DVector<Complex64> {
        let n = w.norm();
        w * Complex64::from(self.power.sqrt() / n)
    }

    /// Deterministic starts: the gain-equalizing matched superposition, then
    /// one matched beam per target.
    pub fn default_starts(&self) -> Vec<DVector<Complex64>> {
        let mut starts = Vec::with_capacity(self.steering.nrows() + 1);
        let n = self.steering.ncols();
        let mut uniform = DVector::<Complex64>::zeros(n);
        let mut singles = Vec::new();
        for (l, &c) in self.scales.iter().enumerate() {
            let a = self.steering.row(l).transpose().map(|v| v.conj());
            let energy = a.norm_squared();
            if energy > 0.0 && c > 0.0 {
                uniform += &a * Complex64::from(1.0 / (c.sqrt() * energy));
                singles.push(self.project(a));
            }
        }
        if uniform.norm() > 0.0 {
            starts.push(self.project(uniform));
        }
        starts.extend(singles);
        if starts.is_empty() {
            let mut w = DVector::zeros(n);
            w[0] = Complex64::from(1.0);
            starts.push(self.project(w));
        }
        starts
    }

    /// Runs every start (in parallel) and keeps the best; ties go to the lowest start index.
    pub fn solve(&self, starts: &[DVector<Complex64>], options: &OptimizerOptions) -> MaxMinSolution {
        let runs: Vec<MaxMinSolution> = starts
            .par_iter()
            .enumerate()
            .map(|(i, w0)| {
                let mut run = self.ascend(self.project(w0.clone()), options);
                run.trace.start_index = i;
                run
            })
            .collect();
        let mut best = 0;
        for (i, r) in runs.iter().enumerate() {
            if r.min_gain > runs[best].min_gain {
                best = i;
            }
        }
        runs.into_iter().nth(best).expect("at least one start")
    }

    /// Soft-min value and its conjugate-Wirtinger gradient at `w`.
    fn smoothed(&self, w: &DVector<Complex64>, tau: f64) -> (f64, DVector<Complex64>, f64) {
        let y = &self.steering * w;
        let g: Vec<f64> = y.iter().zip(&self.scales).map(|(v, c)| c * v.norm_sqr()).collect();
        let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
        let e: Vec<f64> = g.iter().map(|gl| (-(gl - gmin) / tau).exp()).collect();
        let sum: f64 = e.iter().sum();
        let value = gmin - tau * sum.ln();
        let coeff = DVector::from_iterator(
            y.len(),
            y.iter()
                .zip(&self.scales)
                .zip(&e)
                .map(|((v, c), el)| v * (c * el / sum)),
        );
        let grad = self.steering.adjoint() * coeff;
        (value, grad, gmin)
    }

    fn ascend(&self, w0: DVector<Complex64>, options: &OptimizerOptions) -> MaxMinSolution {
        let g0 = self.gains(&w0);
        let tau0 = (g0.iter().sum::<f64>() / g0.len() as f64).max(f64::MIN_POSITIVE);
        let tau_min = tau0 * options.min_temperature_ratio;

        let mut w = w0;
        let mut best_w = w.clone();
        let mut best_beta = g0.iter().copied().fold(f64::INFINITY, f64::min);
        let mut tau = tau0;
        let mut iterations = 0;
        let mut converged = false;

        while iterations < options.max_iterations {
            let beta_before = best_beta;
            for _ in 0..options.stage_iterations {
                if iterations >= options.max_iterations {
                    break;
                }
                iterations += 1;
                let (value, grad, _) = self.smoothed(&w, tau);
                // project the gradient onto the tangent space of the sphere
                let radial = w.dotc(&grad).re / w.norm_squared();
                let tangent = &grad - &w * Complex64::from(radial);
                let slope = tangent.norm_squared();
                if slope <= 1e-30 * value.abs().max(1e-300) {
                    break;
                }
                let mut step = 1.0;
                let mut accepted = None;
                while step > 1e-14 {
                    let candidate = self.project(&w + &tangent * Complex64::from(step));
                    let (cv, _, cmin) = self.smoothed(&candidate, tau);
                    if cv >= value + options.armijo * step * slope {
                        accepted = Some((candidate, cv, cmin));
                        break;
                    }
                    step *= 0.5;
                }
                let Some((candidate, cv, cmin)) = accepted else {
                    break;
                };
                w = candidate;
                if cmin > best_beta {
                    best_beta = cmin;
                    best_w = w.clone();
                }
                if cv - value <= 1e-14 * cv.abs() {
                    break;
                }
            }
            if tau > tau_min {
                tau = (0.5 * tau).max(tau_min);
                continue;
            }
            if best_beta - beta_before <= options.tolerance * best_beta.abs() {
                converged = true;
                break;
            }
        }

        let gains = self.gains(&best_w);
        MaxMinSolution {
            min_gain: gains.iter().copied().fold(f64::INFINITY, f64::min),
            gains,
            weights: best_w,
            trace: OptimizerTrace {
                iterations,
                final_temperature: tau,
                converged,
                start_index: 0,
            },
        }
    }
}

/// Reference waveform coefficients and achieved gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDesign {
    pub coefficients: FourierCoefficients,
    /// Achieved minimum target gain `β`.
    pub min_gain: f64,
    /// Gain toward each target, in target order.
    pub gains: Vec<f64>,
    pub trace: OptimizerTrace,
}

/// `ξ²(d) |ãᵀ(d) w|²`.
pub fn target_gain(w: &FourierCoefficients, d: &Direction, ctx: &ReferenceContext) -> f64 {
    let a = ctx.steering(d);
    let xi = polarization_gain(d);
    xi * xi * a.dot(w.values()).norm_sqr()
}

/// Designs the reference waveform for `targets` at transmit power `power`.
pub fn design_reference(
    targets: &TargetSet,
    power: f64,
    ctx: &ReferenceContext,
    options: &OptimizerOptions,
) -> Result<ReferenceDesign> {
    let rows: Vec<_> = targets
        .directions()
        .iter()
        .map(|d| ctx.steering(d).transpose())
        .collect();
    let steering = DMatrix::from_rows(&rows);
    let scales = targets
        .directions()
        .iter()
        .map(|d| polarization_gain(d).powi(2))
        .collect();
    let problem = MaxMinProblem::new(steering, scales, power)?;
    let solution = problem.solve(&problem.default_starts(), options);
    if !solution.trace.converged {
        log::warn!(
            "reference design stopped after {} iterations without meeting the tolerance",
            solution.trace.iterations
        );
    }
    Ok(ReferenceDesign {
        coefficients: FourierCoefficients::new(ctx.order, solution.weights)?,
        min_gain: solution.min_gain,
        gains: solution.gains,
        trace: solution.trace,
    })
}

/// The three sensing targets of the default scenario, in degrees.
pub const DEFAULT_TARGETS_DEG: [(f64, f64); 3] = [(45.0, 15.0), (-60.0, 45.0), (30.0, 60.0)];

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ReferenceContext {
        ReferenceContext::new(
            ApertureGeometry::new(0.6, 0.6).unwrap(),
            Medium::from_frequency(2.4e9).unwrap(),
        )
    }

    fn targets(list: &[(f64, f64)]) -> TargetSet {
        TargetSet::new(
            list.iter()
                .map(|&(t, p)| Direction::from_degrees(t, p).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_target_set_is_rejected() {
        assert!(matches!(TargetSet::new(vec![]), Err(Error::InvalidTargets(_))));
    }

    #[test]
    fn duplicates_collapse() {
        let t = targets(&[(45.0, 15.0), (45.0, 15.0), (10.0, 0.0), (-80.0, 0.0)]);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn gain_of_matched_and_orthogonal_beams() {
        let c = ctx();
        let d = Direction::from_degrees(45.0, 15.0).unwrap();
        let a = c.steering(&d);
        let matched = a.map(|v| v.conj()) * Complex64::from(5f64.sqrt() / a.norm());
        let w = FourierCoefficients::new(c.order, matched).unwrap();
        let xi = polarization_gain(&d);
        let expected = xi * xi * 5.0 * a.norm_squared();
        assert!((target_gain(&w, &d, &c) - expected).abs() < 1e-12 * expected);

        let rotated = w.scaled(Complex64::from_polar(1.0, 0.7));
        assert!((target_gain(&rotated, &d, &c) - expected).abs() < 1e-12 * expected);

        // a vector orthogonal to ã in the bilinear sense
        let mut v = DVector::<Complex64>::zeros(c.order.mode_count());
        v[0] = a[1];
        v[1] = -a[0];
        let w = FourierCoefficients::new(c.order, v).unwrap();
        assert!(target_gain(&w, &d, &c) < 1e-24);
    }
}
