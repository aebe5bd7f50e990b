use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature order must be at least 1")]
    ZeroQuadratureOrder,

    #[error("invalid aperture: {0}")]
    InvalidAperture(String),

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("invalid direction (azimuth {azimuth} rad, elevation {elevation} rad): {reason}")]
    InvalidDirection {
        azimuth: f64,
        elevation: f64,
        reason: &'static str,
    },

    #[error("invalid user: {0}")]
    InvalidUser(String),

    #[error("observation point coincides with the source point; Green's function is singular")]
    SingularKernel,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("waveform has no physical content: {0}")]
    EmptyWaveform(&'static str),

    #[error("channel term references user {index} but only {count} users exist")]
    InvalidUserIndex { index: usize, count: usize },

    #[error("invalid target set: {0}")]
    InvalidTargets(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(
        "multiplier bracket failed after {expansions} expansions: \
         power ranged over [{min_power:.6e}, {max_power:.6e}] for mu in [{mu_min:.3e}, {mu_max:.3e}], \
         target {target_power:.6e}"
    )]
    BracketFailure {
        expansions: usize,
        mu_min: f64,
        mu_max: f64,
        min_power: f64,
        max_power: f64,
        target_power: f64,
    },

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("aperture too small for a half-wavelength array: {0}")]
    ApertureTooSmall(String),

    #[error("empty mainlobe: no grid cell lies within the mainlobe of any target")]
    EmptyMainlobe,

    #[error("beampattern carries no energy in the mainlobe region")]
    DegenerateBeampattern,

    #[error("invalid simulation parameters: {0}")]
    InvalidSimulation(String),

    #[error("trial {trial} (master seed {master_seed}) failed: {source}")]
    TrialFailed {
        trial: u64,
        master_seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed coefficient CSV at line {line}: {reason}")]
    CoefficientCsv { line: usize, reason: String },
}
