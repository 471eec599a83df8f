use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("point within {distance:e} of centre {centre} (guard {guard:e})")]
    CollisionPoint { centre: usize, distance: f64, guard: f64 },

    #[error("energy must be positive, got {0}")]
    NonpositiveEnergy(f64),

    #[error("degenerate Kepler elements: |F| = {norm:e} below {min:e}")]
    DegenerateElements { norm: f64, min: f64 },

    #[error("Kepler orbit is not hyperbolic (H = {0})")]
    NotHyperbolic(f64),

    #[error("radius {radius} lies below the pericentre distance {r_min}")]
    BelowPericentre { radius: f64, r_min: f64 },

    #[error("Kepler propagation failed to converge after {0} iterations")]
    KeplerSolve(usize),

    #[error("integration aborted at t = {time}: distance {distance:e} to centre {centre} below guard")]
    CollisionAbort { time: f64, centre: usize, distance: f64 },

    #[error("step limit of {0} reached")]
    StepLimit(usize),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("state is not a scattering state ({0})")]
    NotScattering(String),

    #[error("classification ambiguous within horizon {0}")]
    HorizonAmbiguous(f64),

    #[error("energy {energy} outside window [{lo}, {hi}]")]
    EnergyOutsideWindow { energy: f64, lo: f64, hi: f64 },

    #[error("finite-difference stencil failed: {0}")]
    StencilFailure(String),

    #[error("configuration must have exactly two centres, found {0}")]
    NotTwoCentres(usize),

    #[error("centres are not collinear")]
    NotCollinear,

    #[error("inadmissible word: {0}")]
    InadmissibleWord(String),

    #[error("itinerary mismatch: expected {expected}, found {found}")]
    WrongItinerary { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
