use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is not supported (expected 1..=3)")]
    UnsupportedDimension(usize),

    #[error("resolution level must be at least 1, got {0}")]
    InvalidLevel(u32),

    #[error("L^p exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("sample count {got} does not match 2^(d*L) = {expected}")]
    SampleCount { expected: usize, got: usize },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("function spec: {0}")]
    Spec(String),

    #[error("scale t = {t} is below the lattice resolution 2^-{level}")]
    BelowResolution { t: f64, level: u32 },

    #[error("margin of {have} cells is too small, {need} required")]
    MarginTooSmall { have: usize, need: usize },

    #[error("level {requested} exceeds the grid resolution {level}")]
    LevelTooFine { requested: u32, level: u32 },

    #[error("cubes do not tile the unit cube: {0}")]
    NotATiling(String),

    #[error("Poincare exponent eta = {0} is not positive")]
    NonPositiveEta(f64),

    #[error("vanishing modulus in fit window (value {value} at t = {t})")]
    VanishingModulus { t: f64, value: f64 },

    #[error("fit window [{tmin}, {tmax}] holds {got} points, at least 4 required")]
    TooFewPoints { tmin: f64, tmax: f64, got: usize },

    #[error("empty curve")]
    EmptyCurve,

    #[error("phi is not strictly increasing on the grid near s = {0}")]
    NotIncreasing(f64),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
