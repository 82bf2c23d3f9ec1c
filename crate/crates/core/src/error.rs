//! Crate-wide error type.
//!
//! Witness-bearing variants carry point identifiers (names, not indices) so
//! messages and machine-readable error objects can be produced without a
//! handle on the originating system.

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("map error: {0}")]
    Map(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("bad thresholds: {0}")]
    BadThresholds(String),

    #[error("system is not [{epsilon},{alpha}]-expansive (witness pair ({x}, {y}))")]
    NotExpansive {
        epsilon: Rational,
        alpha: Rational,
        x: String,
        y: String,
    },

    #[error("relation is not transitive: {x} ~ {y} and {y} ~ {z} but {x} is not related to {z}")]
    NotTransitive { x: String, y: String, z: String },

    #[error("partition is not compatible with the map: {x} ~ {y} but their images lie in different classes")]
    NotCompatible { x: String, y: String },

    #[error("degenerate quotient metric: distinct classes {a} and {b} at distance 0")]
    DegenerateMetric { a: String, b: String },

    #[error("alpha = {alpha} too large: {reason}")]
    AlphaTooLarge { alpha: Rational, reason: String },

    #[error("system is not semi-expansive at alpha = {alpha} (witness pair ({x}, {y}))")]
    NotSemiExpansive {
        alpha: Rational,
        x: String,
        y: String,
    },

    #[error("cover is not semi-expansive (witness pair ({x}, {y}))")]
    NotCoverSemiExpansive { x: String, y: String },

    #[error("system is not semi-Anosov at alpha = {alpha}: {reason}")]
    NotSemiAnosov { alpha: Rational, reason: String },

    #[error("no point shadows the perturbed orbit of {point} within {epsilon}")]
    NoShadowingPoint { point: String, epsilon: Rational },

    #[error("ambiguous shadowing class for {point}: {a} and {b} both shadow its perturbed orbit")]
    AmbiguousClass { point: String, a: String, b: String },

    #[error("bad period {period}: must be a positive multiple of the map order {order}")]
    BadPeriod { period: u64, order: u64 },

    #[error("no rho makes the period-{period} sequence space [{epsilon},{alpha}]-expansive")]
    NoSuchRho {
        period: u64,
        epsilon: Rational,
        alpha: Rational,
    },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error("bad parameters: {0}")]
    BadParameters(String),
}

impl Error {
    /// Stable machine-readable code for this error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "ParseError",
            Error::Metric(_) => "MetricError",
            Error::Map(_) => "MapError",
            Error::SizeMismatch(_) => "SizeMismatch",
            Error::BadThresholds(_) => "BadThresholds",
            Error::NotExpansive { .. } => "NotExpansive",
            Error::NotTransitive { .. } => "NotTransitive",
            Error::NotCompatible { .. } => "NotCompatible",
            Error::DegenerateMetric { .. } => "DegenerateMetric",
            Error::AlphaTooLarge { .. } => "AlphaTooLarge",
            Error::NotSemiExpansive { .. } => "NotSemiExpansive",
            Error::NotCoverSemiExpansive { .. } => "NotUSemiExpansive",
            Error::NotSemiAnosov { .. } => "NotSemiAnosov",
            Error::NoShadowingPoint { .. } => "NoShadowingPoint",
            Error::AmbiguousClass { .. } => "AmbiguousClass",
            Error::BadPeriod { .. } => "BadPeriod",
            Error::NoSuchRho { .. } => "NoSuchRho",
            Error::ResourceLimit(_) => "ResourceLimit",
            Error::TooLarge(_) => "TooLarge",
            Error::BadParameters(_) => "BadParameters",
        }
    }

    /// True for errors caused by invalid input rather than a failed property
    /// or an exhausted resource cap.
    pub fn is_usage(&self) -> bool {
        !matches!(
            self,
            Error::ResourceLimit(_)
                | Error::TooLarge(_)
                | Error::NotExpansive { .. }
                | Error::NotTransitive { .. }
                | Error::NotSemiExpansive { .. }
                | Error::NotCoverSemiExpansive { .. }
                | Error::NotSemiAnosov { .. }
                | Error::NoShadowingPoint { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
