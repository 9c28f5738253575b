use thiserror::Error;

/// Errors raised while building arrays, noise fields and capacity metrics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Whitening needs a full-rank covariance; add an incoherent component (epsilon > 0).
    #[error(
        "singular noise covariance: eigenvalue {index} has ratio {ratio:.3e} to the largest \
         (threshold {threshold:.0e}); add an incoherent noise component (epsilon > 0)"
    )]
    SingularCovariance {
        index: usize,
        ratio: f64,
        threshold: f64,
    },

    #[error(
        "degenerate covariance: minimum eigenvalue {min_eigenvalue:.3e} violates positive \
         semidefiniteness; use epsilon > 0"
    )]
    DegenerateCovariance { min_eigenvalue: f64 },

    #[error("{what} = {value} lies outside the table range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("at f = {freq_hz} Hz: {source}")]
    AtFrequency {
        freq_hz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("at azimuth = {azimuth_rad} rad: {source}")]
    AtAzimuth {
        azimuth_rad: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn at_frequency(self, freq_hz: f64) -> Self {
        Error::AtFrequency {
            freq_hz,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_azimuth(self, azimuth_rad: f64) -> Self {
        Error::AtAzimuth {
            azimuth_rad,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping frequency/azimuth context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtFrequency { source, .. } | Error::AtAzimuth { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
