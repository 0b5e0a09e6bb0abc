use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("element index ({iy}, {iz}) out of range for a {n_y}x{n_z} panel")]
    IndexOutOfRange {
        iy: usize,
        iz: usize,
        n_y: usize,
        n_z: usize,
    },

    #[error("point coincides with the reference element")]
    ZeroDistance,

    #[error("range must be positive, got {0}")]
    NonPositiveRange(f64),

    #[error("wavelength must be positive, got {0}")]
    NonPositiveWavelength(f64),

    #[error("path list is empty")]
    EmptyPaths,

    #[error("path gain is zero")]
    ZeroGain,

    #[error("elevation {theta} rad outside the admissible range {range}")]
    ElevationOutOfRange { theta: f64, range: &'static str },

    #[error("deviation bound {delta} m must be below the panel height difference {spacing} m")]
    DeviationTooLarge { delta: f64, spacing: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero vector")]
    ZeroVector,

    #[error("channel vector has no energy")]
    ZeroChannel,

    #[error("path extraction stalled after {paths} paths (residual {residual:e} did not decrease)")]
    NotConverging { paths: usize, residual: f64 },
}
