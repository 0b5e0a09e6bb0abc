//! Cross-panel channel inference for a base station carrying two uniform
//! planar arrays (UPAs) that may operate at different carrier frequencies.
//!
//! Given the multi-path parameters seen by Panel 1, the [`inference`] module
//! predicts what Panel 2 sees: the full channel in free space (far or near
//! field), the path angles when both panels share far-field scatterers, and
//! an elevation interval when they share near-field scatterers.
//!
//! The remaining modules supply everything needed to exercise those rules:
//!
//! * [`geometry`]: panel placement, aperture, Rayleigh distance and exact
//!   line-of-sight angles.
//! * [`channel`]: steering vectors, the Friis gain, the parametric channel,
//!   an exact per-element spherical-wave channel and synthetic scenes.
//! * [`estimation`]: matched-pursuit path extraction and reconstruction.
//! * [`metrics`]: correlation coefficient, elevation-error curve,
//!   containment statistics and per-UE reports.
//!
//! Coordinate frame: both panels lie in the `x = 0` plane, broadside is `+x`
//! and `z` points up. Elevations are signed (negative below the horizon),
//! azimuths live in `[0, 2π)`.

pub mod channel;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod inference;
pub mod metrics;

pub use channel::{ChannelVector, PathComponent, Scatterer};
pub use error::{Error, Result};
pub use geometry::{FieldRegime, PanelConfig, Point3, TwoPanelLayout};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
