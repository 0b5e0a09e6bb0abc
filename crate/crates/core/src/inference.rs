//! Cross-panel inference: predict Panel 2's path parameters from Panel 1's.
//!
//! | scenario                         | inferred for Panel 2                     |
//! |----------------------------------|------------------------------------------|
//! | far-field free space             | full channel: angles copied, gain mapped |
//! | near-field free space            | full channel: ground-plane geometry      |
//! | multi-path, shared far scatterers| per-path angles (copied)                 |
//! | multi-path, shared near scatterers| azimuth plus an elevation interval      |
//!
//! Scattered-path gains are never produced: they depend on the scatterer
//! material at each carrier and cannot be mapped geometrically.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{friis_gain, PathComponent};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    FarFree,
    NearFree,
    MultipathFar,
    MultipathNear,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::FarFree => "far-free",
            Scenario::NearFree => "near-free",
            Scenario::MultipathFar => "multipath-far",
            Scenario::MultipathNear => "multipath-near",
        }
    }

    pub fn is_free_space(self) -> bool {
        matches!(self, Scenario::FarFree | Scenario::NearFree)
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "far-free" => Ok(Scenario::FarFree),
            "near-free" => Ok(Scenario::NearFree),
            "multipath-far" => Ok(Scenario::MultipathFar),
            "multipath-near" => Ok(Scenario::MultipathNear),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

/// How the far-field gain is carried across frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum GainMode {
    /// Magnitude scaled by `λ2/λ1`, unit phasor raised to `λ1/λ2` on the
    /// principal branch, plus the reference-offset phase term.
    #[default]
    #[serde(rename = "literal-eq7")]
    Literal,
    /// Recover the range from the gain (integer wavelengths from the
    /// magnitude, fraction from the phase) and evaluate Friis at Panel 2.
    #[serde(rename = "amplitude-assisted")]
    AmplitudeAssisted,
}

impl GainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GainMode::Literal => "literal-eq7",
            GainMode::AmplitudeAssisted => "amplitude-assisted",
        }
    }
}

impl std::str::FromStr for GainMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "literal-eq7" => Ok(GainMode::Literal),
            "amplitude-assisted" => Ok(GainMode::AmplitudeAssisted),
            other => Err(format!("unknown gain mode `{other}`")),
        }
    }
}

/// Elevation interval `(lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRange {
    lower: f64,
    upper: f64,
}

impl AngleRange {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(-FRAC_PI_2 <= lower && lower < upper && upper <= FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "invalid elevation interval ({lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Lower bound exclusive, upper bound inclusive.
    pub fn contains(&self, theta: f64) -> bool {
        self.lower < theta && theta <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathAngles {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathAngleRange {
    pub theta: AngleRange,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InferenceResult {
    FarFree { path: PathComponent },
    NearFree { path: PathComponent, range: f64 },
    MultipathFar { angles: Vec<PathAngles> },
    MultipathNear { ranges: Vec<PathAngleRange> },
}

impl InferenceResult {
    pub fn scenario(&self) -> Scenario {
        match self {
            InferenceResult::FarFree { .. } => Scenario::FarFree,
            InferenceResult::NearFree { .. } => Scenario::NearFree,
            InferenceResult::MultipathFar { .. } => Scenario::MultipathFar,
            InferenceResult::MultipathNear { .. } => Scenario::MultipathNear,
        }
    }

    /// The single inferred path of a free-space result.
    pub fn free_space_path(&self) -> Option<&PathComponent> {
        match self {
            InferenceResult::FarFree { path } | InferenceResult::NearFree { path, .. } => Some(path),
            _ => None,
        }
    }
}

fn require_below_horizon(theta: f64) -> Result<()> {
    if theta > -FRAC_PI_2 && theta < 0.0 {
        Ok(())
    } else {
        Err(Error::ElevationOutOfRange {
            theta,
            range: "(-π/2, 0)",
        })
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// Principal argument in `(-π, π]`.
fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Far-field gain at Panel 2's wavelength.
///
/// `theta2` must lie in `(-π/2, 0)`; `delta_d` is the distance between the
/// reference elements with Panel 2 above Panel 1.
pub fn infer_gain_far(
    alpha1: Complex64,
    lambda1: f64,
    lambda2: f64,
    delta_d: f64,
    theta2: f64,
    mode: GainMode,
) -> Result<Complex64> {
    if alpha1.norm() == 0.0 || !alpha1.norm().is_finite() {
        return Err(Error::ZeroGain);
    }
    require_positive("lambda1", lambda1)?;
    require_positive("lambda2", lambda2)?;
    if !(delta_d >= 0.0) || !delta_d.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "delta_d must be non-negative, got {delta_d}"
        )));
    }
    require_below_horizon(theta2)?;

    match mode {
        GainMode::Literal => {
            let magnitude = alpha1.norm() * lambda2 / lambda1;
            let phase = principal_arg(alpha1) * (lambda1 / lambda2)
                + 2.0 * PI * delta_d * theta2.sin() / lambda2;
            Ok(Complex64::from_polar(magnitude, phase))
        }
        GainMode::AmplitudeAssisted => {
            let r1 = range_from_gain(alpha1, lambda1);
            friis_gain(lambda2, r1 - delta_d * theta2.sin())
        }
    }
}

/// Invert the Friis gain for the range.
///
/// The magnitude fixes the range coarsely (`λ / 4π|α|`); the phase fixes the
/// fraction of a wavelength. Their combination is exact whenever the
/// magnitude is accurate to better than half a wavelength.
pub fn range_from_gain(alpha: Complex64, lambda: f64) -> f64 {
    let coarse = lambda / (4.0 * PI * alpha.norm());
    let fraction = (-principal_arg(alpha) / (2.0 * PI)).rem_euclid(1.0);
    let whole = (coarse / lambda - fraction).round();
    let refined = lambda * whole + lambda * fraction;
    if refined > 0.0 {
        refined
    } else {
        coarse
    }
}

/// Far-field free space: angles are shared, the gain is mapped across
/// frequency with `theta2 = theta1`.
pub fn infer_far_free(
    path1: &PathComponent,
    lambda1: f64,
    lambda2: f64,
    delta_d: f64,
    mode: GainMode,
) -> Result<InferenceResult> {
    let gain = infer_gain_far(path1.gain, lambda1, lambda2, delta_d, path1.theta, mode)?;
    Ok(InferenceResult::FarFree {
        path: PathComponent::new(gain, path1.theta, path1.phi),
    })
}

/// Near-field free space for a ground-level UE below two vertically stacked
/// panels at heights `d1 < d2` (or any positive heights):
/// `tan θ2 = (d2/d1) tan θ1`, `R2 = d2 / |sin θ2|`, gain by Friis.
pub fn infer_near_free(
    path1: &PathComponent,
    d1: f64,
    d2: f64,
    lambda2: f64,
) -> Result<InferenceResult> {
    require_positive("d1", d1)?;
    require_positive("d2", d2)?;
    require_positive("lambda2", lambda2)?;
    require_below_horizon(path1.theta)?;

    let theta2 = if d1 == d2 {
        path1.theta
    } else {
        (d2 / d1 * path1.theta.tan()).atan()
    };
    let range = d2 / theta2.sin().abs();
    let gain = friis_gain(lambda2, range)?;
    Ok(InferenceResult::NearFree {
        path: PathComponent::new(gain, theta2, path1.phi),
        range,
    })
}

/// Shared far-field scatterers: every path keeps its angles.
pub fn infer_multipath_far(paths1: &[PathComponent]) -> Result<InferenceResult> {
    if paths1.is_empty() {
        return Err(Error::EmptyPaths);
    }
    Ok(InferenceResult::MultipathFar {
        angles: paths1
            .iter()
            .map(|p| PathAngles {
                theta: p.theta,
                phi: p.phi,
            })
            .collect(),
    })
}

/// Upper end of Panel 2's elevation interval for one path:
/// `atan(((d2 - δ)/d1) · tan θ1)`.
pub fn near_scatterer_upper_bound(theta1: f64, d1: f64, d2: f64, delta: f64) -> f64 {
    ((d2 - delta) / d1 * theta1.tan()).atan()
}

/// Shared near-field scatterers whose Panel-2 scattering point may move
/// vertically by at most `delta`.
///
/// Each path gets `θ2 ∈ (-π/2, atan(((d2-δ)/d1) tan θ1)]`. The interval is
/// guaranteed to contain the true elevation only when `δ < d2 - d1`, so
/// larger `delta` is rejected.
pub fn infer_multipath_near(
    paths1: &[PathComponent],
    d1: f64,
    d2: f64,
    delta: f64,
) -> Result<InferenceResult> {
    if paths1.is_empty() {
        return Err(Error::EmptyPaths);
    }
    require_positive("d1", d1)?;
    require_positive("d2", d2)?;
    if d2 <= d1 {
        return Err(Error::InvalidArgument(format!(
            "panel 2 must sit above panel 1 (d1 = {d1}, d2 = {d2})"
        )));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "delta must be non-negative, got {delta}"
        )));
    }
    if delta >= d2 - d1 {
        return Err(Error::DeviationTooLarge {
            delta,
            spacing: d2 - d1,
        });
    }
    let ranges = paths1
        .iter()
        .map(|p| {
            require_below_horizon(p.theta)?;
            let upper = near_scatterer_upper_bound(p.theta, d1, d2, delta);
            Ok(PathAngleRange {
                theta: AngleRange::new(-FRAC_PI_2, upper)?,
                phi: p.phi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InferenceResult::MultipathNear { ranges })
}
