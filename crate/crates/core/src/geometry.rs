//! Panel placement and exact line-of-sight geometry.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// A point (or displacement) in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A uniform planar array in the `x = 0` plane with half-wavelength spacing.
///
/// `reference` is the bottom-left element; the grid grows along `+y`
/// (`n_y` columns) and `+z` (`n_z` rows).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelConfig {
    frequency_hz: f64,
    n_y: usize,
    n_z: usize,
    reference: Point3,
}

impl PanelConfig {
    pub fn new(frequency_hz: f64, n_y: usize, n_z: usize, reference: Point3) -> Result<Self> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(Error::InvalidPanel(format!(
                "frequency must be positive and finite, got {frequency_hz}"
            )));
        }
        if n_y == 0 || n_z == 0 {
            return Err(Error::InvalidPanel(format!(
                "element grid must be at least 1x1, got {n_y}x{n_z}"
            )));
        }
        if !reference.is_finite() {
            return Err(Error::InvalidPanel("reference position is not finite".into()));
        }
        if reference.x != 0.0 {
            return Err(Error::InvalidPanel(format!(
                "panels lie in the x = 0 plane, reference has x = {}",
                reference.x
            )));
        }
        Ok(Self {
            frequency_hz,
            n_y,
            n_z,
            reference,
        })
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    /// Inter-element spacing, always half a wavelength.
    pub fn spacing(&self) -> f64 {
        0.5 * self.wavelength()
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn n_elements(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn reference(&self) -> Point3 {
        self.reference
    }

    /// Height of the reference element above ground.
    pub fn height(&self) -> f64 {
        self.reference.z
    }

    pub fn element_position(&self, iy: usize, iz: usize) -> Result<Point3> {
        if iy >= self.n_y || iz >= self.n_z {
            return Err(Error::IndexOutOfRange {
                iy,
                iz,
                n_y: self.n_y,
                n_z: self.n_z,
            });
        }
        Ok(self.position_unchecked(iy, iz))
    }

    fn position_unchecked(&self, iy: usize, iz: usize) -> Point3 {
        let s = self.spacing();
        Point3::new(
            self.reference.x,
            self.reference.y + iy as f64 * s,
            self.reference.z + iz as f64 * s,
        )
    }

    /// All element positions in channel-vector order (`iy * n_z + iz`).
    pub fn element_positions(&self) -> impl Iterator<Item = Point3> + '_ {
        (0..self.n_y).flat_map(move |iy| (0..self.n_z).map(move |iz| self.position_unchecked(iy, iz)))
    }

    pub fn corners(&self) -> [Point3; 4] {
        let (ly, lz) = (self.n_y - 1, self.n_z - 1);
        [
            self.position_unchecked(0, 0),
            self.position_unchecked(ly, 0),
            self.position_unchecked(0, lz),
            self.position_unchecked(ly, lz),
        ]
    }

    /// Largest element-to-element distance within this panel alone.
    pub fn self_aperture(&self) -> f64 {
        max_pairwise(&self.corners(), &self.corners())
    }

    /// Returns a copy moved so that its reference element sits at `reference`.
    pub fn with_reference(&self, reference: Point3) -> Result<Self> {
        Self::new(self.frequency_hz, self.n_y, self.n_z, reference)
    }
}

/// Two panels sharing the `x = 0` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPanelLayout {
    panel1: PanelConfig,
    panel2: PanelConfig,
    delta_d: f64,
}

impl TwoPanelLayout {
    pub fn new(panel1: PanelConfig, panel2: PanelConfig) -> Result<Self> {
        if panel1.reference.x != panel2.reference.x {
            return Err(Error::InvalidLayout("panels must share the same vertical plane".into()));
        }
        let delta_d = panel1.reference.distance(panel2.reference);
        Ok(Self {
            panel1,
            panel2,
            delta_d,
        })
    }

    /// Panel 2 stacked directly above Panel 1, both reference elements at
    /// `y = 0` with heights `d1` and `d2`.
    pub fn vertical_stack(
        f1_hz: f64,
        f2_hz: f64,
        n_y: usize,
        n_z: usize,
        d1: f64,
        d2: f64,
    ) -> Result<Self> {
        let p1 = PanelConfig::new(f1_hz, n_y, n_z, Point3::new(0.0, 0.0, d1))?;
        let p2 = PanelConfig::new(f2_hz, n_y, n_z, Point3::new(0.0, 0.0, d2))?;
        Self::new(p1, p2)
    }

    pub fn panel1(&self) -> &PanelConfig {
        &self.panel1
    }

    pub fn panel2(&self) -> &PanelConfig {
        &self.panel2
    }

    /// Distance between the two reference elements.
    pub fn delta_d(&self) -> f64 {
        self.delta_d
    }

    pub fn d1(&self) -> f64 {
        self.panel1.height()
    }

    pub fn d2(&self) -> f64 {
        self.panel2.height()
    }

    /// True when the reference elements differ only in height.
    pub fn is_vertical_stack(&self) -> bool {
        self.panel1.reference.y == self.panel2.reference.y
    }

    pub fn swapped(&self) -> Self {
        Self {
            panel1: self.panel2,
            panel2: self.panel1,
            delta_d: self.delta_d,
        }
    }

    /// Overall aperture `D`: the largest distance between any two elements
    /// of the combined array.
    ///
    /// Each panel is a rectangle, so the maximum over the union is attained
    /// between corners.
    pub fn aperture(&self) -> f64 {
        let mut corners = Vec::with_capacity(8);
        corners.extend_from_slice(&self.panel1.corners());
        corners.extend_from_slice(&self.panel2.corners());
        max_pairwise(&corners, &corners)
    }

    pub fn rayleigh_distance(&self) -> f64 {
        rayleigh_distance(
            self.aperture(),
            self.panel1.wavelength(),
            self.panel2.wavelength(),
        )
    }
}

fn max_pairwise(a: &[Point3], b: &[Point3]) -> f64 {
    a.iter()
        .flat_map(|p| b.iter().map(move |q| p.distance(*q)))
        .fold(0.0, f64::max)
}

/// `2 D² / min(λ1, λ2)`.
pub fn rayleigh_distance(aperture: f64, lambda1: f64, lambda2: f64) -> f64 {
    2.0 * aperture * aperture / lambda1.min(lambda2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldRegime {
    Far,
    Near,
}

/// Far iff `r >= r_rayl` (the boundary itself is far field).
pub fn classify_field(r: f64, r_rayl: f64) -> FieldRegime {
    if r >= r_rayl {
        FieldRegime::Far
    } else {
        FieldRegime::Near
    }
}

/// Direction and distance from a panel's reference element to a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosGeometry {
    /// Signed elevation in `[-π/2, π/2]`; negative below the reference.
    pub theta: f64,
    /// Azimuth in `[0, 2π)`, measured from `+x` towards `+y`.
    pub phi: f64,
    pub range: f64,
}

pub fn los_angles(panel: &PanelConfig, point: Point3) -> Result<LosGeometry> {
    los_from(panel.reference, point)
}

/// Same as [`los_angles`] for an arbitrary origin.
pub fn los_from(origin: Point3, point: Point3) -> Result<LosGeometry> {
    let d = point - origin;
    let range = d.norm();
    if range == 0.0 || !range.is_finite() {
        return Err(Error::ZeroDistance);
    }
    let theta = (d.z / range).clamp(-1.0, 1.0).asin();
    let phi = normalize_azimuth(d.y.atan2(d.x));
    Ok(LosGeometry { theta, phi, range })
}

/// Inverse of [`los_from`].
pub fn point_from_angles(origin: Point3, theta: f64, phi: f64, range: f64) -> Point3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    origin + Point3::new(ct * cp, ct * sp, st) * range
}

/// Wraps an azimuth into `[0, 2π)`.
pub fn normalize_azimuth(phi: f64) -> f64 {
    let p = phi.rem_euclid(2.0 * PI);
    if p >= 2.0 * PI {
        0.0
    } else {
        p
    }
}
