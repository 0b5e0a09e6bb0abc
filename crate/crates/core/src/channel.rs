//! Steering vectors and channel synthesis.
//!
//! Channel vectors are stored y-major: entry `iy * n_z + iz` belongs to the
//! element at column `iy`, row `iz`. This is the order of the Kronecker
//! product `a_y ⊗ a_z`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{los_angles, PanelConfig, Point3, TwoPanelLayout};

/// One multi-path component: complex gain plus departure angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub gain: Complex64,
    /// Elevation in `[-π/2, π/2]`.
    pub theta: f64,
    /// Azimuth in `[0, 2π)`.
    pub phi: f64,
}

impl PathComponent {
    pub fn new(gain: Complex64, theta: f64, phi: f64) -> Self {
        Self { gain, theta, phi }
    }
}

/// Per-element channel coefficients of one panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVector(Vec<Complex64>);

impl ChannelVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian inner product `selfᴴ · other`.
    pub fn inner(&self, other: &ChannelVector) -> Complex64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, s: Complex64) -> ChannelVector {
        ChannelVector(self.0.iter().map(|c| c * s).collect())
    }
}

impl std::ops::Index<usize> for ChannelVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Separable factors of the UPA steering vector: the y-factor depends on
/// `cos θ sin φ`, the z-factor on `sin θ`. Each carries its own `1/√n`.
pub fn steering_factors(panel: &PanelConfig, theta: f64, phi: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let u = theta.cos() * phi.sin();
    let v = theta.sin();
    (
        ula_factor(panel.n_y(), u),
        ula_factor(panel.n_z(), v),
    )
}

/// `(1/√n) · [1, e^{jπs}, …, e^{jπ(n-1)s}]`.
pub(crate) fn ula_factor(n: usize, s: f64) -> Vec<Complex64> {
    let norm = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|i| Complex64::from_polar(norm, PI * i as f64 * s))
        .collect()
}

/// Unit-norm steering vector `a_y(θ, φ) ⊗ a_z(θ)`.
pub fn steering_vector(panel: &PanelConfig, theta: f64, phi: f64) -> ChannelVector {
    let (ay, az) = steering_factors(panel, theta, phi);
    let mut out = Vec::with_capacity(ay.len() * az.len());
    for y in &ay {
        out.extend(az.iter().map(|z| y * z));
    }
    ChannelVector(out)
}

/// Free-space complex gain `(λ / 4πR) · e^{-j2πR/λ}` with the phase stored
/// as its principal value.
pub fn friis_gain(lambda: f64, range: f64) -> Result<Complex64> {
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::NonPositiveRange(range));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveWavelength(lambda));
    }
    // Reduce in cycles before scaling by 2π; that keeps far more of the
    // fractional part than reducing the radian phase.
    let cycles = (range / lambda).rem_euclid(1.0);
    let phase = if cycles > 0.5 {
        2.0 * PI * (1.0 - cycles)
    } else {
        -2.0 * PI * cycles
    };
    Ok(Complex64::from_polar(lambda / (4.0 * PI * range), phase))
}

/// `√N · Σ_l gain_l · a(θ_l, φ_l)`.
pub fn synth_far_channel(panel: &PanelConfig, paths: &[PathComponent]) -> Result<ChannelVector> {
    if paths.is_empty() {
        return Err(Error::EmptyPaths);
    }
    let n = panel.n_elements();
    let scale = (n as f64).sqrt();
    let mut h = vec![Complex64::new(0.0, 0.0); n];
    for p in paths {
        let a = steering_vector(panel, p.theta, p.phi);
        let g = p.gain * scale;
        for (hk, ak) in h.iter_mut().zip(a.as_slice()) {
            *hk += g * ak;
        }
    }
    Ok(ChannelVector(h))
}

/// Exact free-space channel from a point source: every element gets its own
/// Friis gain at its own distance. No plane-wave approximation is made.
pub fn synth_spherical_channel(panel: &PanelConfig, source: Point3) -> Result<ChannelVector> {
    let lambda = panel.wavelength();
    panel
        .element_positions()
        .map(|e| {
            let r = e.distance(source);
            if r == 0.0 {
                Err(Error::ZeroDistance)
            } else {
                friis_gain(lambda, r)
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(ChannelVector)
}

/// A point scatterer with an opaque complex weight for each panel's carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: Point3,
    pub reflectivity1: Complex64,
    pub reflectivity2: Complex64,
}

impl Scatterer {
    pub fn new(position: Point3, reflectivity: Complex64) -> Self {
        Self {
            position,
            reflectivity1: reflectivity,
            reflectivity2: reflectivity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneOptions {
    /// Maximum vertical offset between the two panels' scattering points.
    pub deviation_delta: f64,
    pub seed: u64,
    /// Append the direct UE path after the scattered ones.
    pub include_los: bool,
}

/// Paths seen by both panels plus the scattering points that produced them.
///
/// `points*` are aligned with `paths*`; the LoS path (if any) is last and
/// has no scattering point.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathScene {
    pub paths1: Vec<PathComponent>,
    pub paths2: Vec<PathComponent>,
    pub points1: Vec<Option<Point3>>,
    pub points2: Vec<Option<Point3>>,
}

/// Single-bounce scene shared by both panels.
///
/// Panel 2's scattering point is Panel 1's shifted vertically by a value drawn
/// uniformly from `[-δ, δ]`; draws come from a ChaCha8 stream seeded with
/// `opts.seed`, one per scatterer in order. A scattered path's gain is the
/// reflectivity times the Friis gain over the unfolded length
/// (panel to scatterer plus scatterer to UE).
pub fn synth_multipath_scene(
    layout: &TwoPanelLayout,
    ue: Point3,
    scatterers: &[Scatterer],
    opts: &SceneOptions,
) -> Result<MultipathScene> {
    if !(opts.deviation_delta >= 0.0) || !opts.deviation_delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "deviation bound must be non-negative, got {}",
            opts.deviation_delta
        )));
    }
    let (p1, p2) = (layout.panel1(), layout.panel2());
    let (l1, l2) = (p1.wavelength(), p2.wavelength());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cap = scatterers.len() + usize::from(opts.include_los);
    let mut scene = MultipathScene {
        paths1: Vec::with_capacity(cap),
        paths2: Vec::with_capacity(cap),
        points1: Vec::with_capacity(cap),
        points2: Vec::with_capacity(cap),
    };

    for s in scatterers {
        let offset = if opts.deviation_delta > 0.0 {
            rng.random_range(-opts.deviation_delta..=opts.deviation_delta)
        } else {
            0.0
        };
        let s1 = s.position;
        let s2 = s1 + Point3::new(0.0, 0.0, offset);

        let g1 = los_angles(p1, s1)?;
        let g2 = los_angles(p2, s2)?;
        let gain1 = s.reflectivity1 * friis_gain(l1, g1.range + leg(s1, ue)?)?;
        let gain2 = s.reflectivity2 * friis_gain(l2, g2.range + leg(s2, ue)?)?;

        scene.paths1.push(PathComponent::new(gain1, g1.theta, g1.phi));
        scene.paths2.push(PathComponent::new(gain2, g2.theta, g2.phi));
        scene.points1.push(Some(s1));
        scene.points2.push(Some(s2));
    }

    if opts.include_los {
        let g1 = los_angles(p1, ue)?;
        let g2 = los_angles(p2, ue)?;
        scene
            .paths1
            .push(PathComponent::new(friis_gain(l1, g1.range)?, g1.theta, g1.phi));
        scene
            .paths2
            .push(PathComponent::new(friis_gain(l2, g2.range)?, g2.theta, g2.phi));
        scene.points1.push(None);
        scene.points2.push(None);
    }
    Ok(scene)
}

fn leg(a: Point3, b: Point3) -> Result<f64> {
    let r = a.distance(b);
    if r == 0.0 {
        Err(Error::ZeroDistance)
    } else {
        Ok(r)
    }
}
