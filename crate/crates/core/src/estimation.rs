//! Multi-path parameter extraction from a known channel vector, and the
//! inverse reconstruction.
//!
//! Extraction is a greedy matched pursuit with continuous angle refinement:
//!
//! 1. correlate the residual with steering vectors on a coarse (θ, φ) grid
//!    and take the strongest cell;
//! 2. refine every selected path in turn against the residual with all
//!    other paths removed, by coordinate-wise golden-section search finished
//!    with one parabolic step;
//! 3. re-fit all gains jointly by least squares and update the residual;
//! 4. stop once the residual energy drops below `residual_stop · ‖h‖²` or
//!    `max_paths` paths are in hand.
//!
//! The azimuth search is restricted to the front half-space
//! (`φ ∈ [-π/2, π/2]` before wrapping): a planar array in the `x = 0` plane
//! cannot tell `φ` from `π - φ`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{synth_far_channel, ChannelVector, PathComponent};
use crate::error::{Error, Result};
use crate::geometry::{normalize_azimuth, PanelConfig};

const MAX_REFINE_SWEEPS: usize = 50;
const MAX_COORDINATE_ROUNDS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionConfig {
    pub max_paths: usize,
    /// Grid spacing of the coarse search, radians.
    pub coarse_grid_step: f64,
    /// Bracket width at which the golden-section search stops, radians.
    pub refine_tolerance: f64,
    /// Stop once residual energy falls below this fraction of `‖h‖²`.
    pub residual_stop: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            max_paths: 25,
            coarse_grid_step: 1f64.to_radians(),
            refine_tolerance: 0.01f64.to_radians(),
            residual_stop: 1e-6,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_paths == 0 {
            return Err(Error::InvalidArgument("max_paths must be at least 1".into()));
        }
        if !(self.coarse_grid_step > 0.0 && self.coarse_grid_step <= FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "coarse_grid_step must be in (0, π/2], got {}",
                self.coarse_grid_step
            )));
        }
        if !(self.refine_tolerance > 0.0 && self.refine_tolerance < self.coarse_grid_step) {
            return Err(Error::InvalidArgument(format!(
                "refine_tolerance must be in (0, coarse_grid_step), got {}",
                self.refine_tolerance
            )));
        }
        if !(self.residual_stop > 0.0 && self.residual_stop < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "residual_stop must be in (0, 1), got {}",
                self.residual_stop
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ResidualBelowThreshold,
    MaxPaths,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Paths in selection order, gains in the `h = √N Σ α a` convention.
    pub paths: Vec<PathComponent>,
    /// Residual energy as a fraction of `‖h‖²` after each pursuit step.
    pub residual_history: Vec<f64>,
    pub stop: StopReason,
}

impl Extraction {
    pub fn residual_fraction(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(1.0)
    }
}

/// Selected path during pursuit. `psi` is the unwrapped azimuth in
/// `[-π/2, π/2]`; `coef` multiplies the unit-norm steering vector.
#[derive(Debug, Clone)]
struct Atom {
    theta: f64,
    psi: f64,
    a: Vec<Complex64>,
    coef: Complex64,
}

pub fn extract_paths(
    h: &ChannelVector,
    panel: &PanelConfig,
    cfg: &ExtractionConfig,
) -> Result<Extraction> {
    cfg.validate()?;
    let n = panel.n_elements();
    if h.len() != n {
        return Err(Error::LengthMismatch {
            left: h.len(),
            right: n,
        });
    }
    if h.as_slice().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidArgument("channel vector is not finite".into()));
    }
    // Work on a copy scaled to unit peak so tiny channels don't underflow.
    let peak = h.as_slice().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let target: Vec<Complex64> = h.as_slice().iter().map(|c| c / peak).collect();
    let energy = norm_sqr(&target);

    let mut atoms: Vec<Atom> = Vec::new();
    let mut residual = target.clone();
    let mut history = Vec::new();
    let mut previous = energy;

    let stop = loop {
        let (theta, psi) = coarse_peak(&residual, panel, cfg.coarse_grid_step);
        let a = unit_steering(panel, theta, psi);
        let coef = project(&a, &residual);
        axpy(&mut residual, -coef, &a);
        atoms.push(Atom { theta, psi, a, coef });

        refine_all(&mut atoms, &mut residual, &target, panel, cfg);

        let current = norm_sqr(&residual);
        history.push(current / energy);
        if current < cfg.residual_stop * energy {
            break StopReason::ResidualBelowThreshold;
        }
        if current >= previous {
            return Err(Error::NotConverging {
                paths: atoms.len(),
                residual: current / energy,
            });
        }
        if atoms.len() >= cfg.max_paths {
            break StopReason::MaxPaths;
        }
        previous = current;
    };

    let scale = peak / (n as f64).sqrt();
    let paths = atoms
        .iter()
        .map(|at| PathComponent::new(at.coef * scale, at.theta, normalize_azimuth(at.psi)))
        .collect();
    Ok(Extraction {
        paths,
        residual_history: history,
        stop,
    })
}

/// Rebuild a channel from path parameters (same model as
/// [`synth_far_channel`]).
pub fn reconstruct(panel: &PanelConfig, paths: &[PathComponent]) -> Result<ChannelVector> {
    synth_far_channel(panel, paths)
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

fn project(a: &[Complex64], r: &[Complex64]) -> Complex64 {
    a.iter().zip(r).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn unit_steering(panel: &PanelConfig, theta: f64, psi: f64) -> Vec<Complex64> {
    crate::channel::steering_vector(panel, theta, psi).into_inner()
}

/// `Σ_k x_k · e^{-jπ s k}` by Horner's rule.
fn ula_correlate(x: impl DoubleEndedIterator<Item = Complex64>, s: f64) -> Complex64 {
    let z = Complex64::cis(-PI * s);
    x.rev().fold(Complex64::new(0.0, 0.0), |acc, xk| acc * z + xk)
}

/// Collapse the z axis of `r` against `a_z(θ)`; one entry per column.
fn z_collapse(r: &[Complex64], n_y: usize, n_z: usize, v: f64) -> Vec<Complex64> {
    (0..n_y)
        .map(|iy| ula_correlate(r[iy * n_z..(iy + 1) * n_z].iter().copied(), v))
        .collect()
}

/// `|a(θ, ψ)ᴴ r|²` up to the constant `1/N`.
fn score_from_columns(cols: &[Complex64], theta: f64, psi: f64) -> f64 {
    ula_correlate(cols.iter().copied(), theta.cos() * psi.sin()).norm_sqr()
}

fn grid(step: f64) -> Vec<f64> {
    let count = (PI / step).floor() as usize;
    let mut g: Vec<f64> = (0..=count).map(|i| -FRAC_PI_2 + i as f64 * step).collect();
    if FRAC_PI_2 - g[count] > 1e-12 {
        g.push(FRAC_PI_2);
    }
    g
}

/// Strongest coarse cell; ties go to the lowest θ index, then lowest φ.
fn coarse_peak(r: &[Complex64], panel: &PanelConfig, step: f64) -> (f64, f64) {
    let (n_y, n_z) = (panel.n_y(), panel.n_z());
    let axis = grid(step);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &theta in &axis {
        let cols = z_collapse(r, n_y, n_z, theta.sin());
        for &psi in &axis {
            let s = score_from_columns(&cols, theta, psi);
            if s > best.0 {
                best = (s, theta, psi);
            }
        }
    }
    (best.1, best.2)
}

fn objective(r: &[Complex64], panel: &PanelConfig, theta: f64, psi: f64) -> f64 {
    let cols = z_collapse(r, panel.n_y(), panel.n_z(), theta.sin());
    score_from_columns(&cols, theta, psi)
}

/// Cyclic refinement of all atoms followed by a joint least-squares gain fit.
/// Never increases the residual energy.
fn refine_all(
    atoms: &mut [Atom],
    residual: &mut Vec<Complex64>,
    target: &[Complex64],
    panel: &PanelConfig,
    cfg: &ExtractionConfig,
) {
    for _ in 0..MAX_REFINE_SWEEPS {
        let mut max_move = 0.0f64;
        for atom in atoms.iter_mut() {
            // Residual with this atom's contribution restored.
            axpy(residual, atom.coef, &atom.a);
            let (theta, psi) = refine_angles(residual, panel, atom.theta, atom.psi, cfg);
            max_move = max_move
                .max((theta - atom.theta).abs())
                .max((psi - atom.psi).abs());
            atom.theta = theta;
            atom.psi = psi;
            atom.a = unit_steering(panel, theta, psi);
            atom.coef = project(&atom.a, residual);
            axpy(residual, -atom.coef, &atom.a);
        }
        least_squares_refit(atoms, residual, target);
        if max_move < 1e-3 * cfg.refine_tolerance {
            break;
        }
    }
}

fn least_squares_refit(atoms: &mut [Atom], residual: &mut Vec<Complex64>, target: &[Complex64]) {
    let n = target.len();
    let l = atoms.len();
    let basis = DMatrix::from_fn(n, l, |i, k| atoms[k].a[i]);
    let rhs = DVector::from_column_slice(target);
    let gram = basis.adjoint() * &basis;
    let Some(chol) = gram.cholesky() else {
        return;
    };
    let coefs = chol.solve(&(basis.adjoint() * rhs));

    let mut fitted: Vec<Complex64> = target.to_vec();
    for (k, atom) in atoms.iter().enumerate() {
        axpy(&mut fitted, -coefs[k], &atom.a);
    }
    if norm_sqr(&fitted) <= norm_sqr(residual) {
        for (k, atom) in atoms.iter_mut().enumerate() {
            atom.coef = coefs[k];
        }
        *residual = fitted;
    }
}

/// Coordinate ascent on `|a(θ, ψ)ᴴ r|²` within one grid step of the start.
fn refine_angles(
    r: &[Complex64],
    panel: &PanelConfig,
    theta0: f64,
    psi0: f64,
    cfg: &ExtractionConfig,
) -> (f64, f64) {
    let step = cfg.coarse_grid_step;
    let tol = cfg.refine_tolerance;
    let (mut theta, mut psi) = (theta0, psi0);
    let mut value = objective(r, panel, theta, psi);
    for _ in 0..MAX_COORDINATE_ROUNDS {
        let (t, vt) = line_max(
            |t| objective(r, panel, t, psi),
            (theta - step).max(-FRAC_PI_2),
            (theta + step).min(FRAC_PI_2),
            theta,
            value,
            tol,
        );
        let cols = z_collapse(r, panel.n_y(), panel.n_z(), t.sin());
        let (p, vp) = line_max(
            |p| score_from_columns(&cols, t, p),
            (psi - step).max(-FRAC_PI_2),
            (psi + step).min(FRAC_PI_2),
            psi,
            vt,
            tol,
        );
        let moved = (t - theta).abs().max((p - psi).abs());
        theta = t;
        psi = p;
        let gained = vp - value;
        value = vp;
        if moved < 1e-3 * tol || gained <= 0.0 {
            break;
        }
    }
    (theta, psi)
}

/// Golden-section maximisation on `[lo, hi]`, then one parabolic step
/// through the best point. Returns the best point seen, never worse than
/// `(x0, f0)`.
fn line_max(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    x0: f64,
    f0: f64,
    tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = (x0, f0);
    let keep = |x: f64, fx: f64, best: &mut (f64, f64)| {
        if fx > best.1 {
            *best = (x, fx);
        }
    };

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    keep(c, fc, &mut best);
    keep(d, fd, &mut best);
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            keep(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            keep(d, fd, &mut best);
        }
    }

    // Parabola through best ± h.
    let h = 0.5 * tol;
    let xm = best.0;
    let (x_lo, x_hi) = (xm - h, xm + h);
    if x_lo >= lo && x_hi <= hi {
        let (fl, fm, fh) = (f(x_lo), best.1, f(x_hi));
        keep(x_lo, fl, &mut best);
        keep(x_hi, fh, &mut best);
        let curvature = fl - 2.0 * fm + fh;
        if curvature < 0.0 {
            let x = xm + 0.5 * h * (fl - fh) / curvature;
            if (lo..=hi).contains(&x) {
                let fx = f(x);
                keep(x, fx, &mut best);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn panel16() -> PanelConfig {
        PanelConfig::new(28e9, 16, 16, Point3::new(0.0, 0.0, 15.0)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ExtractionConfig::default().validate().is_ok());
        let bad = [
            ExtractionConfig { max_paths: 0, ..Default::default() },
            ExtractionConfig { refine_tolerance: 0.1, ..Default::default() },
            ExtractionConfig { residual_stop: 1.0, ..Default::default() },
            ExtractionConfig { coarse_grid_step: 0.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn grid_covers_both_ends() {
        let g = grid(1f64.to_radians());
        assert_eq!(g.len(), 181);
        assert_eq!(g[0], -FRAC_PI_2);
        assert!((g[180] - FRAC_PI_2).abs() < 1e-12);
        let g = grid(0.7);
        assert_eq!(*g.last().unwrap(), FRAC_PI_2);
    }

    #[test]
    fn line_max_finds_parabola_vertex() {
        let (x, fx) = line_max(|x| 1.0 - (x - 0.123).powi(2), -1.0, 1.0, -1.0, -0.26, 1e-3);
        assert!((x - 0.123).abs() < 1e-9);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn line_max_never_returns_worse_than_start() {
        let (x, fx) = line_max(|x| -x.abs(), -1.0, 1.0, 0.0, 0.0, 1e-3);
        assert_eq!((x, fx), (0.0, 0.0));
    }

    #[test]
    fn single_planted_path_round_trip() {
        let p = panel16();
        let planted = PathComponent::new(Complex64::new(0.3, 0.4), -0.5, 1.0);
        let h = synth_far_channel(&p, &[planted]).unwrap();
        let ex = extract_paths(&h, &p, &ExtractionConfig::default()).unwrap();
        assert_eq!(ex.stop, StopReason::ResidualBelowThreshold);
        assert_eq!(ex.paths.len(), 1);
        let got = ex.paths[0];
        assert!((got.theta - planted.theta).abs() <= 1e-3);
        assert!((got.phi - planted.phi).abs() <= 1e-3);
        assert!((got.gain - planted.gain).norm() / planted.gain.norm() <= 1e-3);

        let back = reconstruct(&p, &ex.paths).unwrap();
        for (a, b) in back.as_slice().iter().zip(h.as_slice()) {
            assert!((a - b).norm() <= 1e-3);
        }
    }

    #[test]
    fn azimuth_behind_the_array_folds_to_front() {
        let p = panel16();
        // φ and π - φ share a steering vector.
        let h = synth_far_channel(&p, &[PathComponent::new(Complex64::new(1.0, 0.0), -0.2, 2.5)]).unwrap();
        let ex = extract_paths(&h, &p, &ExtractionConfig::default()).unwrap();
        assert!((ex.paths[0].phi - (PI - 2.5)).abs() < 1e-3);
    }

    #[test]
    fn zero_channel_is_an_error() {
        let p = panel16();
        let h = ChannelVector::zeros(256);
        assert_eq!(
            extract_paths(&h, &p, &ExtractionConfig::default()),
            Err(Error::ZeroChannel)
        );
    }

    #[test]
    fn wrong_length_is_an_error() {
        let p = panel16();
        let h = ChannelVector::zeros(10);
        assert!(matches!(
            extract_paths(&h, &p, &ExtractionConfig::default()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tiny_noise_never_errors() {
        let p = PanelConfig::new(28e9, 8, 8, Point3::new(0.0, 0.0, 15.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = ChannelVector::new(
            (0..64)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 1e-200)
                .collect(),
        );
        let cfg = ExtractionConfig { max_paths: 4, ..Default::default() };
        let ex = extract_paths(&h, &p, &cfg).unwrap();
        assert!(ex.paths.len() <= 4);
        for path in &ex.paths {
            assert!(path.gain.norm() < 1e-199);
        }
    }

    #[test]
    fn residual_is_non_increasing() {
        let p = panel16();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let paths: Vec<_> = (0..6)
            .map(|_| {
                PathComponent::new(
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    rng.random_range(-1.4..1.4),
                    normalize_azimuth(rng.random_range(-1.4..1.4)),
                )
            })
            .collect();
        let h = synth_far_channel(&p, &paths).unwrap();
        let cfg = ExtractionConfig { max_paths: 10, ..Default::default() };
        let ex = extract_paths(&h, &p, &cfg).unwrap();
        for w in ex.residual_history.windows(2) {
            assert!(w[1] <= w[0], "{:?}", ex.residual_history);
        }
    }
}
