//! Inference quality metrics and per-UE reports.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::inference::{AngleRange, Scenario};

/// Normalised beamforming correlation `|ĥᴴh|² / (‖ĥ‖²‖h‖²)`, in `[0, 1]`.
pub fn correlation(h_est: &ChannelVector, h_true: &ChannelVector) -> Result<f64> {
    if h_est.len() != h_true.len() {
        return Err(Error::LengthMismatch {
            left: h_est.len(),
            right: h_true.len(),
        });
    }
    // Normalise first so tiny Friis-scale channels don't underflow.
    let unit = |h: &ChannelVector| -> Result<ChannelVector> {
        let peak = h.as_slice().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 || !peak.is_finite() {
            return Err(Error::ZeroVector);
        }
        let scaled = h.scaled((1.0 / peak).into());
        let norm = scaled.norm();
        Ok(scaled.scaled((1.0 / norm).into()))
    };
    let (a, b) = (unit(h_est)?, unit(h_true)?);
    Ok(a.inner(&b).norm_sqr().clamp(0.0, 1.0))
}

/// Elevation error of the far-field shortcut (`θ̂2 = θ1`) for a ground UE at
/// horizontal distance `dx`: `atan(dx (d2 - d1) / (dx² + d1 d2))`.
pub fn elevation_error_curve(d1: f64, d2: f64, dx_values: &[f64]) -> Vec<f64> {
    dx_values
        .iter()
        .map(|&dx| (dx * (d2 - d1) / (dx * dx + d1 * d2)).atan())
        .collect()
}

/// Horizontal distance at which [`elevation_error_curve`] peaks.
pub fn elevation_error_peak(d1: f64, d2: f64) -> f64 {
    (d1 * d2).sqrt()
}

/// Fraction of true elevations falling inside their interval.
pub fn containment_rate(ranges: &[AngleRange], true_thetas: &[f64]) -> Result<f64> {
    if ranges.len() != true_thetas.len() {
        return Err(Error::LengthMismatch {
            left: ranges.len(),
            right: true_thetas.len(),
        });
    }
    if ranges.is_empty() {
        return Err(Error::EmptyPaths);
    }
    let inside = ranges
        .iter()
        .zip(true_thetas)
        .filter(|(r, &t)| r.contains(t))
        .count();
    Ok(inside as f64 / ranges.len() as f64)
}

/// Mean of absolute errors, reported in degrees.
pub fn mean_abs_degrees(errors_rad: &[f64]) -> Option<f64> {
    if errors_rad.is_empty() {
        return None;
    }
    let sum: f64 = errors_rad.iter().map(|e| e.abs().to_degrees()).sum();
    Some(sum / errors_rad.len() as f64)
}

/// One UE's outcome within a scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeRecord {
    pub ue_id: u64,
    pub position: Option<Point3>,
    pub scenario: Scenario,
    /// Correlation between inferred and true Panel-2 channel, when defined.
    pub correlation: Option<f64>,
    /// Absolute elevation error per evaluated path, radians. Empty for the
    /// near-scatterer scenario, which infers intervals instead.
    pub elevation_errors: Vec<f64>,
    pub containment: Option<f64>,
    /// Paths evaluated.
    pub n_paths: usize,
    /// Paths dropped because they violate a precondition or found no match.
    pub n_skipped: usize,
    /// Failure message when this UE could not be processed.
    pub error: Option<String>,
}

impl UeRecord {
    pub fn failed(ue_id: u64, position: Option<Point3>, scenario: Scenario, error: String) -> Self {
        Self {
            ue_id,
            position,
            scenario,
            correlation: None,
            elevation_errors: Vec::new(),
            containment: None,
            n_paths: 0,
            n_skipped: 0,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Stats {
    /// Sums in slice order so results are reproducible bit for bit.
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let sum: f64 = values.iter().sum();
        Some(Stats {
            mean: sum / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub scenario: Scenario,
    pub n_ue: usize,
    pub n_failed: usize,
    pub correlation: Option<Stats>,
    /// Mean absolute elevation error over all evaluated paths, degrees.
    pub mean_abs_elevation_error_deg: Option<f64>,
    /// Per-UE absolute elevation errors (UE mean), degrees.
    pub ue_elevation_error_deg: Option<Stats>,
    pub containment: Option<Stats>,
    /// Containment pooled over all paths rather than averaged per UE.
    pub pooled_containment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub records: Vec<UeRecord>,
}

impl ScenarioReport {
    pub fn new(scenario: Scenario, records: Vec<UeRecord>) -> Self {
        Self { scenario, records }
    }

    /// Aggregates, always recomputed from the records.
    pub fn summary(&self) -> ReportSummary {
        let ok: Vec<&UeRecord> = self.records.iter().filter(|r| r.error.is_none()).collect();
        let correlations: Vec<f64> = ok.iter().filter_map(|r| r.correlation).collect();
        let all_errors: Vec<f64> = ok.iter().flat_map(|r| r.elevation_errors.iter().copied()).collect();
        let per_ue_errors: Vec<f64> = ok
            .iter()
            .filter_map(|r| mean_abs_degrees(&r.elevation_errors))
            .collect();
        let containments: Vec<f64> = ok.iter().filter_map(|r| r.containment).collect();

        let (mut inside, mut total) = (0.0, 0usize);
        for r in &ok {
            if let Some(c) = r.containment {
                inside += c * r.n_paths as f64;
                total += r.n_paths;
            }
        }

        ReportSummary {
            scenario: self.scenario,
            n_ue: self.records.len(),
            n_failed: self.records.len() - ok.len(),
            correlation: Stats::of(&correlations),
            mean_abs_elevation_error_deg: mean_abs_degrees(&all_errors),
            ue_elevation_error_deg: Stats::of(&per_ue_errors),
            containment: Stats::of(&containments),
            pooled_containment: (total > 0).then(|| inside / total as f64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{steering_vector, ChannelVector};
    use crate::geometry::PanelConfig;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample() -> ChannelVector {
        ChannelVector::new(vec![c(1.0, 2.0), c(-0.5, 0.1), c(0.0, -3.0), c(2.0, 2.0)])
    }

    #[test]
    fn correlation_of_self_and_scaled_copies() {
        let h = sample();
        assert!((correlation(&h, &h).unwrap() - 1.0).abs() < 1e-15);
        for s in [c(2.0, 0.0), c(0.0, -1.0), c(1e-9, 3e-9), c(-7.0, 0.5)] {
            assert!((correlation(&h, &h.scaled(s)).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn correlation_of_orthogonal_beams() {
        // Linear z-array: sinθ = 0 and sinθ = 2/16 are orthogonal.
        let p = PanelConfig::new(28e9, 1, 16, crate::geometry::Point3::default()).unwrap();
        let a = steering_vector(&p, 0.0, 0.0);
        let b = steering_vector(&p, (2.0f64 / 16.0).asin(), 0.0);
        assert!(correlation(&a, &b).unwrap() < 1e-28);
    }

    #[test]
    fn correlation_errors() {
        let h = sample();
        assert!(matches!(
            correlation(&h, &ChannelVector::zeros(3)),
            Err(Error::LengthMismatch { .. })
        ));
        assert_eq!(correlation(&h, &ChannelVector::zeros(4)), Err(Error::ZeroVector));
        assert_eq!(correlation(&ChannelVector::zeros(4), &h), Err(Error::ZeroVector));
    }

    #[test]
    fn correlation_handles_tiny_channels() {
        let h = sample().scaled(c(1e-170, 0.0));
        assert!((correlation(&h, &h).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn elevation_error_equal_heights_is_zero() {
        let e = elevation_error_curve(15.0, 15.0, &[0.5, 10.0, 1e4]);
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn elevation_error_peak_matches_dense_grid() {
        let (d1, d2) = (15.0, 20.0);
        let dx: Vec<f64> = (1..=100_000).map(|i| i as f64 * 1e-3).collect();
        let e = elevation_error_curve(d1, d2, &dx);
        let (i, &peak) = e
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((dx[i] - 300f64.sqrt()).abs() < 1e-3);
        assert!((peak - 0.14335).abs() < 1e-5);
        let closed = elevation_error_curve(d1, d2, &[elevation_error_peak(d1, d2)])[0];
        assert!((closed - (17.3205f64 * 5.0 / 600.0).atan()).abs() < 1e-5);
        // Closed form is the difference of two arctangents.
        let direct = (d2 / dx[i]).atan() - (d1 / dx[i]).atan();
        assert!((direct - peak).abs() < 1e-14);
    }

    #[test]
    fn elevation_error_vanishes_far_away() {
        assert!(elevation_error_curve(15.0, 20.0, &[1e6])[0] < 1e-5);
    }

    #[test]
    fn containment_examples() {
        let r = |u: f64| AngleRange::new(-FRAC_PI_2, u).unwrap();
        assert_eq!(containment_rate(&[r(-0.1), r(-0.2)], &[-0.5, -0.3]).unwrap(), 1.0);
        assert_eq!(containment_rate(&[r(-0.1)], &[-0.1]).unwrap(), 1.0);
        assert_eq!(containment_rate(&[r(-0.1), r(-0.1)], &[-0.1, 0.0]).unwrap(), 0.5);
        assert!(containment_rate(&[r(-0.1)], &[]).is_err());
        assert_eq!(containment_rate(&[], &[]), Err(Error::EmptyPaths));
    }

    #[test]
    fn summary_is_recomputable() {
        let rec = |id, f: Option<f64>, errs: Vec<f64>, cont: Option<f64>, n| UeRecord {
            ue_id: id,
            position: None,
            scenario: Scenario::MultipathNear,
            correlation: f,
            elevation_errors: errs,
            containment: cont,
            n_paths: n,
            n_skipped: 0,
            error: None,
        };
        let report = ScenarioReport::new(
            Scenario::MultipathNear,
            vec![
                rec(0, Some(0.9), vec![0.01, 0.03], Some(1.0), 2),
                rec(1, Some(0.5), vec![0.02], Some(0.5), 4),
                UeRecord::failed(2, None, Scenario::MultipathNear, "boom".into()),
            ],
        );
        let s = report.summary();
        assert_eq!(s.n_ue, 3);
        assert_eq!(s.n_failed, 1);
        let f = s.correlation.unwrap();
        assert_eq!((f.min, f.max, f.count), (0.5, 0.9, 2));
        assert!((f.mean - 0.7).abs() < 1e-15);
        assert!((s.mean_abs_elevation_error_deg.unwrap() - 0.02f64.to_degrees()).abs() < 1e-12);
        assert!((s.pooled_containment.unwrap() - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(s, report.summary());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec4() -> impl Strategy<Value = ChannelVector> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4..=4)
                .prop_map(|v| ChannelVector::new(v.into_iter().map(|(a, b)| c(a, b)).collect()))
        }

        proptest! {
            #[test]
            fn correlation_symmetric_and_bounded(a in vec4(), b in vec4()) {
                prop_assume!(a.norm() > 1e-6 && b.norm() > 1e-6);
                let ab = correlation(&a, &b).unwrap();
                let ba = correlation(&b, &a).unwrap();
                prop_assert!((0.0..=1.0).contains(&ab));
                prop_assert!((ab - ba).abs() < 1e-14);
            }

            #[test]
            fn correlation_scale_invariant(a in vec4(), b in vec4(), re in -5.0f64..5.0, im in -5.0f64..5.0) {
                let s = c(re, im);
                prop_assume!(a.norm() > 1e-6 && b.norm() > 1e-6 && s.norm() > 1e-6);
                let base = correlation(&a, &b).unwrap();
                prop_assert!((correlation(&a.scaled(s), &b).unwrap() - base).abs() < 1e-12);
                prop_assert!((correlation(&a, &b.scaled(s)).unwrap() - base).abs() < 1e-12);
            }

            #[test]
            fn error_curve_unimodal(d1 in 1.0f64..40.0, gap in 0.1f64..20.0) {
                let d2 = d1 + gap;
                let peak = elevation_error_peak(d1, d2);
                let dx: Vec<f64> = (1..4000).map(|i| i as f64 * peak / 1000.0).collect();
                let e = elevation_error_curve(d1, d2, &dx);
                for i in 1..dx.len() {
                    if dx[i] < peak {
                        prop_assert!(e[i] > e[i - 1]);
                    } else if dx[i - 1] > peak {
                        prop_assert!(e[i] < e[i - 1]);
                    }
                }
            }
        }
    }
}
