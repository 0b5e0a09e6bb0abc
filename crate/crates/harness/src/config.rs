//! Scenario configuration (TOML).
//!
//! Every section and field is optional; omitted values take the defaults
//! below. A section that is present must still name its panel frequency.
//!
//! ```toml
//! scenario = "near-free"        # far-free | near-free | multipath-far | multipath-near
//! mode = "literal-eq7"          # or "amplitude-assisted"
//! truth = "spherical"           # free-space ground truth: spherical | planar
//! seed = 0
//! workers = 1
//! # dataset = "mpc.csv"         # ingest MPCs instead of synthesising scenes
//!
//! [panel1]
//! frequency_hz = 28e9
//! n_y = 16
//! n_z = 16
//!
//! [panel2]
//! frequency_hz = 39e9
//!
//! [layout]                      # panels stacked on the z axis at heights d1 < d2
//! d1 = 15.0
//! d2 = 16.0
//!
//! [ue]
//! kind = "grid"                 # or kind = "points", points = [[x, y, z], ...]
//! x_min = 2.5
//! x_max = 50.0
//! y_min = -25.0
//! y_max = 25.0
//! spacing = 2.5
//! z = 0.0
//!
//! [scatterers]
//! delta = 0.15                  # max vertical offset of Panel 2's scattering point
//! epsilon = 0.1                 # matching radius for ingested interaction points
//! include_los = true
//! count = 5                     # random scatterers, unless `points` is given
//! x = [20.0, 60.0]
//! y = [-30.0, 30.0]
//! z = [0.0, 10.0]
//! min_separation = 0.0          # in (sin θ, cos θ sin φ) seen from Panel 1
//!
//! [extraction]                  # radians
//! max_paths = 25
//! coarse_grid_step = 0.017453292519943295
//! refine_tolerance = 0.00017453292519943296
//! residual_stop = 1e-6
//!
//! [output]
//! dir = "out"
//!
//! [sweep]
//! d2 = [16.0, 18.0, 20.0]
//! ```
//!
//! `epsilon` and `delta` interact: a synthetic scene shifts each Panel-2
//! scattering point by up to `delta`, so matching recovers every shared
//! scatterer only when `epsilon >= delta`.

use std::path::{Path, PathBuf};

use panelinfer::estimation::ExtractionConfig;
use panelinfer::inference::{GainMode, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config schema violation: {0}")]
    Schema(String),
    #[error("config value out of range: {field}: {message}")]
    Range { field: String, message: String },
    #[error("referenced file {field} = {path} does not exist")]
    MissingFile { field: String, path: PathBuf },
}

impl ConfigError {
    fn range(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Range {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Ground truth used to score the free-space scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Truth {
    /// Per-element distances and Friis gains.
    #[default]
    Spherical,
    /// One plane wave per panel from the LoS angles.
    Planar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelSection {
    pub frequency_hz: f64,
    #[serde(default = "default_elements")]
    pub n_y: usize,
    #[serde(default = "default_elements")]
    pub n_z: usize,
}

fn default_elements() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutSection {
    pub d1: f64,
    pub d2: f64,
}

impl Default for LayoutSection {
    fn default() -> Self {
        Self { d1: 15.0, d2: 16.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UePlacement {
    Grid {
        #[serde(default = "grid_x_min")]
        x_min: f64,
        #[serde(default = "grid_x_max")]
        x_max: f64,
        #[serde(default = "grid_y_min")]
        y_min: f64,
        #[serde(default = "grid_y_max")]
        y_max: f64,
        #[serde(default = "grid_spacing")]
        spacing: f64,
        #[serde(default)]
        z: f64,
    },
    Points {
        points: Vec<[f64; 3]>,
    },
}

fn grid_x_min() -> f64 {
    2.5
}
fn grid_x_max() -> f64 {
    50.0
}
fn grid_y_min() -> f64 {
    -25.0
}
fn grid_y_max() -> f64 {
    25.0
}
fn grid_spacing() -> f64 {
    2.5
}

impl Default for UePlacement {
    fn default() -> Self {
        UePlacement::Grid {
            x_min: grid_x_min(),
            x_max: grid_x_max(),
            y_min: grid_y_min(),
            y_max: grid_y_max(),
            spacing: grid_spacing(),
            z: 0.0,
        }
    }
}

impl UePlacement {
    /// UE positions in row order: x outer, y inner.
    pub fn positions(&self) -> Vec<[f64; 3]> {
        match self {
            UePlacement::Points { points } => points.clone(),
            UePlacement::Grid {
                x_min,
                x_max,
                y_min,
                y_max,
                spacing,
                z,
            } => {
                let xs = axis(*x_min, *x_max, *spacing);
                let ys = axis(*y_min, *y_max, *spacing);
                xs.iter()
                    .flat_map(|&x| ys.iter().map(move |&y| [x, y, *z]))
                    .collect()
            }
        }
    }
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScattererSection {
    pub delta: f64,
    pub epsilon: f64,
    pub include_los: bool,
    /// Explicit scatterer positions; overrides the random generator.
    pub points: Option<Vec<[f64; 3]>>,
    pub count: usize,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
    pub min_separation: f64,
}

impl Default for ScattererSection {
    fn default() -> Self {
        Self {
            delta: 0.15,
            epsilon: 0.1,
            include_los: true,
            points: None,
            count: 5,
            x: [20.0, 60.0],
            y: [-30.0, 30.0],
            z: [0.0, 10.0],
            min_separation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionSection {
    pub max_paths: usize,
    pub coarse_grid_step: f64,
    pub refine_tolerance: f64,
    pub residual_stop: f64,
}

impl Default for ExtractionSection {
    fn default() -> Self {
        let d = ExtractionConfig::default();
        Self {
            max_paths: d.max_paths,
            coarse_grid_step: d.coarse_grid_step,
            refine_tolerance: d.refine_tolerance,
            residual_stop: d.residual_stop,
        }
    }
}

impl From<&ExtractionSection> for ExtractionConfig {
    fn from(s: &ExtractionSection) -> Self {
        ExtractionConfig {
            max_paths: s.max_paths,
            coarse_grid_step: s.coarse_grid_step,
            refine_tolerance: s.refine_tolerance,
            residual_stop: s.residual_stop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Panel-2 heights visited by `sweep`.
    pub d2: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            d2: vec![16.0, 18.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub mode: GainMode,
    pub truth: Truth,
    pub seed: u64,
    pub workers: usize,
    pub dataset: Option<PathBuf>,
    pub panel1: PanelSection,
    pub panel2: PanelSection,
    pub layout: LayoutSection,
    pub ue: UePlacement,
    pub scatterers: ScattererSection,
    pub extraction: ExtractionSection,
    pub output: OutputSection,
    pub sweep: SweepSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::NearFree,
            mode: GainMode::default(),
            truth: Truth::default(),
            seed: 0,
            workers: 1,
            dataset: None,
            panel1: PanelSection {
                frequency_hz: 28e9,
                n_y: 16,
                n_z: 16,
            },
            panel2: PanelSection {
                frequency_hz: 39e9,
                n_y: 16,
                n_z: 16,
            },
            layout: LayoutSection::default(),
            ue: UePlacement::default(),
            scatterers: ScattererSection::default(),
            extraction: ExtractionSection::default(),
            output: OutputSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, p) in [("panel1", &self.panel1), ("panel2", &self.panel2)] {
            if !(p.frequency_hz > 0.0 && p.frequency_hz.is_finite()) {
                return Err(ConfigError::range(
                    &format!("{name}.frequency_hz"),
                    format!("must be positive, got {}", p.frequency_hz),
                ));
            }
            if p.n_y == 0 {
                return Err(ConfigError::range(&format!("{name}.n_y"), "must be at least 1"));
            }
            if p.n_z == 0 {
                return Err(ConfigError::range(&format!("{name}.n_z"), "must be at least 1"));
            }
        }
        positive("d1", self.layout.d1)?;
        positive("d2", self.layout.d2)?;
        if self.workers == 0 {
            return Err(ConfigError::range("workers", "must be at least 1"));
        }

        match &self.ue {
            UePlacement::Grid {
                x_min,
                x_max,
                y_min,
                y_max,
                spacing,
                z,
            } => {
                positive("ue.spacing", *spacing)?;
                for (f, v) in [
                    ("ue.x_min", x_min),
                    ("ue.x_max", x_max),
                    ("ue.y_min", y_min),
                    ("ue.y_max", y_max),
                    ("ue.z", z),
                ] {
                    finite(f, *v)?;
                }
                if x_min > x_max {
                    return Err(ConfigError::range("ue.x_max", "must not be below ue.x_min"));
                }
                if y_min > y_max {
                    return Err(ConfigError::range("ue.y_max", "must not be below ue.y_min"));
                }
            }
            UePlacement::Points { points } => {
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(ConfigError::range("ue.points", "coordinates must be finite"));
                }
            }
        }

        let s = &self.scatterers;
        if !(s.delta >= 0.0 && s.delta.is_finite()) {
            return Err(ConfigError::range(
                "scatterers.delta",
                format!("must be non-negative, got {}", s.delta),
            ));
        }
        positive("scatterers.epsilon", s.epsilon)?;
        if !(s.min_separation >= 0.0 && s.min_separation.is_finite()) {
            return Err(ConfigError::range(
                "scatterers.min_separation",
                "must be non-negative",
            ));
        }
        for (f, [lo, hi]) in [
            ("scatterers.x", s.x),
            ("scatterers.y", s.y),
            ("scatterers.z", s.z),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ConfigError::range(f, format!("invalid interval [{lo}, {hi}]")));
            }
        }
        if let Some(points) = &s.points {
            if points.iter().flatten().any(|v| !v.is_finite()) {
                return Err(ConfigError::range(
                    "scatterers.points",
                    "coordinates must be finite",
                ));
            }
        }

        let e = &self.extraction;
        if e.max_paths == 0 {
            return Err(ConfigError::range("extraction.max_paths", "must be at least 1"));
        }
        positive("extraction.coarse_grid_step", e.coarse_grid_step)?;
        positive("extraction.refine_tolerance", e.refine_tolerance)?;
        positive("extraction.residual_stop", e.residual_stop)?;
        ExtractionConfig::from(e)
            .validate()
            .map_err(|err| ConfigError::range("extraction", err.to_string()))?;

        for &d2 in &self.sweep.d2 {
            positive("sweep.d2", d2)?;
        }
        Ok(())
    }

    pub fn extraction_config(&self) -> ExtractionConfig {
        ExtractionConfig::from(&self.extraction)
    }

    /// Confirm that referenced files exist.
    pub fn check_files(&self) -> Result<(), ConfigError> {
        if let Some(p) = &self.dataset {
            if !p.is_file() {
                return Err(ConfigError::MissingFile {
                    field: "dataset".into(),
                    path: p.clone(),
                });
            }
        }
        Ok(())
    }
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::range(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::range(field, format!("must be positive, got {v}")))
    }
}

/// Parse and validate a config from TOML text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let value: toml::Value = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let cfg: ScenarioConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Schema(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read a config file. A relative `dataset` path is resolved against the
/// file's directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    if let Some(d) = &cfg.dataset {
        if d.is_relative() {
            cfg.dataset = Some(base.join(d));
        }
    }
    Ok(cfg)
}
