//! Per-UE pipelines: extract on Panel 1, infer Panel 2, score.

use std::f64::consts::TAU;

use num_complex::Complex64;
use panelinfer::channel::{
    friis_gain, synth_far_channel, synth_multipath_scene, synth_spherical_channel, MultipathScene,
    SceneOptions,
};
use panelinfer::estimation::{extract_paths, reconstruct, ExtractionConfig};
use panelinfer::geometry::los_angles;
use panelinfer::inference::{
    infer_far_free, infer_multipath_far, infer_multipath_near, infer_near_free, GainMode,
    InferenceResult, Scenario,
};
use panelinfer::metrics::{containment_rate, correlation, ScenarioReport, UeRecord};
use panelinfer::{ChannelVector, Error, PanelConfig, PathComponent, Point3, Scatterer, TwoPanelLayout};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error as ThisError;

use crate::config::{ConfigError, ScenarioConfig, Truth};
use crate::dataset::{ingest_mpc_csv, DatasetError, MpcDataset, MpcRow, UeRows};
use crate::matching::{greedy_assign, match_shared_scatterers, UeMatch};

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Everything a per-UE pipeline reads. Shared read-only across workers.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub layout: TwoPanelLayout,
    pub extraction: ExtractionConfig,
    pub scenario: Scenario,
    pub mode: GainMode,
    pub truth: Truth,
    pub delta: f64,
    pub include_los: bool,
    pub seed: u64,
}

impl Pipeline {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self, RunError> {
        Ok(Self {
            layout: build_layout(cfg)?,
            extraction: cfg.extraction_config(),
            scenario: cfg.scenario,
            mode: cfg.mode,
            truth: cfg.truth,
            delta: cfg.scatterers.delta,
            include_los: cfg.scatterers.include_los,
            seed: cfg.seed,
        })
    }
}

/// Two panels on the z axis at heights `d1` and `d2`, facing +x.
pub fn build_layout(cfg: &ScenarioConfig) -> Result<TwoPanelLayout, Error> {
    let p1 = PanelConfig::new(
        cfg.panel1.frequency_hz,
        cfg.panel1.n_y,
        cfg.panel1.n_z,
        Point3::new(0.0, 0.0, cfg.layout.d1),
    )?;
    let p2 = PanelConfig::new(
        cfg.panel2.frequency_hz,
        cfg.panel2.n_y,
        cfg.panel2.n_z,
        Point3::new(0.0, 0.0, cfg.layout.d2),
    )?;
    TwoPanelLayout::new(p1, p2)
}

pub fn ue_positions(cfg: &ScenarioConfig) -> Vec<Point3> {
    cfg.ue
        .positions()
        .into_iter()
        .map(|[x, y, z]| Point3::new(x, y, z))
        .collect()
}

/// Per-UE scene seed: an independent ChaCha stream per UE id.
pub fn scene_seed(seed: u64, ue_id: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ue_id);
    rng.next_u64()
}

const MAX_DRAWS_PER_SCATTERER: usize = 10_000;

/// Scatterers shared by every UE of a run.
///
/// Random positions are drawn uniformly in the configured box, each with a
/// unit-modulus reflectivity of random phase. With `min_separation > 0`
/// candidates whose direction from Panel 1 lies closer than that (in
/// `(sin θ, cos θ sin φ)`) to an accepted one are redrawn.
pub fn generate_scatterers(cfg: &ScenarioConfig, layout: &TwoPanelLayout) -> Result<Vec<Scatterer>, RunError> {
    let s = &cfg.scatterers;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phase = |rng: &mut ChaCha8Rng| Complex64::from_polar(1.0, rng.random_range(0.0..TAU));
    if let Some(points) = &s.points {
        return Ok(points
            .iter()
            .map(|&[x, y, z]| Scatterer::new(Point3::new(x, y, z), phase(&mut rng)))
            .collect());
    }
    let draw = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| if lo < hi { rng.random_range(lo..hi) } else { lo };
    let mut out: Vec<Scatterer> = Vec::with_capacity(s.count);
    let mut dirs: Vec<(f64, f64)> = Vec::with_capacity(s.count);
    let mut draws = 0;
    while out.len() < s.count {
        draws += 1;
        if draws > MAX_DRAWS_PER_SCATTERER * s.count {
            return Err(ConfigError::Range {
                field: "scatterers.min_separation".into(),
                message: format!("could not place {} scatterers", s.count),
            }
            .into());
        }
        let pos = Point3::new(draw(&mut rng, s.x), draw(&mut rng, s.y), draw(&mut rng, s.z));
        let g = match los_angles(layout.panel1(), pos) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let dir = sin_space(g.theta, g.phi);
        if dirs
            .iter()
            .any(|d| (d.0 - dir.0).hypot(d.1 - dir.1) < s.min_separation)
        {
            continue;
        }
        dirs.push(dir);
        out.push(Scatterer::new(pos, phase(&mut rng)));
    }
    Ok(out)
}

/// Direction cosines seen by a panel in the x = 0 plane.
pub fn sin_space(theta: f64, phi: f64) -> (f64, f64) {
    (theta.sin(), theta.cos() * phi.sin())
}

/// Half the null-to-null beamwidth in sin space.
pub fn match_radius(panel: &PanelConfig) -> f64 {
    1.0 / panel.n_y().max(panel.n_z()) as f64
}

fn truth_channel(panel: &PanelConfig, ue: Point3, truth: Truth) -> Result<ChannelVector, Error> {
    match truth {
        Truth::Spherical => synth_spherical_channel(panel, ue),
        Truth::Planar => {
            let g = los_angles(panel, ue)?;
            let alpha = friis_gain(panel.wavelength(), g.range)?;
            synth_far_channel(panel, &[PathComponent::new(alpha, g.theta, g.phi)])
        }
    }
}

/// Panel-2 path inferred from a single Panel-1 path (free space).
pub fn infer_free_space(
    pipe: &Pipeline,
    path1: &PathComponent,
    ue_height: f64,
) -> Result<PathComponent, Error> {
    let (p1, p2) = (pipe.layout.panel1(), pipe.layout.panel2());
    let inferred = match pipe.scenario {
        Scenario::FarFree => infer_far_free(
            path1,
            p1.wavelength(),
            p2.wavelength(),
            pipe.layout.delta_d(),
            pipe.mode,
        )?,
        Scenario::NearFree => infer_near_free(
            path1,
            p1.height() - ue_height,
            p2.height() - ue_height,
            p2.wavelength(),
        )?,
        s => {
            return Err(Error::InvalidArgument(format!(
                "{s} is not a free-space scenario"
            )))
        }
    };
    inferred
        .free_space_path()
        .copied()
        .ok_or_else(|| Error::InvalidArgument("no free-space path inferred".into()))
}

fn free_space_eval(pipe: &Pipeline, ue: Point3) -> Result<(f64, f64), Error> {
    let (p1, p2) = (pipe.layout.panel1(), pipe.layout.panel2());
    let h1 = truth_channel(p1, ue, pipe.truth)?;
    let h2 = truth_channel(p2, ue, pipe.truth)?;
    let single = ExtractionConfig {
        max_paths: 1,
        ..pipe.extraction
    };
    let est = extract_paths(&h1, p1, &single)?;
    let path2 = infer_free_space(pipe, &est.paths[0], ue.z)?;
    let h2_hat = reconstruct(p2, &[path2])?;
    let f = correlation(&h2_hat, &h2)?;
    let theta2 = los_angles(p2, ue)?.theta;
    Ok((f, (path2.theta - theta2).abs()))
}

pub fn free_space_record(pipe: &Pipeline, ue_id: u64, ue: Point3) -> UeRecord {
    match free_space_eval(pipe, ue) {
        Ok((f, err)) => UeRecord {
            ue_id,
            position: Some(ue),
            scenario: pipe.scenario,
            correlation: Some(f),
            elevation_errors: vec![err],
            containment: None,
            n_paths: 1,
            n_skipped: 0,
            error: None,
        },
        Err(e) => UeRecord::failed(ue_id, Some(ue), pipe.scenario, e.to_string()),
    }
}

/// Pair estimated paths with true ones, nearest first in sin space.
/// Returns `(estimate index, truth index)` in estimate order.
pub fn pair_estimates(
    estimated: &[PathComponent],
    truth: &[PathComponent],
    radius: f64,
) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    for (i, e) in estimated.iter().enumerate() {
        let a = sin_space(e.theta, e.phi);
        for (j, t) in truth.iter().enumerate() {
            let b = sin_space(t.theta, t.phi);
            let d = (a.0 - b.0).hypot(a.1 - b.1);
            if d <= radius {
                candidates.push((i, j, d));
            }
        }
    }
    let k1: Vec<u64> = (0..estimated.len() as u64).collect();
    let k2: Vec<u64> = (0..truth.len() as u64).collect();
    let mut pairs: Vec<(usize, usize)> = greedy_assign(candidates, &k1, &k2)
        .into_iter()
        .map(|(i, j, _)| (i, j))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Score Panel-2 inference for paired (Panel-1 estimate, Panel-2 truth)
/// paths. `all2` is every true Panel-2 path, used for the channel F.
fn score_multipath(
    pipe: &Pipeline,
    ue_id: u64,
    ue: Option<Point3>,
    pairs: &[(PathComponent, PathComponent)],
    all2: &[PathComponent],
    unpaired: usize,
) -> Result<UeRecord, Error> {
    let (p1, p2) = (pipe.layout.panel1(), pipe.layout.panel2());
    if pairs.is_empty() {
        return Err(Error::EmptyPaths);
    }
    let mut rec = UeRecord {
        ue_id,
        position: ue,
        scenario: pipe.scenario,
        correlation: None,
        elevation_errors: Vec::new(),
        containment: None,
        n_paths: 0,
        n_skipped: unpaired,
        error: None,
    };
    match pipe.scenario {
        Scenario::MultipathFar => {
            let est1: Vec<PathComponent> = pairs.iter().map(|(a, _)| *a).collect();
            let InferenceResult::MultipathFar { angles } = infer_multipath_far(&est1)? else {
                unreachable!()
            };
            let inferred: Vec<PathComponent> = angles
                .iter()
                .zip(pairs)
                .map(|(a, (_, t))| PathComponent::new(t.gain, a.theta, a.phi))
                .collect();
            rec.elevation_errors = angles
                .iter()
                .zip(pairs)
                .map(|(a, (_, t))| (a.theta - t.theta).abs())
                .collect();
            rec.correlation = Some(correlation(
                &synth_far_channel(p2, &inferred)?,
                &synth_far_channel(p2, all2)?,
            )?);
            rec.n_paths = pairs.len();
        }
        Scenario::MultipathNear => {
            let usable: Vec<&(PathComponent, PathComponent)> =
                pairs.iter().filter(|(a, _)| a.theta < 0.0).collect();
            rec.n_skipped += pairs.len() - usable.len();
            if usable.is_empty() {
                return Err(Error::EmptyPaths);
            }
            let est1: Vec<PathComponent> = usable.iter().map(|(a, _)| *a).collect();
            let InferenceResult::MultipathNear { ranges } =
                infer_multipath_near(&est1, p1.height(), p2.height(), pipe.delta)?
            else {
                unreachable!()
            };
            let intervals: Vec<_> = ranges.iter().map(|r| r.theta).collect();
            let truths: Vec<f64> = usable.iter().map(|(_, t)| t.theta).collect();
            rec.containment = Some(containment_rate(&intervals, &truths)?);
            rec.n_paths = usable.len();
        }
        s => {
            return Err(Error::InvalidArgument(format!(
                "{s} is not a multipath scenario"
            )))
        }
    }
    Ok(rec)
}

pub fn synth_scene(
    pipe: &Pipeline,
    scatterers: &[Scatterer],
    ue_id: u64,
    ue: Point3,
) -> Result<MultipathScene, Error> {
    let opts = SceneOptions {
        deviation_delta: pipe.delta,
        seed: scene_seed(pipe.seed, ue_id),
        include_los: pipe.include_los,
    };
    synth_multipath_scene(&pipe.layout, ue, scatterers, &opts)
}

fn multipath_eval(
    pipe: &Pipeline,
    scatterers: &[Scatterer],
    ue_id: u64,
    ue: Point3,
) -> Result<UeRecord, Error> {
    let p1 = pipe.layout.panel1();
    let scene = synth_scene(pipe, scatterers, ue_id, ue)?;
    if scene.paths1.is_empty() {
        return Err(Error::EmptyPaths);
    }
    let h1 = synth_far_channel(p1, &scene.paths1)?;
    let est = extract_paths(&h1, p1, &pipe.extraction)?;
    let idx = pair_estimates(&est.paths, &scene.paths1, match_radius(p1));
    let pairs: Vec<(PathComponent, PathComponent)> = idx
        .iter()
        .map(|&(i, j)| (est.paths[i], scene.paths2[j]))
        .collect();
    score_multipath(
        pipe,
        ue_id,
        Some(ue),
        &pairs,
        &scene.paths2,
        scene.paths1.len() - pairs.len(),
    )
}

pub fn multipath_record(pipe: &Pipeline, scatterers: &[Scatterer], ue_id: u64, ue: Point3) -> UeRecord {
    multipath_eval(pipe, scatterers, ue_id, ue)
        .unwrap_or_else(|e| UeRecord::failed(ue_id, Some(ue), pipe.scenario, e.to_string()))
}

fn as_path(r: &MpcRow) -> PathComponent {
    PathComponent::new(r.gain, r.elev, r.azim)
}

fn dataset_eval(pipe: &Pipeline, m: &UeMatch, rows: &UeRows) -> Result<UeRecord, Error> {
    let p2 = pipe.layout.panel2();
    let ue = rows.ue_position();
    let all2: Vec<PathComponent> = rows.panel2.iter().map(as_path).collect();
    if pipe.scenario.is_free_space() {
        let los = m
            .pairs
            .iter()
            .find(|p| p.path1.point.is_none())
            .ok_or_else(|| Error::InvalidArgument("no LoS pair for a free-space scenario".into()))?;
        let truth2 = as_path(&los.path2);
        let path2 = infer_free_space(pipe, &as_path(&los.path1), ue.map_or(0.0, |u| u.z))?;
        let f = correlation(&reconstruct(p2, &[path2])?, &synth_far_channel(p2, &[truth2])?)?;
        return Ok(UeRecord {
            ue_id: m.ue_id,
            position: ue,
            scenario: pipe.scenario,
            correlation: Some(f),
            elevation_errors: vec![(path2.theta - truth2.theta).abs()],
            containment: None,
            n_paths: 1,
            n_skipped: rows.panel1.len() - 1,
            error: None,
        });
    }
    let pairs: Vec<(PathComponent, PathComponent)> = m
        .pairs
        .iter()
        .map(|p| (as_path(&p.path1), as_path(&p.path2)))
        .collect();
    score_multipath(pipe, m.ue_id, ue, &pairs, &all2, m.unpaired1.len())
}

pub fn dataset_record(pipe: &Pipeline, m: &UeMatch, rows: &UeRows) -> UeRecord {
    dataset_eval(pipe, m, rows).unwrap_or_else(|e| {
        UeRecord::failed(m.ue_id, rows.ue_position(), pipe.scenario, e.to_string())
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))
}

/// Run one scenario over every UE of the placement (or of the dataset).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport, RunError> {
    cfg.check_files()?;
    let pipe = Pipeline::from_config(cfg)?;
    let pool = pool(cfg.workers)?;

    let records = if let Some(path) = &cfg.dataset {
        let ds = ingest_mpc_csv(path)?;
        let matches = match_shared_scatterers(&ds, cfg.scatterers.epsilon);
        let by_ue = ds.by_ue();
        pool.install(|| {
            matches
                .par_iter()
                .map(|m| dataset_record(&pipe, m, &by_ue[&m.ue_id]))
                .collect()
        })
    } else {
        let ues = ue_positions(cfg);
        if cfg.scenario.is_free_space() {
            pool.install(|| {
                ues.par_iter()
                    .enumerate()
                    .map(|(i, &ue)| free_space_record(&pipe, i as u64, ue))
                    .collect()
            })
        } else {
            let scatterers = generate_scatterers(cfg, &pipe.layout)?;
            pool.install(|| {
                ues.par_iter()
                    .enumerate()
                    .map(|(i, &ue)| multipath_record(&pipe, &scatterers, i as u64, ue))
                    .collect()
            })
        }
    };
    Ok(ScenarioReport::new(cfg.scenario, records))
}

/// Synthetic MPC table for every UE: scattered paths keep their index as
/// `path_id`, the LoS path comes last.
pub fn synth_dataset(cfg: &ScenarioConfig) -> Result<MpcDataset, RunError> {
    let pipe = Pipeline::from_config(cfg)?;
    let scatterers = generate_scatterers(cfg, &pipe.layout)?;
    let ues = ue_positions(cfg);
    let scenes: Vec<Result<MultipathScene, Error>> = pool(cfg.workers)?.install(|| {
        ues.par_iter()
            .enumerate()
            .map(|(i, &ue)| synth_scene(&pipe, &scatterers, i as u64, ue))
            .collect()
    });
    let mut rows = Vec::new();
    for (i, (scene, &ue)) in scenes.into_iter().zip(&ues).enumerate() {
        let scene = scene?;
        for (panel_id, paths, points) in [
            (1u8, &scene.paths1, &scene.points1),
            (2u8, &scene.paths2, &scene.points2),
        ] {
            for (k, (p, pt)) in paths.iter().zip(points).enumerate() {
                rows.push(MpcRow {
                    ue_id: i as u64,
                    panel_id,
                    path_id: k as u64,
                    gain: p.gain,
                    elev: p.theta,
                    azim: p.phi,
                    point: *pt,
                    ue_position: Some(ue),
                });
            }
        }
    }
    Ok(MpcDataset { rows })
}

/// One point of a free-space method comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodComparison {
    /// Horizontal UE distance from the panel mast.
    pub dx: f64,
    pub f_far: Option<f64>,
    pub f_near: Option<f64>,
}

/// Far- and near-field free-space methods on the same UEs.
pub fn compare_free_space(cfg: &ScenarioConfig) -> Result<Vec<MethodComparison>, RunError> {
    let mut far = cfg.clone();
    far.scenario = Scenario::FarFree;
    let mut near = cfg.clone();
    near.scenario = Scenario::NearFree;
    let (rf, rn) = (run_scenario(&far)?, run_scenario(&near)?);
    Ok(rf
        .records
        .iter()
        .zip(&rn.records)
        .filter_map(|(a, b)| {
            a.position.map(|p| MethodComparison {
                dx: p.x.hypot(p.y),
                f_far: a.correlation,
                f_near: b.correlation,
            })
        })
        .collect())
}
