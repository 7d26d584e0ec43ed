//! The full reconstruction: initialization, coarse optimization,
//! refinement and colorization.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{qem_simplify, TriMesh};
use crate::init::{estimate_initial_mesh, sphere_init, InitConfig};
use crate::opt::{optimize_coarse, LossReport, ReconConfig};
use crate::refine::{colorize, refine};
use crate::views::ViewObservation;

/// Subdivision level of the sphere initializer before simplification.
pub const SPHERE_SUBDIVISIONS: u32 = 4;

/// How the starting mesh is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Integrate the azimuth-0 and azimuth-180 normal maps.
    #[default]
    Auto,
    /// Start from a sphere; always genus 0.
    Sphere,
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(InitMode::Auto),
            "sphere" => Ok(InitMode::Sphere),
            other => Err(Error::InvalidArgument(format!(
                "unknown init mode '{other}' (expected auto or sphere)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub recon: ReconConfig,
    /// Its seed is overridden by `recon.seed`.
    pub init: InitConfig,
    pub init_mode: InitMode,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub init: f64,
    pub coarse: f64,
    pub refine: f64,
    pub colorize: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Final colored mesh.
    pub mesh: TriMesh,
    pub initial: TriMesh,
    /// Coarse records followed by refinement records.
    pub losses: LossReport,
    pub timings: StageTimings,
}

/// Finds the observation whose azimuth is `deg` (within a millidegree).
pub fn find_view(observations: &[ViewObservation], deg: f64) -> Result<&ViewObservation> {
    observations
        .iter()
        .find(|o| {
            let d = (o.view.azimuth.to_degrees() - deg).rem_euclid(360.0);
            d.min(360.0 - d) < 1e-3 && o.view.elevation.abs() < 1e-9
        })
        .ok_or_else(|| Error::MissingView(format!("azimuth {deg}° at elevation 0")))
}

/// Starting mesh for `mode`.
pub fn initial_mesh(observations: &[ViewObservation], config: &PipelineConfig) -> Result<TriMesh> {
    match config.init_mode {
        InitMode::Auto => {
            let front = find_view(observations, 0.0)?;
            let back = find_view(observations, 180.0)?;
            let init = InitConfig {
                seed: config.recon.seed,
                ..config.init
            };
            estimate_initial_mesh(front, back, &init)
        }
        InitMode::Sphere => {
            let sphere = sphere_init(SPHERE_SUBDIVISIONS)?;
            Ok(qem_simplify(&sphere, config.init.face_budget).mesh)
        }
    }
}

/// Runs every stage in order and times each one.
pub fn reconstruct(observations: &[ViewObservation], config: &PipelineConfig) -> Result<Reconstruction> {
    config.recon.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let mut lap = Instant::now();
    let mut tick = |slot: &mut f64| {
        *slot = lap.elapsed().as_secs_f64();
        lap = Instant::now();
    };

    let initial = initial_mesh(observations, config)?;
    tick(&mut timings.init);
    log::info!("init: {} faces in {:.2}s", initial.num_faces(), timings.init);

    let (coarse, mut losses) = optimize_coarse(&initial, observations, &config.recon)?;
    tick(&mut timings.coarse);
    log::info!("coarse: {} faces in {:.2}s", coarse.num_faces(), timings.coarse);

    let (refined, refine_losses) = refine(&coarse, observations, &config.recon)?;
    losses.extend(refine_losses);
    tick(&mut timings.refine);
    log::info!("refine: {:.2}s", timings.refine);

    let mesh = colorize(&refined, observations)?;
    tick(&mut timings.colorize);
    timings.total = start.elapsed().as_secs_f64();
    log::info!("colorize: {:.2}s, total {:.2}s", timings.colorize, timings.total);

    Ok(Reconstruction {
        mesh,
        initial,
        losses,
        timings,
    })
}

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// Everything needed to rerun a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub input: PathBuf,
    pub output: PathBuf,
    pub config: PipelineConfig,
    pub timings: StageTimings,
}

impl RunManifest {
    pub fn new(input: &Path, output: &Path, config: PipelineConfig, timings: StageTimings) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input: input.to_path_buf(),
            output: output.to_path_buf(),
            config,
            timings,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
