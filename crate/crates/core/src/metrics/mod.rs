//! Geometry and image metrics on unit-box-normalized meshes.

pub mod image;
pub mod sampling;
pub mod volume;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TriMesh;

pub use image::{eval_views, psnr, render_eval_views, ssim, PSNR_CAP};
pub use sampling::{nearest_distances, sample_surface, PointGrid};
pub use volume::{volume_iou, voxelize, winding_number};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_IOU_RESOLUTION: usize = 64;
pub const DEFAULT_FSCORE_TAU: f64 = 0.05;

/// Uniform scale and translation so the bounding box is centered at the
/// origin and its longest side spans exactly [-0.5, 0.5].
pub fn normalize_unit_box(mesh: &TriMesh) -> Result<TriMesh> {
    if mesh.num_vertices() == 0 {
        return Err(Error::EmptyMesh);
    }
    let (lo, hi) = mesh.bounding_box();
    let span = (hi - lo).max();
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::InvalidMesh("bounding box has zero extent".into()));
    }
    let center = (lo + hi) / 2.0;
    let mut out = mesh.clone();
    out.map_vertices(|p| (p - center) / span);
    Ok(out)
}

fn sample_pair(
    pred: &TriMesh,
    gt: &TriMesh,
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let a = sample_surface(pred, samples, seed)?;
    let b = sample_surface(gt, samples, seed.wrapping_add(1))?;
    Ok((nearest_distances(&a, &b), nearest_distances(&b, &a)))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Half the sum of the two mean nearest-sample distances.
pub fn chamfer_distance(pred: &TriMesh, gt: &TriMesh, samples: usize, seed: u64) -> Result<f64> {
    let (ab, ba) = sample_pair(pred, gt, samples, seed)?;
    Ok(0.5 * (mean(&ab) + mean(&ba)))
}

fn fscore_from(ab: &[f64], ba: &[f64], tau: f64) -> f64 {
    let precision = ab.iter().filter(|&&d| d < tau).count() as f64 / ab.len() as f64;
    let recall = ba.iter().filter(|&&d| d < tau).count() as f64 / ba.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Harmonic mean of the fractions of samples within `tau` of the other surface.
pub fn fscore(pred: &TriMesh, gt: &TriMesh, tau: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let (ab, ba) = sample_pair(pred, gt, samples, seed)?;
    Ok(fscore_from(&ab, &ba, tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cd,
    Iou,
    Fscore,
    Psnr,
    Ssim,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Cd,
        Metric::Iou,
        Metric::Fscore,
        Metric::Psnr,
        Metric::Ssim,
    ];
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cd" => Ok(Metric::Cd),
            "iou" => Ok(Metric::Iou),
            "fscore" => Ok(Metric::Fscore),
            "psnr" => Ok(Metric::Psnr),
            "ssim" => Ok(Metric::Ssim),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric '{other}' (expected cd, iou, fscore, psnr, ssim)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub metrics: Vec<Metric>,
    pub samples: usize,
    pub seed: u64,
    pub iou_resolution: usize,
    pub fscore_tau: f64,
    pub render_resolution: usize,
    pub elevations_deg: Vec<f64>,
    pub azimuth_count: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            metrics: Metric::ALL.to_vec(),
            samples: DEFAULT_SAMPLES,
            seed: 0,
            iou_resolution: DEFAULT_IOU_RESOLUTION,
            fscore_tau: DEFAULT_FSCORE_TAU,
            render_resolution: 256,
            elevations_deg: vec![0.0, 15.0, 30.0],
            azimuth_count: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScores {
    pub per_view: Vec<f64>,
    pub mean: f64,
}

impl ImageScores {
    fn new(per_view: Vec<f64>) -> Self {
        let mean = mean(&per_view);
        Self { per_view, mean }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub chamfer: Option<f64>,
    pub volume_iou: Option<f64>,
    pub fscore: Option<f64>,
    pub fscore_tau: f64,
    pub psnr: Option<ImageScores>,
    pub ssim: Option<ImageScores>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut row = |name: &str, v: Option<f64>| match v {
            Some(v) => writeln!(f, "{name:<16}{v:>12.6}"),
            None => Ok(()),
        };
        row("chamfer", self.chamfer)?;
        row("volume_iou", self.volume_iou)?;
        row(&format!("fscore@{}", self.fscore_tau), self.fscore)?;
        row("psnr_mean", self.psnr.as_ref().map(|s| s.mean))?;
        row("ssim_mean", self.ssim.as_ref().map(|s| s.mean))
    }
}

/// Normalizes both meshes and computes the requested metrics.
pub fn evaluate(pred: &TriMesh, gt: &TriMesh, config: &MetricsConfig) -> Result<MetricsReport> {
    let pred = normalize_unit_box(pred)?;
    let gt = normalize_unit_box(gt)?;
    let wants = |m| config.metrics.contains(&m);
    let mut report = MetricsReport {
        chamfer: None,
        volume_iou: None,
        fscore: None,
        fscore_tau: config.fscore_tau,
        psnr: None,
        ssim: None,
    };
    if wants(Metric::Cd) || wants(Metric::Fscore) {
        let (ab, ba) = sample_pair(&pred, &gt, config.samples, config.seed)?;
        if wants(Metric::Cd) {
            report.chamfer = Some(0.5 * (mean(&ab) + mean(&ba)));
        }
        if wants(Metric::Fscore) {
            if !(config.fscore_tau > 0.0) {
                return Err(Error::InvalidArgument("tau must be positive".into()));
            }
            report.fscore = Some(fscore_from(&ab, &ba, config.fscore_tau));
        }
    }
    if wants(Metric::Iou) {
        report.volume_iou = Some(volume_iou(&pred, &gt, config.iou_resolution)?);
    }
    if wants(Metric::Psnr) || wants(Metric::Ssim) {
        let views = eval_views(
            &config.elevations_deg,
            config.azimuth_count,
            config.render_resolution,
        );
        let a = render_eval_views(&pred, &views);
        let b = render_eval_views(&gt, &views);
        if wants(Metric::Psnr) {
            let v = a
                .iter()
                .zip(&b)
                .map(|(x, y)| psnr(x, y))
                .collect::<Result<Vec<_>>>()?;
            report.psnr = Some(ImageScores::new(v));
        }
        if wants(Metric::Ssim) {
            let v = a
                .iter()
                .zip(&b)
                .map(|(x, y)| ssim(x, y))
                .collect::<Result<Vec<_>>>()?;
            report.ssim = Some(ImageScores::new(v));
        }
    }
    Ok(report)
}

#[cfg(test)]
use crate::Vec3;

/// Parallel planes `[-0.5, 0.5]²` at z = ±gap/2, both facing +z.
#[cfg(test)]
pub(crate) fn plane_pair(gap: f64) -> (TriMesh, TriMesh) {
    let plane = |z: f64| {
        TriMesh::new(
            vec![
                Vec3::new(-0.5, -0.5, z),
                Vec3::new(0.5, -0.5, z),
                Vec3::new(0.5, 0.5, z),
                Vec3::new(-0.5, 0.5, z),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    };
    (plane(gap / 2.0), plane(-gap / 2.0))
}
