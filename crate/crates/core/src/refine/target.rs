//! Per-vertex targets blended from every view that sees the vertex.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::opt::loss::check_observations;
use crate::opt::{render_all, TargetNormalization};
use crate::raster::{visibility_from, RenderOutput, DEFAULT_DEPTH_EPSILON, DEFAULT_SIGMA};
use crate::views::{sample_image, ViewObservation};
use crate::Vec3;

/// Which image a target is sampled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    /// Camera-frame normal maps, returned as unit world-frame normals.
    Normals,
    Rgb,
}

/// One value per vertex plus whether any view saw it.
///
/// Uncovered entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexTargets {
    pub values: Vec<Vec3>,
    pub covered: Vec<bool>,
}

impl VertexTargets {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn covered_count(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }
}

/// Weighted mean of the samples of `payload` over the views in which each
/// vertex is visible, each view weighted by the squared cosine between the
/// vertex normal and the view direction.
pub fn compute_explicit_target(
    mesh: &TriMesh,
    observations: &[ViewObservation],
    payload: Payload,
    normalization: TargetNormalization,
) -> Result<VertexTargets> {
    check_observations(observations)?;
    for o in observations {
        o.check_dims()?;
    }
    if mesh.num_faces() == 0 {
        return Err(Error::EmptyMesh);
    }
    let renders = render_all(mesh, observations, DEFAULT_SIGMA);
    targets_from_renders(mesh, &renders, observations, payload, normalization)
}

pub(crate) fn targets_from_renders(
    mesh: &TriMesh,
    renders: &[RenderOutput],
    observations: &[ViewObservation],
    payload: Payload,
    normalization: TargetNormalization,
) -> Result<VertexTargets> {
    let normals = mesh.vertex_normals()?;
    let visible: Vec<Vec<bool>> = renders
        .par_iter()
        .map(|out| visibility_from(mesh, out, DEFAULT_DEPTH_EPSILON))
        .collect();
    let views: Vec<_> = renders
        .iter()
        .zip(observations)
        .map(|(out, obs)| {
            let image = match payload {
                Payload::Normals => &obs.normals,
                Payload::Rgb => &obs.rgb,
            };
            (out, image, out.view.view_direction(), out.view.rotation().transpose())
        })
        .collect();
    let (values, covered) = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| {
            let mut sum = Vec3::zeros();
            let mut weight = 0.0;
            let mut count = 0usize;
            for (k, (out, image, dir, rt)) in views.iter().enumerate() {
                if !visible[k][v] {
                    continue;
                }
                let c = normals[v].dot(dir);
                let w = c * c;
                let mut sample = sample_image(out.screen[v], image);
                if payload == Payload::Normals {
                    sample = rt * sample;
                }
                sum += sample * w;
                weight += w;
                count += 1;
            }
            let denom = match normalization {
                TargetNormalization::WeightSum => weight,
                TargetNormalization::VisibleCount => count as f64,
            };
            if count == 0 || denom <= 0.0 {
                return (Vec3::zeros(), false);
            }
            let mean = sum / denom;
            match payload {
                Payload::Rgb => (mean, true),
                Payload::Normals => {
                    let n = mean.norm();
                    if n > 1e-12 {
                        (mean / n, true)
                    } else {
                        (Vec3::zeros(), false)
                    }
                }
            }
        })
        .unzip();
    Ok(VertexTargets { values, covered })
}
