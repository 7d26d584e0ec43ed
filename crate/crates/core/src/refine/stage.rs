//! Refinement against explicit per-vertex normal targets.

use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::opt::loss::{accumulate, check_observations, mask_term, normal_image_term, LossGrad};
use crate::opt::optimizer::{run_stage, Evaluation, StagePlan};
use crate::opt::{render_all, LossReport, ReconConfig, Stage};
use crate::raster::{render_attributes, Backward, RenderOutput};
use crate::views::{Image, ViewObservation};
use crate::Vec3;

use super::target::{targets_from_renders, Payload, VertexTargets};

/// Targets as used by the loss: uncovered vertices keep their own normal.
fn effective_targets(mesh: &TriMesh, targets: &VertexTargets) -> Result<Vec<Vec3>> {
    if targets.len() != mesh.num_vertices() {
        return Err(Error::TargetMismatch {
            mesh: mesh.num_vertices(),
            targets: targets.len(),
        });
    }
    let normals = mesh.vertex_normals()?;
    Ok(targets
        .values
        .iter()
        .zip(&targets.covered)
        .zip(normals)
        .map(|((t, &c), n)| if c { *t } else { n })
        .collect())
}

/// `Σ M ‖N̂ − N^ET‖²` for one view, where `N^ET` interpolates the world-frame
/// `targets` over the rendered faces. Targets are constants; the gradient
/// flows through both renders' barycentrics and `N̂`.
fn et_term(mesh: &TriMesh, out: &RenderOutput, obs: &ViewObservation, targets: &[Vec3], acc: &mut Backward) -> Result<f64> {
    let r = out.view.rotation();
    let cam: Vec<Vec3> = targets.iter().map(|t| r * t).collect();
    let raw = render_attributes(mesh, out, &cam, Vec3::zeros());
    let faces = mesh.faces();
    let mut et = Vec::with_capacity(raw.pixels().len());
    let mut grad_bary = vec![[0.0; 3]; raw.pixels().len()];
    for (px, s) in raw.pixels().iter().enumerate() {
        let (Some(f), m) = (out.face_id.pixels()[px], obs.mask.pixels()[px]) else {
            et.push(Vec3::zeros());
            continue;
        };
        let len = s.norm();
        if len <= 1e-12 {
            et.push(Vec3::zeros());
            continue;
        }
        let unit = s / len;
        et.push(unit);
        if m == 0.0 {
            continue;
        }
        let g = (unit - out.normal_image.pixels()[px]) * (2.0 * m);
        let g_s = (g - unit * unit.dot(&g)) / len;
        let tri = faces[f as usize];
        for k in 0..3 {
            grad_bary[px][k] = g_s.dot(&cam[tri[k]]);
        }
    }
    let (w, h) = raw.dims();
    normal_image_term(mesh, out, &obs.mask, &Image::from_vec(w, h, et), Some(&grad_bary), acc)
}

/// Mask-weighted squared difference between rendered normals and the
/// rendered interpolation of `targets`, summed over pixels and views.
pub fn loss_et(
    mesh: &TriMesh,
    observations: &[ViewObservation],
    targets: &VertexTargets,
    sigma: f64,
) -> Result<LossGrad> {
    check_observations(observations)?;
    if mesh.num_faces() == 0 {
        return Err(Error::EmptyMesh);
    }
    let effective = effective_targets(mesh, targets)?;
    let renders = render_all(mesh, observations, sigma);
    let (per_view, grad) = accumulate(mesh, &renders, observations, |_, out, obs, acc| {
        et_term(mesh, out, obs, &effective, acc)
    })?;
    Ok(LossGrad {
        value: per_view.iter().sum(),
        per_view,
        grad,
    })
}

/// Minimizes `L_mask + L_ET`, recomputing the explicit targets from the
/// observed normal maps at every iteration. Remeshes at the final coarse
/// edge length; the step size decays linearly to zero so the result
/// settles instead of jittering. In the returned report `l_normal` holds `L_ET`, or the
/// plain normal term when `config.explicit_target` is off.
pub fn refine(
    mesh: &TriMesh,
    observations: &[ViewObservation],
    config: &ReconConfig,
) -> Result<(TriMesh, LossReport)> {
    config.validate()?;
    check_observations(observations)?;
    mesh.validate()?;
    let mut report = LossReport::default();
    if config.refine_iters == 0 {
        return Ok((mesh.clone(), report));
    }
    let edge = config.edge_end * mesh.bbox_diagonal();
    let plan = StagePlan {
        stage: Stage::Refine,
        iters: config.refine_iters,
        config,
        edge_length: &|_| edge,
        expansion: config.refine_expansion,
        anneal: true,
        pixel: observations[0].view.pixel_world_size(),
    };
    let out = run_stage(mesh.clone(), &plan, &mut report, |m| {
        let renders = render_all(m, observations, config.sigma);
        let effective = if config.explicit_target {
            let targets = targets_from_renders(m, &renders, observations, Payload::Normals, config.target_normalization)?;
            Some(effective_targets(m, &targets)?)
        } else {
            None
        };
        let (terms, grad) = accumulate(m, &renders, observations, |_, out, obs, acc| {
            let lm = mask_term(out, obs, acc)?;
            let le = match &effective {
                Some(t) => et_term(m, out, obs, t, acc)?,
                None => normal_image_term(m, out, &obs.mask, &obs.normals, None, acc)?,
            };
            Ok((lm, le))
        })?;
        Ok(Evaluation {
            l_mask: terms.iter().map(|t| t.0).sum(),
            l_normal: terms.iter().map(|t| t.1).sum(),
            per_view: terms.iter().map(|t| t.0 + t.1).collect(),
            grad,
        })
    })?;
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use crate::raster::DEFAULT_SIGMA;
    use crate::views::{render_observation, OrthoView};

    fn fixture(mesh: &TriMesh, res: usize) -> Vec<ViewObservation> {
        OrthoView::ring(4, res).iter().map(|v| render_observation(mesh, v)).collect()
    }

    fn own_normals(mesh: &TriMesh) -> VertexTargets {
        let n = mesh.vertex_normals().unwrap();
        VertexTargets {
            covered: vec![true; n.len()],
            values: n,
        }
    }

    #[test]
    fn own_normals_cost_nothing() {
        let sphere = primitives::icosphere(3, 0.4);
        let obs = fixture(&sphere, 64);
        let l = loss_et(&sphere, &obs, &own_normals(&sphere), DEFAULT_SIGMA).unwrap();
        assert!(l.value <= 1e-6, "{}", l.value);
    }

    #[test]
    fn reversed_normals_cost_four_per_pixel() {
        let sphere = primitives::icosphere(3, 0.4);
        let obs = fixture(&sphere, 64);
        let mut t = own_normals(&sphere);
        t.values.iter_mut().for_each(|v| *v = -*v);
        let l = loss_et(&sphere, &obs, &t, DEFAULT_SIGMA).unwrap();
        let expected: f64 = obs
            .iter()
            .map(|o| {
                let out = crate::raster::rasterize(&sphere, &o.view, DEFAULT_SIGMA);
                out.face_id
                    .pixels()
                    .iter()
                    .zip(o.mask.pixels())
                    .filter(|(f, _)| f.is_some())
                    .map(|(_, m)| 4.0 * m)
                    .sum::<f64>()
            })
            .sum();
        assert!((l.value - expected).abs() <= 1e-6 * expected, "{} vs {expected}", l.value);
    }

    #[test]
    fn wrong_target_count_is_an_error() {
        let sphere = primitives::icosphere(2, 0.4);
        let obs = fixture(&sphere, 32);
        let mut t = own_normals(&sphere);
        t.values.pop();
        t.covered.pop();
        assert!(matches!(
            loss_et(&sphere, &obs, &t, DEFAULT_SIGMA),
            Err(Error::TargetMismatch { .. })
        ));
    }

    #[test]
    fn zero_iterations_is_identity() {
        let sphere = primitives::icosphere(2, 0.4);
        let obs = fixture(&sphere, 32);
        let config = ReconConfig {
            refine_iters: 0,
            ..Default::default()
        };
        let (out, report) = refine(&sphere, &obs, &config).unwrap();
        assert_eq!(out.vertices(), sphere.vertices());
        assert!(report.is_empty());
    }
}
