//! Reconstruction losses summed over pixels and views, with gradients.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::raster::{rasterize, Backward, GradientBuffer, RenderOutput};
use crate::views::{Image, ViewObservation};
use crate::Vec3;

/// Loss value, per-view split and dL/dv.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub value: f64,
    pub per_view: Vec<f64>,
    pub grad: GradientBuffer,
}

pub(crate) fn check_observation(obs: &ViewObservation) -> Result<()> {
    let expected = (obs.view.width, obs.view.height);
    for dims in [obs.mask.dims(), obs.normals.dims()] {
        if dims != expected {
            return Err(Error::SizeMismatch(dims, expected));
        }
    }
    Ok(())
}

pub(crate) fn check_observations(observations: &[ViewObservation]) -> Result<()> {
    if observations.is_empty() {
        return Err(Error::InvalidArgument("at least one observation required".into()));
    }
    observations.iter().try_for_each(check_observation)
}

/// `Σ (soft − target)²`, accumulating its gradient into `acc`.
pub(crate) fn mask_term(out: &RenderOutput, obs: &ViewObservation, acc: &mut Backward) -> Result<f64> {
    let (w, h) = obs.mask.dims();
    let mut loss = 0.0;
    let grad: Vec<f64> = out
        .soft_mask
        .pixels()
        .iter()
        .zip(obs.mask.pixels())
        .map(|(s, m)| {
            let r = s - m;
            loss += r * r;
            2.0 * r
        })
        .collect();
    acc.add_mask(out, &Image::from_vec(w, h, grad))?;
    Ok(loss)
}

/// `Σ M ‖N̂ − target‖²` weighted by the observed mask `M`, where `target`
/// is a per-pixel normal image. Uncovered pixels render a zero normal.
pub(crate) fn normal_image_term(
    mesh: &TriMesh,
    out: &RenderOutput,
    weight: &Image<f64>,
    target: &Image<Vec3>,
    grad_bary: Option<&[[f64; 3]]>,
    acc: &mut Backward,
) -> Result<f64> {
    let (w, h) = weight.dims();
    let mut loss = 0.0;
    let grad: Vec<Vec3> = out
        .normal_image
        .pixels()
        .iter()
        .zip(target.pixels())
        .zip(weight.pixels())
        .map(|((n, t), &m)| {
            if m == 0.0 {
                return Vec3::zeros();
            }
            let r = n - t;
            loss += m * r.norm_squared();
            r * (2.0 * m)
        })
        .collect();
    acc.add_normal(mesh, out, &Image::from_vec(w, h, grad), grad_bary)?;
    Ok(loss)
}

/// Renders every observation's view in parallel.
pub fn render_all(mesh: &TriMesh, observations: &[ViewObservation], sigma: f64) -> Vec<RenderOutput> {
    observations
        .par_iter()
        .map(|o| rasterize(mesh, &o.view, sigma))
        .collect()
}

/// Runs `term` per view in parallel and merges gradients in view order.
pub(crate) fn accumulate<T, F>(
    mesh: &TriMesh,
    renders: &[RenderOutput],
    observations: &[ViewObservation],
    term: F,
) -> Result<(Vec<T>, GradientBuffer)>
where
    T: Send,
    F: Fn(usize, &RenderOutput, &ViewObservation, &mut Backward) -> Result<T> + Sync,
{
    let parts: Vec<(T, Backward)> = renders
        .par_iter()
        .zip(observations)
        .enumerate()
        .map(|(k, (out, obs))| {
            let mut acc = Backward::new(mesh.num_vertices());
            let t = term(k, out, obs, &mut acc)?;
            Ok((t, acc))
        })
        .collect::<Result<_>>()?;
    let mut total = Backward::new(mesh.num_vertices());
    let mut values = Vec::with_capacity(parts.len());
    for (t, acc) in parts {
        total.merge(&acc);
        values.push(t);
    }
    Ok((values, total.finish(mesh)))
}

fn single<F>(mesh: &TriMesh, observations: &[ViewObservation], sigma: f64, term: F) -> Result<LossGrad>
where
    F: Fn(&RenderOutput, &ViewObservation, &mut Backward) -> Result<f64> + Sync,
{
    check_observations(observations)?;
    if mesh.num_faces() == 0 {
        return Err(Error::EmptyMesh);
    }
    let renders = render_all(mesh, observations, sigma);
    let (per_view, grad) = accumulate(mesh, &renders, observations, |_, out, obs, acc| term(out, obs, acc))?;
    Ok(LossGrad {
        value: per_view.iter().sum(),
        per_view,
        grad,
    })
}

/// Squared difference between rendered soft masks and observed masks,
/// summed over pixels and views.
pub fn loss_mask(mesh: &TriMesh, observations: &[ViewObservation], sigma: f64) -> Result<LossGrad> {
    single(mesh, observations, sigma, mask_term)
}

/// Observed-mask weighted squared difference between rendered and observed
/// camera-frame normals, summed over pixels and views.
pub fn loss_normal(mesh: &TriMesh, observations: &[ViewObservation], sigma: f64) -> Result<LossGrad> {
    single(mesh, observations, sigma, |out, obs, acc| {
        normal_image_term(mesh, out, &obs.mask, &obs.normals, None, acc)
    })
}
