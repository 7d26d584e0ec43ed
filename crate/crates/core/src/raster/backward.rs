use std::ops::{AddAssign, Index};

use nalgebra::Vector2;

use super::edge_fn_grad;
use super::forward::{band_sigmoid_derivative, RenderOutput};
use crate::error::{Error, Result};
use crate::geometry::mesh::vertex_normal_sums;
use crate::geometry::TriMesh;
use crate::views::Image;
use crate::Vec3;

/// Per-vertex loss gradients dL/dv in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer(Vec<Vec3>);

impl GradientBuffer {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Vec3::zeros(); n])
    }

    pub fn from_vec(g: Vec<Vec3>) -> Self {
        Self(g)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Vec3] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Vec3] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<Vec3> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.iter().all(|c| c.is_finite()))
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.0 {
            *g *= s;
        }
    }
}

impl Index<usize> for GradientBuffer {
    type Output = Vec3;
    fn index(&self, i: usize) -> &Vec3 {
        &self.0[i]
    }
}

impl AddAssign<&GradientBuffer> for GradientBuffer {
    fn add_assign(&mut self, rhs: &GradientBuffer) {
        assert_eq!(self.len(), rhs.len(), "gradient length");
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

/// Accumulates image-space gradients from any number of views, then maps
/// them back to vertex positions (including the dependence of the vertex
/// normals on the positions) in [`Backward::finish`].
#[derive(Debug, Clone)]
pub struct Backward {
    d_position: Vec<Vec3>,
    d_normal: Vec<Vec3>,
}

impl Backward {
    pub fn new(num_vertices: usize) -> Self {
        Self {
            d_position: vec![Vec3::zeros(); num_vertices],
            d_normal: vec![Vec3::zeros(); num_vertices],
        }
    }

    /// Adds another accumulator (fixed order keeps sums reproducible).
    pub fn merge(&mut self, other: &Backward) {
        for (a, b) in self.d_position.iter_mut().zip(&other.d_position) {
            *a += b;
        }
        for (a, b) in self.d_normal.iter_mut().zip(&other.d_normal) {
            *a += b;
        }
    }

    /// Chain rule through the soft silhouette.
    pub fn add_mask(&mut self, out: &RenderOutput, grad: &Image<f64>) -> Result<()> {
        check_dims(out, grad.dims())?;
        if grad.pixels().iter().any(|g| !g.is_finite()) {
            return Err(Error::PoisonedGradient);
        }
        let mut d_px = vec![Vector2::zeros(); self.d_position.len()];
        for s in out.silhouette_samples() {
            let up = grad.pixels()[s.pixel];
            if up == 0.0 {
                continue;
            }
            let signed = if s.inside { s.distance } else { -s.distance };
            let k = up * band_sigmoid_derivative(signed / out.sigma) / out.sigma;
            let [a, b] = s.vertices;
            d_px[a] += s.direction * (k * (1.0 - s.t));
            d_px[b] += s.direction * (k * s.t);
        }
        self.add_pixel_gradients(out, &d_px);
        Ok(())
    }

    /// Chain rule through the normal image. `grad_bary` optionally adds
    /// upstream gradients with respect to each pixel's barycentric
    /// coordinates (used when another interpolated quantity enters the loss).
    pub fn add_normal(
        &mut self,
        mesh: &TriMesh,
        out: &RenderOutput,
        grad: &Image<Vec3>,
        grad_bary: Option<&[[f64; 3]]>,
    ) -> Result<()> {
        check_dims(out, grad.dims())?;
        if grad
            .pixels()
            .iter()
            .any(|g| !g.iter().all(|c| c.is_finite()))
        {
            return Err(Error::PoisonedGradient);
        }
        if let Some(gb) = grad_bary {
            if gb.len() != grad.pixels().len() || gb.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::PoisonedGradient);
            }
        }
        let faces = mesh.faces();
        let mut d_px = vec![Vector2::zeros(); self.d_position.len()];
        let mut d_cam_normal = vec![Vec3::zeros(); self.d_position.len()];
        for (pixel, face) in out.face_id.pixels().iter().enumerate() {
            let Some(f) = face else { continue };
            let g = grad.pixels()[pixel];
            let extra = grad_bary.map(|gb| gb[pixel]).unwrap_or([0.0; 3]);
            if g == Vec3::zeros() && extra == [0.0; 3] {
                continue;
            }
            let tri = faces[*f as usize];
            let l = out.bary[pixel];
            let n = [
                out.cam_normals[tri[0]],
                out.cam_normals[tri[1]],
                out.cam_normals[tri[2]],
            ];
            let s = n[0] * l[0] + n[1] * l[1] + n[2] * l[2];
            let len = s.norm();
            let mut g_l = extra;
            if len > 1e-12 && g != Vec3::zeros() {
                let unit = s / len;
                let g_s = (g - unit * unit.dot(&g)) / len;
                for k in 0..3 {
                    g_l[k] += g_s.dot(&n[k]);
                    d_cam_normal[tri[k]] += g_s * l[k];
                }
            }
            let p = out.pixel_center(pixel);
            barycentric_backward(out, tri, p, l, g_l, &mut d_px);
        }
        self.add_pixel_gradients(out, &d_px);
        let rt = out.view.rotation().transpose();
        for (acc, g) in self.d_normal.iter_mut().zip(&d_cam_normal) {
            *acc += rt * g;
        }
        Ok(())
    }

    /// Pixel-space vertex gradients to world space for one view.
    fn add_pixel_gradients(&mut self, out: &RenderOutput, d_px: &[Vector2<f64>]) {
        let (sx, sy) = out.view.pixel_scale();
        let rt = out.view.rotation().transpose();
        for (acc, g) in self.d_position.iter_mut().zip(d_px) {
            if g.x != 0.0 || g.y != 0.0 {
                *acc += rt * Vec3::new(g.x * sx, -g.y * sy, 0.0);
            }
        }
    }

    /// Adds the gradient flowing through the area-weighted vertex normals
    /// and returns dL/dv.
    pub fn finish(self, mesh: &TriMesh) -> GradientBuffer {
        let verts = mesh.vertices();
        let faces = mesh.faces();
        let mut out = self.d_position;
        if self.d_normal.iter().any(|g| *g != Vec3::zeros()) {
            let sums = vertex_normal_sums(verts, faces);
            // dL/dm for the unnormalized sums m.
            let d_sum: Vec<Vec3> = sums
                .iter()
                .zip(&self.d_normal)
                .map(|(m, g)| {
                    let len = m.norm();
                    if len <= 1e-300 {
                        return Vec3::zeros();
                    }
                    let n = m / len;
                    (g - n * n.dot(g)) / len
                })
                .collect();
            for f in faces {
                let u = d_sum[f[0]] + d_sum[f[1]] + d_sum[f[2]];
                if u == Vec3::zeros() {
                    continue;
                }
                let e1 = verts[f[1]] - verts[f[0]];
                let e2 = verts[f[2]] - verts[f[0]];
                let g1 = e2.cross(&u);
                let g2 = u.cross(&e1);
                out[f[1]] += g1;
                out[f[2]] += g2;
                out[f[0]] -= g1 + g2;
            }
        }
        GradientBuffer(out)
    }
}

fn check_dims(out: &RenderOutput, dims: (usize, usize)) -> Result<()> {
    let expected = (out.view.width, out.view.height);
    if dims != expected {
        return Err(Error::SizeMismatch(dims, expected));
    }
    Ok(())
}

/// Gradient of `λ_k = E_k / A` with respect to the projected triangle
/// vertices, for a fixed pixel center `p`.
fn barycentric_backward(
    out: &RenderOutput,
    tri: [usize; 3],
    p: Vector2<f64>,
    l: [f64; 3],
    g_l: [f64; 3],
    d_px: &mut [Vector2<f64>],
) {
    let (a, b, c) = (out.screen[tri[0]], out.screen[tri[1]], out.screen[tri[2]]);
    let area = super::edge_fn(a, b, c);
    let g_area = -(g_l[0] * l[0] + g_l[1] * l[1] + g_l[2] * l[2]) / area;
    let g_n = [g_l[0] / area, g_l[1] / area, g_l[2] / area];
    let [_, gb, gc] = edge_fn_grad(p, b, c);
    d_px[tri[1]] += gb * g_n[0];
    d_px[tri[2]] += gc * g_n[0];
    let [ga, _, gc] = edge_fn_grad(a, p, c);
    d_px[tri[0]] += ga * g_n[1];
    d_px[tri[2]] += gc * g_n[1];
    let [ga, gb, _] = edge_fn_grad(a, b, p);
    d_px[tri[0]] += ga * g_n[2];
    d_px[tri[1]] += gb * g_n[2];
    let [ga, gb, gc] = edge_fn_grad(a, b, c);
    d_px[tri[0]] += ga * g_area;
    d_px[tri[1]] += gb * g_area;
    d_px[tri[2]] += gc * g_area;
}

/// dL/dv for a loss on the soft mask of one view.
pub fn backward_mask(
    mesh: &TriMesh,
    out: &RenderOutput,
    grad: &Image<f64>,
) -> Result<GradientBuffer> {
    let mut acc = Backward::new(mesh.num_vertices());
    acc.add_mask(out, grad)?;
    Ok(acc.finish(mesh))
}

/// dL/dv for a loss on the camera-frame normal image of one view.
pub fn backward_normal(
    mesh: &TriMesh,
    out: &RenderOutput,
    grad: &Image<Vec3>,
) -> Result<GradientBuffer> {
    let mut acc = Backward::new(mesh.num_vertices());
    acc.add_normal(mesh, out, grad, None)?;
    Ok(acc.finish(mesh))
}
