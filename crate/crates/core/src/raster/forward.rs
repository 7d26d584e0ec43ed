use nalgebra::Vector2;
use rayon::prelude::*;

use super::{barycentric, edge_fn};
use crate::geometry::mesh::vertex_normals_of;
use crate::geometry::TriMesh;
use crate::views::{Image, OrthoView};
use crate::Vec3;

const TILE_ROWS: usize = 16;
const NO_FACE: u32 = u32::MAX;
/// Minimum |2·area| in pixels² for a face to be rasterized.
const MIN_PIXEL_AREA: f64 = 1e-12;
/// Depth slack of the silhouette occlusion test, world units.
const OCCLUSION_TOLERANCE: f64 = 1e-4;
/// Silhouette band half-width in units of σ.
pub(crate) const BAND_SIGMAS: f64 = 3.0;

/// Silhouette-band record of one pixel: the nearest visible contour edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilhouetteSample {
    /// Row-major pixel index.
    pub pixel: usize,
    /// Index into the mesh's edge list.
    pub edge: usize,
    /// Edge endpoints `a`, `b` (vertex indices).
    pub vertices: [usize; 2],
    /// Closest point parameter along `a -> b`, clamped to [0, 1].
    pub t: f64,
    /// Unsigned distance to the edge in pixels.
    pub distance: f64,
    /// Whether the pixel center is covered (positive signed distance).
    pub inside: bool,
    /// d(signed distance)/d(closest point), a unit vector in pixel space.
    pub(crate) direction: Vector2<f64>,
}

/// Result of [`rasterize`].
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub view: OrthoView,
    pub sigma: f64,
    /// Soft silhouette, values in [0, 1].
    pub soft_mask: Image<f64>,
    /// Unit camera-frame normals; zero on background.
    pub normal_image: Image<Vec3>,
    /// Camera-frame z, larger is closer; `-inf` on background.
    pub depth: Image<f64>,
    pub face_id: Image<Option<u32>>,
    pub(crate) screen: Vec<Vector2<f64>>,
    pub(crate) vertex_depth: Vec<f64>,
    pub(crate) cam_normals: Vec<Vec3>,
    pub(crate) front: Vec<bool>,
    pub(crate) bary: Vec<[f64; 3]>,
    pub(crate) band: Vec<SilhouetteSample>,
}

impl RenderOutput {
    /// Binary coverage (1 where some face covers the pixel center).
    pub fn hard_mask(&self) -> Image<f64> {
        self.face_id.map(|f| if f.is_some() { 1.0 } else { 0.0 })
    }

    /// Silhouette-band pixels in row-major order.
    pub fn silhouette_samples(&self) -> &[SilhouetteSample] {
        &self.band
    }

    /// Barycentric coordinates of the covering face at each pixel.
    pub fn barycentrics(&self) -> &[[f64; 3]] {
        &self.bary
    }

    /// Projected vertex positions in pixel coordinates.
    pub fn screen_positions(&self) -> &[Vector2<f64>] {
        &self.screen
    }

    pub fn vertex_depths(&self) -> &[f64] {
        &self.vertex_depth
    }

    pub fn front_facing(&self) -> &[bool] {
        &self.front
    }

    pub(crate) fn pixel_center(&self, pixel: usize) -> Vector2<f64> {
        let w = self.view.width;
        Vector2::new((pixel % w) as f64 + 0.5, (pixel / w) as f64 + 0.5)
    }

    /// Depth of face `f`'s plane at pixel position `p`.
    pub(crate) fn plane_depth(
        &self,
        faces: &[[usize; 3]],
        f: usize,
        p: Vector2<f64>,
    ) -> Option<f64> {
        let [a, b, c] = faces[f];
        let l = barycentric(p, self.screen[a], self.screen[b], self.screen[c])?;
        Some(
            l[0] * self.vertex_depth[a] + l[1] * self.vertex_depth[b] + l[2] * self.vertex_depth[c],
        )
    }
}

/// Rescaled logistic: 0.5 at x = 0, exactly 0 and 1 at x = ∓3, clamped beyond.
pub(crate) fn band_sigmoid(x: f64) -> f64 {
    let lo = logistic(-BAND_SIGMAS);
    let hi = logistic(BAND_SIGMAS);
    ((logistic(x) - lo) / (hi - lo)).clamp(0.0, 1.0)
}

pub(crate) fn band_sigmoid_derivative(x: f64) -> f64 {
    if x.abs() >= BAND_SIGMAS {
        return 0.0;
    }
    let s = logistic(x);
    s * (1.0 - s) / (logistic(BAND_SIGMAS) - logistic(-BAND_SIGMAS))
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Coverage {
    depth: Vec<f64>,
    face: Vec<u32>,
    bary: Vec<[f64; 3]>,
}

/// Depth-buffered hard coverage at pixel centers, binned into row tiles.
fn cover(
    screen: &[Vector2<f64>],
    zs: &[f64],
    faces: &[[usize; 3]],
    front: &[bool],
    w: usize,
    h: usize,
) -> Coverage {
    let mut cov = Coverage {
        depth: vec![f64::NEG_INFINITY; w * h],
        face: vec![NO_FACE; w * h],
        bary: vec![[0.0; 3]; w * h],
    };
    if w == 0 || h == 0 {
        return cov;
    }
    let tiles = h.div_ceil(TILE_ROWS);
    let mut bins: Vec<Vec<(u32, [usize; 4])>> = vec![Vec::new(); tiles];
    for (f, tri) in faces.iter().enumerate() {
        if !front[f] {
            continue;
        }
        let (a, b, c) = (screen[tri[0]], screen[tri[1]], screen[tri[2]]);
        let min = a.inf(&b).inf(&c);
        let max = a.sup(&b).sup(&c);
        // Pixel j has its center at j + 0.5.
        let x0 = (min.x - 0.5).ceil().max(0.0);
        let y0 = (min.y - 0.5).ceil().max(0.0);
        let x1 = (max.x - 0.5).floor().min((w - 1) as f64);
        let y1 = (max.y - 0.5).floor().min((h - 1) as f64);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let r = [x0 as usize, x1 as usize, y0 as usize, y1 as usize];
        for bin in bins
            .iter_mut()
            .take(r[3] / TILE_ROWS + 1)
            .skip(r[2] / TILE_ROWS)
        {
            bin.push((f as u32, r));
        }
    }
    let rows = TILE_ROWS * w;
    cov.depth
        .par_chunks_mut(rows)
        .zip(cov.face.par_chunks_mut(rows))
        .zip(cov.bary.par_chunks_mut(rows))
        .zip(bins.par_iter())
        .enumerate()
        .for_each(|(tile, (((depth, face), bary), bin))| {
            let row0 = tile * TILE_ROWS;
            let row1 = row0 + depth.len() / w;
            for &(f, [x0, x1, y0, y1]) in bin {
                let tri = faces[f as usize];
                let (a, b, c) = (screen[tri[0]], screen[tri[1]], screen[tri[2]]);
                let area = edge_fn(a, b, c);
                for y in y0.max(row0)..=y1.min(row1 - 1) {
                    let py = y as f64 + 0.5;
                    for x in x0..=x1 {
                        let p = Vector2::new(x as f64 + 0.5, py);
                        let l = [
                            edge_fn(p, b, c) / area,
                            edge_fn(a, p, c) / area,
                            edge_fn(a, b, p) / area,
                        ];
                        if l[0] < 0.0 || l[1] < 0.0 || l[2] < 0.0 {
                            continue;
                        }
                        let z = l[0] * zs[tri[0]] + l[1] * zs[tri[1]] + l[2] * zs[tri[2]];
                        let i = (y - row0) * w + x;
                        if z > depth[i] {
                            depth[i] = z;
                            face[i] = f;
                            bary[i] = l;
                        }
                    }
                }
            }
        });
    cov
}

/// Renders `mesh` from `view` with silhouette softness `sigma` (pixels).
pub fn rasterize(mesh: &TriMesh, view: &OrthoView, sigma: f64) -> RenderOutput {
    assert!(sigma > 0.0, "softness must be positive");
    let (w, h) = (view.width, view.height);
    let rot = view.rotation();
    let verts = mesh.vertices();
    let faces = mesh.faces();
    let mut screen = Vec::with_capacity(verts.len());
    let mut vertex_depth = Vec::with_capacity(verts.len());
    for v in verts {
        let c = rot * v;
        screen.push(view.camera_to_pixel(c.x, c.y));
        vertex_depth.push(c.z);
    }
    let cam_normals: Vec<Vec3> = vertex_normals_of(verts, faces)
        .iter()
        .map(|n| rot * n)
        .collect();
    // Pixel y points down, so camera-CCW faces have negative pixel area.
    let front: Vec<bool> = faces
        .iter()
        .map(|f| edge_fn(screen[f[0]], screen[f[1]], screen[f[2]]) < -MIN_PIXEL_AREA)
        .collect();

    let cov = cover(&screen, &vertex_depth, faces, &front, w, h);

    let normal_data: Vec<Vec3> = cov
        .face
        .par_iter()
        .zip(cov.bary.par_iter())
        .map(|(&f, l)| {
            if f == NO_FACE {
                return Vec3::zeros();
            }
            let t = faces[f as usize];
            let s = cam_normals[t[0]] * l[0] + cam_normals[t[1]] * l[1] + cam_normals[t[2]] * l[2];
            let len = s.norm();
            if len > 1e-12 {
                s / len
            } else {
                Vec3::zeros()
            }
        })
        .collect();

    let mut out = RenderOutput {
        view: *view,
        sigma,
        soft_mask: Image::new(w, h, 0.0),
        normal_image: Image::from_vec(w, h, normal_data),
        depth: Image::from_vec(w, h, cov.depth),
        face_id: Image::from_vec(
            w,
            h,
            cov.face
                .iter()
                .map(|&f| (f != NO_FACE).then_some(f))
                .collect(),
        ),
        screen,
        vertex_depth,
        cam_normals,
        front,
        bary: cov.bary,
        band: Vec::new(),
    };
    out.band = silhouette_band(mesh, &out);
    let mut soft: Vec<f64> = out
        .face_id
        .pixels()
        .iter()
        .map(|f| if f.is_some() { 1.0 } else { 0.0 })
        .collect();
    for s in &out.band {
        let signed = if s.inside { s.distance } else { -s.distance };
        soft[s.pixel] = band_sigmoid(signed / sigma);
    }
    out.soft_mask = Image::from_vec(w, h, soft);
    out
}

/// Finds, for every pixel within `3σ` of a visible silhouette edge, the
/// nearest such edge. Ties go to the lower edge index.
fn silhouette_band(mesh: &TriMesh, out: &RenderOutput) -> Vec<SilhouetteSample> {
    let (w, h) = (out.view.width, out.view.height);
    let band = BAND_SIGMAS * out.sigma;
    let faces = mesh.faces();
    let face_at = |p: Vector2<f64>| -> Option<Option<u32>> {
        if p.x < 0.0 || p.y < 0.0 || p.x >= w as f64 || p.y >= h as f64 {
            return None;
        }
        Some(*out.face_id.get(p.x as usize, p.y as usize))
    };
    let mut best = vec![f64::INFINITY; w * h];
    let mut chosen: Vec<u32> = vec![u32::MAX; w * h];
    let mut samples: Vec<SilhouetteSample> = Vec::new();

    for (ei, edge) in mesh.adjacency().edges().iter().enumerate() {
        let mut front_faces = edge.faces.iter().filter(|&&f| out.front[f]);
        let (Some(&f), None) = (front_faces.next(), front_faces.next()) else {
            continue;
        };
        let [a, b] = edge.vertices;
        let c = faces[f]
            .iter()
            .copied()
            .find(|&v| v != a && v != b)
            .unwrap_or(a);
        let (pa, pb, pc) = (out.screen[a], out.screen[b], out.screen[c]);
        let ab = pb - pa;
        let len2 = ab.norm_squared();
        if len2 < 1e-24 {
            continue;
        }
        let mut outward = Vector2::new(-ab.y, ab.x) / len2.sqrt();
        if outward.dot(&(pc - pa)) > 0.0 {
            outward = -outward;
        }
        let (za, zb) = (out.vertex_depth[a], out.vertex_depth[b]);
        let min = pa.inf(&pb);
        let max = pa.sup(&pb);
        let x0 = (min.x - band - 0.5).ceil().max(0.0);
        let y0 = (min.y - band - 0.5).ceil().max(0.0);
        let x1 = (max.x + band - 0.5).floor().min(w as f64 - 1.0);
        let y1 = (max.y + band - 0.5).floor().min(h as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        for y in y0 as usize..=y1 as usize {
            for x in x0 as usize..=x1 as usize {
                let pixel = y * w + x;
                let p = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
                let t = ((p - pa).dot(&ab) / len2).clamp(0.0, 1.0);
                let q = pa + ab * t;
                let diff = q - p;
                let d = diff.norm();
                if d >= band || d >= best[pixel] {
                    continue;
                }
                let inside = out.face_id.pixels()[pixel].is_some();
                let side = (p - q).dot(&outward);
                // A covered pixel beyond the edge (or an empty one before it)
                // belongs to some other boundary.
                if (inside && side > 1e-9) || (!inside && side < -1e-9) {
                    continue;
                }
                // The closest point must not be hidden behind another face.
                if let Some(Some(g)) = face_at(q) {
                    let g = g as usize;
                    if !faces[g].contains(&a) && !faces[g].contains(&b) {
                        let zq = za + t * (zb - za);
                        if out
                            .plane_depth(faces, g, q)
                            .is_some_and(|zg| zg > zq + OCCLUSION_TOLERANCE)
                        {
                            continue;
                        }
                    }
                }
                // Just outside the edge there must be background.
                if let Some(Some(_)) = face_at(q + outward) {
                    continue;
                }
                let direction = if d > 1e-12 {
                    if inside {
                        diff / d
                    } else {
                        -diff / d
                    }
                } else {
                    outward
                };
                best[pixel] = d;
                chosen[pixel] = samples.len() as u32;
                samples.push(SilhouetteSample {
                    pixel,
                    edge: ei,
                    vertices: [a, b],
                    t,
                    distance: d,
                    inside,
                    direction,
                });
            }
        }
    }
    chosen
        .iter()
        .filter(|&&i| i != u32::MAX)
        .map(|&i| samples[i as usize])
        .collect()
}

/// Interpolates a per-vertex attribute over covered pixels; `background`
/// elsewhere.
pub fn render_attributes(
    mesh: &TriMesh,
    out: &RenderOutput,
    attributes: &[Vec3],
    background: Vec3,
) -> Image<Vec3> {
    assert_eq!(
        attributes.len(),
        mesh.num_vertices(),
        "one attribute per vertex"
    );
    let faces = mesh.faces();
    let data = out
        .face_id
        .pixels()
        .iter()
        .zip(&out.bary)
        .map(|(f, l)| match f {
            Some(f) => {
                let t = faces[*f as usize];
                attributes[t[0]] * l[0] + attributes[t[1]] * l[1] + attributes[t[2]] * l[2]
            }
            None => background,
        })
        .collect();
    Image::from_vec(out.view.width, out.view.height, data)
}
