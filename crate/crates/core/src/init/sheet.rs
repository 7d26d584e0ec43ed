//! Depth sheets, boundary zippering and the two-view initializer.

use serde::{Deserialize, Serialize};

use super::integrate::{integrate_normals, mask_components, DepthMap, IntegrationMode, Rotations};
use crate::error::{Error, Result};
use crate::geometry::{primitives, qem_simplify, TriMesh};
use crate::views::{Image, OrthoView, ViewObservation};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    /// Number of random in-plane rotations averaged during integration.
    pub rotations: usize,
    pub seed: u64,
    pub mode: IntegrationMode,
    /// Pixel step between sheet vertices.
    pub stride: usize,
    pub face_budget: usize,
    /// Larger observations are box-downsampled to at most this size first.
    pub max_resolution: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            rotations: 10,
            seed: 0,
            mode: IntegrationMode::Slope,
            stride: 2,
            face_budget: 2000,
            max_resolution: 256,
        }
    }
}

/// Lifts valid depth pixels on a `stride` grid to world space and
/// triangulates every grid cell whose four corners are valid.
///
/// Faces are counter-clockwise as seen from `view`. Cells touching another
/// cell only at a corner are dropped so that the sheet stays manifold.
pub fn depth_to_sheet(depth: &DepthMap, view: &OrthoView, stride: usize) -> Result<TriMesh> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    if depth.valid_count() == 0 {
        return Err(Error::EmptyMask);
    }
    let nx = (depth.width() - 1) / stride + 1;
    let ny = (depth.height() - 1) / stride + 1;
    let mut index = vec![usize::MAX; nx * ny];
    let mut vertices = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (i * stride, j * stride);
            if let Some(d) = depth.get(x, y) {
                index[j * nx + i] = vertices.len();
                vertices.push(view.unproject(x as f64 + 0.5, y as f64 + 0.5, d));
            }
        }
    }
    let (cx, cy) = (nx.saturating_sub(1), ny.saturating_sub(1));
    let mut cell: Vec<bool> = (0..cx * cy)
        .map(|c| {
            let (i, j) = (c % cx, c / cx);
            [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
                .iter()
                .all(|&(a, b)| index[b * nx + a] != usize::MAX)
        })
        .collect();
    remove_pinches(&mut cell, cx, cy);
    let mut faces = Vec::new();
    for j in 0..cy {
        for i in 0..cx {
            if !cell[j * cx + i] {
                continue;
            }
            let p00 = index[j * nx + i];
            let p10 = index[j * nx + i + 1];
            let p01 = index[(j + 1) * nx + i];
            let p11 = index[(j + 1) * nx + i + 1];
            faces.push([p01, p11, p10]);
            faces.push([p01, p10, p00]);
        }
    }
    if faces.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut mesh = TriMesh::new(vertices, faces)?;
    mesh.remove_unreferenced();
    Ok(mesh)
}

/// Clears cells until no grid node is shared by exactly two diagonal cells.
fn remove_pinches(cell: &mut [bool], cx: usize, cy: usize) {
    let at = |cell: &[bool], i: isize, j: isize| {
        i >= 0
            && j >= 0
            && (i as usize) < cx
            && (j as usize) < cy
            && cell[j as usize * cx + i as usize]
    };
    loop {
        let mut changed = false;
        for j in 1..cy as isize {
            for i in 1..cx as isize {
                let tl = at(cell, i - 1, j - 1);
                let tr = at(cell, i, j - 1);
                let bl = at(cell, i - 1, j);
                let br = at(cell, i, j);
                if tl && br && !tr && !bl {
                    cell[j as usize * cx + i as usize] = false;
                    changed = true;
                } else if tr && bl && !tl && !br {
                    cell[j as usize * cx + (i - 1) as usize] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

struct LoopInfo {
    vertices: Vec<usize>,
    centroid: (f64, f64),
    /// Signed area in the xy plane.
    area: f64,
}

fn loop_info(mesh: &TriMesh, vertices: Vec<usize>) -> LoopInfo {
    let p = mesh.vertices();
    let n = vertices.len() as f64;
    let (mut sx, mut sy, mut area) = (0.0, 0.0, 0.0);
    for (k, &v) in vertices.iter().enumerate() {
        let a = p[v];
        let b = p[vertices[(k + 1) % vertices.len()]];
        sx += a.x;
        sy += a.y;
        area += a.x * b.y - b.x * a.y;
    }
    LoopInfo {
        vertices,
        centroid: (sx / n, sy / n),
        area: area / 2.0,
    }
}

/// Closes two open sheets facing +z (`front`) and -z (`back`) by stitching
/// each pair of corresponding boundary loops with a triangle strip.
///
/// Loops are paired by xy centroid, enclosed area and winding.
pub fn join_sheets(front: &TriMesh, back: &TriMesh) -> Result<TriMesh> {
    let front_loops: Vec<LoopInfo> = front
        .adjacency()
        .boundary_loops(front.faces())
        .into_iter()
        .map(|l| loop_info(front, l))
        .collect();
    let back_loops: Vec<LoopInfo> = back
        .adjacency()
        .boundary_loops(back.faces())
        .into_iter()
        .map(|l| loop_info(back, l))
        .collect();
    if front_loops.len() != back_loops.len() {
        return Err(Error::TopologyMismatch {
            front: front_loops.len(),
            back: back_loops.len(),
        });
    }
    let mut pairs = Vec::new();
    for (i, a) in front_loops.iter().enumerate() {
        for (j, b) in back_loops.iter().enumerate() {
            let d = ((a.centroid.0 - b.centroid.0).powi(2) + (a.centroid.1 - b.centroid.1).powi(2))
                .sqrt();
            // The back sheet winds the other way round.
            let (fa, ba) = (a.area, -b.area);
            let sign = if fa.signum() != ba.signum() { 1e3 } else { 0.0 };
            let size = (fa.abs().sqrt() - ba.abs().sqrt()).abs();
            pairs.push((d + size + sign, i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut partner = vec![usize::MAX; front_loops.len()];
    let mut taken = vec![false; back_loops.len()];
    for (_, i, j) in pairs {
        if partner[i] == usize::MAX && !taken[j] {
            partner[i] = j;
            taken[j] = true;
        }
    }

    let base = front.num_vertices();
    let mut out = front.clone();
    out.append(back);
    let pos = out.vertices().to_vec();
    let mut faces = out.faces().to_vec();
    for (i, a) in front_loops.iter().enumerate() {
        let b: Vec<usize> = back_loops[partner[i]]
            .vertices
            .iter()
            .rev()
            .map(|v| v + base)
            .collect();
        zipper(&pos, &a.vertices, &b, &mut faces);
    }
    let mesh = TriMesh::new(pos, faces)?;
    let report = mesh.topology();
    if !report.is_watertight() {
        return Err(Error::InvalidMesh(format!(
            "zippered mesh is not closed: {report:?}"
        )));
    }
    Ok(mesh)
}

/// Greedy strip between loop `a` and loop `b` (same winding sense).
fn zipper(pos: &[Vec3], a: &[usize], b: &[usize], faces: &mut Vec<[usize; 3]>) {
    let (n, m) = (a.len(), b.len());
    let start = (0..m)
        .min_by(|&x, &y| {
            let dx = (pos[b[x]] - pos[a[0]]).xy().norm_squared();
            let dy = (pos[b[y]] - pos[a[0]]).xy().norm_squared();
            dx.total_cmp(&dy)
        })
        .unwrap_or(0);
    let bv = |j: usize| b[(start + j) % m];
    let av = |i: usize| a[i % n];
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let advance_a = if i == n {
            false
        } else if j == m {
            true
        } else {
            (pos[av(i + 1)] - pos[bv(j)]).norm_squared()
                <= (pos[av(i)] - pos[bv(j + 1)]).norm_squared()
        };
        if advance_a {
            faces.push([av(i + 1), av(i), bv(j)]);
            i += 1;
        } else {
            faces.push([av(i), bv(j), bv(j + 1)]);
            j += 1;
        }
    }
}

/// Box-downsamples an observation by the smallest integer factor that brings
/// it within `max_resolution`. Normals are averaged over covered pixels.
pub fn downsample_observation(obs: &ViewObservation, max_resolution: usize) -> ViewObservation {
    let (w, h) = (obs.view.width, obs.view.height);
    let f = w.max(h).div_ceil(max_resolution.max(1));
    if f <= 1 {
        return obs.clone();
    }
    let (nw, nh) = (w / f, h / f);
    let block = |x: usize, y: usize| {
        (0..f).flat_map(move |dy| (0..f).map(move |dx| (x * f + dx, y * f + dy)))
    };
    let mask = Image::from_fn(nw, nh, |x, y| {
        block(x, y).map(|(a, b)| *obs.mask.get(a, b)).sum::<f64>() / (f * f) as f64
    });
    let normals = Image::from_fn(nw, nh, |x, y| {
        let s: Vec3 = block(x, y)
            .filter(|&(a, b)| *obs.mask.get(a, b) > 0.5)
            .map(|(a, b)| *obs.normals.get(a, b))
            .sum();
        s.try_normalize(1e-12).unwrap_or_else(Vec3::zeros)
    });
    let rgb = Image::from_fn(nw, nh, |x, y| {
        block(x, y).map(|(a, b)| *obs.rgb.get(a, b)).sum::<Vec3>() / (f * f) as f64
    });
    let mut view = obs.view;
    view.width = nw;
    view.height = nh;
    // Keep the world footprint when the size is not a multiple of f.
    view.half_extent *= (nw * f) as f64 / w as f64;
    ViewObservation {
        view,
        mask,
        normals,
        rgb,
    }
}

/// Mask-boundary pixels of each component.
fn rim_pixels(labels: &Image<usize>, count: usize) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = labels.dims();
    let mut rims = vec![Vec::new(); count];
    for y in 0..h {
        for x in 0..w {
            let l = *labels.get(x, y);
            if l == usize::MAX {
                continue;
            }
            let outside = |dx: isize, dy: isize| {
                let (a, b) = (x as isize + dx, y as isize + dy);
                a < 0
                    || b < 0
                    || a >= w as isize
                    || b >= h as isize
                    || *labels.get(a as usize, b as usize) != l
            };
            if outside(-1, 0) || outside(1, 0) || outside(0, -1) || outside(0, 1) {
                rims[l].push((x, y));
            }
        }
    }
    rims
}

fn rim_mean(depth: &DepthMap, rim: &[(usize, usize)]) -> f64 {
    let v: Vec<f64> = rim.iter().filter_map(|&(x, y)| depth.get(x, y)).collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Height of rim pixel centers above the silhouette contour.
///
/// A rim center sits about half a pixel inside the silhouette. Modelling the
/// cross-section there as a circle tangent to the view direction, a point
/// with normal z-component `n_z` at inset `δ` lies `δ n_z / (1 - sqrt(1 - n_z²))`
/// above the contour. The median over the rim is used.
fn rim_lift(normals: &Image<Vec3>, rim: &[(usize, usize)], pixel: f64) -> f64 {
    let inset = 0.5 * pixel;
    let mut lifts: Vec<f64> = rim
        .iter()
        .map(|&(x, y)| {
            let nz = normals.get(x, y).z.clamp(0.1, 1.0);
            inset * nz / (1.0 - (1.0 - nz * nz).sqrt())
        })
        .collect();
    if lifts.is_empty() {
        return 0.0;
    }
    lifts.sort_by(f64::total_cmp);
    lifts[lifts.len() / 2]
}

/// For every component of `a`, the component of `b` it overlaps most.
fn best_overlap(a: &Image<usize>, na: usize, b: &Image<usize>, nb: usize) -> Vec<Option<usize>> {
    let mut counts = vec![0usize; na * nb];
    for (&la, &lb) in a.pixels().iter().zip(b.pixels()) {
        if la != usize::MAX && lb != usize::MAX {
            counts[la * nb + lb] += 1;
        }
    }
    (0..na)
        .map(|i| {
            (0..nb)
                .filter(|&j| counts[i * nb + j] > 0)
                .max_by_key(|&j| (counts[i * nb + j], std::cmp::Reverse(j)))
        })
        .collect()
}

/// Builds a closed initial mesh from the front (azimuth 0) and back
/// (azimuth 180) observations and simplifies it to the face budget.
pub fn estimate_initial_mesh(
    front: &ViewObservation,
    back: &ViewObservation,
    config: &InitConfig,
) -> Result<TriMesh> {
    let front = downsample_observation(front, config.max_resolution);
    let back = downsample_observation(back, config.max_resolution);
    let az = |v: &OrthoView| v.azimuth.to_degrees().rem_euclid(360.0);
    if az(&front.view).min(360.0 - az(&front.view)) > 1e-6 || (az(&back.view) - 180.0).abs() > 1e-6
    {
        return Err(Error::InvalidArgument(
            "initializer needs the azimuth 0 and azimuth 180 views".into(),
        ));
    }
    if front.mask.dims() != back.mask.dims() {
        return Err(Error::SizeMismatch(front.mask.dims(), back.mask.dims()));
    }
    let pixel = front.view.pixel_world_size();
    let rotations = |seed| Rotations::Random {
        count: config.rotations,
        seed,
    };
    let d_front = integrate_normals(
        &front.normals,
        &front.mask,
        pixel,
        &rotations(config.seed),
        config.mode,
    )?;
    let d_back = integrate_normals(
        &back.normals,
        &back.mask,
        pixel,
        &rotations(config.seed.wrapping_add(1)),
        config.mode,
    )?
    .flip_horizontal();
    let back_mask = back.mask.flip_horizontal();

    let (lf, nf) = mask_components(&front.mask);
    let (lb, nb) = mask_components(&back_mask);
    let rims_f = rim_pixels(&lf, nf);
    let rims_b = rim_pixels(&lb, nb);
    let rim_f: Vec<f64> = rims_f.iter().map(|r| rim_mean(&d_front, r)).collect();
    let rim_b: Vec<f64> = rims_b.iter().map(|r| rim_mean(&d_back, r)).collect();
    let back_normals = back.normals.flip_horizontal();
    let lift_f: Vec<f64> = rims_f.iter().map(|r| rim_lift(&front.normals, r, pixel)).collect();
    let lift_b: Vec<f64> = rims_b.iter().map(|r| rim_lift(&back_normals, r, pixel)).collect();
    let f_to_b = best_overlap(&lf, nf, &lb, nb);
    let b_to_f = best_overlap(&lb, nb, &lf, nf);
    // Both rims sit symmetrically about their common contour plane, each
    // lifted off it by its own estimate.
    let t_front: Vec<f64> = (0..nf)
        .map(|c| -rim_f[c] - f_to_b[c].map_or(rim_f[c], |k| rim_b[k]) + 2.0 * lift_f[c])
        .collect();
    let t_back: Vec<f64> = (0..nb)
        .map(|c| -rim_b[c] - b_to_f[c].map_or(rim_b[c], |k| rim_f[k]) + 2.0 * lift_b[c])
        .collect();

    let offset = |d: &DepthMap, labels: &Image<usize>, t: &[f64], sign: f64| DepthMap {
        depth: Image::from_fn(d.width(), d.height(), |x, y| match d.get(x, y) {
            Some(v) => sign * (v + t[*labels.get(x, y)] / 2.0),
            None => f64::NAN,
        }),
    };
    let z_front = offset(&d_front, &lf, &t_front, 1.0);
    let z_back = offset(&d_back, &lb, &t_back, -1.0);

    let front_sheet = depth_to_sheet(&z_front, &front.view, config.stride)?;
    let mut back_sheet = depth_to_sheet(&z_back, &front.view, config.stride)?;
    back_sheet.flip_orientation();
    let joined = join_sheets(&front_sheet, &back_sheet)?;
    let simplified = qem_simplify(&joined, config.face_budget).mesh;
    let report = simplified.topology();
    if !report.is_watertight() {
        return Err(Error::InvalidMesh(format!(
            "simplified mesh is not closed: {report:?}"
        )));
    }
    Ok(simplified)
}

/// Icosphere of radius 0.45 at the origin, `subdivisions` in 1..=6.
pub fn sphere_init(subdivisions: u32) -> Result<TriMesh> {
    if !(1..=6).contains(&subdivisions) {
        return Err(Error::InvalidArgument(format!(
            "sphere subdivisions must be in 1..=6, got {subdivisions}"
        )));
    }
    Ok(primitives::icosphere(subdivisions, 0.45))
}
