//! Voxel occupancy by winding number and volume IoU.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::Vec3;

/// Column offset keeping rays off mesh vertices and edges placed on the grid.
const JITTER: (f64, f64) = (1.234_567e-7, 2.345_678e-7);

fn voxel_center(i: usize, resolution: usize) -> f64 {
    -0.5 + (i as f64 + 0.5) / resolution as f64
}

/// Generalized winding number of the surface around `q`.
pub fn winding_number(mesh: &TriMesh, q: &Vec3) -> f64 {
    let p = mesh.vertices();
    mesh.faces()
        .iter()
        .map(|f| {
            let (a, b, c) = (p[f[0]] - q, p[f[1]] - q, p[f[2]] - q);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
            2.0 * num.atan2(den)
        })
        .sum::<f64>()
        / (4.0 * PI)
}

/// Occupancy of the `resolution`³ voxel centers over [-0.5, 0.5]³
/// (winding number ≥ 0.5), indexed `(z * r + y) * r + x`.
///
/// For closed meshes the winding number is the signed count of surface
/// crossings along a +z ray, evaluated per column; open meshes fall back to
/// the direct solid-angle sum.
pub fn voxelize(mesh: &TriMesh, resolution: usize) -> Vec<bool> {
    if mesh.topology().is_watertight() {
        voxelize_closed(mesh, resolution)
    } else {
        log::warn!("mesh is not watertight; using direct winding numbers");
        let r = resolution;
        (0..r * r * r)
            .into_par_iter()
            .map(|i| {
                let q = Vec3::new(
                    voxel_center(i % r, r),
                    voxel_center(i / r % r, r),
                    voxel_center(i / (r * r), r),
                );
                winding_number(mesh, &q) >= 0.5
            })
            .collect()
    }
}

fn voxelize_closed(mesh: &TriMesh, r: usize) -> Vec<bool> {
    let p = mesh.vertices();
    // Crossings per (x, y) column: (z, +1 / -1).
    let mut columns: Vec<Vec<(f64, i32)>> = vec![Vec::new(); r * r];
    let to_index = |v: f64| (v + 0.5) * r as f64 - 0.5;
    for f in mesh.faces() {
        let (a, b, c) = (p[f[0]], p[f[1]], p[f[2]]);
        let n = (b - a).cross(&(c - a));
        if n.z == 0.0 {
            continue;
        }
        let xs = [a.x, b.x, c.x];
        let ys = [a.y, b.y, c.y];
        let lo_x = to_index(xs.iter().cloned().fold(f64::INFINITY, f64::min))
            .ceil()
            .max(0.0) as usize;
        let hi_x = to_index(xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).floor();
        let lo_y = to_index(ys.iter().cloned().fold(f64::INFINITY, f64::min))
            .ceil()
            .max(0.0) as usize;
        let hi_y = to_index(ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).floor();
        if hi_x < 0.0 || hi_y < 0.0 {
            continue;
        }
        let hi_x = (hi_x as usize).min(r - 1);
        let hi_y = (hi_y as usize).min(r - 1);
        for j in lo_y..=hi_y {
            for i in lo_x..=hi_x {
                let (x, y) = (voxel_center(i, r) + JITTER.0, voxel_center(j, r) + JITTER.1);
                let e = |u: &Vec3, v: &Vec3| (v.x - u.x) * (y - u.y) - (v.y - u.y) * (x - u.x);
                let (w0, w1, w2) = (e(&b, &c), e(&c, &a), e(&a, &b));
                let inside =
                    (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0) || (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
                if !inside {
                    continue;
                }
                let s = w0 + w1 + w2;
                let z = (w0 * a.z + w1 * b.z + w2 * c.z) / s;
                columns[j * r + i].push((z, if n.z > 0.0 { 1 } else { -1 }));
            }
        }
    }
    let mut occ = vec![false; r * r * r];
    for (col, hits) in columns.iter().enumerate() {
        if hits.is_empty() {
            continue;
        }
        for k in 0..r {
            let z = voxel_center(k, r);
            let w: i32 = hits.iter().filter(|h| h.0 > z).map(|h| h.1).sum();
            occ[k * r * r + col] = w >= 1;
        }
    }
    occ
}

/// |A ∩ B| / |A ∪ B| of the two voxelizations; 1 when both are empty.
pub fn volume_iou(pred: &TriMesh, gt: &TriMesh, resolution: usize) -> Result<f64> {
    if resolution < 16 {
        return Err(Error::InvalidArgument(format!(
            "IoU resolution must be ≥ 16, got {resolution}"
        )));
    }
    if pred.num_faces() == 0 || gt.num_faces() == 0 {
        return Err(Error::EmptyMesh);
    }
    let (a, b) = rayon::join(|| voxelize(pred, resolution), || voxelize(gt, resolution));
    let inter = a.iter().zip(&b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(&b).filter(|(x, y)| **x || **y).count();
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}
