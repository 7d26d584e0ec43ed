use super::forward::{rasterize, RenderOutput};
use super::{barycentric, DEFAULT_SIGMA};
use crate::geometry::TriMesh;
use crate::views::OrthoView;

/// Side of the square pixel cells used to bin faces.
const CELL: usize = 8;
/// Barycentric slack so that points on shared edges count as covered.
const INSIDE_SLACK: f64 = 1e-9;

/// Per-vertex visibility from `view`.
pub fn vertex_visibility(mesh: &TriMesh, view: &OrthoView, depth_epsilon: f64) -> Vec<bool> {
    visibility_from(mesh, &rasterize(mesh, view, DEFAULT_SIGMA), depth_epsilon)
}

/// Visibility from an existing render of `mesh`.
///
/// A vertex is visible when its normal faces the camera, one of its faces is
/// front-facing, and no other front-facing face covers its exact image
/// position while lying more than `depth_epsilon` closer to the camera. The normal condition drops
/// back-side vertices that happen to lie on the polygonal silhouette.
pub fn visibility_from(mesh: &TriMesh, out: &RenderOutput, depth_epsilon: f64) -> Vec<bool> {
    let faces = mesh.faces();
    let adj = mesh.adjacency();
    let (w, h) = (out.view.width, out.view.height);
    let cols = w.div_ceil(CELL);
    let rows = h.div_ceil(CELL);
    let mut cells: Vec<Vec<u32>> = vec![Vec::new(); cols * rows];
    for (f, tri) in faces.iter().enumerate() {
        if !out.front[f] {
            continue;
        }
        let (a, b, c) = (out.screen[tri[0]], out.screen[tri[1]], out.screen[tri[2]]);
        let min = a.inf(&b).inf(&c);
        let max = a.sup(&b).sup(&c);
        if max.x < 0.0 || max.y < 0.0 || min.x >= w as f64 || min.y >= h as f64 {
            continue;
        }
        let cx0 = (min.x.max(0.0) as usize / CELL).min(cols - 1);
        let cy0 = (min.y.max(0.0) as usize / CELL).min(rows - 1);
        let cx1 = (max.x.max(0.0) as usize / CELL).min(cols - 1);
        let cy1 = (max.y.max(0.0) as usize / CELL).min(rows - 1);
        for cy in cy0..=cy1 {
            for cx in cx0..=cx1 {
                cells[cy * cols + cx].push(f as u32);
            }
        }
    }
    (0..mesh.num_vertices())
        .map(|v| {
            if out.cam_normals[v].z <= 0.0 || !adj.vertex_faces(v).iter().any(|&f| out.front[f]) {
                return false;
            }
            let p = out.screen[v];
            if !(p.x >= 0.0 && p.y >= 0.0 && p.x < w as f64 && p.y < h as f64) {
                return false;
            }
            let zv = out.vertex_depth[v];
            let cell = &cells[(p.y as usize / CELL) * cols + p.x as usize / CELL];
            !cell.iter().any(|&f| {
                let tri = faces[f as usize];
                if tri.contains(&v) {
                    return false;
                }
                let (a, b, c) = (out.screen[tri[0]], out.screen[tri[1]], out.screen[tri[2]]);
                match barycentric(p, a, b, c) {
                    Some(l) if l.iter().all(|&x| x >= -INSIDE_SLACK) => {
                        let z = l[0] * out.vertex_depth[tri[0]]
                            + l[1] * out.vertex_depth[tri[1]]
                            + l[2] * out.vertex_depth[tri[2]];
                        z > zv + depth_epsilon
                    }
                    _ => false,
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use crate::raster::DEFAULT_DEPTH_EPSILON;
    use crate::Vec3;
    use nalgebra::Rotation3;

    #[test]
    fn sphere_front_hemisphere() {
        let sphere = primitives::icosphere(4, 0.4);
        // Off-axis so that no vertex sits exactly on the silhouette.
        let view = OrthoView::from_degrees(17.0, 11.0, 256);
        let vis = vertex_visibility(&sphere, &view, DEFAULT_DEPTH_EPSILON);
        let agree = sphere
            .vertices()
            .iter()
            .zip(&vis)
            .filter(|(p, &v)| (view.world_to_camera(p).z > 0.0) == v)
            .count();
        assert!(
            agree as f64 >= 0.99 * sphere.num_vertices() as f64,
            "{agree}"
        );
    }

    #[test]
    fn stacked_squares_only_nearer_visible() {
        let quad = |z: f64| {
            vec![
                Vec3::new(-0.3, -0.3, z),
                Vec3::new(0.3, -0.3, z),
                Vec3::new(0.3, 0.3, z),
                Vec3::new(-0.3, 0.3, z),
            ]
        };
        let mut v = quad(0.2);
        v.extend(quad(-0.2));
        let mesh = TriMesh::new(v, vec![[0, 1, 2], [0, 2, 3], [4, 5, 6], [4, 6, 7]]).unwrap();
        let vis = vertex_visibility(
            &mesh,
            &OrthoView::from_degrees(0.0, 0.0, 64),
            DEFAULT_DEPTH_EPSILON,
        );
        assert_eq!(
            vis,
            vec![true, true, true, true, false, false, false, false]
        );
    }

    #[test]
    fn frame_equivariance() {
        let mut torus = primitives::torus(0.3, 0.12, 32, 12);
        torus.map_vertices(|p| Vec3::new(p.x, p.z, p.y) + Vec3::new(0.0, 0.03 * p.x, 0.0));
        torus.flip_orientation();
        for az in [30.0f64, 90.0, 200.0] {
            let view = OrthoView::from_degrees(az, 0.0, 128);
            let a = vertex_visibility(&torus, &view, DEFAULT_DEPTH_EPSILON);
            let mut rotated = torus.clone();
            let r = Rotation3::from_axis_angle(&Vec3::y_axis(), -az.to_radians());
            rotated.map_vertices(|p| r * p);
            let b = vertex_visibility(
                &rotated,
                &OrthoView::from_degrees(0.0, 0.0, 128),
                DEFAULT_DEPTH_EPSILON,
            );
            let differ = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            assert_eq!(differ, 0, "azimuth {az}");
        }
    }
}
