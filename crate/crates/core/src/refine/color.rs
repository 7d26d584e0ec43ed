//! Vertex colors from the RGB views, with propagation into unseen regions.

use crate::error::Result;
use crate::geometry::TriMesh;
use crate::opt::TargetNormalization;
use crate::views::ViewObservation;
use crate::Vec3;

use super::target::{compute_explicit_target, Payload};

/// Color given to vertices that no propagation reaches.
pub const FALLBACK_COLOR: Vec3 = Vec3::new(0.5, 0.5, 0.5);

/// Colors every vertex: seen vertices take the cos²-weighted mean of their
/// RGB samples, the rest are filled by [`color_completion`].
pub fn colorize(mesh: &TriMesh, observations: &[ViewObservation]) -> Result<TriMesh> {
    let t = compute_explicit_target(mesh, observations, Payload::Rgb, TargetNormalization::WeightSum)?;
    let colors: Vec<Vec3> = t.values.iter().map(|c| c.map(|x| x.clamp(0.0, 1.0))).collect();
    let invisible: Vec<bool> = t.covered.iter().map(|c| !c).collect();
    let colors = color_completion(mesh, &invisible, &colors);
    mesh.clone().with_colors(colors)
}

/// Spreads colors from colored vertices into the `invisible` ones.
///
/// Each pass visits the invisible vertices in index order; one with a
/// colored neighbor becomes colored and takes the mean of those neighbors,
/// and later vertices in the same pass see the update. Passes continue after
/// the last vertex is colored for as many passes as coloring took, which
/// smooths the seam. Vertices still uncolored after `10 × vertex count`
/// passes get [`FALLBACK_COLOR`].
pub fn color_completion(mesh: &TriMesh, invisible: &[bool], colors: &[Vec3]) -> Vec<Vec3> {
    assert_eq!(invisible.len(), mesh.num_vertices(), "one flag per vertex");
    assert_eq!(colors.len(), mesh.num_vertices(), "one color per vertex");
    let mut c = colors.to_vec();
    let inv: Vec<usize> = (0..invisible.len()).filter(|&v| invisible[v]).collect();
    if inv.is_empty() {
        return c;
    }
    let adj = mesh.adjacency();
    let mut colored: Vec<bool> = invisible.iter().map(|i| !i).collect();
    let max_passes = 10 * mesh.num_vertices();
    let mut cnt: i64 = 0;
    let mut stage2 = false;
    let mut passes = 0;
    while !stage2 || cnt > 0 {
        if passes == max_passes {
            for &v in &inv {
                if !colored[v] {
                    c[v] = FALLBACK_COLOR;
                }
            }
            break;
        }
        passes += 1;
        for &i in &inv {
            let mut sum = Vec3::zeros();
            let mut n = 0usize;
            for &u in adj.neighbors(i) {
                if colored[u] {
                    sum += c[u];
                    n += 1;
                }
            }
            if n > 0 {
                colored[i] = true;
                c[i] = sum / n as f64;
            } else {
                colored[i] = false;
            }
        }
        if colored.iter().all(|&x| x) {
            stage2 = true;
            cnt -= 1;
        } else {
            cnt += 1;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use crate::views::{Image, OrthoView};

    /// Path a–b–c as a strip of two triangles with a dangling apex.
    fn path() -> TriMesh {
        // Vertices 0, 1, 2 are a, b, c; 3 and 4 are side vertices.
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.5, 1.0, 0.0),
                Vec3::new(1.5, 1.0, 0.0),
            ],
            vec![[0, 1, 3], [1, 2, 4]],
        )
        .unwrap()
    }

    #[test]
    fn empty_invisible_set_is_identity() {
        let m = path();
        let colors = vec![Vec3::new(0.1, 0.2, 0.3); 5];
        assert_eq!(color_completion(&m, &[false; 5], &colors), colors);
    }

    #[test]
    fn bridge_vertex_takes_neighbor_mean() {
        let m = path();
        let red = Vec3::new(1.0, 0.0, 0.0);
        let blue = Vec3::new(0.0, 0.0, 1.0);
        // Side vertices carry the endpoint colors so that b sees red, blue, red, blue.
        let colors = vec![red, Vec3::zeros(), blue, red, blue];
        let out = color_completion(&m, &[false, true, false, false, false], &colors);
        assert_eq!(out[1], Vec3::new(0.5, 0.0, 0.5));
    }

    #[test]
    fn unreachable_component_turns_gray() {
        let mut m = path();
        let mut island = primitives::icosphere(0, 0.1);
        island.transform(1.0, Vec3::new(5.0, 0.0, 0.0));
        m.append(&island);
        let n = m.num_vertices();
        let mut invisible = vec![false; n];
        invisible[5..].iter_mut().for_each(|x| *x = true);
        let out = color_completion(&m, &invisible, &vec![Vec3::new(1.0, 0.0, 0.0); n]);
        assert!(out[5..].iter().all(|c| *c == FALLBACK_COLOR));
        assert!(out[..5].iter().all(|c| *c == Vec3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn completion_is_idempotent() {
        let s = primitives::icosphere(3, 0.4);
        let invisible: Vec<bool> = s.vertices().iter().map(|p| p.z < 0.0).collect();
        let colors: Vec<Vec3> = s.vertices().iter().map(|p| if p.z < 0.0 { Vec3::zeros() } else { p.map(|x| x + 0.5) }).collect();
        let once = color_completion(&s, &invisible, &colors);
        let twice = color_completion(&s, &vec![false; s.num_vertices()], &once);
        assert_eq!(once, twice);
    }

    #[test]
    fn colorize_single_view_matches_samples() {
        let s = primitives::icosphere(3, 0.4);
        let view = OrthoView::from_degrees(0.0, 0.0, 64);
        let rgb = Image::from_fn(64, 64, |x, y| Vec3::new(x as f64 / 64.0, y as f64 / 64.0, 0.25));
        let obs = ViewObservation {
            view,
            mask: Image::new(64, 64, 1.0),
            normals: Image::new(64, 64, Vec3::z()),
            rgb: rgb.clone(),
        };
        let out = colorize(&s, &[obs]).unwrap();
        let colors = out.colors().unwrap();
        assert!(colors.iter().all(|c| c.iter().all(|x| (0.0..=1.0).contains(x))));
        let vis = crate::raster::vertex_visibility(&s, &view, crate::raster::DEFAULT_DEPTH_EPSILON);
        for (v, p) in s.vertices().iter().enumerate() {
            if vis[v] {
                let want = crate::views::sample_image(view.project(p).pixel, &rgb);
                assert!((colors[v] - want).norm() < 1e-9);
            }
        }
    }
}
