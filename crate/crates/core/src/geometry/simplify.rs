//! Quadric error metric simplification by edge collapse.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, Matrix4, Vector4};

use super::mesh::TriMesh;
use super::surgery::{CollapseGuard, EditMesh};
use crate::Vec3;

/// Weight of the perpendicular planes that pin open boundaries.
const BOUNDARY_WEIGHT: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct SimplifyOutcome {
    pub mesh: TriMesh,
    /// True when no legal collapse remained before reaching the target.
    pub partial: bool,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    a: usize,
    b: usize,
    version_a: u32,
    version_b: u32,
    target: Vec3,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // Reversed: BinaryHeap is a max-heap and we want the cheapest collapse first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

fn plane_quadric(n: Vec3, p: Vec3, weight: f64) -> Matrix4<f64> {
    let plane = Vector4::new(n.x, n.y, n.z, -n.dot(&p));
    plane * plane.transpose() * weight
}

fn quadric_cost(q: &Matrix4<f64>, x: &Vec3) -> f64 {
    let h = Vector4::new(x.x, x.y, x.z, 1.0);
    (h.transpose() * q * h)[0].max(0.0)
}

fn optimal_point(q: &Matrix4<f64>, a: Vec3, b: Vec3) -> (Vec3, f64) {
    let m: Matrix3<f64> = q.fixed_view::<3, 3>(0, 0).into_owned();
    let rhs = -Vec3::new(q[(0, 3)], q[(1, 3)], q[(2, 3)]);
    let scale = m.norm();
    let mut best: Option<(Vec3, f64)> = None;
    if scale > 0.0 && m.determinant().abs() > 1e-9 * scale.powi(3) {
        if let Some(inv) = m.try_inverse() {
            let x = inv * rhs;
            // Reject far-flung solutions of nearly singular systems.
            let span = (a - b).norm();
            let mid = (a + b) * 0.5;
            if x.iter().all(|c| c.is_finite()) && (x - mid).norm() <= 2.0 * span + 1e-12 {
                best = Some((x, quadric_cost(q, &x)));
            }
        }
    }
    for cand in [(a + b) * 0.5, a, b] {
        let c = quadric_cost(q, &cand);
        // Small tolerance so that ties keep the earlier (midpoint) choice.
        if best.is_none_or(|(_, bc)| c < bc - 1e-15) {
            best = Some((cand, c));
        }
    }
    best.expect("at least one candidate")
}

/// Collapses edges by increasing quadric error until at most `target_faces`
/// remain. Collapses that would break manifoldness or fold faces are skipped.
pub fn qem_simplify(mesh: &TriMesh, target_faces: usize) -> SimplifyOutcome {
    let target_faces = target_faces.max(4);
    if mesh.num_faces() <= target_faces {
        return SimplifyOutcome {
            mesh: mesh.clone(),
            partial: false,
        };
    }
    let mut em = EditMesh::from_mesh(mesh);
    let mut quadrics = vec![Matrix4::<f64>::zeros(); em.pos.len()];
    for f in mesh.faces() {
        let (p0, p1, p2) = (em.pos[f[0]], em.pos[f[1]], em.pos[f[2]]);
        let cross = (p1 - p0).cross(&(p2 - p0));
        let area2 = cross.norm();
        if area2 <= 0.0 {
            continue;
        }
        let k = plane_quadric(cross / area2, p0, 0.5 * area2);
        for &v in f {
            quadrics[v] += k;
        }
    }
    let adj = mesh.adjacency();
    for e in adj.edges() {
        if e.faces.len() != 1 {
            continue;
        }
        let (a, b) = (e.vertices[0], e.vertices[1]);
        let dir = em.pos[b] - em.pos[a];
        let n = mesh.face_cross(e.faces[0]);
        let perp = dir.cross(&n);
        let len = perp.norm();
        if len <= 0.0 {
            continue;
        }
        let k = plane_quadric(perp / len, em.pos[a], BOUNDARY_WEIGHT * dir.norm_squared());
        quadrics[a] += k;
        quadrics[b] += k;
    }

    let mut version = vec![0u32; em.pos.len()];
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Candidate>,
                em: &EditMesh,
                q: &[Matrix4<f64>],
                ver: &[u32],
                a: usize,
                b: usize| {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let sum = q[a] + q[b];
        let (target, cost) = optimal_point(&sum, em.pos[a], em.pos[b]);
        heap.push(Candidate {
            cost,
            a,
            b,
            version_a: ver[a],
            version_b: ver[b],
            target,
        });
    };
    for (a, b) in em.edges() {
        push(&mut heap, &em, &quadrics, &version, a, b);
    }

    let guard = CollapseGuard {
        max_edge_length: f64::INFINITY,
        min_normal_cos: 0.0,
    };
    let mut faces = em.live_face_count();
    while faces > target_faces {
        let Some(c) = heap.pop() else {
            break;
        };
        let (a, b) = (c.a, c.b);
        if !em.vertex_alive[a]
            || !em.vertex_alive[b]
            || version[a] != c.version_a
            || version[b] != c.version_b
        {
            continue;
        }
        let removed = em.edge_faces(a, b).len();
        if removed == 0 || !em.try_collapse(a, b, c.target, &guard) {
            continue;
        }
        faces -= removed;
        quadrics[a] = quadrics[a] + quadrics[b];
        version[a] += 1;
        version[b] += 1;
        for n in em.neighbors(a) {
            push(&mut heap, &em, &quadrics, &version, a, n);
        }
    }
    SimplifyOutcome {
        mesh: em.to_mesh(),
        partial: faces > target_faces,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;

    #[test]
    fn below_target_is_identity() {
        let s = primitives::icosphere(1, 0.5);
        let out = qem_simplify(&s, 100);
        assert!(!out.partial);
        assert_eq!(out.mesh.faces(), s.faces());
        assert_eq!(out.mesh.vertices(), s.vertices());
    }

    #[test]
    fn planar_square_stays_planar() {
        let plane = primitives::grid_plane(0.5, 20);
        assert_eq!(plane.num_faces(), 800);
        let out = qem_simplify(&plane, 10);
        assert!(!out.partial);
        assert!(out.mesh.num_faces() <= 10 && out.mesh.num_faces() >= 8);
        for p in out.mesh.vertices() {
            assert!(p.z.abs() < 1e-6);
        }
        out.mesh.validate().unwrap();
        // Boundary quadrics keep the square's corners.
        let (lo, hi) = out.mesh.bounding_box();
        assert!((lo.x + 0.5).abs() < 1e-9 && (hi.y - 0.5).abs() < 1e-9);
    }

    #[test]
    fn sphere_reaches_budget_watertight() {
        let s = primitives::icosphere(4, 0.45);
        let out = qem_simplify(&s, 1000);
        assert!(!out.partial);
        let n = out.mesh.num_faces();
        assert!((998..=1000).contains(&n), "{n}");
        assert!(out.mesh.topology().is_watertight());
        assert_eq!(out.mesh.genus(), 0);
    }

    #[test]
    fn torus_keeps_genus() {
        let t = primitives::torus(0.3, 0.1, 64, 32);
        let out = qem_simplify(&t, 600);
        assert!(out.mesh.topology().is_watertight());
        assert_eq!(out.mesh.genus(), 1);
        assert!(out.mesh.num_faces() <= 600);
    }
}
