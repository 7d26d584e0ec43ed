//! Local connectivity surgery: edge split, collapse and flip.
//!
//! [`EditMesh`] is the mutable working form used by remeshing and
//! simplification. The free functions wrap single operations on an immutable
//! [`TriMesh`] and return `None` when the operation is illegal.

use super::mesh::TriMesh;
use crate::Vec3;

/// Limits applied to a collapse beyond the topological link condition.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CollapseGuard {
    /// Reject if any edge incident to the merged vertex would exceed this length.
    pub max_edge_length: f64,
    /// Minimum cosine between a face normal before and after the collapse.
    pub min_normal_cos: f64,
}

impl Default for CollapseGuard {
    fn default() -> Self {
        Self {
            max_edge_length: f64::INFINITY,
            min_normal_cos: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EditMesh {
    pub pos: Vec<Vec3>,
    pub colors: Option<Vec<Vec3>>,
    pub faces: Vec<[usize; 3]>,
    pub face_alive: Vec<bool>,
    pub vfaces: Vec<Vec<usize>>,
    pub vertex_alive: Vec<bool>,
}

impl EditMesh {
    pub fn from_mesh(mesh: &TriMesh) -> Self {
        let mut vfaces = vec![Vec::new(); mesh.num_vertices()];
        for (fi, f) in mesh.faces().iter().enumerate() {
            for &v in f {
                vfaces[v].push(fi);
            }
        }
        Self {
            pos: mesh.vertices().to_vec(),
            colors: mesh.colors().map(|c| c.to_vec()),
            faces: mesh.faces().to_vec(),
            face_alive: vec![true; mesh.num_faces()],
            vertex_alive: vec![true; mesh.num_vertices()],
            vfaces,
        }
    }

    /// Compacts live elements into a new mesh, preserving relative order.
    pub fn to_mesh(&self) -> TriMesh {
        let mut remap = vec![usize::MAX; self.pos.len()];
        let mut used = vec![false; self.pos.len()];
        for (f, alive) in self.faces.iter().zip(&self.face_alive) {
            if *alive {
                for &v in f {
                    used[v] = true;
                }
            }
        }
        let mut verts = Vec::new();
        let mut colors = self.colors.as_ref().map(|_| Vec::new());
        for v in 0..self.pos.len() {
            if used[v] {
                remap[v] = verts.len();
                verts.push(self.pos[v]);
                if let (Some(out), Some(src)) = (colors.as_mut(), self.colors.as_ref()) {
                    out.push(src[v]);
                }
            }
        }
        let faces = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, a)| **a)
            .map(|(f, _)| [remap[f[0]], remap[f[1]], remap[f[2]]])
            .collect();
        let mut mesh = TriMesh::from_raw(verts, faces);
        if let Some(c) = colors {
            mesh.set_colors(Some(c)).expect("color count matches");
        }
        mesh
    }

    pub fn live_face_count(&self) -> usize {
        self.face_alive.iter().filter(|a| **a).count()
    }

    /// Faces containing both `a` and `b`.
    pub fn edge_faces(&self, a: usize, b: usize) -> Vec<usize> {
        self.vfaces[a]
            .iter()
            .copied()
            .filter(|&f| self.faces[f].contains(&b))
            .collect()
    }

    /// Sorted, deduplicated 1-ring.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.vfaces[v]
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&u| u != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.neighbors(v)
            .into_iter()
            .any(|u| self.edge_faces(v, u).len() == 1)
    }

    /// All live edges as sorted `(min, max)` pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, a)| **a)
            .flat_map(|(f, _)| {
                (0..3).map(move |k| {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    if a < b {
                        (a, b)
                    } else {
                        (b, a)
                    }
                })
            })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        (self.pos[a] - self.pos[b]).norm()
    }

    fn face_cross_with(&self, f: &[usize; 3], moved: &[(usize, Vec3)]) -> Vec3 {
        let p = |v: usize| {
            moved
                .iter()
                .find(|(u, _)| *u == v)
                .map(|(_, q)| *q)
                .unwrap_or(self.pos[v])
        };
        (p(f[1]) - p(f[0])).cross(&(p(f[2]) - p(f[0])))
    }

    fn face_cross(&self, f: usize) -> Vec3 {
        self.face_cross_with(&self.faces[f], &[])
    }

    /// Splits edge `(a, b)` at its midpoint. Returns the new vertex.
    pub fn split(&mut self, a: usize, b: usize) -> Option<usize> {
        let incident = self.edge_faces(a, b);
        if incident.is_empty() || incident.len() > 2 {
            return None;
        }
        let m = self.pos.len();
        self.pos.push((self.pos[a] + self.pos[b]) * 0.5);
        if let Some(c) = self.colors.as_mut() {
            let mid = (c[a] + c[b]) * 0.5;
            c.push(mid);
        }
        self.vertex_alive.push(true);
        self.vfaces.push(Vec::new());
        for f in incident {
            let face = self.faces[f];
            // Rotate so that the split edge is face[0] -> face[1].
            let k = (0..3)
                .find(|&k| {
                    let (u, v) = (face[k], face[(k + 1) % 3]);
                    (u == a && v == b) || (u == b && v == a)
                })
                .expect("edge in face");
            let (u, v, w) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
            self.faces[f] = [u, m, w];
            let nf = self.faces.len();
            self.faces.push([m, v, w]);
            self.face_alive.push(true);
            self.vfaces[v].retain(|&x| x != f);
            self.vfaces[v].push(nf);
            self.vfaces[w].push(nf);
            self.vfaces[m].push(f);
            self.vfaces[m].push(nf);
        }
        Some(m)
    }

    /// Topological legality of collapsing `(a, b)`.
    pub fn can_collapse_topologically(&self, a: usize, b: usize) -> bool {
        let incident = self.edge_faces(a, b);
        if incident.is_empty() || incident.len() > 2 {
            return false;
        }
        let opposite: Vec<usize> = incident
            .iter()
            .map(|&f| {
                *self.faces[f]
                    .iter()
                    .find(|&&v| v != a && v != b)
                    .expect("triangle has a third vertex")
            })
            .collect();
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let common: Vec<usize> = na
            .iter()
            .copied()
            .filter(|v| nb.binary_search(v).is_ok())
            .collect();
        let mut opp_sorted = opposite.clone();
        opp_sorted.sort_unstable();
        opp_sorted.dedup();
        if common != opp_sorted {
            return false;
        }
        // Interior edge joining two boundary vertices would pinch the surface.
        if incident.len() == 2 && self.is_boundary_vertex(a) && self.is_boundary_vertex(b) {
            return false;
        }
        // Opposite vertices must keep enough valence.
        for &c in &opposite {
            let deg = self.neighbors(c).len();
            let boundary = self.is_boundary_vertex(c);
            if deg <= 3 || (boundary && deg <= 2) {
                return false;
            }
        }
        // Something must survive around the merged vertex.
        let surviving = self.vfaces[a]
            .iter()
            .chain(&self.vfaces[b])
            .filter(|f| !incident.contains(f))
            .count();
        surviving > 0
    }

    /// Whether placing the merged vertex at `target` passes the geometric guard.
    pub fn collapse_geometry_ok(
        &self,
        a: usize,
        b: usize,
        target: Vec3,
        guard: &CollapseGuard,
    ) -> bool {
        let incident = self.edge_faces(a, b);
        for &v in &[a, b] {
            for &f in &self.vfaces[v] {
                if incident.contains(&f) {
                    continue;
                }
                let face = self.faces[f];
                let before = self.face_cross(f);
                let after = self.face_cross_with(&face, &[(a, target), (b, target)]);
                let (lb, la) = (before.norm(), after.norm());
                if la <= 1e-14 * (1.0 + lb) {
                    return false;
                }
                if lb > 0.0 && before.dot(&after) < guard.min_normal_cos * lb * la {
                    return false;
                }
                for &u in &face {
                    if u != a && u != b && (self.pos[u] - target).norm() > guard.max_edge_length {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Collapses `b` into `a`, placing `a` at `target`. Caller checks legality.
    pub fn collapse_unchecked(&mut self, a: usize, b: usize, target: Vec3) {
        let incident = self.edge_faces(a, b);
        if let Some(c) = self.colors.as_mut() {
            c[a] = (c[a] + c[b]) * 0.5;
        }
        self.pos[a] = target;
        for &f in &incident {
            self.face_alive[f] = false;
            for &v in &self.faces[f] {
                if v != a && v != b {
                    self.vfaces[v].retain(|&x| x != f);
                }
            }
        }
        let moved: Vec<usize> = self.vfaces[b]
            .iter()
            .copied()
            .filter(|f| !incident.contains(f))
            .collect();
        for &f in &moved {
            for v in self.faces[f].iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
        }
        self.vfaces[a].retain(|f| !incident.contains(f));
        self.vfaces[a].extend(moved);
        self.vfaces[b].clear();
        self.vertex_alive[b] = false;
    }

    pub fn try_collapse(
        &mut self,
        a: usize,
        b: usize,
        target: Vec3,
        guard: &CollapseGuard,
    ) -> bool {
        if !self.can_collapse_topologically(a, b) || !self.collapse_geometry_ok(a, b, target, guard)
        {
            return false;
        }
        self.collapse_unchecked(a, b, target);
        true
    }

    /// The two faces of interior edge `(a, b)` with `a -> b` in the first,
    /// plus the opposite vertices.
    fn flip_config(&self, a: usize, b: usize) -> Option<(usize, usize, usize, usize)> {
        let incident = self.edge_faces(a, b);
        if incident.len() != 2 {
            return None;
        }
        let (f1, f2) = if super::mesh::directed(&self.faces[incident[0]], a, b) {
            (incident[0], incident[1])
        } else {
            (incident[1], incident[0])
        };
        let third = |f: usize| *self.faces[f].iter().find(|&&v| v != a && v != b).unwrap();
        Some((f1, f2, third(f1), third(f2)))
    }

    pub fn can_flip(&self, a: usize, b: usize) -> bool {
        let Some((_, _, c, d)) = self.flip_config(a, b) else {
            return false;
        };
        if c == d || self.neighbors(c).binary_search(&d).is_ok() {
            return false;
        }
        [a, b]
            .iter()
            .all(|&v| self.is_boundary_vertex(v) || self.neighbors(v).len() > 3)
    }

    /// Flips interior edge `(a, b)` to `(c, d)`. Returns false if illegal.
    pub fn flip(&mut self, a: usize, b: usize) -> bool {
        if !self.can_flip(a, b) {
            return false;
        }
        let (f1, f2, c, d) = self.flip_config(a, b).expect("checked");
        self.faces[f1] = [c, a, d];
        self.faces[f2] = [d, b, c];
        self.vfaces[a].retain(|&x| x != f2);
        self.vfaces[b].retain(|&x| x != f1);
        self.vfaces[c].push(f2);
        self.vfaces[d].push(f1);
        true
    }

    /// Normals of the two faces before and after flipping `(a, b)`.
    pub fn flip_normals(&self, a: usize, b: usize) -> Option<([Vec3; 2], [Vec3; 2])> {
        let (f1, f2, c, d) = self.flip_config(a, b)?;
        let before = [self.face_cross(f1), self.face_cross(f2)];
        let after = [
            self.face_cross_with(&[c, a, d], &[]),
            self.face_cross_with(&[d, b, c], &[]),
        ];
        Some((before, after))
    }

    pub fn flip_opposites(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        self.flip_config(a, b).map(|(_, _, c, d)| (c, d))
    }
}

/// Splits `edge` at its midpoint. `None` if the edge does not exist.
pub fn edge_split(mesh: &TriMesh, edge: [usize; 2]) -> Option<TriMesh> {
    let mut em = EditMesh::from_mesh(mesh);
    em.split(edge[0], edge[1])?;
    Some(em.to_mesh())
}

/// Collapses `edge` to its midpoint. `None` when the link condition (or the
/// fold-over guard) rejects it.
pub fn edge_collapse(mesh: &TriMesh, edge: [usize; 2]) -> Option<TriMesh> {
    let mut em = EditMesh::from_mesh(mesh);
    let (a, b) = (edge[0], edge[1]);
    if a >= em.pos.len() || b >= em.pos.len() {
        return None;
    }
    let mid = (em.pos[a] + em.pos[b]) * 0.5;
    em.try_collapse(a, b, mid, &CollapseGuard::default())
        .then(|| em.to_mesh())
}

/// Flips an interior edge. `None` for boundary edges or when the opposite
/// vertices are already connected.
pub fn edge_flip(mesh: &TriMesh, edge: [usize; 2]) -> Option<TriMesh> {
    let mut em = EditMesh::from_mesh(mesh);
    if edge[0] >= em.pos.len() || edge[1] >= em.pos.len() {
        return None;
    }
    em.flip(edge[0], edge[1]).then(|| em.to_mesh())
}
