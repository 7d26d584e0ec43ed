//! Indexed triangle mesh with lazily built adjacency.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::adjacency::AdjacencyIndex;
use crate::Vec3;

/// Indexed triangle mesh. Faces wind counter-clockwise when seen from outside.
///
/// Vertex positions may be edited in place through [`TriMesh::vertices_mut`];
/// connectivity only changes through constructors and surgery, which drop the
/// cached adjacency.
#[derive(Debug, Default)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    colors: Option<Vec<Vec3>>,
    adjacency: OnceLock<AdjacencyIndex>,
}

impl Clone for TriMesh {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            faces: self.faces.clone(),
            colors: self.colors.clone(),
            adjacency: self.adjacency.clone(),
        }
    }
}

/// Topological summary of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TopologyReport {
    pub boundary_edges: usize,
    /// Edges with more than two incident faces.
    pub nonmanifold_edges: usize,
    /// Interior edges traversed in the same direction by both faces.
    pub misoriented_edges: usize,
    /// Vertices whose incident faces do not form a single fan.
    pub nonmanifold_vertices: usize,
}

impl TopologyReport {
    pub fn is_manifold(&self) -> bool {
        self.nonmanifold_edges == 0 && self.misoriented_edges == 0 && self.nonmanifold_vertices == 0
    }

    /// Closed, oriented, manifold.
    pub fn is_watertight(&self) -> bool {
        self.is_manifold() && self.boundary_edges == 0
    }
}

impl TriMesh {
    /// Builds a mesh and checks index validity.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self::from_raw(vertices, faces);
        mesh.validate_indices()?;
        Ok(mesh)
    }

    pub(crate) fn from_raw(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        Self {
            vertices,
            faces,
            colors: None,
            adjacency: OnceLock::new(),
        }
    }

    pub fn with_colors(mut self, colors: Vec<Vec3>) -> Result<Self> {
        self.set_colors(Some(colors))?;
        Ok(self)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Mutable access to positions. Connectivity (and thus adjacency) is unaffected.
    pub fn vertices_mut(&mut self) -> &mut [Vec3] {
        &mut self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn colors(&self) -> Option<&[Vec3]> {
        self.colors.as_deref()
    }

    pub fn set_colors(&mut self, colors: Option<Vec<Vec3>>) -> Result<()> {
        if let Some(c) = &colors {
            if c.len() != self.vertices.len() {
                return Err(Error::InvalidMesh(format!(
                    "{} colors for {} vertices",
                    c.len(),
                    self.vertices.len()
                )));
            }
        }
        self.colors = colors;
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn adjacency(&self) -> &AdjacencyIndex {
        self.adjacency
            .get_or_init(|| AdjacencyIndex::build(self.vertices.len(), &self.faces))
    }

    /// Face indices in range and no repeated vertex within a face.
    pub fn validate_indices(&self) -> Result<()> {
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references a vertex out of range ({n} vertices)"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex")));
            }
        }
        if let Some(c) = &self.colors {
            if c.len() != n {
                return Err(Error::InvalidMesh(
                    "color count differs from vertex count".into(),
                ));
            }
        }
        Ok(())
    }

    /// Full invariant check: valid indices plus manifold, consistently oriented edges.
    pub fn validate(&self) -> Result<()> {
        self.validate_indices()?;
        let report = self.topology();
        if !report.is_manifold() {
            return Err(Error::InvalidMesh(format!("not manifold: {report:?}")));
        }
        Ok(())
    }

    pub fn topology(&self) -> TopologyReport {
        let adj = self.adjacency();
        let mut report = TopologyReport::default();
        for e in adj.edges() {
            match e.faces.len() {
                1 => report.boundary_edges += 1,
                2 => {
                    let (a, b) = (e.vertices[0], e.vertices[1]);
                    let d0 = directed(&self.faces[e.faces[0]], a, b);
                    let d1 = directed(&self.faces[e.faces[1]], a, b);
                    if d0 == d1 {
                        report.misoriented_edges += 1;
                    }
                }
                _ => report.nonmanifold_edges += 1,
            }
        }
        for v in 0..self.vertices.len() {
            if !adj.vertex_faces(v).is_empty() && !adj.is_single_fan(v, &self.faces) {
                report.nonmanifold_vertices += 1;
            }
        }
        report
    }

    pub fn euler_characteristic(&self) -> i64 {
        let used = self
            .adjacency()
            .vertex_faces_all()
            .iter()
            .filter(|f| !f.is_empty())
            .count();
        used as i64 - self.adjacency().edges().len() as i64 + self.faces.len() as i64
    }

    /// Number of connected components (over faces).
    pub fn num_components(&self) -> usize {
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; self.faces.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.faces.len() {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(f) = stack.pop() {
                for &v in &self.faces[f] {
                    for &g in adj.vertex_faces(v) {
                        if label[g] == usize::MAX {
                            label[g] = count;
                            stack.push(g);
                        }
                    }
                }
            }
            count += 1;
        }
        count
    }

    /// Genus of a closed orientable mesh, summed over components.
    pub fn genus(&self) -> i64 {
        (2 * self.num_components() as i64 - self.euler_characteristic()) / 2
    }

    /// Unnormalized face normal (length = twice the area).
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (pb - pa).cross(&(pc - pa))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Area-weighted vertex normals. Vertices touching only degenerate faces
    /// (or no faces) get +z.
    pub fn vertex_normals(&self) -> Result<Vec<Vec3>> {
        if self.faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        Ok(vertex_normals_of(&self.vertices, &self.faces))
    }

    /// Axis-aligned bounding box (min, max).
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        bounding_box(&self.vertices)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.adjacency().edges();
        if edges.is_empty() {
            return 0.0;
        }
        edges
            .iter()
            .map(|e| (self.vertices[e.vertices[0]] - self.vertices[e.vertices[1]]).norm())
            .sum::<f64>()
            / edges.len() as f64
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.adjacency()
            .edges()
            .iter()
            .map(|e| (self.vertices[e.vertices[0]] - self.vertices[e.vertices[1]]).norm())
            .collect()
    }

    /// Applies `p -> scale * p + offset` to every vertex.
    pub fn transform(&mut self, scale: f64, offset: Vec3) {
        for p in &mut self.vertices {
            *p = *p * scale + offset;
        }
    }

    pub fn map_vertices(&mut self, mut f: impl FnMut(&Vec3) -> Vec3) {
        for p in &mut self.vertices {
            *p = f(p);
        }
    }

    /// Reverses every face.
    pub fn flip_orientation(&mut self) {
        for f in &mut self.faces {
            f.swap(1, 2);
        }
        self.adjacency = OnceLock::new();
    }

    /// Appends another mesh as a separate component.
    pub fn append(&mut self, other: &TriMesh) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces.extend(
            other
                .faces
                .iter()
                .map(|f| [f[0] + base, f[1] + base, f[2] + base]),
        );
        self.colors = match (self.colors.take(), other.colors()) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            _ => None,
        };
        self.adjacency = OnceLock::new();
    }

    /// Drops vertices not referenced by any face.
    pub fn remove_unreferenced(&mut self) {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut next = 0;
        for f in &self.faces {
            for &v in f {
                if remap[v] == usize::MAX {
                    remap[v] = 0;
                }
            }
        }
        for r in remap.iter_mut() {
            if *r == 0 {
                *r = next;
                next += 1;
            }
        }
        if next == self.vertices.len() {
            return;
        }
        let keep = |v: &usize| remap[*v] != usize::MAX;
        let vertices = (0..self.vertices.len())
            .filter(keep)
            .map(|v| self.vertices[v])
            .collect();
        let colors = self
            .colors
            .as_ref()
            .map(|c| (0..c.len()).filter(keep).map(|v| c[v]).collect());
        for f in &mut self.faces {
            for v in f.iter_mut() {
                *v = remap[*v];
            }
        }
        self.vertices = vertices;
        self.colors = colors;
        self.adjacency = OnceLock::new();
    }

    /// Sum over interior edges of the angle between adjacent face normals.
    pub fn total_dihedral_variation(&self) -> f64 {
        let adj = self.adjacency();
        adj.edges()
            .iter()
            .filter(|e| e.faces.len() == 2)
            .map(|e| {
                let n0 = self.face_cross(e.faces[0]);
                let n1 = self.face_cross(e.faces[1]);
                let denom = n0.norm() * n1.norm();
                if denom <= 0.0 {
                    0.0
                } else {
                    (n0.dot(&n1) / denom).clamp(-1.0, 1.0).acos()
                }
            })
            .sum()
    }
}

/// Whether face `f` traverses `a -> b` (as opposed to `b -> a`).
pub(crate) fn directed(f: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b)
}

pub(crate) fn bounding_box(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Area-weighted (sum of unnormalized face normals), then normalized.
pub(crate) fn vertex_normals_of(vertices: &[Vec3], faces: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vertex_normal_sums(vertices, faces);
    for n in acc.iter_mut() {
        let len = n.norm();
        *n = if len > 1e-300 { *n / len } else { Vec3::z() };
    }
    acc
}

/// Unnormalized per-vertex sums of face cross products.
pub(crate) fn vertex_normal_sums(vertices: &[Vec3], faces: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for f in faces {
        let c = (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]));
        for &v in f {
            acc[v] += c;
        }
    }
    acc
}
