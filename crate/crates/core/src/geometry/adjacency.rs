use std::collections::HashMap;

/// Undirected edge with its incident faces. `vertices[0] < vertices[1]`.
#[derive(Debug, Clone)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub faces: Vec<usize>,
}

/// Vertex→faces, edge→faces and vertex→vertex incidence for a fixed connectivity.
///
/// Edges are stored sorted by `(min, max)` vertex pair and 1-rings are sorted
/// ascending, so every traversal is deterministic.
#[derive(Debug, Clone, Default)]
pub struct AdjacencyIndex {
    vertex_faces: Vec<Vec<usize>>,
    vertex_neighbors: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl AdjacencyIndex {
    pub fn build(num_vertices: usize, faces: &[[usize; 3]]) -> Self {
        let mut vertex_faces = vec![Vec::new(); num_vertices];
        let mut pairs: Vec<((usize, usize), usize)> = Vec::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                vertex_faces[f[k]].push(fi);
                pairs.push((edge_key(f[k], f[(k + 1) % 3]), fi));
            }
        }
        pairs.sort_unstable();
        let mut edges: Vec<Edge> = Vec::with_capacity(pairs.len() / 2 + 1);
        for (key, fi) in pairs {
            match edges.last_mut() {
                Some(e) if (e.vertices[0], e.vertices[1]) == key => e.faces.push(fi),
                _ => edges.push(Edge {
                    vertices: [key.0, key.1],
                    faces: vec![fi],
                }),
            }
        }
        let mut vertex_neighbors = vec![Vec::new(); num_vertices];
        let mut edge_lookup = HashMap::with_capacity(edges.len());
        for (ei, e) in edges.iter().enumerate() {
            vertex_neighbors[e.vertices[0]].push(e.vertices[1]);
            vertex_neighbors[e.vertices[1]].push(e.vertices[0]);
            edge_lookup.insert((e.vertices[0], e.vertices[1]), ei);
        }
        for n in vertex_neighbors.iter_mut() {
            n.sort_unstable();
        }
        Self {
            vertex_faces,
            vertex_neighbors,
            edges,
            edge_lookup,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_faces.len()
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub(crate) fn vertex_faces_all(&self) -> &[Vec<usize>] {
        &self.vertex_faces
    }

    /// Sorted 1-ring of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.vertex_neighbors[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&Edge> {
        self.edge_lookup
            .get(&edge_key(a, b))
            .map(|&i| &self.edges[i])
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_neighbors[v]
            .iter()
            .any(|&u| self.edge(v, u).is_some_and(|e| e.faces.len() == 1))
    }

    /// Whether the faces around `v` form one connected fan (through shared edges).
    pub(crate) fn is_single_fan(&self, v: usize, faces: &[[usize; 3]]) -> bool {
        let incident = &self.vertex_faces[v];
        if incident.len() <= 1 {
            return true;
        }
        let mut seen = vec![false; incident.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            let f = faces[incident[i]];
            for j in 0..incident.len() {
                if seen[j] {
                    continue;
                }
                let g = faces[incident[j]];
                // Share an edge through v: another common vertex besides v.
                let shared = f.iter().any(|&a| a != v && g.contains(&a));
                if shared {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == incident.len()
    }

    /// Boundary loops as vertex cycles, following face orientation
    /// (each loop lists vertices in the direction of its boundary half-edges).
    pub fn boundary_loops(&self, faces: &[[usize; 3]]) -> Vec<Vec<usize>> {
        let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut starts = Vec::new();
        for e in &self.edges {
            if e.faces.len() != 1 {
                continue;
            }
            let f = &faces[e.faces[0]];
            let (a, b) = if super::mesh::directed(f, e.vertices[0], e.vertices[1]) {
                (e.vertices[0], e.vertices[1])
            } else {
                (e.vertices[1], e.vertices[0])
            };
            next.entry(a).or_default().push(b);
            starts.push(a);
        }
        starts.sort_unstable();
        for v in next.values_mut() {
            v.sort_unstable();
        }
        let mut loops = Vec::new();
        for s in starts {
            let Some(first) = next.get_mut(&s).and_then(|v| v.pop()) else {
                continue;
            };
            let mut cycle = vec![s];
            let mut cur = first;
            while cur != s {
                cycle.push(cur);
                match next.get_mut(&cur).and_then(|v| v.pop()) {
                    Some(n) => cur = n,
                    None => break,
                }
            }
            loops.push(cycle);
        }
        loops
    }
}
