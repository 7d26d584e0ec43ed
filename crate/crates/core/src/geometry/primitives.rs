//! Procedural test shapes. All closed shapes are outward-oriented.

use std::collections::{BTreeMap, HashMap};

use super::mesh::TriMesh;
use crate::Vec3;

/// Axis-aligned cube centered at the origin; corners are vertices 0..8.
pub fn cube(side: f64) -> TriMesh {
    let h = side / 2.0;
    let mut v: Vec<Vec3> = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { -h } else { h },
                if i & 2 == 0 { -h } else { h },
                if i & 4 == 0 { -h } else { h },
            )
        })
        .collect();
    // Outward-oriented quads, each split into four triangles around its
    // center so every corner sees the same area on all three sides.
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let mut faces = Vec::with_capacity(24);
    for q in quads {
        let c = v.len();
        v.push(q.iter().map(|&i| v[i]).sum::<Vec3>() / 4.0);
        for k in 0..4 {
            faces.push([q[k], q[(k + 1) % 4], c]);
        }
    }
    TriMesh::from_raw(v, faces)
}

/// Subdivided icosahedron projected onto a sphere. `20 * 4^subdivisions` faces.
pub fn icosphere(subdivisions: u32, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = if a < b { (a, b) } else { (b, a) };
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut verts {
        *v *= radius;
    }
    TriMesh::from_raw(verts, faces)
}

/// Latitude-longitude sphere with `rings` interior latitude circles of
/// `segments` vertices each, plus two poles on the y axis.
pub fn uv_sphere(rings: usize, segments: usize, radius: f64) -> TriMesh {
    let rings = rings.max(1);
    let segments = segments.max(3);
    let mut verts = vec![Vec3::new(0.0, radius, 0.0)];
    for i in 0..rings {
        let theta = (i + 1) as f64 / (rings + 1) as f64 * std::f64::consts::PI;
        for j in 0..segments {
            let phi = j as f64 / segments as f64 * std::f64::consts::TAU;
            verts.push(
                radius
                    * Vec3::new(
                        theta.sin() * phi.cos(),
                        theta.cos(),
                        theta.sin() * phi.sin(),
                    ),
            );
        }
    }
    verts.push(Vec3::new(0.0, -radius, 0.0));
    let south = verts.len() - 1;
    let ring = |i: usize, j: usize| 1 + i * segments + j % segments;
    let mut faces = Vec::new();
    for j in 0..segments {
        faces.push([0, ring(0, j), ring(0, j + 1)]);
        faces.push([south, ring(rings - 1, j + 1), ring(rings - 1, j)]);
    }
    for i in 0..rings - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (
                ring(i, j),
                ring(i, j + 1),
                ring(i + 1, j + 1),
                ring(i + 1, j),
            );
            faces.push([a, d, c]);
            faces.push([a, c, b]);
        }
    }
    orient_outward(TriMesh::from_raw(verts, faces))
}

/// Torus around the z axis (the hole is visible along z).
pub fn torus(major: f64, minor: f64, segments: usize, rings: usize) -> TriMesh {
    let mut verts = Vec::with_capacity(segments * rings);
    for i in 0..segments {
        let u = i as f64 / segments as f64 * std::f64::consts::TAU;
        for j in 0..rings {
            let v = j as f64 / rings as f64 * std::f64::consts::TAU;
            let rr = major + minor * v.cos();
            verts.push(Vec3::new(rr * u.cos(), rr * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % segments) * rings + (j % rings);
    let mut faces = Vec::with_capacity(segments * rings * 2);
    for i in 0..segments {
        for j in 0..rings {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    orient_outward(TriMesh::from_raw(verts, faces))
}

/// Axis-aligned box centered at the origin with each face split into an
/// `n x n` grid.
pub fn subdivided_box(size: Vec3, n: usize) -> TriMesh {
    let n = n.max(1);
    let h = size / 2.0;
    let mut mesh = TriMesh::default();
    // (normal axis, sign)
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let (u_axis, v_axis) = ((axis + 1) % 3, (axis + 2) % 3);
            let mut verts = Vec::new();
            for j in 0..=n {
                for i in 0..=n {
                    let mut p = Vec3::zeros();
                    p[axis] = sign * h[axis];
                    p[u_axis] = -h[u_axis] + size[u_axis] * i as f64 / n as f64;
                    p[v_axis] = -h[v_axis] + size[v_axis] * j as f64 / n as f64;
                    verts.push(p);
                }
            }
            let mut faces = Vec::new();
            for j in 0..n {
                for i in 0..n {
                    let a = j * (n + 1) + i;
                    let (b, c, d) = (a + 1, a + n + 2, a + n + 1);
                    if sign > 0.0 {
                        faces.push([a, b, c]);
                        faces.push([a, c, d]);
                    } else {
                        faces.push([a, c, b]);
                        faces.push([a, d, c]);
                    }
                }
            }
            mesh.append(&TriMesh::from_raw(verts, faces));
        }
    }
    weld(&mesh, 1e-9)
}

/// Planar `n x n` grid over `[-half, half]^2` in the z = 0 plane, facing +z.
pub fn grid_plane(half: f64, n: usize) -> TriMesh {
    let mut verts = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            verts.push(Vec3::new(
                -half + 2.0 * half * i as f64 / n as f64,
                -half + 2.0 * half * j as f64 / n as f64,
                0.0,
            ));
        }
    }
    let mut faces = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let a = j * (n + 1) + i;
            faces.push([a, a + 1, a + n + 2]);
            faces.push([a, a + n + 2, a + n + 1]);
        }
    }
    TriMesh::from_raw(verts, faces)
}

/// Merges vertices closer than `tol` (by grid quantization).
pub fn weld(mesh: &TriMesh, tol: f64) -> TriMesh {
    let mut map: BTreeMap<(i64, i64, i64), usize> = BTreeMap::new();
    let mut verts = Vec::new();
    let mut remap = Vec::with_capacity(mesh.num_vertices());
    for p in mesh.vertices() {
        let key = (
            (p.x / tol).round() as i64,
            (p.y / tol).round() as i64,
            (p.z / tol).round() as i64,
        );
        let idx = *map.entry(key).or_insert_with(|| {
            verts.push(*p);
            verts.len() - 1
        });
        remap.push(idx);
    }
    let faces = mesh
        .faces()
        .iter()
        .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
        .filter(|f| f[0] != f[1] && f[1] != f[2] && f[0] != f[2])
        .collect();
    TriMesh::from_raw(verts, faces)
}

/// Signed volume (positive for outward orientation).
pub fn signed_volume(mesh: &TriMesh) -> f64 {
    let v = mesh.vertices();
    mesh.faces()
        .iter()
        .map(|f| v[f[0]].dot(&v[f[1]].cross(&v[f[2]])) / 6.0)
        .sum()
}

fn orient_outward(mut mesh: TriMesh) -> TriMesh {
    if signed_volume(&mesh) < 0.0 {
        mesh.flip_orientation();
    }
    mesh
}
