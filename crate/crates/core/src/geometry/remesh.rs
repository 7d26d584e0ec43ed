//! Incremental isotropic remeshing (split long, collapse short, flip toward
//! regular valence).

use super::mesh::TriMesh;
use super::surgery::{CollapseGuard, EditMesh};

/// Split edges longer than this multiple of the target length.
pub const SPLIT_RATIO: f64 = 4.0 / 3.0;
/// Collapse edges shorter than this multiple of the target length.
pub const COLLAPSE_RATIO: f64 = 4.0 / 5.0;

const MAX_SPLIT_SWEEPS: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RemeshStats {
    pub splits: usize,
    pub collapses: usize,
    pub flips: usize,
}

/// One pass of split / collapse / flip at `target_edge_length`.
pub fn remesh_pass(mesh: &TriMesh, target_edge_length: f64) -> TriMesh {
    remesh_pass_with_stats(mesh, target_edge_length).0
}

pub fn remesh_pass_with_stats(mesh: &TriMesh, target_edge_length: f64) -> (TriMesh, RemeshStats) {
    assert!(
        target_edge_length > 0.0,
        "target edge length must be positive"
    );
    let mut em = EditMesh::from_mesh(mesh);
    let mut stats = RemeshStats::default();
    let hi = SPLIT_RATIO * target_edge_length;
    let lo = COLLAPSE_RATIO * target_edge_length;

    for _ in 0..MAX_SPLIT_SWEEPS {
        let mut long: Vec<(f64, usize, usize)> = em
            .edges()
            .into_iter()
            .map(|(a, b)| (em.edge_length(a, b), a, b))
            .filter(|(l, _, _)| *l > hi)
            .collect();
        if long.is_empty() {
            break;
        }
        long.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for (_, a, b) in long {
            if em.split(a, b).is_some() {
                stats.splits += 1;
            }
        }
    }

    let guard = CollapseGuard {
        max_edge_length: hi,
        min_normal_cos: 0.2,
    };
    let mut short: Vec<(f64, usize, usize)> = em
        .edges()
        .into_iter()
        .map(|(a, b)| (em.edge_length(a, b), a, b))
        .filter(|(l, _, _)| *l < lo)
        .collect();
    short.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    for (_, a, b) in short {
        if !em.vertex_alive[a] || !em.vertex_alive[b] {
            continue;
        }
        if em.edge_faces(a, b).is_empty() || em.edge_length(a, b) >= lo {
            continue;
        }
        let mid = (em.pos[a] + em.pos[b]) * 0.5;
        if em.try_collapse(a, b, mid, &guard) {
            stats.collapses += 1;
        }
    }

    for (a, b) in em.edges() {
        if should_flip(&em, a, b) && em.flip(a, b) {
            stats.flips += 1;
        }
    }

    (em.to_mesh(), stats)
}

fn target_valence(em: &EditMesh, v: usize) -> i64 {
    if em.is_boundary_vertex(v) {
        4
    } else {
        6
    }
}

fn should_flip(em: &EditMesh, a: usize, b: usize) -> bool {
    let Some((c, d)) = em.flip_opposites(a, b) else {
        return false;
    };
    if !em.can_flip(a, b) {
        return false;
    }
    let val = |v: usize| em.neighbors(v).len() as i64;
    let dev = |v: usize, delta: i64| (val(v) + delta - target_valence(em, v)).abs();
    let before = dev(a, 0) + dev(b, 0) + dev(c, 0) + dev(d, 0);
    let after = dev(a, -1) + dev(b, -1) + dev(c, 1) + dev(d, 1);
    if after >= before {
        return false;
    }
    let Some((old, new)) = em.flip_normals(a, b) else {
        return false;
    };
    let (lo0, lo1, ln0, ln1) = (old[0].norm(), old[1].norm(), new[0].norm(), new[1].norm());
    let scale = lo0.max(lo1);
    if ln0 <= 1e-12 * scale || ln1 <= 1e-12 * scale || lo0 == 0.0 || lo1 == 0.0 {
        return false;
    }
    let avg = old[0] / lo0 + old[1] / lo1;
    if new[0].dot(&avg) <= 0.0 || new[1].dot(&avg) <= 0.0 {
        return false;
    }
    // Keep flips off creases: the new dihedral may not be much sharper.
    let old_cos = old[0].dot(&old[1]) / (lo0 * lo1);
    let new_cos = new[0].dot(&new[1]) / (ln0 * ln1);
    new_cos >= old_cos - 0.1
}
