//! Simplifies a dense sphere with quadric error collapses, then remeshes it
//! toward a uniform edge length.

use isomer::geometry::{primitives, qem_simplify, remesh_pass_with_stats};

fn main() {
    let dense = primitives::icosphere(5, 0.4);
    let simple = qem_simplify(&dense, 2000);
    println!("simplified {} -> {} faces (partial: {})", dense.num_faces(), simple.mesh.num_faces(), simple.partial);

    let target = 0.02;
    let mut mesh = simple.mesh;
    for pass in 1..=4 {
        let (next, stats) = remesh_pass_with_stats(&mesh, target);
        mesh = next;
        let lengths = mesh.edge_lengths();
        let within = lengths.iter().filter(|&&l| (0.5 * target..=2.0 * target).contains(&l)).count();
        println!(
            "pass {pass}: {:>5} faces, {} splits {} collapses {} flips, {:.1}% of edges within [0.5, 2]x target, watertight {}",
            mesh.num_faces(),
            stats.splits,
            stats.collapses,
            stats.flips,
            100.0 * within as f64 / lengths.len() as f64,
            mesh.topology().is_watertight()
        );
    }
}
