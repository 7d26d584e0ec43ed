//! Writes the built-in test shapes as PLY files and prints their topology.
//!
//! ```text
//! cargo run --example primitives -- /tmp/shapes
//! ```

use std::path::PathBuf;

use isomer::geometry::{primitives, save_mesh};
use isomer::Vec3;

fn main() -> isomer::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "shapes".into()));
    std::fs::create_dir_all(&dir).map_err(|e| isomer::Error::InvalidArgument(e.to_string()))?;

    let shapes = [
        ("sphere", primitives::icosphere(5, 0.4)),
        ("torus", primitives::torus(0.3, 0.12, 96, 32)),
        ("slab", primitives::subdivided_box(Vec3::new(0.6, 0.6, 0.01), 12)),
    ];
    for (name, mesh) in &shapes {
        let path = dir.join(format!("{name}.ply"));
        save_mesh(mesh, &path)?;
        println!(
            "{:<8}{:>7} faces  genus {}  watertight {}  -> {}",
            name,
            mesh.num_faces(),
            mesh.genus(),
            mesh.topology().is_watertight(),
            path.display()
        );
    }
    Ok(())
}
