//! Integrates the front and back normal maps of a torus into depth and
//! joins the two sheets into a closed initial mesh.

use isomer::geometry::primitives;
use isomer::init::{integrate_normals, sphere_init, estimate_initial_mesh, InitConfig, Rotations};
use isomer::metrics::{chamfer_distance, normalize_unit_box, volume_iou};
use isomer::views::{render_observation, OrthoView};

fn main() -> isomer::Result<()> {
    let gt = normalize_unit_box(&primitives::torus(0.3, 0.12, 96, 32))?;
    let front = render_observation(&gt, &OrthoView::from_degrees(0.0, 0.0, 256));
    let back = render_observation(&gt, &OrthoView::from_degrees(180.0, 0.0, 256));

    let config = InitConfig::default();
    let depth = integrate_normals(
        &front.normals,
        &front.mask,
        front.view.pixel_world_size(),
        &Rotations::Random { count: config.rotations, seed: config.seed },
        config.mode,
    )?;
    let valid: Vec<f64> = depth.depth.pixels().iter().copied().filter(|d| !d.is_nan()).collect();
    let (lo, hi) = valid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(*d), b.max(*d)));
    println!("front depth: {} pixels, range {lo:.3} .. {hi:.3}", valid.len());

    for (name, mesh) in [("normal integration", estimate_initial_mesh(&front, &back, &config)?), ("sphere", sphere_init(4)?)] {
        println!(
            "{name:<20} {:>5} faces  genus {}  CD {:.4}  IoU {:.3}",
            mesh.num_faces(),
            mesh.genus(),
            chamfer_distance(&mesh, &gt, 10_000, 0)?,
            volume_iou(&mesh, &gt, 64)?
        );
    }
    Ok(())
}
