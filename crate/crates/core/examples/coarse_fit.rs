//! Runs the coarse optimization stage alone, starting from a sphere and
//! fitting a stretched ellipsoid.

use isomer::geometry::primitives;
use isomer::metrics::{chamfer_distance, volume_iou};
use isomer::opt::{optimize_coarse, ReconConfig};
use isomer::views::{render_observation, OrthoView};
use isomer::Vec3;

fn main() -> isomer::Result<()> {
    let mut gt = primitives::icosphere(5, 0.35);
    gt.map_vertices(|p| p.component_mul(&Vec3::new(1.3, 0.8, 1.0)));
    let obs: Vec<_> = OrthoView::ring(4, 128).iter().map(|v| render_observation(&gt, v)).collect();

    let start = primitives::icosphere(3, 0.45);
    let config = ReconConfig { coarse_iters: 200, ..Default::default() };
    let (mesh, report) = optimize_coarse(&start, &obs, &config)?;
    for r in report.records.iter().step_by(25) {
        println!("iter {:>3}  mask {:>9.1}  normal {:>9.1}", r.iteration, r.l_mask, r.l_normal);
    }
    println!(
        "{} faces, CD {:.4} (start {:.4}), IoU {:.3}",
        mesh.num_faces(),
        chamfer_distance(&mesh, &gt, 10_000, 0)?,
        chamfer_distance(&start, &gt, 10_000, 0)?,
        volume_iou(&mesh, &gt, 64)?
    );
    Ok(())
}
