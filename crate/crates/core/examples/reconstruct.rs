//! Full reconstruction from a view set on disk, or from a rendered torus
//! when no directory is given.
//!
//! ```text
//! cargo run --release --example reconstruct -- [views_dir] [out.ply]
//! ```

use isomer::geometry::{primitives, save_mesh};
use isomer::metrics::{evaluate, normalize_unit_box, Metric, MetricsConfig};
use isomer::pipeline::{reconstruct, PipelineConfig};
use isomer::views::{load_observations, render_observation, OrthoView};

fn main() -> isomer::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let gt = normalize_unit_box(&primitives::torus(0.3, 0.12, 96, 32))?;
    let obs = match args.first() {
        Some(dir) => load_observations(dir)?,
        None => OrthoView::ring(4, 256).iter().map(|v| render_observation(&gt, v)).collect(),
    };

    let result = reconstruct(&obs, &PipelineConfig::default())?;
    let t = result.timings;
    println!("init {:.1}s, coarse {:.1}s, refine {:.1}s, color {:.1}s", t.init, t.coarse, t.refine, t.colorize);
    println!("{} faces, genus {}", result.mesh.num_faces(), result.mesh.genus());

    if args.is_empty() {
        let config = MetricsConfig { metrics: vec![Metric::Cd, Metric::Iou], ..Default::default() };
        print!("{}", evaluate(&result.mesh, &gt, &config)?);
    }
    let out = args.get(1).map(String::as_str).unwrap_or("reconstruction.ply");
    save_mesh(&result.mesh, out)?;
    println!("wrote {out}");
    Ok(())
}
