//! Renders a torus from four azimuths, writes the view set to disk and
//! reads it back.
//!
//! ```text
//! cargo run --release --example render_views -- /tmp/torus_views
//! ```

use isomer::geometry::primitives;
use isomer::metrics::normalize_unit_box;
use isomer::views::{generate_fixture, load_observations, OrthoView};

fn main() -> isomer::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "torus_views".into());
    let torus = normalize_unit_box(&primitives::torus(0.3, 0.12, 96, 32))?;

    let views = OrthoView::ring(4, 256);
    let manifest = generate_fixture(&torus, &views, &out, false)?;
    println!("wrote {} views ({}x{}) to {out}", manifest.views.len(), manifest.resolution[0], manifest.resolution[1]);

    for obs in load_observations(&out)? {
        let mean = obs.rgb.pixels().iter().sum::<isomer::Vec3>() / obs.rgb.pixels().len() as f64;
        println!(
            "azimuth {:>5.1}°  covered pixels {:>6}  mean rgb ({:.3}, {:.3}, {:.3})",
            obs.view.azimuth.to_degrees(),
            obs.covered_pixels(),
            mean.x,
            mean.y,
            mean.z
        );
    }
    Ok(())
}
