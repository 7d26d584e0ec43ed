//! Scores a dented sphere against the original with every metric.

use isomer::geometry::primitives;
use isomer::metrics::{evaluate, MetricsConfig};

fn main() -> isomer::Result<()> {
    let gt = primitives::icosphere(4, 0.4);
    let mut pred = gt.clone();
    pred.map_vertices(|p| if p.x > 0.25 { p * 0.9 } else { *p });

    let config = MetricsConfig { render_resolution: 128, ..Default::default() };
    for (name, mesh) in [("identical", &gt), ("dented", &pred)] {
        let report = evaluate(mesh, &gt, &config)?;
        println!("{name}:\n{report}");
    }
    Ok(())
}
