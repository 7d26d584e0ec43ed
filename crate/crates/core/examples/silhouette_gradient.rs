//! Fits the soft silhouette of a small sphere to a larger one by following
//! the mask-loss gradient, and checks one gradient entry numerically.
//! Only vertices that land on some silhouette receive gradient, so the
//! outermost vertex tracks the target radius of 0.4.

use isomer::geometry::primitives;
use isomer::opt::loss_mask;
use isomer::raster::DEFAULT_SIGMA;
use isomer::views::{render_observation, OrthoView};

fn main() -> isomer::Result<()> {
    let target = primitives::icosphere(3, 0.4);
    let obs: Vec<_> = OrthoView::ring(4, 64).iter().map(|v| render_observation(&target, v)).collect();
    let mut mesh = primitives::icosphere(3, 0.3);

    let l = loss_mask(&mesh, &obs, DEFAULT_SIGMA)?;
    let (v, axis, h) = (0, 0, 1e-4);
    let mut plus = mesh.clone();
    plus.vertices_mut()[v][axis] += h;
    let mut minus = mesh.clone();
    minus.vertices_mut()[v][axis] -= h;
    let fd = (loss_mask(&plus, &obs, DEFAULT_SIGMA)?.value - loss_mask(&minus, &obs, DEFAULT_SIGMA)?.value) / (2.0 * h);
    println!("dL/dx of vertex 0: analytic {:.5}, central difference {fd:.5}", l.grad.as_slice()[v][axis]);

    for it in 0..=40 {
        let l = loss_mask(&mesh, &obs, DEFAULT_SIGMA)?;
        if it % 10 == 0 {
            let r = mesh.vertices().iter().map(|p| p.norm()).fold(0.0, f64::max);
            println!("iter {it:>2}  L_mask {:>9.2}  max radius {r:.4}", l.value);
        }
        let step = 0.02 / l.grad.max_norm().max(1e-12);
        for (p, g) in mesh.vertices_mut().iter_mut().zip(l.grad.as_slice()) {
            *p -= g * step;
        }
    }
    Ok(())
}
