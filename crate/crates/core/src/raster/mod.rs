//! Differentiable orthographic rasterizer.
//!
//! Coverage is hard and depth-buffered; only the mask is softened, with a
//! sigmoid of the signed pixel distance to the nearest silhouette edge inside
//! a band of `3σ`. Normal images interpolate vertex normals. Gradients are
//! analytic (see [`Backward`]).

mod backward;
mod forward;
mod visibility;

pub use backward::{backward_mask, backward_normal, Backward, GradientBuffer};
pub use forward::{rasterize, render_attributes, RenderOutput, SilhouetteSample};
pub use visibility::{vertex_visibility, visibility_from};

/// Default mask softness in pixels.
pub const DEFAULT_SIGMA: f64 = 1.0;
/// Default tolerance of the visibility depth test, world units.
pub const DEFAULT_DEPTH_EPSILON: f64 = 1e-3;

use nalgebra::Vector2;

/// `E(p, q, r) = (q - p) × (r - p)`, twice the signed area of `pqr`.
#[inline]
pub(crate) fn edge_fn(p: Vector2<f64>, q: Vector2<f64>, r: Vector2<f64>) -> f64 {
    (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
}

/// Gradients of [`edge_fn`] with respect to `p`, `q` and `r`.
#[inline]
pub(crate) fn edge_fn_grad(p: Vector2<f64>, q: Vector2<f64>, r: Vector2<f64>) -> [Vector2<f64>; 3] {
    let gq = Vector2::new(r.y - p.y, -(r.x - p.x));
    let gr = Vector2::new(-(q.y - p.y), q.x - p.x);
    [-(gq + gr), gq, gr]
}

/// Barycentric coordinates of `p` in triangle `abc` (unclamped).
#[inline]
pub(crate) fn barycentric(
    p: Vector2<f64>,
    a: Vector2<f64>,
    b: Vector2<f64>,
    c: Vector2<f64>,
) -> Option<[f64; 3]> {
    let area = edge_fn(a, b, c);
    if area.abs() < 1e-14 {
        return None;
    }
    Some([
        edge_fn(p, b, c) / area,
        edge_fn(a, p, c) / area,
        edge_fn(a, b, p) / area,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_fn_gradient_matches_differences() {
        let p = Vector2::new(0.3, -0.2);
        let q = Vector2::new(1.7, 0.4);
        let r = Vector2::new(-0.5, 2.1);
        let g = edge_fn_grad(p, q, r);
        let h = 1e-6;
        for (k, gk) in g.iter().enumerate() {
            for axis in 0..2 {
                let mut pts = [p, q, r];
                pts[k][axis] += h;
                let plus = edge_fn(pts[0], pts[1], pts[2]);
                pts[k][axis] -= 2.0 * h;
                let minus = edge_fn(pts[0], pts[1], pts[2]);
                assert!(((plus - minus) / (2.0 * h) - gk[axis]).abs() < 1e-8);
            }
        }
    }
}
