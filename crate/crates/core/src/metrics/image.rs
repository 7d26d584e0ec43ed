//! Evaluation renders and image similarity.

use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::raster::{rasterize, render_attributes, DEFAULT_SIGMA};
use crate::views::{Image, OrthoView};
use crate::Vec3;

/// Reported instead of infinity for identical images.
pub const PSNR_CAP: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Azimuth ring at each elevation (degrees), elevation-major order.
pub fn eval_views(
    elevations_deg: &[f64],
    azimuth_count: usize,
    resolution: usize,
) -> Vec<OrthoView> {
    elevations_deg
        .iter()
        .flat_map(|&el| {
            (0..azimuth_count).map(move |k| {
                OrthoView::from_degrees(k as f64 * 360.0 / azimuth_count as f64, el, resolution)
            })
        })
        .collect()
}

/// Color renders on a white background. Meshes without vertex colors are
/// shaded by position (`p + 0.5`).
pub fn render_eval_views(mesh: &TriMesh, views: &[OrthoView]) -> Vec<Image<Vec3>> {
    let colors: Vec<Vec3> = match mesh.colors() {
        Some(c) => c.to_vec(),
        None => mesh
            .vertices()
            .iter()
            .map(|p| (p + Vec3::repeat(0.5)).map(|c| c.clamp(0.0, 1.0)))
            .collect(),
    };
    views
        .iter()
        .map(|v| {
            let out = rasterize(mesh, v, DEFAULT_SIGMA);
            render_attributes(mesh, &out, &colors, Vec3::repeat(1.0))
        })
        .collect()
}

fn check(a: &Image<Vec3>, b: &Image<Vec3>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::SizeMismatch(a.dims(), b.dims()));
    }
    Ok(())
}

/// `10 log10(1 / MSE)` over all channels of [0, 1] images, capped at 99 dB.
pub fn psnr(a: &Image<Vec3>, b: &Image<Vec3>) -> Result<f64> {
    check(a, b)?;
    let n = (a.pixels().len() * 3) as f64;
    let mse: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y).norm_squared())
        .sum::<f64>()
        / n;
    Ok(if mse <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP)
    })
}

fn gaussian_window() -> Vec<f64> {
    let c = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Separable Gaussian filter over the positions where the window fits.
fn filter_valid(x: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (vw, vh) = (w + 1 - n, h + 1 - n);
    let mut rows = vec![0.0; vw * h];
    for y in 0..h {
        for xo in 0..vw {
            rows[y * vw + xo] = (0..n).map(|i| k[i] * x[y * w + xo + i]).sum();
        }
    }
    let mut out = vec![0.0; vw * vh];
    for yo in 0..vh {
        for xo in 0..vw {
            out[yo * vw + xo] = (0..n).map(|i| k[i] * rows[(yo + i) * vw + xo]).sum();
        }
    }
    (out, vw, vh)
}

/// Mean SSIM over channels with an 11×11 Gaussian window (σ = 1.5) and the
/// usual constants for a unit data range. Only full windows are averaged.
pub fn ssim(a: &Image<Vec3>, b: &Image<Vec3>) -> Result<f64> {
    check(a, b)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs images of at least {SSIM_WINDOW}×{SSIM_WINDOW}"
        )));
    }
    let k = gaussian_window();
    let mut total = 0.0;
    for ch in 0..3 {
        let x: Vec<f64> = a.pixels().iter().map(|p| p[ch]).collect();
        let y: Vec<f64> = b.pixels().iter().map(|p| p[ch]).collect();
        let prod = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).collect::<Vec<f64>>();
        let (mx, _, _) = filter_valid(&x, w, h, &k);
        let (my, _, _) = filter_valid(&y, w, h, &k);
        let (sxx, _, _) = filter_valid(&prod(&x, &x), w, h, &k);
        let (syy, _, _) = filter_valid(&prod(&y, &y), w, h, &k);
        let (sxy, _, _) = filter_valid(&prod(&x, &y), w, h, &k);
        let m = mx.len() as f64;
        let sum: f64 = (0..mx.len())
            .map(|i| {
                let (ux, uy) = (mx[i], my[i]);
                let vx = sxx[i] - ux * ux;
                let vy = syy[i] - uy * uy;
                let cxy = sxy[i] - ux * uy;
                ((2.0 * ux * uy + SSIM_C1) * (2.0 * cxy + SSIM_C2))
                    / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2))
            })
            .sum();
        total += sum / m;
    }
    Ok(total / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize) -> Image<Vec3> {
        Image::from_fn(w, w, |x, y| {
            Vec3::new(x as f64 / w as f64, y as f64 / w as f64, 0.3)
        })
    }

    #[test]
    fn identical_images() {
        let a = ramp(32);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_offset_gives_20_db() {
        let a = Image::new(16, 16, Vec3::repeat(0.2));
        let b = a.map(|p| p.add_scalar(0.1));
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn constant_images_reduce_to_luminance_term() {
        let (u, v) = (0.3, 0.7);
        let a = Image::new(20, 20, Vec3::repeat(u));
        let b = Image::new(20, 20, Vec3::repeat(v));
        let expected = (2.0 * u * v + 1e-4) / (u * u + v * v + 1e-4);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn size_mismatch() {
        assert!(matches!(
            psnr(&ramp(16), &ramp(20)),
            Err(Error::SizeMismatch(..))
        ));
        assert!(ssim(&ramp(16), &ramp(20)).is_err());
    }

    #[test]
    fn eval_view_layout() {
        let v = eval_views(&[0.0, 15.0, 30.0], 8, 32);
        assert_eq!(v.len(), 24);
        assert!((v[9].azimuth.to_degrees() - 45.0).abs() < 1e-9);
        assert!((v[9].elevation.to_degrees() - 15.0).abs() < 1e-9);
    }
}
