//! Row-wise normal integration under random in-plane rotations.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::views::Image;
use crate::Vec3;

/// Per-pixel depth increment used while integrating a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrationMode {
    /// Increment `n_x` (inclusive running sum), unit-free.
    Direct,
    /// Increment `-n_x / max(n_z, 0.1) * pixel_size` (trapezoidal), world units.
    #[default]
    Slope,
}

/// Which rotation angles to integrate under.
#[derive(Debug, Clone, PartialEq)]
pub enum Rotations {
    /// Explicit angles in radians.
    Angles(Vec<f64>),
    /// `count` angles drawn uniformly from [0, 2π) with a seeded RNG.
    Random { count: usize, seed: u64 },
}

impl Rotations {
    pub fn angles(&self) -> Vec<f64> {
        match self {
            Rotations::Angles(a) => a.clone(),
            Rotations::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*count).map(|_| rng.gen_range(0.0..TAU)).collect()
            }
        }
    }
}

/// Camera-frame depth per pixel, `NaN` outside the valid region.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub depth: Image<f64>,
}

impl DepthMap {
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let d = *self.depth.get(x, y);
        (!d.is_nan()).then_some(d)
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        !self.depth.get(x, y).is_nan()
    }

    pub fn valid_count(&self) -> usize {
        self.depth.pixels().iter().filter(|d| !d.is_nan()).count()
    }

    /// Mirror across the vertical image axis.
    pub fn flip_horizontal(&self) -> Self {
        Self {
            depth: self.depth.flip_horizontal(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            depth: self.depth.map(|&d| if d.is_nan() { d } else { f(d) }),
        }
    }
}

/// 4-connected components of `mask > 0.5`; `usize::MAX` marks background.
pub fn mask_components(mask: &Image<f64>) -> (Image<usize>, usize) {
    let (w, h) = mask.dims();
    let mut label = Image::new(w, h, usize::MAX);
    let mut count = 0;
    let mut stack = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if *mask.get(x0, y0) <= 0.5 || *label.get(x0, y0) != usize::MAX {
                continue;
            }
            label.set(x0, y0, count);
            stack.push((x0, y0));
            while let Some((x, y)) = stack.pop() {
                let mut visit = |nx: usize, ny: usize| {
                    if *mask.get(nx, ny) > 0.5 && *label.get(nx, ny) == usize::MAX {
                        label.set(nx, ny, count);
                        stack.push((nx, ny));
                    }
                };
                if x > 0 {
                    visit(x - 1, y);
                }
                if x + 1 < w {
                    visit(x + 1, y);
                }
                if y > 0 {
                    visit(x, y - 1);
                }
                if y + 1 < h {
                    visit(x, y + 1);
                }
            }
            count += 1;
        }
    }
    (label, count)
}

/// Square-ish canvas holding the image under any rotation about its center.
struct Canvas {
    width: usize,
    height: usize,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        let diag = ((w * w + h * h) as f64).sqrt();
        let pad = ((diag - w.min(h) as f64) / 2.0).ceil() as usize + 1;
        Self {
            width: w + 2 * pad,
            height: h + 2 * pad,
        }
    }
}

/// Integrates one rotated copy of the normal map; the result is returned in
/// canvas coordinates (`NaN` where invalid).
fn integrate_rotated(
    normals: &Image<Vec3>,
    mask: &Image<f64>,
    pixel_size: f64,
    angle: f64,
    mode: IntegrationMode,
    canvas: &Canvas,
) -> Vec<f64> {
    let (w, h) = normals.dims();
    let (sin, cos) = angle.sin_cos();
    let (cw, ch) = (canvas.width, canvas.height);
    let mut out = vec![f64::NAN; cw * ch];
    out.par_chunks_mut(cw).enumerate().for_each(|(j, row)| {
        let mut acc = 0.0;
        let mut prev: Option<f64> = None;
        for (i, slot) in row.iter_mut().enumerate() {
            // Canvas pixel center in y-up coordinates about the common center.
            let ux = i as f64 + 0.5 - cw as f64 / 2.0;
            let uy = ch as f64 / 2.0 - (j as f64 + 0.5);
            // Rotate back by -angle to find the source pixel (nearest).
            let sx = cos * ux + sin * uy;
            let sy = -sin * ux + cos * uy;
            let px = (sx + w as f64 / 2.0).floor();
            let py = (h as f64 / 2.0 - sy).floor();
            let inside = px >= 0.0 && py >= 0.0 && px < w as f64 && py < h as f64;
            let sample = inside
                .then_some((px as usize, py as usize))
                .filter(|&(x, y)| *mask.get(x, y) > 0.5)
                .map(|(x, y)| *normals.get(x, y));
            let Some(n) = sample else {
                prev = None;
                continue;
            };
            // Rotate the normal's in-plane part by +angle.
            let nx = cos * n.x - sin * n.y;
            let inc = match mode {
                IntegrationMode::Direct => nx,
                IntegrationMode::Slope => -nx / n.z.max(0.1) * pixel_size,
            };
            acc = match (mode, prev) {
                (IntegrationMode::Direct, None) => inc,
                (IntegrationMode::Direct, Some(_)) => acc + inc,
                (IntegrationMode::Slope, None) => 0.5 * inc,
                (IntegrationMode::Slope, Some(p)) => acc + 0.5 * (p + inc),
            };
            prev = Some(inc);
            *slot = acc;
        }
    });
    out
}

/// Samples a canvas result back at each valid source pixel (bilinear over
/// valid canvas pixels, nearest as fallback).
fn rotate_back(canvas_depth: &[f64], canvas: &Canvas, angle: f64, mask: &Image<f64>) -> Image<f64> {
    let (w, h) = mask.dims();
    let (sin, cos) = angle.sin_cos();
    let (cw, ch) = (canvas.width, canvas.height);
    let at = |x: isize, y: isize| -> Option<f64> {
        if x < 0 || y < 0 || x >= cw as isize || y >= ch as isize {
            return None;
        }
        let d = canvas_depth[y as usize * cw + x as usize];
        (!d.is_nan()).then_some(d)
    };
    Image::from_fn(w, h, |x, y| {
        if *mask.get(x, y) <= 0.5 {
            return f64::NAN;
        }
        let sx = x as f64 + 0.5 - w as f64 / 2.0;
        let sy = h as f64 / 2.0 - (y as f64 + 0.5);
        let ux = cos * sx - sin * sy;
        let uy = sin * sx + cos * sy;
        let cx = ux + cw as f64 / 2.0 - 0.5;
        let cy = ch as f64 / 2.0 - uy - 0.5;
        let (x0, y0) = (cx.floor(), cy.floor());
        let (tx, ty) = (cx - x0, cy - y0);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let mut sum = 0.0;
        let mut wsum = 0.0;
        for (dx, dy, wgt) in [
            (0, 0, (1.0 - tx) * (1.0 - ty)),
            (1, 0, tx * (1.0 - ty)),
            (0, 1, (1.0 - tx) * ty),
            (1, 1, tx * ty),
        ] {
            if wgt > 0.0 {
                if let Some(d) = at(x0 + dx, y0 + dy) {
                    sum += wgt * d;
                    wsum += wgt;
                }
            }
        }
        if wsum > 1e-12 {
            sum / wsum
        } else {
            at(cx.round() as isize, cy.round() as isize).unwrap_or(f64::NAN)
        }
    })
}

/// Integrates under a single rotation angle without any re-centering.
pub fn integrate_rows(
    normals: &Image<Vec3>,
    mask: &Image<f64>,
    pixel_size: f64,
    angle: f64,
    mode: IntegrationMode,
) -> DepthMap {
    let canvas = Canvas::new(normals.width(), normals.height());
    let c = integrate_rotated(normals, mask, pixel_size, angle, mode, &canvas);
    DepthMap {
        depth: rotate_back(&c, &canvas, angle, mask),
    }
}

/// Integrates a camera-frame normal map into a depth map: one row-wise
/// integration per rotation, rotated back and averaged, then every
/// connected mask component shifted to zero mean.
pub fn integrate_normals(
    normals: &Image<Vec3>,
    mask: &Image<f64>,
    pixel_size: f64,
    rotations: &Rotations,
    mode: IntegrationMode,
) -> Result<DepthMap> {
    if normals.dims() != mask.dims() {
        return Err(Error::SizeMismatch(normals.dims(), mask.dims()));
    }
    let angles = rotations.angles();
    if angles.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one rotation required".into(),
        ));
    }
    let (labels, components) = mask_components(mask);
    if components == 0 {
        return Err(Error::EmptyMask);
    }
    let (w, h) = mask.dims();
    let runs: Vec<DepthMap> = angles
        .par_iter()
        .map(|&a| integrate_rows(normals, mask, pixel_size, a, mode))
        .collect();
    let mut sum = vec![0.0; w * h];
    let mut count = vec![0u32; w * h];
    for run in &runs {
        for (i, d) in run.depth.pixels().iter().enumerate() {
            if !d.is_nan() {
                sum[i] += d;
                count[i] += 1;
            }
        }
    }
    let mut depth: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    // Pixels no rotation reached borrow the mean of their component.
    let mut comp_sum = vec![0.0; components];
    let mut comp_n = vec![0usize; components];
    for (i, &l) in labels.pixels().iter().enumerate() {
        if l != usize::MAX && !depth[i].is_nan() {
            comp_sum[l] += depth[i];
            comp_n[l] += 1;
        }
    }
    for (i, &l) in labels.pixels().iter().enumerate() {
        if l == usize::MAX {
            depth[i] = f64::NAN;
            continue;
        }
        let mean = if comp_n[l] > 0 {
            comp_sum[l] / comp_n[l] as f64
        } else {
            0.0
        };
        depth[i] = if depth[i].is_nan() {
            0.0
        } else {
            depth[i] - mean
        };
    }
    Ok(DepthMap {
        depth: Image::from_vec(w, h, depth),
    })
}
