use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::Vec3;

/// Default world half-width mapped to half the image width.
pub const DEFAULT_HALF_EXTENT: f64 = 0.55;

/// Orthographic camera orbiting the origin.
///
/// The camera frame is right-handed: +x is image right, +y is image up and
/// +z points from the object toward the camera. Azimuth rotates the camera
/// about world +y (azimuth 0 looks down -z, so camera and world frames
/// coincide); positive elevation raises the camera above the xz plane.
///
/// Pixel coordinates put (0, 0) at the top-left image corner; pixel centers
/// sit at half-integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthoView {
    pub azimuth: f64,
    pub elevation: f64,
    pub half_extent: f64,
    pub width: usize,
    pub height: usize,
}

/// A projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Vector2<f64>,
    /// Camera-frame z (larger is closer to the camera).
    pub depth: f64,
    pub in_bounds: bool,
}

impl OrthoView {
    pub fn new(azimuth: f64, elevation: f64, width: usize, height: usize) -> Self {
        Self {
            azimuth,
            elevation,
            half_extent: DEFAULT_HALF_EXTENT,
            width,
            height,
        }
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64, resolution: usize) -> Self {
        Self::new(
            azimuth_deg.to_radians(),
            elevation_deg.to_radians(),
            resolution,
            resolution,
        )
    }

    pub fn with_half_extent(mut self, half_extent: f64) -> Self {
        self.half_extent = half_extent;
        self
    }

    /// Views at azimuths `k * 360 / count`, elevation 0.
    pub fn ring(count: usize, resolution: usize) -> Vec<Self> {
        (0..count)
            .map(|k| Self::from_degrees(k as f64 * 360.0 / count as f64, 0.0, resolution))
            .collect()
    }

    /// Rows are the camera axes expressed in world coordinates.
    pub fn rotation(&self) -> Matrix3<f64> {
        let (sa, ca) = self.azimuth.sin_cos();
        let (se, ce) = self.elevation.sin_cos();
        let z = Vec3::new(sa * ce, se, ca * ce);
        let x = Vec3::new(ca, 0.0, -sa);
        let y = z.cross(&x);
        Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
    }

    /// Unit vector from the camera toward the scene, in world coordinates.
    pub fn view_direction(&self) -> Vec3 {
        -self.rotation().row(2).transpose()
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation() * p
    }

    pub fn camera_to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation().transpose() * p
    }

    /// Pixels per world unit along x and y.
    pub fn pixel_scale(&self) -> (f64, f64) {
        (
            self.width as f64 / (2.0 * self.half_extent),
            self.height as f64 / (2.0 * self.half_extent),
        )
    }

    /// World-space size of one pixel (along x).
    pub fn pixel_world_size(&self) -> f64 {
        2.0 * self.half_extent / self.width as f64
    }

    /// Image-plane area of one pixel in world units.
    pub fn pixel_area(&self) -> f64 {
        let (sx, sy) = self.pixel_scale();
        1.0 / (sx * sy)
    }

    /// Camera-frame (x, y) to continuous pixel coordinates.
    pub fn camera_to_pixel(&self, x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(
            (x / self.half_extent + 1.0) * 0.5 * self.width as f64,
            (1.0 - y / self.half_extent) * 0.5 * self.height as f64,
        )
    }

    pub fn pixel_to_camera(&self, px: f64, py: f64) -> (f64, f64) {
        (
            (2.0 * px / self.width as f64 - 1.0) * self.half_extent,
            (1.0 - 2.0 * py / self.height as f64) * self.half_extent,
        )
    }

    pub fn project(&self, p: &Vec3) -> Projection {
        let c = self.world_to_camera(p);
        let pixel = self.camera_to_pixel(c.x, c.y);
        let in_bounds = pixel.x >= 0.0
            && pixel.y >= 0.0
            && pixel.x < self.width as f64
            && pixel.y < self.height as f64;
        Projection {
            pixel,
            depth: c.z,
            in_bounds,
        }
    }

    /// World point at pixel `(px, py)` with camera depth `depth`.
    pub fn unproject(&self, px: f64, py: f64, depth: f64) -> Vec3 {
        let (x, y) = self.pixel_to_camera(px, py);
        self.camera_to_world(&Vec3::new(x, y, depth))
    }
}
